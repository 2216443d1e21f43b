//! King-move grid and its rooted spanning tree.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use super::MeshError;

pub type Cell = usize;

/// Undirected edge with `0 < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub Cell, pub Cell);

impl Edge {
    pub fn new(a: Cell, b: Cell) -> Edge {
        Edge(a.min(b), a.max(b))
    }
}

/// `rows × cols` cells, each adjacent to up to eight neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KingGraph {
    pub rows: usize,
    pub cols: usize,
    neighbours: Vec<Vec<Cell>>,
}

impl KingGraph {
    pub fn new(rows: usize, cols: usize) -> Result<KingGraph, MeshError> {
        if rows == 0 || cols == 0 {
            return Err(MeshError::Shape { rows, cols });
        }
        let mut neighbours = vec![Vec::new(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if (dr, dc) != (0, 0) && (0..rows as i64).contains(&nr) && (0..cols as i64).contains(&nc) {
                            neighbours[r * cols + c].push(nr as usize * cols + nc as usize);
                        }
                    }
                }
            }
        }
        for n in &mut neighbours {
            n.sort_unstable();
        }
        Ok(KingGraph { rows, cols, neighbours })
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn neighbours(&self, x: Cell) -> &[Cell] {
        &self.neighbours[x]
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (x, ns) in self.neighbours.iter().enumerate() {
            out.extend(ns.iter().filter(|&&y| y > x).map(|&y| Edge(x, y)));
        }
        out
    }

    pub fn coords(&self, x: Cell) -> (usize, usize) {
        (x / self.cols, x % self.cols)
    }

    pub fn cell(&self, r: usize, c: usize) -> Result<Cell, MeshError> {
        if r < self.rows && c < self.cols {
            Ok(r * self.cols + c)
        } else {
            Err(MeshError::Cell(format!("{r},{c}")))
        }
    }

    /// `r,c` or a bare cell id.
    pub fn parse_cell(&self, s: &str) -> Result<Cell, MeshError> {
        let bad = || MeshError::Cell(s.to_owned());
        match s.split_once(',') {
            Some((r, c)) => self.cell(r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?),
            None => {
                let x: usize = s.parse().map_err(|_| bad())?;
                (x < self.cells()).then_some(x).ok_or_else(bad)
            }
        }
    }

    /// 32-byte name of a cell; the smallest name is the root.
    pub fn name(&self, x: Cell) -> [u8; 32] {
        let (r, c) = self.coords(x);
        Sha256::digest(format!("cell:{r},{c}").as_bytes()).into()
    }

    pub fn root(&self) -> Cell {
        (0..self.cells()).min_by_key(|&x| (self.name(x), x)).expect("graph has cells")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: Cell,
    pub parent: Vec<Option<Cell>>,
    pub depth: Vec<Option<u32>>,
}

impl SpanningTree {
    /// Breadth-first from the root over live edges, lowest id first.
    pub fn bfs(g: &KingGraph, root: Cell, down: &BTreeSet<Edge>) -> SpanningTree {
        let n = g.cells();
        let mut parent = vec![None; n];
        let mut depth = vec![None; n];
        depth[root] = Some(0);
        let mut q = VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            for &y in g.neighbours(x) {
                if depth[y].is_none() && !down.contains(&Edge::new(x, y)) {
                    depth[y] = Some(depth[x].expect("queued cells have depth") + 1);
                    parent[y] = Some(x);
                    q.push_back(y);
                }
            }
        }
        SpanningTree { root, parent, depth }
    }

    pub fn is_tree_edge(&self, e: Edge) -> bool {
        self.parent[e.0] == Some(e.1) || self.parent[e.1] == Some(e.0)
    }

    pub fn tree_edges(&self) -> Vec<Edge> {
        let mut v: Vec<Edge> = self.parent.iter().enumerate().filter_map(|(x, p)| p.map(|p| Edge::new(x, p))).collect();
        v.sort();
        v
    }

    /// Depths recomputed from the parent pointers; `None` for cells cut off
    /// from the root.
    pub fn recompute_depths(&mut self) {
        let n = self.parent.len();
        let mut depth: Vec<Option<u32>> = vec![None; n];
        depth[self.root] = Some(0);
        for x in 0..n {
            // walk up until a known depth, then fill back down
            let mut chain = Vec::new();
            let mut cur = x;
            let mut base = None;
            while chain.len() <= n {
                if let Some(d) = depth[cur] {
                    base = Some(d);
                    break;
                }
                chain.push(cur);
                match self.parent[cur] {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if let Some(mut d) = base {
                for &c in chain.iter().rev() {
                    d += 1;
                    depth[c] = Some(d);
                }
            }
        }
        self.depth = depth;
    }

    /// Every cell reaches the root along parent pointers over live edges.
    pub fn spans(&self, down: &BTreeSet<Edge>) -> bool {
        self.depth.iter().all(Option::is_some)
            && self
                .parent
                .iter()
                .enumerate()
                .all(|(x, p)| p.map_or(x == self.root, |p| !down.contains(&Edge::new(x, p))))
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees() {
        let g = KingGraph::new(3, 3).unwrap();
        assert_eq!(g.neighbours(4).len(), 8);
        assert_eq!(g.neighbours(0).len(), 3);
        assert_eq!(g.neighbours(1).len(), 5);
        assert_eq!(g.edges().len(), 20);
        assert!(KingGraph::new(0, 3).is_err());
    }

    #[test]
    fn edge_count_formula() {
        // horizontal + vertical + two diagonals
        for (r, c) in [(1, 1), (1, 5), (2, 2), (4, 7), (8, 8)] {
            let g = KingGraph::new(r, c).unwrap();
            let expect = r * (c - 1) + (r - 1) * c + 2 * (r - 1) * (c - 1);
            assert_eq!(g.edges().len(), expect);
        }
    }

    #[test]
    fn cell_parsing() {
        let g = KingGraph::new(4, 5).unwrap();
        assert_eq!(g.parse_cell("2,3").unwrap(), 13);
        assert_eq!(g.parse_cell("13").unwrap(), 13);
        assert!(g.parse_cell("4,0").is_err());
        assert!(g.parse_cell("20").is_err());
        assert!(g.parse_cell("x").is_err());
    }

    #[test]
    fn bfs_tree_spans() {
        let g = KingGraph::new(6, 6).unwrap();
        let root = g.root();
        let t = SpanningTree::bfs(&g, root, &BTreeSet::new());
        assert!(t.spans(&BTreeSet::new()));
        assert_eq!(t.tree_edges().len(), 35);
        let (rr, rc) = g.coords(root);
        for x in 0..g.cells() {
            let (r, c) = g.coords(x);
            // king distance
            assert_eq!(t.depth[x], Some(r.abs_diff(rr).max(c.abs_diff(rc)) as u32));
        }
        let mut t2 = t.clone();
        t2.recompute_depths();
        assert_eq!(t2.depth, t.depth);
    }

    #[test]
    fn root_is_stable() {
        let g = KingGraph::new(5, 5).unwrap();
        assert_eq!(g.root(), KingGraph::new(5, 5).unwrap().root());
        assert_ne!(g.name(0), g.name(1));
    }
}
