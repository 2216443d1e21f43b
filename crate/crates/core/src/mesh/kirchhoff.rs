//! Spanning-tree counts by the matrix-tree theorem.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::graph::{Edge, KingGraph};

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Number of spanning trees of the `rows × cols` king graph: any cofactor of
/// its Laplacian.
pub fn count_spanning_trees(rows: usize, cols: usize) -> BigInt {
    let Ok(g) = KingGraph::new(rows, cols) else {
        return BigInt::zero();
    };
    count_trees_of(g.cells(), &g.edges())
}

/// Spanning trees of an arbitrary simple graph on `cells` vertices; zero
/// when it is disconnected.
pub fn count_trees_of(cells: usize, edges: &[Edge]) -> BigInt {
    if cells == 0 {
        return BigInt::zero();
    }
    // drop vertex 0's row and column
    let mut lap = vec![vec![BigInt::zero(); cells - 1]; cells - 1];
    for &Edge(a, b) in edges {
        for (x, y) in [(a, b), (b, a)] {
            if x > 0 {
                lap[x - 1][x - 1] += 1;
                if y > 0 {
                    lap[x - 1][y - 1] -= 1;
                }
            }
        }
    }
    bareiss_determinant(lap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub n: usize,
    pub count: BigInt,
    /// `count(n) / count(n-1)` as a float, if there is a previous row.
    pub ratio: Option<f64>,
}

/// Counts for square grids `n × n` over `ns`, with successive ratios.
pub fn growth_table(ns: &[usize]) -> Vec<GrowthRow> {
    let mut out: Vec<GrowthRow> = Vec::new();
    for &n in ns {
        let count = count_spanning_trees(n, n);
        let ratio = out.last().map(|p| big_ratio(&count, &p.count));
        out.push(GrowthRow { n, count, ratio });
    }
    out
}

fn big_ratio(a: &BigInt, b: &BigInt) -> f64 {
    // both fit comfortably once scaled down to their leading digits
    let (sa, sb) = (a.to_string(), b.to_string());
    let lead = |s: &str| -> (f64, i32) {
        let k = s.len().min(15);
        (s[..k].parse::<f64>().unwrap_or(0.0), (s.len() - k) as i32)
    };
    let ((ma, ea), (mb, eb)) = (lead(&sa), lead(&sb));
    ma / mb * 10f64.powi(ea - eb)
}

/// Strictly increasing counts whose ratios also strictly increase, which no
/// geometric sequence can do.
pub fn growth_is_superexponential(rows: &[GrowthRow]) -> bool {
    let increasing = rows.windows(2).all(|w| w[1].count > w[0].count);
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    increasing && ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] > w[0])
}
