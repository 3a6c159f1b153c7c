//! Communication graphs, Metropolis mixing matrices and their spectral gap.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row/column sum tolerance for doubly stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Graph family requested by a run configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Topology {
    Full,
    Ring,
    Bipartite,
    Custom(Vec<(usize, usize)>),
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Full => f.write_str("full"),
            Topology::Ring => f.write_str("ring"),
            Topology::Bipartite => f.write_str("bipartite"),
            Topology::Custom(edges) => {
                f.write_str("[")?;
                for (k, (i, j)) in edges.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "[{i},{j}]")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "full" => Ok(Topology::Full),
            "ring" => Ok(Topology::Ring),
            "bipartite" => Ok(Topology::Bipartite),
            other if other.starts_with('[') => {
                let pairs: Vec<[usize; 2]> = serde_json::from_str(other).map_err(|e| format!("bad edge list: {e}"))?;
                Ok(Topology::Custom(pairs.into_iter().map(|[i, j]| (i, j)).collect()))
            }
            other => Err(format!("expected full, ring, bipartite or an edge list, got `{other}`")),
        }
    }
}

impl From<Topology> for String {
    fn from(t: Topology) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for Topology {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Static undirected connected graph. Self-loops are implicit and not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_agents: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list, normalizing each pair to `(min, max)`
    /// and dropping self-loops.
    pub fn from_edges(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::TooFewAgents { min: 1, got: 0 });
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i >= n_agents || j >= n_agents {
                return Err(Error::EdgeOutOfRange(i, j, n_agents));
            }
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
        let g = Graph { n_agents, edges: set };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i == j || self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_agents];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n_agents];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n_agents];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Builds a graph of the named family over `n` agents.
///
/// Bipartite graphs are complete bipartite with parts `0..ceil(n/2)` and
/// `ceil(n/2)..n`. A ring of two agents collapses to a single edge.
pub fn build_graph(kind: &Topology, n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::TooFewAgents { min: 1, got: 0 });
    }
    let edges: Vec<(usize, usize)> = match kind {
        Topology::Full => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Topology::Ring => match n {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        },
        Topology::Bipartite => {
            if n < 2 {
                return Err(Error::TooFewAgents { min: 2, got: n });
            }
            let split = n.div_ceil(2);
            (0..split).flat_map(|i| (split..n).map(move |j| (i, j))).collect()
        }
        Topology::Custom(edges) => edges.clone(),
    };
    Graph::from_edges(n, &edges)
}

/// Dense doubly stochastic mixing matrix `W` with `lambda = ||W - 11ᵀ/N||₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    weights: Vec<f64>,
    lambda: f64,
}

impl MixingMatrix {
    /// Wraps explicit weights after checking nonnegativity and double
    /// stochasticity.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewAgents { min: 1, got: 0 });
        }
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("mixing weights (or negative entry)"));
        }
        for i in 0..n {
            let row: f64 = (0..n).map(|j| weights[i * n + j]).sum();
            let col: f64 = (0..n).map(|j| weights[j * n + i]).sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL || (col - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidEnv(format!(
                    "mixing matrix is not doubly stochastic at index {i} (row {row}, col {col})"
                )));
            }
        }
        let mut w = MixingMatrix {
            n,
            weights,
            lambda: 0.0,
        };
        w.lambda = spectral_gap(&w);
        Ok(w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// One synchronous gossip round, `Σ_j w_ij · rows[j]` for every `i`.
    ///
    /// Evaluated as `rows[i] + Σ_{j≠i} w_ij (rows[j] − rows[i])` with `j`
    /// ascending, which equals the weighted sum because rows of `W` sum to 1
    /// and leaves identical rows exactly unchanged.
    pub fn mix(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        assert_eq!(rows.len(), self.n, "one row per agent");
        (0..self.n)
            .map(|i| {
                let own = &rows[i];
                let mut delta = vec![0.0; own.len()];
                for (j, w) in self.row(i).iter().enumerate() {
                    if j == i || *w == 0.0 {
                        continue;
                    }
                    for ((d, x), o) in delta.iter_mut().zip(&rows[j]).zip(own) {
                        *d += w * (x - o);
                    }
                }
                own.iter().zip(delta).map(|(o, d)| o + d).collect()
            })
            .collect()
    }
}

/// Metropolis–Hastings weights: `w_ij = 1 / (1 + max(deg i, deg j))` on edges,
/// the remainder on the diagonal.
pub fn metropolis_weights(g: &Graph) -> MixingMatrix {
    let n = g.n_agents();
    let deg = g.degrees();
    let mut weights = vec![0.0; n * n];
    for (i, j) in g.edges() {
        let w = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        weights[i * n + j] = w;
        weights[j * n + i] = w;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| weights[i * n + j]).sum();
        weights[i * n + i] = 1.0 - off;
    }
    let mut w = MixingMatrix {
        n,
        weights,
        lambda: 0.0,
    };
    w.lambda = spectral_gap(&w);
    w
}

/// `||W - P||₂` with `P = 11ᵀ/N`: the largest singular value of the centered
/// matrix.
pub fn spectral_gap(w: &MixingMatrix) -> f64 {
    let n = w.n;
    if n == 1 {
        return 0.0;
    }
    let inv_n = 1.0 / n as f64;
    let centered = DMatrix::from_row_iterator(n, n, w.weights.iter().map(|x| x - inv_n));
    centered.singular_values().max()
}

/// Row-wise average of a stacked block (the `Λ` operator applied to one row).
///
/// Accumulated as offsets from the first row so that identical rows average
/// to exactly that row.
pub fn block_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let mut offset = vec![0.0; first.len()];
    for row in &rows[1..] {
        for ((o, x), f) in offset.iter_mut().zip(row).zip(first) {
            *o += x - f;
        }
    }
    let n = rows.len() as f64;
    first.iter().zip(offset).map(|(f, o)| f + o / n).collect()
}

/// `||X - ΛX||²_F`: squared dispersion of the rows around their mean.
pub fn consensus_error(rows: &[Vec<f64>]) -> f64 {
    let mean = block_mean(rows);
    rows.iter()
        .flat_map(|row| row.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)))
        .sum()
}
