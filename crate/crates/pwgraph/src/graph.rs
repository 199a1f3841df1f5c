//! Finite simple graphs and the signals that live on their vertices.
//!
//! A [`Graph`] is undirected, unweighted, connected, and free of self-loops
//! and isolated vertices. Those restrictions are exactly what the normalized
//! Laplacian
//!
//! ```text
//! (L f)(v) = f(v) - sum over u ~ v of f(u) / sqrt(d(v) d(u))
//! ```
//!
//! needs to be well defined, self-adjoint, positive semi-definite, and to
//! have spectrum inside [0, 2] with a one-dimensional kernel spanned by the
//! square-root degree vector.
//!
//! Graphs are immutable once constructed. Construction validates its input
//! and rejects anything that would break the operator's contracts rather
//! than repairing it silently.

use ndarray::Array2;
use std::fmt::Write as _;
use std::ops::Index;
use std::path::Path;
use thiserror::Error;

/// Errors raised while building or querying graphs.
#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    IndexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("vertex {0} has no incident edges")]
    IsolatedVertex(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("{kind} graph needs at least {minimum} vertices per dimension, got {got}")]
    TooSmall {
        kind: &'static str,
        minimum: usize,
        got: usize,
    },
    #[error("signal has {got} entries but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
}

/// Errors raised while reading the plain-text edge-list format.
#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("failed to read edge list: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// An undirected, connected, simple graph over vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    /// Cached 1/sqrt(d(v)), the only degree data the Laplacian needs.
    inv_sqrt_degree: Vec<f64>,
}

impl Graph {
    /// Build a graph from an explicit edge list over `n` vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::IndexOutOfRange {
                    vertex: u.max(v),
                    vertex_count: n,
                });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (v, neighbors) in adjacency.iter_mut().enumerate() {
            if neighbors.is_empty() {
                return Err(GraphError::IsolatedVertex(v));
            }
            neighbors.sort_unstable();
        }
        let graph = Graph {
            inv_sqrt_degree: adjacency
                .iter()
                .map(|nb| 1.0 / (nb.len() as f64).sqrt())
                .collect(),
            edge_count: edges.len(),
            adjacency,
        };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    /// Cycle on `m >= 3` vertices, numbered consecutively around the ring.
    pub fn cycle(m: usize) -> Result<Self, GraphError> {
        if m < 3 {
            return Err(GraphError::TooSmall {
                kind: "cycle",
                minimum: 3,
                got: m,
            });
        }
        let edges: Vec<(usize, usize)> = (0..m).map(|v| (v, (v + 1) % m)).collect();
        Self::from_edges(m, &edges)
    }

    /// Path on `m >= 2` vertices, numbered from one endpoint to the other.
    pub fn path(m: usize) -> Result<Self, GraphError> {
        if m < 2 {
            return Err(GraphError::TooSmall {
                kind: "path",
                minimum: 2,
                got: m,
            });
        }
        let edges: Vec<(usize, usize)> = (0..m - 1).map(|v| (v, v + 1)).collect();
        Self::from_edges(m, &edges)
    }

    /// Discrete torus: the Cartesian product of cycles with the given side
    /// lengths, each at least 3. Vertices are numbered row-major, so the
    /// vertex with coordinates `c` has index [`torus_vertex_index`]`(dims, c)`.
    pub fn torus(dims: &[usize]) -> Result<Self, GraphError> {
        if dims.is_empty() {
            return Err(GraphError::TooSmall {
                kind: "torus",
                minimum: 1,
                got: 0,
            });
        }
        for &m in dims {
            if m < 3 {
                return Err(GraphError::TooSmall {
                    kind: "torus",
                    minimum: 3,
                    got: m,
                });
            }
        }
        let n: usize = dims.iter().product();
        // Walk every vertex in row-major order and link it to its +1 ring
        // neighbor along each axis; normalizing the pair and deduplicating
        // leaves each undirected edge exactly once. Side lengths of at
        // least 3 keep the two endpoints distinct.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut coords = vec![0usize; dims.len()];
        for v in 0..n {
            for axis in 0..dims.len() {
                let mut next = coords.clone();
                next[axis] = (next[axis] + 1) % dims[axis];
                let u = torus_vertex_index(dims, &next);
                let key = (v.min(u), v.max(u));
                if seen.insert(key) {
                    edges.push(key);
                }
            }
            for axis in (0..dims.len()).rev() {
                coords[axis] += 1;
                if coords[axis] < dims[axis] {
                    break;
                }
                coords[axis] = 0;
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Degree of a vertex.
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Largest degree in the graph.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sorted neighbor list of a vertex.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Whether `u` and `v` are adjacent.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` pairs with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, neighbors) in self.adjacency.iter().enumerate() {
            for &v in neighbors {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adjacency[v] {
                if !visited[u] {
                    visited[u] = true;
                    reached += 1;
                    stack.push(u);
                }
            }
        }
        reached == n
    }
}

/// Row-major index of the torus vertex with the given coordinates.
pub fn torus_vertex_index(dims: &[usize], coords: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), coords.len());
    let mut index = 0;
    for (axis, &c) in coords.iter().enumerate() {
        index = index * dims[axis] + (c % dims[axis]);
    }
    index
}

/// A real-valued function on the vertices of a graph, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    /// Wrap a dense value vector.
    pub fn new(values: Vec<f64>) -> Self {
        Signal { values }
    }

    /// The zero signal on `n` vertices.
    pub fn zeros(n: usize) -> Self {
        Signal {
            values: vec![0.0; n],
        }
    }

    /// Kronecker delta at vertex `v`.
    pub fn delta(n: usize, v: usize) -> Self {
        assert!(v < n, "delta vertex {v} out of range for {n} vertices");
        let mut values = vec![0.0; n];
        values[v] = 1.0;
        Signal { values }
    }

    /// Build a signal by evaluating `f` at every vertex index.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Self {
        Signal {
            values: (0..n).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Standard inner product with another signal of the same length.
    pub fn dot(&self, other: &Signal) -> f64 {
        assert_eq!(self.len(), other.len(), "signal lengths disagree");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Signal) -> Signal {
        assert_eq!(self.len(), other.len(), "signal lengths disagree");
        Signal::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Signal) -> Signal {
        assert_eq!(self.len(), other.len(), "signal lengths disagree");
        Signal::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Scalar multiple.
    pub fn scaled(&self, c: f64) -> Signal {
        Signal::new(self.values.iter().map(|x| c * x).collect())
    }

    /// True when every entry is a finite number.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Signal {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Apply the normalized Laplacian to a signal without forming the matrix.
pub fn apply_laplacian(g: &Graph, f: &Signal) -> Result<Signal, GraphError> {
    let n = g.vertex_count();
    if f.len() != n {
        return Err(GraphError::LengthMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let mut acc = f[v];
        let wv = g.inv_sqrt_degree[v];
        for &u in g.neighbors(v) {
            acc -= f[u] * wv * g.inv_sqrt_degree[u];
        }
        out.push(acc);
    }
    Ok(Signal::new(out))
}

/// Dense normalized Laplacian `I - D^(-1/2) A D^(-1/2)`.
pub fn dense_laplacian(g: &Graph) -> Array2<f64> {
    let n = g.vertex_count();
    let mut l = Array2::zeros((n, n));
    for v in 0..n {
        l[[v, v]] = 1.0;
        let wv = g.inv_sqrt_degree[v];
        for &u in g.neighbors(v) {
            l[[v, u]] = -wv * g.inv_sqrt_degree[u];
        }
    }
    l
}

/// Parse the plain-text edge-list format.
///
/// The first data line holds `n m` (vertex and edge counts); each of the
/// following `m` data lines holds one edge `u v` with 0-based endpoints.
/// Everything after `#` on a line is a comment; blank lines are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph, EdgeListError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>, what: &str| -> Result<usize, EdgeListError> {
            field
                .ok_or_else(|| EdgeListError::Malformed {
                    line: line_no,
                    reason: format!("missing {what}"),
                })?
                .parse::<usize>()
                .map_err(|_| EdgeListError::Malformed {
                    line: line_no,
                    reason: format!("{what} is not a non-negative integer"),
                })
        };
        let a = parse(fields.next(), "first field")?;
        let b = parse(fields.next(), "second field")?;
        if fields.next().is_some() {
            return Err(EdgeListError::Malformed {
                line: line_no,
                reason: "expected exactly two fields".into(),
            });
        }
        match header {
            None => header = Some((a, b)),
            Some((_, m)) => {
                if edges.len() == m {
                    return Err(EdgeListError::Malformed {
                        line: line_no,
                        reason: format!("more than the declared {m} edges"),
                    });
                }
                edges.push((a, b));
            }
        }
    }
    let (n, m) = header.ok_or(EdgeListError::Malformed {
        line: 0,
        reason: "empty edge list".into(),
    })?;
    if edges.len() != m {
        return Err(EdgeListError::Malformed {
            line: 0,
            reason: format!("declared {m} edges but found {}", edges.len()),
        });
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// Read a graph from an edge-list file. See [`parse_edge_list`].
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph, EdgeListError> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

/// Serialize a graph in the edge-list format accepted by [`parse_edge_list`].
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
