//! Textual grammars accepted on the command line: graph generator specs,
//! removal-set specs, and interpolation data, plus their resolution against
//! a concrete graph.
//!
//! Parsing is split from resolution so that validation failures can be
//! reported before any numerics run: a spec that parses may still fail to
//! resolve (a solid on a non-torus graph, segments that do not fit), and
//! both kinds of failure are configuration errors.

use std::path::PathBuf;

use pwgraph::graph::read_edge_list;
use pwgraph::sampling::{standin_cycle_size, VertexSet};
use pwgraph::Graph;

/// A graph source: a named generator with parameters, or an edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Cycle(usize),
    Path(usize),
    Torus(Vec<usize>),
    File(PathBuf),
}

impl GraphSpec {
    /// Parse `cycle:m`, `path:m`, `torus:m1xm2[x...]`, or `file:<path>`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text.split_once(':').ok_or_else(|| {
            format!(
                "graph spec '{text}': expected one of cycle:m, path:m, \
                 torus:m1xm2[x...], file:<path>"
            )
        })?;
        match kind {
            "cycle" => Ok(GraphSpec::Cycle(parse_count(rest, "cycle size")?)),
            "path" => Ok(GraphSpec::Path(parse_count(rest, "path size")?)),
            "torus" => {
                let dims = rest
                    .split('x')
                    .map(|d| parse_count(d, "torus side length"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GraphSpec::Torus(dims))
            }
            "file" => {
                if rest.is_empty() {
                    return Err(format!("graph spec '{text}': empty file path"));
                }
                Ok(GraphSpec::File(PathBuf::from(rest)))
            }
            other => Err(format!(
                "graph spec '{text}': unknown kind '{other}' \
                 (expected cycle, path, torus, or file)"
            )),
        }
    }

    /// Build the graph this spec describes.
    pub fn build(&self) -> Result<Graph, String> {
        match self {
            GraphSpec::Cycle(m) => Graph::cycle(*m).map_err(|e| format!("graph: {e}")),
            GraphSpec::Path(m) => Graph::path(*m).map_err(|e| format!("graph: {e}")),
            GraphSpec::Torus(dims) => Graph::torus(dims).map_err(|e| format!("graph: {e}")),
            GraphSpec::File(path) => read_edge_list(path)
                .map_err(|e| format!("graph: {}: {e}", path.display())),
        }
    }

    /// Torus side lengths, when the spec is a torus.
    pub fn torus_dims(&self) -> Option<&[usize]> {
        match self {
            GraphSpec::Torus(dims) => Some(dims),
            _ => None,
        }
    }
}

/// A removal-set description, prior to resolution against a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemovalSpec {
    /// `segment:N@start` (or `segment:N`, anchored at vertex 0): `N`
    /// consecutive vertex indices, wrapping modulo the vertex count.
    Segment { len: usize, start: usize },
    /// `segments:CxN`: `C` segments of length `N`, auto-placed evenly so
    /// their closures stay pairwise disjoint.
    Segments { count: usize, len: usize },
    /// `solid:N1xN2[@r,c]`: an axis-aligned block on a torus, anchored at
    /// the given origin (default all zeros). Generalizes to any arity.
    Solid {
        size: Vec<usize>,
        origin: Option<Vec<usize>>,
    },
    /// `list:v1,v2,...`: explicit vertex indices.
    List(Vec<usize>),
}

impl RemovalSpec {
    /// Parse a removal spec in the grammar above.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text.split_once(':').ok_or_else(|| {
            format!(
                "removal spec '{text}': expected one of segment:N[@start], \
                 segments:CxN, solid:N1xN2[@r,c], list:v1,v2,..."
            )
        })?;
        match kind {
            "segment" => {
                let (len_text, start_text) = match rest.split_once('@') {
                    Some((l, s)) => (l, Some(s)),
                    None => (rest, None),
                };
                let len = parse_count(len_text, "segment length")?;
                let start = match start_text {
                    Some(s) => parse_index(s, "segment start")?,
                    None => 0,
                };
                Ok(RemovalSpec::Segment { len, start })
            }
            "segments" => {
                let (count_text, len_text) = rest
                    .split_once('x')
                    .ok_or_else(|| format!("removal spec '{text}': expected segments:CxN"))?;
                Ok(RemovalSpec::Segments {
                    count: parse_count(count_text, "segment count")?,
                    len: parse_count(len_text, "segment length")?,
                })
            }
            "solid" => {
                let (size_text, origin_text) = match rest.split_once('@') {
                    Some((s, o)) => (s, Some(o)),
                    None => (rest, None),
                };
                let size = size_text
                    .split('x')
                    .map(|d| parse_count(d, "solid side length"))
                    .collect::<Result<Vec<_>, _>>()?;
                let origin = origin_text
                    .map(|t| {
                        t.split(',')
                            .map(|c| parse_index(c, "solid origin coordinate"))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?;
                Ok(RemovalSpec::Solid { size, origin })
            }
            "list" => {
                let vertices = rest
                    .split(',')
                    .map(|v| parse_index(v, "vertex"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RemovalSpec::List(vertices))
            }
            other => Err(format!(
                "removal spec '{text}': unknown kind '{other}' \
                 (expected segment, segments, solid, or list)"
            )),
        }
    }

    /// Resolve against a concrete graph. The generator spec supplies
    /// context the grammar alone cannot: solids need torus side lengths,
    /// and auto-placed segments rely on index order matching adjacency
    /// order, which only cycles and paths guarantee.
    pub fn resolve(&self, spec: &GraphSpec, g: &Graph) -> Result<VertexSet, String> {
        match self {
            RemovalSpec::Segment { len, start } => {
                VertexSet::segment(g, *start, *len).map_err(|e| format!("removal: {e}"))
            }
            RemovalSpec::Segments { count, len } => {
                if !matches!(spec, GraphSpec::Cycle(_) | GraphSpec::Path(_)) {
                    return Err(
                        "removal: segments:CxN auto-placement needs a cycle or path graph"
                            .to_string(),
                    );
                }
                let n = g.vertex_count();
                let stride = n / count;
                // Segment i occupies [i*stride, i*stride + len). A gap of
                // at least two vertices between consecutive segments (and
                // around the wrap) keeps the closures pairwise disjoint.
                if stride < len + 2 {
                    return Err(format!(
                        "removal: {count} segments of length {len} with disjoint \
                         closures need at least {} vertices, graph has {n}",
                        count * (len + 2)
                    ));
                }
                let mut members = Vec::with_capacity(count * len);
                for i in 0..*count {
                    let start = i * stride;
                    members.extend(start..start + len);
                }
                VertexSet::new(g, &members).map_err(|e| format!("removal: {e}"))
            }
            RemovalSpec::Solid { size, origin } => {
                let dims = spec
                    .torus_dims()
                    .ok_or("removal: solid removal needs a torus graph")?;
                let default_origin;
                let origin = match origin {
                    Some(o) => o.as_slice(),
                    None => {
                        default_origin = vec![0; dims.len()];
                        &default_origin
                    }
                };
                VertexSet::solid(g, dims, origin, size).map_err(|e| format!("removal: {e}"))
            }
            RemovalSpec::List(vertices) => {
                VertexSet::new(g, vertices).map_err(|e| format!("removal: {e}"))
            }
        }
    }

    /// Segment length for which the closed-form Poincaré bound is
    /// certified: the removal must be (a union of) segments and the host a
    /// cycle long enough for the bound to dominate the exact constant.
    pub fn certified_segment_len(&self, spec: &GraphSpec) -> Option<usize> {
        let len = match self {
            RemovalSpec::Segment { len, .. } => *len,
            RemovalSpec::Segments { len, .. } => *len,
            _ => return None,
        };
        match spec {
            GraphSpec::Cycle(m) if *m >= standin_cycle_size(len) => Some(len),
            _ => None,
        }
    }
}

/// Parse interpolation data `v1=x1,v2=x2,...` into (vertex, value) pairs.
pub fn parse_fit(text: &str) -> Result<Vec<(usize, f64)>, String> {
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for item in text.split(',') {
        let (vertex_text, value_text) = item
            .split_once('=')
            .ok_or_else(|| format!("fit entry '{item}': expected vertex=value"))?;
        let vertex = parse_index(vertex_text, "fit vertex")?;
        let value: f64 = value_text
            .trim()
            .parse()
            .map_err(|_| format!("fit value '{}' is not a number", value_text.trim()))?;
        if !value.is_finite() {
            return Err(format!("fit value {value} is not finite"));
        }
        if pairs.iter().any(|&(v, _)| v == vertex) {
            return Err(format!("fit vertex {vertex} listed twice"));
        }
        pairs.push((vertex, value));
    }
    Ok(pairs)
}

fn parse_count(field: &str, what: &str) -> Result<usize, String> {
    let value = parse_index(field, what)?;
    if value == 0 {
        return Err(format!("{what} must be positive"));
    }
    Ok(value)
}

fn parse_index(field: &str, what: &str) -> Result<usize, String> {
    let trimmed = field.trim();
    trimmed
        .parse::<usize>()
        .map_err(|_| format!("{what} '{trimmed}' is not a nonnegative integer"))
}
