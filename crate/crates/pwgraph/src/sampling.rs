//! Poincaré-type constants of vertex sets and uniqueness certification for
//! bandlimited signals.
//!
//! For a vertex set `S`, the Poincaré constant `Lambda(S)` is the smallest
//! constant with `||phi|| <= Lambda ||L phi||` for every signal supported on
//! `S`. It is computed exactly (for this finite setting) as
//! `1 / sqrt(lambda_min(Q_S))` where `Q_S` is the `S x S` block of `L^2`.
//!
//! Its role: if a signal of bandwidth `omega` vanishes on the complement
//! `U = V \ S` and `Lambda(S) * omega < 1`, the signal is zero — so `U`
//! determines every signal in the band. The module offers three routes to
//! that certificate:
//!
//! * brute force (`poincare_constant`) on any set,
//! * closed-form upper bounds for index segments on cycles
//!   ([`segment_bound`]) and axis-aligned rectangles on tori
//!   ([`rectangular_bound`]),
//! * composition: a union of sets with pairwise disjoint closures has the
//!   maximum of the member constants ([`union_lambda`]).
//!
//! Independently of all of that, [`verify_uniqueness`] checks the actual
//! linear-algebra fact — whether the bandlimited basis restricted to the
//! sample rows has full column rank — and reports the smallest singular
//! value as the margin. The two routes deliberately share no code; tests
//! play them against each other.

use crate::graph::{Graph, Signal};
use crate::linalg;
use crate::spectral::SpectralDecomposition;
use ndarray::Array2;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Sets with a restricted quadratic form smaller than this have no usable
/// Poincaré constant.
const NO_CONSTANT_TOLERANCE: f64 = 1e-12;

/// Margin the smallest singular value must clear for a sample set to be
/// certified as a uniqueness set.
pub const UNIQUENESS_MARGIN: f64 = 1e-8;

/// Upper end of the bandwidth domain accepted by [`segment_count_limit`].
pub const SEGMENT_LIMIT_OMEGA_MAX: f64 = 1.5;

/// Default circumference margin: a cycle standing in for the integer line
/// when measuring a length-`n` segment should have at least `4 n + 8`
/// vertices so the wrap-around cannot be felt.
pub fn standin_cycle_size(segment_len: usize) -> usize {
    4 * segment_len + 8
}

/// Errors raised by the sampling layer.
#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("vertex set is empty")]
    EmptySet,
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("no finite Poincaré constant: the set supports a null direction of L")]
    NoFiniteConstant,
    #[error("closures of parts {first} and {second} overlap")]
    OverlappingClosures { first: usize, second: usize },
    #[error("Poincaré constant must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("bandwidth {omega} outside the admissible range ({min}, {max})")]
    BandwidthOutOfRange { omega: f64, min: f64, max: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("set was built for a graph on {expected} vertices, got {got}")]
    GraphMismatch { expected: usize, got: usize },
}

/// A set of vertices together with its neighborhood boundary in a fixed
/// graph: the boundary holds every vertex outside the set adjacent to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexSet {
    vertex_count: usize,
    members: Vec<usize>,
    boundary: Vec<usize>,
}

impl VertexSet {
    /// Build a set from arbitrary vertex indices (sorted and deduplicated).
    pub fn new(g: &Graph, vertices: &[usize]) -> Result<Self, SamplingError> {
        let n = g.vertex_count();
        if vertices.is_empty() {
            return Err(SamplingError::EmptySet);
        }
        let mut members = vertices.to_vec();
        for &v in &members {
            if v >= n {
                return Err(SamplingError::VertexOutOfRange {
                    vertex: v,
                    vertex_count: n,
                });
            }
        }
        members.sort_unstable();
        members.dedup();
        let mut inside = vec![false; n];
        for &v in &members {
            inside[v] = true;
        }
        let mut boundary = Vec::new();
        for v in 0..n {
            if !inside[v] && g.neighbors(v).iter().any(|&u| inside[u]) {
                boundary.push(v);
            }
        }
        Ok(VertexSet {
            vertex_count: n,
            members,
            boundary,
        })
    }

    /// A run of `len` consecutive vertex indices starting at `start`,
    /// wrapping modulo the vertex count. Natural on cycles and paths, where
    /// index order is adjacency order.
    pub fn segment(g: &Graph, start: usize, len: usize) -> Result<Self, SamplingError> {
        let n = g.vertex_count();
        if len == 0 {
            return Err(SamplingError::InvalidSize("segment length is zero".into()));
        }
        if len > n {
            return Err(SamplingError::InvalidSize(format!(
                "segment length {len} exceeds the {n} available vertices"
            )));
        }
        let members: Vec<usize> = (0..len).map(|i| (start + i) % n).collect();
        Self::new(g, &members)
    }

    /// An axis-aligned block of the given `size` on a torus with side
    /// lengths `dims`, anchored at `origin` and wrapping around each axis.
    pub fn solid(
        g: &Graph,
        dims: &[usize],
        origin: &[usize],
        size: &[usize],
    ) -> Result<Self, SamplingError> {
        let n: usize = dims.iter().product();
        if n != g.vertex_count() {
            return Err(SamplingError::GraphMismatch {
                expected: g.vertex_count(),
                got: n,
            });
        }
        if origin.len() != dims.len() || size.len() != dims.len() {
            return Err(SamplingError::InvalidSize(format!(
                "torus has {} axes but origin/size have {}/{}",
                dims.len(),
                origin.len(),
                size.len()
            )));
        }
        for (axis, (&s, &m)) in size.iter().zip(dims).enumerate() {
            if s == 0 || s > m {
                return Err(SamplingError::InvalidSize(format!(
                    "solid size {s} on axis {axis} must be in 1..={m}"
                )));
            }
        }
        let mut members = Vec::new();
        let mut offset = vec![0usize; dims.len()];
        loop {
            let coords: Vec<usize> = origin
                .iter()
                .zip(&offset)
                .zip(dims)
                .map(|((&o, &d), &m)| (o + d) % m)
                .collect();
            members.push(crate::graph::torus_vertex_index(dims, &coords));
            let mut axis = dims.len();
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                offset[axis] += 1;
                if offset[axis] < size[axis] {
                    break;
                }
                offset[axis] = 0;
            }
            if offset.iter().all(|&d| d == 0) {
                break;
            }
        }
        Self::new(g, &members)
    }

    /// Number of vertices in the ambient graph.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Members, sorted ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Outside vertices adjacent to the set, sorted ascending.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Members plus boundary, sorted ascending.
    pub fn closure(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.members.len() + self.boundary.len());
        out.extend_from_slice(&self.members);
        out.extend_from_slice(&self.boundary);
        out.sort_unstable();
        out
    }

    /// All vertices not in the set, sorted ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut inside = vec![false; self.vertex_count];
        for &v in &self.members {
            inside[v] = true;
        }
        (0..self.vertex_count).filter(|&v| !inside[v]).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// How the constant in a [`LambdaReport`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMethod {
    /// Exact smallest-eigenvalue computation on the restricted form.
    BruteForce,
    /// Closed-form segment bound, a certified upper bound.
    SegmentFormula,
    /// Maximum over parts with pairwise disjoint closures.
    UnionComposition,
}

/// A Poincaré constant for a set, its provenance, and the sampling
/// threshold it certifies.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaReport {
    pub set: VertexSet,
    /// The operative constant `Lambda(S)`.
    pub lambda: f64,
    /// `1 / lambda`: bandwidths strictly below this are recoverable from
    /// the complement of the set.
    pub uniqueness_threshold: f64,
    /// Closed-form upper bound when the set has a recognized shape.
    pub closed_form_bound: Option<f64>,
    pub method: LambdaMethod,
}

impl LambdaReport {
    /// Exact constant by brute force on the restricted quadratic form.
    pub fn brute_force(
        d: &SpectralDecomposition,
        set: VertexSet,
    ) -> Result<Self, SamplingError> {
        let lambda = poincare_constant(d, &set)?;
        Ok(LambdaReport {
            set,
            lambda,
            uniqueness_threshold: 1.0 / lambda,
            closed_form_bound: None,
            method: LambdaMethod::BruteForce,
        })
    }
}

/// Smallest eigenvalue (and matching unit eigenvector, in member order) of
/// the `S x S` block of `(eps I + L)^2`.
fn restricted_form_min(
    d: &SpectralDecomposition,
    s: &VertexSet,
    eps: f64,
) -> Result<(f64, Vec<f64>), SamplingError> {
    if s.vertex_count() != d.vertex_count() {
        return Err(SamplingError::GraphMismatch {
            expected: d.vertex_count(),
            got: s.vertex_count(),
        });
    }
    if eps < 0.0 {
        return Err(SamplingError::PreconditionViolated(format!(
            "regularization eps must be non-negative, got {eps}"
        )));
    }
    let members = s.members();
    let n = d.vertex_count();
    let k = members.len();
    let basis = d.basis();
    let lambda = d.eigenvalues();
    // Q = B diag((eps + lambda)^2) B^T with B the member rows of the basis.
    let mut q = Array2::zeros((k, k));
    for i in 0..k {
        for j in i..k {
            let mut acc = 0.0;
            for m in 0..n {
                let w = eps + lambda[m];
                acc += basis[[members[i], m]] * w * w * basis[[members[j], m]];
            }
            q[[i, j]] = acc;
            q[[j, i]] = acc;
        }
    }
    let (values, vectors) = linalg::sym_eigen(q)
        .map_err(|_| SamplingError::PreconditionViolated("eigensolver stalled".into()))?;
    Ok((values[0], vectors.column(0).to_vec()))
}

/// The Poincaré constant `Lambda(S)`: the smallest `Lambda` with
/// `||phi|| <= Lambda ||L phi||` for every signal supported on `S`.
pub fn poincare_constant(
    d: &SpectralDecomposition,
    s: &VertexSet,
) -> Result<f64, SamplingError> {
    Ok(poincare_extremal(d, s)?.0)
}

/// The Poincaré constant together with a unit-norm extremal signal
/// achieving it: `||phi|| = Lambda ||L phi||` exactly.
pub fn poincare_extremal(
    d: &SpectralDecomposition,
    s: &VertexSet,
) -> Result<(f64, Signal), SamplingError> {
    let (min_value, member_vector) = restricted_form_min(d, s, 0.0)?;
    if min_value <= NO_CONSTANT_TOLERANCE {
        return Err(SamplingError::NoFiniteConstant);
    }
    let mut values = vec![0.0; s.vertex_count()];
    for (i, &v) in s.members().iter().enumerate() {
        values[v] = member_vector[i];
    }
    Ok((1.0 / min_value.sqrt(), Signal::new(values)))
}

/// The base constant for the shifted operator: smallest `a` with
/// `||phi|| <= a ||(eps I + L) phi||` on signals supported on `S`.
/// With `eps = 0` this is the Poincaré constant.
pub fn shifted_base_constant(
    d: &SpectralDecomposition,
    s: &VertexSet,
    eps: f64,
) -> Result<f64, SamplingError> {
    let (min_value, _) = restricted_form_min(d, s, eps)?;
    if min_value <= NO_CONSTANT_TOLERANCE {
        return Err(SamplingError::NoFiniteConstant);
    }
    Ok(1.0 / min_value.sqrt())
}

/// Closed-form upper bound for the Poincaré constant of a segment of `len`
/// consecutive vertices on a long enough cycle:
/// `(1/2) sin^(-2)(pi / (2 len + 2))`.
pub fn segment_bound(len: usize) -> Result<f64, SamplingError> {
    if len == 0 {
        return Err(SamplingError::InvalidSize("segment length is zero".into()));
    }
    let s = (PI / (2.0 * len as f64 + 2.0)).sin();
    Ok(0.5 / (s * s))
}

/// The printed closed-form estimate for an axis-aligned block on a torus
/// with per-axis lengths `dims`:
/// `(1/4) [min over axes of sin(pi / (2 N_i + 2))]^(-1)`.
///
/// Unlike [`segment_bound`], this value is *not* asserted anywhere to
/// dominate the brute-force constant: for small blocks the exact constant
/// can exceed it (a singleton on a 2-D torus already does), so reports keep
/// the two side by side instead of treating this as a certificate. Note the
/// first power of the sine here against the square in [`segment_bound`].
pub fn rectangular_bound(dims: &[usize]) -> Result<f64, SamplingError> {
    if dims.is_empty() {
        return Err(SamplingError::InvalidSize("no axes given".into()));
    }
    let mut min_sin = f64::INFINITY;
    for (axis, &n) in dims.iter().enumerate() {
        if n == 0 {
            return Err(SamplingError::InvalidSize(format!(
                "block size on axis {axis} is zero"
            )));
        }
        min_sin = min_sin.min((PI / (2.0 * n as f64 + 2.0)).sin());
    }
    Ok(0.25 / min_sin)
}

/// Poincaré constant of a union of sets whose closures are pairwise
/// disjoint: the maximum of the member constants, which the extremal
/// signal of the worst part attains exactly.
pub fn union_lambda(
    g: &Graph,
    parts: &[VertexSet],
    lambdas: &[f64],
) -> Result<LambdaReport, SamplingError> {
    if parts.is_empty() {
        return Err(SamplingError::EmptySet);
    }
    if lambdas.len() != parts.len() {
        return Err(SamplingError::LengthMismatch {
            expected: parts.len(),
            got: lambdas.len(),
        });
    }
    for &l in lambdas {
        if !l.is_finite() || l <= 0.0 {
            return Err(SamplingError::InvalidLambda(l));
        }
    }
    let n = g.vertex_count();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (index, part) in parts.iter().enumerate() {
        if part.vertex_count() != n {
            return Err(SamplingError::GraphMismatch {
                expected: n,
                got: part.vertex_count(),
            });
        }
        for v in part.closure() {
            if let Some(first) = owner[v] {
                return Err(SamplingError::OverlappingClosures {
                    first,
                    second: index,
                });
            }
            owner[v] = Some(index);
        }
    }
    let mut union_members = Vec::new();
    for part in parts {
        union_members.extend_from_slice(part.members());
    }
    let set = VertexSet::new(g, &union_members)?;
    let lambda = lambdas.iter().cloned().fold(f64::MIN, f64::max);
    Ok(LambdaReport {
        set,
        lambda,
        uniqueness_threshold: 1.0 / lambda,
        closed_form_bound: None,
        method: LambdaMethod::UnionComposition,
    })
}

/// Bandwidths strictly below `1 / lambda` are uniquely determined by
/// samples on the complement of a set with Poincaré constant `lambda`.
pub fn uniqueness_threshold(lambda: f64) -> Result<f64, SamplingError> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(SamplingError::InvalidLambda(lambda));
    }
    Ok(1.0 / lambda)
}

/// The graph-wide guaranteed bandwidth `sqrt(1 + 1/max_degree)`: every
/// single vertex can be dropped from signals in any band strictly below it.
pub fn omega_star(g: &Graph) -> f64 {
    (1.0 + 1.0 / g.max_degree() as f64).sqrt()
}

/// Outcome of the direct rank test on a candidate sample set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniquenessCheck {
    /// Whether the sample rows determine every signal in the band.
    pub unique: bool,
    /// Smallest singular value of the band basis restricted to the sample
    /// rows; must clear [`UNIQUENESS_MARGIN`] for `unique` to hold.
    pub margin: f64,
    /// Dimension of the bandlimited space tested.
    pub band_dimension: usize,
    /// Number of sample vertices.
    pub sample_count: usize,
}

/// Decide directly — no Poincaré machinery — whether the vertices of `u`
/// form a uniqueness set for the band `lambda <= omega`: the band's basis
/// restricted to those rows must have full column rank, measured by its
/// smallest singular value.
pub fn verify_uniqueness(
    d: &SpectralDecomposition,
    u: &VertexSet,
    omega: f64,
) -> Result<UniquenessCheck, SamplingError> {
    if u.vertex_count() != d.vertex_count() {
        return Err(SamplingError::GraphMismatch {
            expected: d.vertex_count(),
            got: u.vertex_count(),
        });
    }
    if !omega.is_finite() || omega < 0.0 {
        return Err(SamplingError::BandwidthOutOfRange {
            omega,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let dim = d.band_dimension(omega);
    let rows = u.members();
    let basis = d.basis();
    // Normal matrix of the restricted band basis.
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in i..dim {
            let mut acc = 0.0;
            for &v in rows {
                acc += basis[[v, i]] * basis[[v, j]];
            }
            m[[i, j]] = acc;
            m[[j, i]] = acc;
        }
    }
    let (values, _) = linalg::sym_eigen(m)
        .map_err(|_| SamplingError::PreconditionViolated("eigensolver stalled".into()))?;
    let margin = values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    Ok(UniquenessCheck {
        unique: margin > UNIQUENESS_MARGIN,
        margin,
        band_dimension: dim,
        sample_count: rows.len(),
    })
}

/// Largest segment length `N` satisfying `N < pi / (2 asin(sqrt(omega/2))) - 1`,
/// the strict count limit under which length-`N` segments remain removable
/// at bandwidth `omega`. Returns 0 when no positive length qualifies.
///
/// The inequality is enforced strictly, with no tolerance: a bandwidth that
/// lands exactly on the boundary for some `N` excludes that `N`.
pub fn segment_count_limit(omega: f64) -> Result<usize, SamplingError> {
    if !omega.is_finite() || omega <= 0.0 || omega >= SEGMENT_LIMIT_OMEGA_MAX {
        return Err(SamplingError::BandwidthOutOfRange {
            omega,
            min: 0.0,
            max: SEGMENT_LIMIT_OMEGA_MAX,
        });
    }
    let x = PI / (2.0 * (omega / 2.0).sqrt().asin()) - 1.0;
    if x <= 1.0 {
        return Ok(0);
    }
    // Largest integer strictly below x.
    let ceil = x.ceil();
    Ok(if ceil == x { x as usize - 1 } else { ceil as usize - 1 })
}

/// One row of a power-inequality trace: `lhs = ||phi||` against
/// `rhs = a^k ||(eps I + L)^k phi||`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerCheckEntry {
    pub k: u64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Trace the norm inequality `||phi|| <= a^k ||(eps I + L)^k phi||` for
/// `k = 2^l`, `l = 0..=l_max`.
///
/// The base case `k = 1` must hold for the supplied `a` (up to relative
/// rounding slack) and `phi` must be supported on `s`; both are checked and
/// reported as precondition violations. Powers of two are exactly the
/// exponents for which the base inequality self-amplifies, which is why no
/// other `k` appears.
pub fn power_inequality_check(
    d: &SpectralDecomposition,
    s: &VertexSet,
    phi: &Signal,
    eps: f64,
    a: f64,
    l_max: u32,
) -> Result<Vec<PowerCheckEntry>, SamplingError> {
    if s.vertex_count() != d.vertex_count() {
        return Err(SamplingError::GraphMismatch {
            expected: d.vertex_count(),
            got: s.vertex_count(),
        });
    }
    if phi.len() != d.vertex_count() {
        return Err(SamplingError::LengthMismatch {
            expected: d.vertex_count(),
            got: phi.len(),
        });
    }
    if eps < 0.0 {
        return Err(SamplingError::PreconditionViolated(format!(
            "regularization eps must be non-negative, got {eps}"
        )));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(SamplingError::PreconditionViolated(format!(
            "amplification constant must be positive and finite, got {a}"
        )));
    }
    if l_max > 30 {
        return Err(SamplingError::PreconditionViolated(format!(
            "power depth l_max = {l_max} exceeds the supported maximum of 30"
        )));
    }
    let norm = phi.norm();
    if norm == 0.0 {
        return Err(SamplingError::PreconditionViolated(
            "phi is the zero signal".into(),
        ));
    }
    let support_slack = 1e-12 * norm;
    for (v, &value) in phi.values().iter().enumerate() {
        if !s.contains(v) && value.abs() > support_slack {
            return Err(SamplingError::PreconditionViolated(format!(
                "phi is not supported on the set: |phi({v})| = {}",
                value.abs()
            )));
        }
    }
    let base = d
        .operator_power(eps, 1.0, phi)
        .expect("validated inputs")
        .norm();
    if norm > a * base * (1.0 + 1e-9) {
        return Err(SamplingError::PreconditionViolated(format!(
            "base inequality fails: ||phi|| = {norm} > a ||(eps I + L) phi|| = {}",
            a * base
        )));
    }
    let mut trace = Vec::with_capacity(l_max as usize + 1);
    for l in 0..=l_max {
        let k = 1u64 << l;
        let powered = d
            .operator_power(eps, k as f64, phi)
            .expect("validated inputs")
            .norm();
        trace.push(PowerCheckEntry {
            k,
            lhs: norm,
            rhs: a.powi(k as i32) * powered,
        });
    }
    Ok(trace)
}
