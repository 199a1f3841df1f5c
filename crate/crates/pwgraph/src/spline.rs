//! Interpolating variational splines on graphs.
//!
//! Given constraint vertices `W` with target values `y`, order `t > 0`, and
//! regularization `eps >= 0`, the spline is the unique minimizer of the
//! Sobolev seminorm `|| (eps I + L)^(t/2) Y ||` among all signals with
//! `Y(w) = y_w` on `W`. Stationarity forces the residual `(eps I + L)^t Y`
//! to vanish off `W`, so the minimizer is a combination of fundamental
//! solutions
//!
//! ```text
//! E_w = (eps I + L)^(-t) delta_w,        Y = sum over w of alpha_w E_w,
//! ```
//!
//! and the coefficients solve the Gram system `K alpha = y` with
//! `K[i][j] = E_{w_j}(w_i)`. `K` is symmetric positive definite whenever
//! `eps I + L` is invertible, which on a connected graph means `eps > 0`.
//!
//! Two consequences of the same orthogonality drive the diagnostics here:
//! the squared energy of the spline equals `sum alpha_w y_w`, and for any
//! competing interpolant `g` of the same data the excess
//! `||g||^2 - ||Y||^2` in the Sobolev norm equals `||g - Y||^2`, so the
//! spline's optimality margin is never negative.
//!
//! The Gram matrix inherits the conditioning of `(eps I + L)^(-t)`. The
//! module estimates that condition number from the spectrum before
//! factorizing and refuses to proceed past [`GRAM_CONDITION_LIMIT`] rather
//! than return digits it cannot back.

use crate::graph::Signal;
use crate::linalg;
use crate::spectral::SpectralDecomposition;
use ndarray::Array2;
use thiserror::Error;

/// Largest acceptable a-priori condition estimate for the Gram system.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// `eps + lambda_min` at or below this threshold makes `(eps I + L)^(-t)`
/// meaningless and fundamental systems unavailable.
const INVERT_TOLERANCE: f64 = 1e-12;

/// Relative slack allowed when checking that a competitor interpolates the
/// spline's data.
const INTERPOLATION_TOLERANCE: f64 = 1e-8;

/// Errors raised by spline construction and diagnostics.
#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("constraint set is empty")]
    EmptyConstraintSet,
    #[error("constraint vertex {0} listed twice")]
    DuplicateVertex(usize),
    #[error("constraint vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("spline order must be positive, got {0}")]
    NonPositiveOrder(f64),
    #[error("regularization eps must be non-negative, got {0}")]
    NegativeEpsilon(f64),
    #[error(
        "operator eps I + L is singular (eps + lambda_min = {shifted_floor}); \
         a positive eps is required on a connected graph"
    )]
    SingularOperator { shifted_floor: f64 },
    #[error("Gram system too ill-conditioned to solve (estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("data contains a non-finite value")]
    NonFiniteData,
    #[error("signal is not an interpolant: off by {deviation:.3e} at vertex {vertex}")]
    NotAnInterpolant { vertex: usize, deviation: f64 },
}

/// Fundamental solutions `E_w = (eps I + L)^(-t) delta_w` for a constraint
/// set, with the Gram matrix and its Cholesky factor ready for repeated
/// fits against different data.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    vertices: Vec<usize>,
    order: f64,
    eps: f64,
    /// `n x |W|`; column `i` is the fundamental solution at `vertices[i]`.
    columns: Array2<f64>,
    gram: Array2<f64>,
    factor: Array2<f64>,
    condition_estimate: f64,
}

impl FundamentalSystem {
    /// Build the fundamental system for constraint vertices `w` (any order,
    /// no duplicates), order `t`, and regularization `eps`.
    pub fn new(
        d: &SpectralDecomposition,
        w: &[usize],
        t: f64,
        eps: f64,
    ) -> Result<Self, SplineError> {
        let n = d.vertex_count();
        if w.is_empty() {
            return Err(SplineError::EmptyConstraintSet);
        }
        for &v in w {
            if v >= n {
                return Err(SplineError::VertexOutOfRange {
                    vertex: v,
                    vertex_count: n,
                });
            }
        }
        let mut sorted = w.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(SplineError::DuplicateVertex(pair[0]));
            }
        }
        if t.is_nan() || t <= 0.0 {
            return Err(SplineError::NonPositiveOrder(t));
        }
        if eps < 0.0 {
            return Err(SplineError::NegativeEpsilon(eps));
        }
        let lambda = d.eigenvalues();
        let floor = eps + lambda[0];
        if floor <= INVERT_TOLERANCE {
            return Err(SplineError::SingularOperator {
                shifted_floor: floor,
            });
        }
        let condition_estimate = ((eps + lambda[n - 1]) / floor).powf(t);
        if !condition_estimate.is_finite() || condition_estimate > GRAM_CONDITION_LIMIT {
            return Err(SplineError::IllConditioned {
                estimate: condition_estimate,
            });
        }

        // E = U diag((eps + lambda)^(-t)) U_W^T, assembled as one n x |W|
        // product; the Gram matrix is its restriction to the rows in W.
        let basis = d.basis();
        let mut weighted = basis.clone();
        for (j, &lam) in lambda.iter().enumerate() {
            let scale = (eps + lam).powf(-t);
            for i in 0..n {
                weighted[[i, j]] *= scale;
            }
        }
        let mut basis_rows_w = Array2::zeros((w.len(), n));
        for (row, &v) in w.iter().enumerate() {
            for j in 0..n {
                basis_rows_w[[row, j]] = basis[[v, j]];
            }
        }
        let columns = weighted.dot(&basis_rows_w.t());
        let mut gram = Array2::zeros((w.len(), w.len()));
        for (row, &v) in w.iter().enumerate() {
            for col in 0..w.len() {
                gram[[row, col]] = columns[[v, col]];
            }
        }
        // The Gram matrix is symmetric by construction; enforce it exactly
        // so the factorization sees a clean input.
        for i in 0..w.len() {
            for j in (i + 1)..w.len() {
                let s = 0.5 * (gram[[i, j]] + gram[[j, i]]);
                gram[[i, j]] = s;
                gram[[j, i]] = s;
            }
        }
        let factor = linalg::cholesky(&gram).ok_or(SplineError::IllConditioned {
            estimate: condition_estimate,
        })?;
        Ok(FundamentalSystem {
            vertices: w.to_vec(),
            order: t,
            eps,
            columns,
            gram,
            factor,
            condition_estimate,
        })
    }

    /// Constraint vertices in the order supplied at construction.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Spline order `t`.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Regularization parameter.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The Gram matrix `K[i][j] = E_{w_j}(w_i)`.
    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    /// Fundamental solution for `vertices()[i]` as a full-length signal.
    pub fn column(&self, i: usize) -> Signal {
        Signal::new(self.columns.column(i).to_vec())
    }

    /// A-priori condition estimate `((eps + lambda_max)/(eps + lambda_min))^t`
    /// of the Gram system.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Solve `K alpha = y` (one refinement pass on top of the Cholesky
    /// solve keeps the interpolation residual near machine precision even
    /// when a single spectral direction dominates the Gram matrix).
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        linalg::cholesky_solve_refined(&self.gram, &self.factor, y)
    }

    /// Evaluate `sum_i alpha_i E_{w_i}` through its spectral coefficients:
    /// `c_j = (eps + lambda_j)^(-t) (B alpha)_j`, then one inverse
    /// transform.
    ///
    /// Summing the fundamental-solution columns in vertex space instead
    /// would run the huge low-frequency entries of `E` against each other
    /// and lose ~`cond * machine-eps` of the answer to cancellation; in
    /// coefficient space every intermediate stays at the scale of the
    /// result, and the rounding that does occur lands in the directions the
    /// forward operator `(eps I + L)^t` attenuates most.
    fn evaluate(&self, d: &SpectralDecomposition, alpha: &[f64]) -> Signal {
        let basis = d.basis();
        let lambda = d.eigenvalues();
        let n = basis.nrows();
        let mut coefficients = vec![0.0; n];
        for (j, c) in coefficients.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &w) in self.vertices.iter().enumerate() {
                acc += basis[[w, j]] * alpha[i];
            }
            *c = acc * (self.eps + lambda[j]).powf(-self.order);
        }
        d.inverse_fourier(&coefficients)
            .expect("coefficient vector matches the decomposition")
    }
}

/// A fitted interpolating spline.
#[derive(Debug, Clone)]
pub struct SplineModel {
    /// Constraint vertices, in the order supplied to the fit.
    pub vertices: Vec<usize>,
    /// Spline order `t`.
    pub order: f64,
    /// Regularization parameter.
    pub eps: f64,
    /// Interpolated values, aligned with `vertices`.
    pub target: Vec<f64>,
    /// Coefficients of the fundamental solutions, aligned with `vertices`.
    pub coefficients: Vec<f64>,
    /// The spline itself.
    pub solution: Signal,
    /// `|| (eps I + L)^(t/2) Y ||`, the minimized norm.
    pub sobolev_energy: f64,
    /// Condition estimate of the Gram system that produced the fit.
    pub condition_estimate: f64,
}

/// Fit the interpolating spline of order `t` through `(w, y)`.
pub fn fit_spline(
    d: &SpectralDecomposition,
    w: &[usize],
    y: &[f64],
    t: f64,
    eps: f64,
) -> Result<SplineModel, SplineError> {
    let system = FundamentalSystem::new(d, w, t, eps)?;
    fit_with_system(d, &system, y)
}

/// Fit against an existing fundamental system (reuses the factorization).
pub fn fit_with_system(
    d: &SpectralDecomposition,
    system: &FundamentalSystem,
    y: &[f64],
) -> Result<SplineModel, SplineError> {
    if y.len() != system.vertices.len() {
        return Err(SplineError::LengthMismatch {
            expected: system.vertices.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SplineError::NonFiniteData);
    }
    let mut coefficients = system.solve(y);
    let mut solution = system.evaluate(d, &coefficients);
    // Correct the coefficients against the measured interpolation defect.
    // Near the conditioning limit the first solve leaves a defect around
    // cond * machine-eps; each pass shrinks it by that same factor, so two
    // passes pin the constraints essentially exactly.
    let scale = y.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for _ in 0..2 {
        let defect: Vec<f64> = system
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &w)| solution[w] - y[i])
            .collect();
        if defect.iter().all(|v| v.abs() <= 1e-15 * scale) {
            break;
        }
        let correction = system.solve(&defect);
        for (a, c) in coefficients.iter_mut().zip(&correction) {
            *a -= c;
        }
        solution = system.evaluate(d, &coefficients);
    }
    let sobolev_energy = d
        .sobolev_norm(system.eps, system.order, &solution)
        .expect("solution length matches decomposition");
    Ok(SplineModel {
        vertices: system.vertices.clone(),
        order: system.order,
        eps: system.eps,
        target: y.to_vec(),
        coefficients,
        solution,
        sobolev_energy,
        condition_estimate: system.condition_estimate,
    })
}

/// The Lagrangian spline basis for `w`: element `i` interpolates 1 at
/// `w[i]` and 0 at every other constraint vertex, so any data vector on `w`
/// is reproduced by the matching linear combination.
pub fn lagrangian_splines(
    d: &SpectralDecomposition,
    w: &[usize],
    t: f64,
    eps: f64,
) -> Result<Vec<SplineModel>, SplineError> {
    let system = FundamentalSystem::new(d, w, t, eps)?;
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let mut y = vec![0.0; w.len()];
        y[i] = 1.0;
        out.push(fit_with_system(d, &system, &y)?);
    }
    Ok(out)
}

/// Excess Sobolev energy of a competing interpolant `g` over the spline:
/// `||g||^2 - ||Y||^2` in the `(eps, t)` Sobolev norm.
///
/// By the orthogonality of the spline construction this equals
/// `||g - Y||^2` in the same norm, so up to rounding it is non-negative,
/// and zero only for the spline itself.
pub fn optimality_margin(
    d: &SpectralDecomposition,
    model: &SplineModel,
    g: &Signal,
) -> Result<f64, SplineError> {
    let n = d.vertex_count();
    if g.len() != n {
        return Err(SplineError::LengthMismatch {
            expected: n,
            got: g.len(),
        });
    }
    let scale = model
        .target
        .iter()
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    for (i, &v) in model.vertices.iter().enumerate() {
        let deviation = (g[v] - model.target[i]).abs();
        if deviation > INTERPOLATION_TOLERANCE * scale {
            return Err(SplineError::NotAnInterpolant {
                vertex: v,
                deviation,
            });
        }
    }
    let competitor = d
        .sobolev_norm(model.eps, model.order, g)
        .expect("competitor length checked");
    Ok(competitor * competitor - model.sobolev_energy * model.sobolev_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn decompose(g: &Graph) -> SpectralDecomposition {
        SpectralDecomposition::compute(g).unwrap()
    }

    /// Single-edge graph, eps = 1, t = 1: every quantity has a hand
    /// computation. (eps I + L) = [[2, -1], [-1, 2]], inverse
    /// [[2/3, 1/3], [1/3, 2/3]].
    #[test]
    fn single_edge_fundamental_system_matches_hand_inverse() {
        let g = Graph::path(2).unwrap();
        let d = decompose(&g);
        let system = FundamentalSystem::new(&d, &[0], 1.0, 1.0).unwrap();
        let e0 = system.column(0);
        assert!((e0[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((e0[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((system.gram()[[0, 0]] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_spline_has_known_solution_and_energy() {
        let g = Graph::path(2).unwrap();
        let d = decompose(&g);
        let model = fit_spline(&d, &[0], &[1.0], 1.0, 1.0).unwrap();
        assert!((model.coefficients[0] - 1.5).abs() < 1e-12);
        assert!((model.solution[0] - 1.0).abs() < 1e-12);
        assert!((model.solution[1] - 0.5).abs() < 1e-12);
        // Energy identity: squared energy equals alpha . y = 3/2.
        assert!((model.sobolev_energy.powi(2) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_edge_competitor_margin_is_half() {
        let g = Graph::path(2).unwrap();
        let d = decompose(&g);
        let model = fit_spline(&d, &[0], &[1.0], 1.0, 1.0).unwrap();
        let margin = optimality_margin(&d, &model, &Signal::new(vec![1.0, 0.0])).unwrap();
        assert!((margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spline_interpolates_and_localizes_residual() {
        let g = Graph::cycle(16).unwrap();
        let d = decompose(&g);
        let w = [0usize, 3, 7, 8, 12];
        let y = [1.0, -0.5, 0.25, 2.0, 0.0];
        for (t, eps) in [(1.0, 0.5), (2.0, 0.1), (4.0, 1.0)] {
            let model = fit_spline(&d, &w, &y, t, eps).unwrap();
            for (i, &v) in w.iter().enumerate() {
                assert!(
                    (model.solution[v] - y[i]).abs() < 1e-9,
                    "t={t} eps={eps}: interpolation off at {v}"
                );
            }
            // The residual (eps I + L)^t Y lives on W only.
            let residual = d.operator_power(eps, t, &model.solution).unwrap();
            let scale = residual.norm();
            for v in 0..16 {
                if !w.contains(&v) {
                    assert!(
                        residual[v].abs() <= 1e-8 * scale,
                        "t={t} eps={eps}: residual {} at off-constraint vertex {v}",
                        residual[v]
                    );
                }
            }
            // Energy identity.
            let inner: f64 = model
                .coefficients
                .iter()
                .zip(&y)
                .map(|(a, b)| a * b)
                .sum();
            let energy2 = model.sobolev_energy.powi(2);
            assert!(
                (energy2 - inner).abs() <= 1e-8 * energy2.max(1.0),
                "t={t} eps={eps}: energy {energy2} vs alpha.y {inner}"
            );
        }
    }

    #[test]
    fn fit_is_linear_in_the_data() {
        let g = Graph::torus(&[4, 4]).unwrap();
        let d = decompose(&g);
        let w = [0usize, 5, 10, 15, 3];
        let y1 = [1.0, 2.0, -1.0, 0.5, 0.0];
        let y2 = [0.0, -1.0, 1.5, 2.5, 1.0];
        let system = FundamentalSystem::new(&d, &w, 2.0, 0.3).unwrap();
        let a = fit_with_system(&d, &system, &y1).unwrap();
        let b = fit_with_system(&d, &system, &y2).unwrap();
        let combined: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| 2.0 * p - 3.0 * q).collect();
        let c = fit_with_system(&d, &system, &combined).unwrap();
        let direct = a.solution.scaled(2.0).sub(&b.solution.scaled(3.0));
        assert!(c.solution.sub(&direct).norm() < 1e-9);
    }

    #[test]
    fn full_constraint_set_reproduces_any_signal() {
        let g = Graph::cycle(8).unwrap();
        let d = decompose(&g);
        let w: Vec<usize> = (0..8).collect();
        let y: Vec<f64> = (0..8).map(|v| ((v * v) as f64).sin()).collect();
        let model = fit_spline(&d, &w, &y, 1.0, 0.5).unwrap();
        for (v, &target) in y.iter().enumerate() {
            assert!((model.solution[v] - target).abs() < 1e-10);
        }
    }

    #[test]
    fn lagrangian_basis_is_kronecker_and_reassembles_fits() {
        let g = Graph::cycle(12).unwrap();
        let d = decompose(&g);
        let w = [1usize, 4, 6, 9];
        let basis = lagrangian_splines(&d, &w, 2.0, 0.2).unwrap();
        assert_eq!(basis.len(), 4);
        for (i, spline) in basis.iter().enumerate() {
            for (j, &v) in w.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (spline.solution[v] - expect).abs() < 1e-9,
                    "lagrangian {i} at vertex {v}"
                );
            }
        }
        // Linear combination of the basis equals a direct fit.
        let y = [0.7, -1.1, 0.4, 2.2];
        let direct = fit_spline(&d, &w, &y, 2.0, 0.2).unwrap();
        let mut combined = Signal::zeros(12);
        for (i, spline) in basis.iter().enumerate() {
            combined = combined.add(&spline.solution.scaled(y[i]));
        }
        assert!(combined.sub(&direct.solution).norm() < 1e-9);
    }

    #[test]
    fn margin_matches_distance_to_spline_in_sobolev_norm() {
        let g = Graph::cycle(10).unwrap();
        let d = decompose(&g);
        let w = [0usize, 4, 7];
        let y = [1.0, 0.0, -2.0];
        let (t, eps) = (2.0, 0.4);
        let model = fit_spline(&d, &w, &y, t, eps).unwrap();
        // Perturb off the constraint set: still an interpolant.
        let mut bump = Signal::zeros(10);
        let free = [1usize, 2, 5, 9];
        for (i, &v) in free.iter().enumerate() {
            let mut values = bump.values().to_vec();
            values[v] = 0.3 * (i as f64 + 1.0);
            bump = Signal::new(values);
        }
        let g_competitor = model.solution.add(&bump);
        let margin = optimality_margin(&d, &model, &g_competitor).unwrap();
        let distance = d.sobolev_norm(eps, t, &bump).unwrap();
        assert!(
            (margin - distance * distance).abs() < 1e-7,
            "margin {margin} vs distance^2 {}",
            distance * distance
        );
        assert!(margin >= -1e-8);
    }

    #[test]
    fn non_interpolants_are_rejected_by_margin() {
        let g = Graph::cycle(6).unwrap();
        let d = decompose(&g);
        let model = fit_spline(&d, &[0, 3], &[1.0, -1.0], 1.0, 0.5).unwrap();
        let mut values = model.solution.values().to_vec();
        values[0] += 0.01;
        let err = optimality_margin(&d, &model, &Signal::new(values)).unwrap_err();
        assert!(matches!(err, SplineError::NotAnInterpolant { vertex: 0, .. }));
    }

    #[test]
    fn construction_validates_inputs() {
        let g = Graph::cycle(6).unwrap();
        let d = decompose(&g);
        assert_eq!(
            FundamentalSystem::new(&d, &[], 1.0, 0.5).unwrap_err(),
            SplineError::EmptyConstraintSet
        );
        assert_eq!(
            FundamentalSystem::new(&d, &[1, 1], 1.0, 0.5).unwrap_err(),
            SplineError::DuplicateVertex(1)
        );
        assert_eq!(
            FundamentalSystem::new(&d, &[7], 1.0, 0.5).unwrap_err(),
            SplineError::VertexOutOfRange {
                vertex: 7,
                vertex_count: 6
            }
        );
        assert_eq!(
            FundamentalSystem::new(&d, &[0], 0.0, 0.5).unwrap_err(),
            SplineError::NonPositiveOrder(0.0)
        );
        assert_eq!(
            FundamentalSystem::new(&d, &[0], 1.0, -0.5).unwrap_err(),
            SplineError::NegativeEpsilon(-0.5)
        );
        assert!(matches!(
            FundamentalSystem::new(&d, &[0], 1.0, 0.0).unwrap_err(),
            SplineError::SingularOperator { .. }
        ));
        let err = fit_spline(&d, &[0, 2], &[1.0], 1.0, 0.5).unwrap_err();
        assert!(matches!(err, SplineError::LengthMismatch { .. }));
        let err = fit_spline(&d, &[0, 2], &[1.0, f64::NAN], 1.0, 0.5).unwrap_err();
        assert_eq!(err, SplineError::NonFiniteData);
    }

    #[test]
    fn hopeless_conditioning_is_refused_up_front() {
        let g = Graph::cycle(6).unwrap();
        let d = decompose(&g);
        // ((1e-4 + 2)/1e-4)^4 is about 1.6e17, far past the limit.
        let err = FundamentalSystem::new(&d, &[0, 2], 4.0, 1e-4).unwrap_err();
        match err {
            SplineError::IllConditioned { estimate } => assert!(estimate > GRAM_CONDITION_LIMIT),
            other => panic!("expected IllConditioned, got {other:?}"),
        }
    }

    #[test]
    fn shifted_operator_allows_eps_zero() {
        let g = Graph::cycle(8).unwrap();
        let d = decompose(&g).shifted(0.5);
        let model = fit_spline(&d, &[0, 4], &[1.0, -1.0], 2.0, 0.0).unwrap();
        assert!((model.solution[0] - 1.0).abs() < 1e-9);
        assert!((model.solution[4] + 1.0).abs() < 1e-9);
    }
}
