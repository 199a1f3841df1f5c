//! Reconstruction of bandlimited signals from partial samples by splines of
//! growing order.
//!
//! Setting: a signal `f` with bandwidth `omega` (all spectral content at
//! eigenvalues `<= omega`) is known only on `U = V \ S`, the complement of a
//! removed set `S` with Poincaré constant `Lambda = Lambda(S)`. For each
//! `k = 2^l` the order-`2k` interpolating spline `Y_k` — the minimizer of
//! `||(eps I + L)^k Y||` among interpolants of the samples — approximates
//! `f` geometrically:
//!
//! ```text
//! ||f - Y_k|| <= 2 gamma^k ||f||,    gamma = Lambda (omega + eps) < 1.
//! ```
//!
//! The chain behind the bound: the error `f - Y_k` vanishes on `U`, so it is
//! supported on `S`, where the Poincaré inequality self-amplifies over the
//! doubled powers `k = 2^l`; minimality of the spline energy and the
//! bandwidth of `f` bound the remaining factor by `2 (omega + eps)^k ||f||`.
//! Doubling powers are the only exponents the amplification argument
//! reaches, which is why iterates are indexed by `l` with `k = 2^l`.
//!
//! The driver [`reconstruct`] records one trace entry per iterate and stops
//! for one of three reasons: the iteration budget `l_max` is exhausted, the
//! next Gram system would be too ill-conditioned to trust (the previous
//! iterate is returned), or the measured error has hit numerical floor.

use crate::graph::Signal;
use crate::sampling::{self, SamplingError, VertexSet};
use crate::spectral::{SpectralDecomposition, SpectralError};
use crate::spline::{self, FundamentalSystem, SplineError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

/// Relative error below which further iterates cannot improve in `f64`.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Largest supported iteration budget exponent.
const MAX_LEVELS: u32 = 30;

/// Errors raised by the reconstruction layer.
#[derive(Debug, Error, PartialEq)]
pub enum ReconstructError {
    #[error(
        "bandwidth {omega} is not recoverable: Lambda * omega = {product} >= 1",
        product = lambda * omega
    )]
    InfeasibleBandwidth { lambda: f64, omega: f64 },
    #[error("contraction factor gamma = {gamma} is not below 1; lower eps or omega")]
    GammaNotLessThanOne { gamma: f64 },
    #[error("the removed set leaves no vertices to sample")]
    EmptySampleSet,
    #[error("bandwidth admits no spectral content")]
    EmptyBand,
    #[error("expected {expected} samples (one per kept vertex), got {got}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("ground truth has {got} values, expected {expected}")]
    GroundTruthLength { expected: usize, got: usize },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Why the iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// All `l_max + 1` planned iterates were computed.
    BudgetExhausted,
    /// The next Gram system exceeded the conditioning limit; the last
    /// trusted iterate was returned.
    IllConditioned,
    /// The measured error dropped below [`ERROR_FLOOR`] relative to the
    /// ground truth norm.
    ErrorFloor,
}

/// One computed iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    /// Iteration level; `k = 2^l`.
    pub l: u32,
    /// Power of the contraction actually certified at this iterate.
    pub k: u64,
    /// `||f - Y_k||` when ground truth was supplied.
    pub error: Option<f64>,
    /// `2 gamma^k ||f||` with ground truth, `2 gamma^k` without.
    pub bound: f64,
    /// Condition estimate of the Gram system that produced this iterate.
    pub gram_condition: f64,
}

/// Full record of a reconstruction run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionTrace {
    pub omega: f64,
    pub eps: f64,
    /// Poincaré constant used for the contraction factor.
    pub lambda: f64,
    /// `lambda * (omega + eps)`.
    pub gamma: f64,
    pub entries: Vec<TraceEntry>,
    pub stop_reason: StopReason,
}

impl ReconstructionTrace {
    /// Whether every iterate with a measured error stayed within its bound
    /// (tiny relative slack for rounding). `None` when no errors were
    /// measured.
    pub fn bound_satisfied(&self) -> Option<bool> {
        let mut measured = false;
        for entry in &self.entries {
            if let Some(error) = entry.error {
                measured = true;
                if error > entry.bound * (1.0 + 1e-9) + 1e-12 {
                    return Some(false);
                }
            }
        }
        measured.then_some(true)
    }
}

/// A reconstructed signal together with its iteration trace.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// The last trusted spline iterate.
    pub signal: Signal,
    pub trace: ReconstructionTrace,
}

/// Pick a regularization `eps` for a removed set with Poincaré constant
/// `lambda` at bandwidth `omega`: half the slack `(1/lambda - omega)`,
/// capped at `floor`. The result always keeps `gamma` strictly below 1.
pub fn choose_epsilon(lambda: f64, omega: f64, floor: f64) -> Result<f64, ReconstructError> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "lambda",
            value: lambda,
        });
    }
    if !omega.is_finite() || omega < 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "omega",
            value: omega,
        });
    }
    if !floor.is_finite() || floor <= 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "floor",
            value: floor,
        });
    }
    if lambda * omega >= 1.0 {
        return Err(ReconstructError::InfeasibleBandwidth { lambda, omega });
    }
    Ok(floor.min((1.0 / lambda - omega) / 2.0))
}

/// Draw a deterministic unit-norm signal with bandwidth `omega`: standard
/// normal coefficients on the band eigenvectors (ascending eigenvalue
/// order), then normalized. The same seed always produces the same signal.
pub fn synthesize_pw_signal(
    d: &SpectralDecomposition,
    omega: f64,
    seed: u64,
) -> Result<Signal, ReconstructError> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "omega",
            value: omega,
        });
    }
    let dim = d.band_dimension(omega);
    if dim == 0 {
        return Err(ReconstructError::EmptyBand);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coefficients = vec![0.0; d.vertex_count()];
    loop {
        for c in coefficients.iter_mut().take(dim) {
            *c = StandardNormal.sample(&mut rng);
        }
        let norm: f64 = coefficients[..dim]
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        // A zero draw has probability zero but would break normalization;
        // redraw deterministically from the same stream.
        if norm > 1e-12 {
            for c in coefficients.iter_mut().take(dim) {
                *c /= norm;
            }
            break;
        }
    }
    let signal = d.inverse_fourier(&coefficients)?;
    Ok(signal)
}

/// Reconstruct a bandwidth-`omega` signal from its values on the complement
/// of `removed`.
///
/// `samples` lists the known values on the kept vertices in ascending
/// vertex order (`removed.complement()` order). `lambda` is the Poincaré
/// constant of the removed set; pass `None` to compute it exactly. When
/// `ground_truth` is supplied the trace records the true error of each
/// iterate and the run can stop at numerical floor; without it the error
/// column stays empty and the bound column turns relative.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    d: &SpectralDecomposition,
    removed: &VertexSet,
    samples: &[f64],
    omega: f64,
    eps: f64,
    l_max: u32,
    lambda: Option<f64>,
    ground_truth: Option<&Signal>,
) -> Result<Reconstruction, ReconstructError> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "omega",
            value: omega,
        });
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(ReconstructError::InvalidParameter {
            name: "eps",
            value: eps,
        });
    }
    if l_max > MAX_LEVELS {
        return Err(ReconstructError::InvalidParameter {
            name: "l_max",
            value: l_max as f64,
        });
    }
    let n = d.vertex_count();
    if removed.vertex_count() != n {
        return Err(ReconstructError::Sampling(SamplingError::GraphMismatch {
            expected: n,
            got: removed.vertex_count(),
        }));
    }
    let kept = removed.complement();
    if kept.is_empty() {
        return Err(ReconstructError::EmptySampleSet);
    }
    if samples.len() != kept.len() {
        return Err(ReconstructError::SampleCountMismatch {
            expected: kept.len(),
            got: samples.len(),
        });
    }
    if let Some(f) = ground_truth {
        if f.len() != n {
            return Err(ReconstructError::GroundTruthLength {
                expected: n,
                got: f.len(),
            });
        }
    }
    let lambda = match lambda {
        Some(value) => {
            if !value.is_finite() || value <= 0.0 {
                return Err(ReconstructError::InvalidParameter {
                    name: "lambda",
                    value,
                });
            }
            value
        }
        None => sampling::poincare_constant(d, removed)?,
    };
    if lambda * omega >= 1.0 {
        return Err(ReconstructError::InfeasibleBandwidth { lambda, omega });
    }
    let gamma = lambda * (omega + eps);
    if gamma >= 1.0 {
        return Err(ReconstructError::GammaNotLessThanOne { gamma });
    }
    let truth_norm = ground_truth.map(Signal::norm);

    let mut entries: Vec<TraceEntry> = Vec::with_capacity(l_max as usize + 1);
    let mut signal: Option<Signal> = None;
    let mut stop_reason = StopReason::BudgetExhausted;
    for l in 0..=l_max {
        let k = 1u64 << l;
        // The iterate must minimize ||(eps I + L)^k Y||, which in the
        // order convention of the spline layer is the order-2k spline.
        let order = 2.0 * k as f64;
        let system = match FundamentalSystem::new(d, &kept, order, eps) {
            Ok(system) => system,
            Err(SplineError::IllConditioned { .. }) if !entries.is_empty() => {
                stop_reason = StopReason::IllConditioned;
                break;
            }
            Err(other) => return Err(other.into()),
        };
        let model = spline::fit_with_system(d, &system, samples)?;
        let error = ground_truth.map(|f| f.sub(&model.solution).norm());
        let bound = 2.0 * gamma.powf(k as f64) * truth_norm.unwrap_or(1.0);
        entries.push(TraceEntry {
            l,
            k,
            error,
            bound,
            gram_condition: system.condition_estimate(),
        });
        signal = Some(model.solution);
        if let (Some(e), Some(scale)) = (error, truth_norm) {
            if e < ERROR_FLOOR * scale.max(f64::MIN_POSITIVE) {
                stop_reason = StopReason::ErrorFloor;
                break;
            }
        }
    }
    let signal = signal.expect("loop ran at least once or returned early");
    Ok(Reconstruction {
        signal,
        trace: ReconstructionTrace {
            omega,
            eps,
            lambda,
            gamma,
            entries,
            stop_reason,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn decompose(g: &Graph) -> SpectralDecomposition {
        SpectralDecomposition::compute(g).unwrap()
    }

    fn sample_on(kept: &[usize], f: &Signal) -> Vec<f64> {
        kept.iter().map(|&v| f[v]).collect()
    }

    #[test]
    fn epsilon_choice_balances_floor_and_slack() {
        // Tight slack wins over the floor.
        let eps = choose_epsilon(2.0, 0.25, 0.25).unwrap();
        assert!((eps - 0.125).abs() < 1e-15);
        // Roomy slack is capped by the floor.
        let eps = choose_epsilon(1.0, 0.1, 0.25).unwrap();
        assert!((eps - 0.25).abs() < 1e-15);
        // Either way gamma stays below 1.
        for (lambda, omega) in [(2.0, 0.25), (1.0, 0.1), (5.0, 0.19)] {
            let eps = choose_epsilon(lambda, omega, 0.25).unwrap();
            assert!(lambda * (omega + eps) < 1.0);
        }
        assert_eq!(
            choose_epsilon(2.0, 0.5, 0.25).unwrap_err(),
            ReconstructError::InfeasibleBandwidth {
                lambda: 2.0,
                omega: 0.5
            }
        );
        assert!(choose_epsilon(-1.0, 0.1, 0.25).is_err());
        assert!(choose_epsilon(1.0, -0.1, 0.25).is_err());
        assert!(choose_epsilon(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn synthesized_signals_are_unit_norm_bandlimited_and_deterministic() {
        let g = Graph::cycle(24).unwrap();
        let d = decompose(&g);
        let omega = 0.6;
        let f = synthesize_pw_signal(&d, omega, 7).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        // Projection onto the band changes nothing.
        let projected = d.pw_project(omega, &f).unwrap();
        assert!(f.sub(&projected).norm() < 1e-12);
        assert!(d.min_bandwidth(&f, 1e-9).unwrap() <= omega);
        // Same seed, same signal; different seed, different signal.
        let again = synthesize_pw_signal(&d, omega, 7).unwrap();
        assert_eq!(f.values(), again.values());
        let other = synthesize_pw_signal(&d, omega, 8).unwrap();
        assert!(f.sub(&other).norm() > 1e-6);
        assert!(synthesize_pw_signal(&d, -0.5, 7).is_err());
    }

    #[test]
    fn spline_iterates_converge_geometrically_with_certified_bounds() {
        let g = Graph::cycle(24).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[5]).unwrap();
        let lambda = sampling::poincare_constant(&d, &removed).unwrap();
        let omega = 0.8;
        let eps = choose_epsilon(lambda, omega, 0.25).unwrap();
        let f = synthesize_pw_signal(&d, omega, 42).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        let run = reconstruct(&d, &removed, &samples, omega, eps, 3, None, Some(&f)).unwrap();
        let trace = &run.trace;
        assert!((trace.lambda - lambda).abs() < 1e-14);
        assert!(trace.gamma < 1.0);
        assert!(!trace.entries.is_empty());
        for (i, entry) in trace.entries.iter().enumerate() {
            assert_eq!(entry.l, i as u32);
            assert_eq!(entry.k, 1 << i);
            let error = entry.error.expect("ground truth supplied");
            assert!(
                error <= entry.bound * (1.0 + 1e-9) + 1e-12,
                "k = {}: error {} above bound {}",
                entry.k,
                error,
                entry.bound
            );
        }
        assert_eq!(trace.bound_satisfied(), Some(true));
        // Errors improve down the trace (allow floor-level noise).
        let first = trace.entries.first().unwrap().error.unwrap();
        let last = trace.entries.last().unwrap().error.unwrap();
        assert!(last <= first.max(1e-11));
        // The returned signal interpolates the samples.
        for (&v, &y) in removed.complement().iter().zip(&samples) {
            assert!((run.signal[v] - y).abs() < 1e-8);
        }
    }

    #[test]
    fn reconstruction_without_ground_truth_reports_relative_bounds() {
        let g = Graph::cycle(16).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[0]).unwrap();
        let f = synthesize_pw_signal(&d, 0.5, 3).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        let run = reconstruct(&d, &removed, &samples, 0.5, 0.1, 2, None, None).unwrap();
        let gamma = run.trace.gamma;
        for entry in &run.trace.entries {
            assert_eq!(entry.error, None);
            assert!((entry.bound - 2.0 * gamma.powf(entry.k as f64)).abs() < 1e-15);
        }
        assert_eq!(run.trace.bound_satisfied(), None);
        assert_eq!(run.trace.stop_reason, StopReason::BudgetExhausted);
        // Still interpolates.
        for (&v, &y) in removed.complement().iter().zip(&samples) {
            assert!((run.signal[v] - y).abs() < 1e-8);
        }
    }

    #[test]
    fn error_floor_stops_the_iteration_early() {
        let g = Graph::cycle(12).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[4]).unwrap();
        let kept = removed.complement();
        // A spline is the energy minimizer for its own trace values, so
        // feeding an order-2 spline back in as ground truth makes the very
        // first iterate exact up to solver rounding.
        let f = synthesize_pw_signal(&d, 0.8, 1).unwrap();
        let pilot = reconstruct(
            &d,
            &removed,
            &sample_on(&kept, &f),
            0.8,
            0.2,
            0,
            None,
            None,
        )
        .unwrap();
        let truth = pilot.signal;
        let samples = sample_on(&kept, &truth);
        let run = reconstruct(&d, &removed, &samples, 0.8, 0.2, 5, None, Some(&truth)).unwrap();
        assert_eq!(run.trace.stop_reason, StopReason::ErrorFloor);
        assert_eq!(run.trace.entries.len(), 1);
        let last = run.trace.entries.last().unwrap();
        assert!(last.error.unwrap() < ERROR_FLOOR * truth.norm());
    }

    #[test]
    fn conditioning_limit_stops_gracefully_after_a_good_iterate() {
        let g = Graph::cycle(16).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[2]).unwrap();
        let omega = 1.0;
        let eps = 0.01;
        let f = synthesize_pw_signal(&d, omega, 11).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        // Condition estimate grows like (2.01/0.01)^(2k): fine at k = 1, 2,
        // hopeless at k = 4.
        let run = reconstruct(&d, &removed, &samples, omega, eps, 5, None, Some(&f)).unwrap();
        assert_eq!(run.trace.stop_reason, StopReason::IllConditioned);
        assert_eq!(run.trace.entries.len(), 2);
        assert_eq!(run.trace.bound_satisfied(), Some(true));
        // A budget that ends before the refusal reports exhaustion instead.
        let short = reconstruct(&d, &removed, &samples, omega, eps, 1, None, Some(&f)).unwrap();
        assert_eq!(short.trace.stop_reason, StopReason::BudgetExhausted);
        assert_eq!(short.trace.entries.len(), 2);
    }

    #[test]
    fn conditioning_failure_on_the_first_iterate_is_an_error() {
        let g = Graph::cycle(16).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[2]).unwrap();
        let f = synthesize_pw_signal(&d, 0.2, 9).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        // eps so small the very first Gram system is refused.
        let err =
            reconstruct(&d, &removed, &samples, 0.2, 1e-9, 3, None, Some(&f)).unwrap_err();
        assert!(matches!(
            err,
            ReconstructError::Spline(SplineError::IllConditioned { .. })
        ));
    }

    #[test]
    fn shifted_operator_supports_zero_eps_runs() {
        let g = Graph::cycle(64).unwrap();
        let d = decompose(&g).shifted(0.5);
        let removed = VertexSet::new(&g, &[10]).unwrap();
        // Shifted spectrum lives in [0.5, 2.5]; the band below 0.7 holds
        // the original content below 0.2.
        let omega = 0.7;
        let f = synthesize_pw_signal(&d, omega, 17).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        let run = reconstruct(&d, &removed, &samples, omega, 0.0, 2, None, Some(&f)).unwrap();
        // Base constant of the shifted operator on a singleton:
        // 1/sqrt(0.25 + 1 + 1.5).
        assert!((run.trace.lambda - 1.0 / 2.75f64.sqrt()).abs() < 1e-10);
        assert!(run.trace.gamma < 0.43);
        assert_eq!(run.trace.bound_satisfied(), Some(true));
        let last = run.trace.entries.last().unwrap();
        assert!(last.error.unwrap() < 1e-3);
        assert_eq!(run.trace.stop_reason, StopReason::BudgetExhausted);
    }

    #[test]
    fn validation_rejects_malformed_runs() {
        let g = Graph::cycle(10).unwrap();
        let d = decompose(&g);
        let removed = VertexSet::new(&g, &[0]).unwrap();
        let f = synthesize_pw_signal(&d, 0.4, 2).unwrap();
        let samples = sample_on(&removed.complement(), &f);
        // Wrong sample count.
        assert_eq!(
            reconstruct(&d, &removed, &samples[..5], 0.4, 0.1, 2, None, None).unwrap_err(),
            ReconstructError::SampleCountMismatch {
                expected: 9,
                got: 5
            }
        );
        // Removing everything leaves nothing to sample.
        let all = VertexSet::new(&g, &(0..10).collect::<Vec<_>>()).unwrap();
        assert_eq!(
            reconstruct(&d, &all, &[], 0.4, 0.1, 2, Some(1.0), None).unwrap_err(),
            ReconstructError::EmptySampleSet
        );
        // Ground truth of the wrong length.
        let short = Signal::zeros(4);
        assert_eq!(
            reconstruct(&d, &removed, &samples, 0.4, 0.1, 2, None, Some(&short)).unwrap_err(),
            ReconstructError::GroundTruthLength {
                expected: 10,
                got: 4
            }
        );
        // Infeasible bandwidth: lambda * omega >= 1.
        assert!(matches!(
            reconstruct(&d, &removed, &samples, 1.5, 0.0, 2, Some(1.0), None).unwrap_err(),
            ReconstructError::InfeasibleBandwidth { .. }
        ));
        // Feasible bandwidth but eps pushes gamma past 1.
        assert!(matches!(
            reconstruct(&d, &removed, &samples, 0.9, 0.5, 2, Some(1.0), None).unwrap_err(),
            ReconstructError::GammaNotLessThanOne { .. }
        ));
        // Bad scalars.
        assert!(reconstruct(&d, &removed, &samples, -0.4, 0.1, 2, None, None).is_err());
        assert!(reconstruct(&d, &removed, &samples, 0.4, -0.1, 2, None, None).is_err());
        assert!(reconstruct(&d, &removed, &samples, 0.4, 0.1, 2, Some(-2.0), None).is_err());
    }
}
