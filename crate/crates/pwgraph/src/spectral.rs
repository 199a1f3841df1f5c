//! Spectral decomposition of the normalized Laplacian and the operator
//! calculus built on it.
//!
//! The decomposition is computed densely with the crate's own
//! Householder-plus-QL eigensolver, so results are deterministic and the
//! module works without any external numerical backend. Everything else —
//! Fourier analysis, fractional powers of `eps I + L`, Sobolev norms,
//! bandlimited projection — is diagonal arithmetic in the eigenbasis.
//!
//! Eigenvalues are reported in ascending order. Repeated eigenvalues (every
//! cycle and torus has them) make individual eigenvectors non-unique; only
//! spectral projectors onto eigenspaces are well defined, and callers that
//! compare decompositions should compare those. Within one process the
//! output is still a pure function of the graph: ties are ordered
//! deterministically and each eigenvector's first significant entry is made
//! positive.

use crate::graph::{apply_laplacian, dense_laplacian, Graph, Signal};
use crate::linalg;
use ndarray::{Array1, Array2};
use serde::Serialize;
use thiserror::Error;

/// Largest vertex count the dense eigendecomposition accepts by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Membership slack for band queries: an eigenvalue `lambda` belongs to the
/// band of `omega` when `lambda <= omega + BAND_TOLERANCE`. This keeps
/// "equal to omega" robust under the O(1e-14) noise of the eigensolver.
pub const BAND_TOLERANCE: f64 = 1e-9;

/// Eigenvalues this close to zero are treated as exactly zero, both in the
/// stored spectrum and in every invertibility decision.
const ZERO_SNAP: f64 = 1e-10;

/// `(eps + lambda_min)` at or below this threshold makes negative operator
/// powers singular.
const INVERT_TOLERANCE: f64 = 1e-12;

/// Residual level the decomposition must achieve to be returned at all.
const RESIDUAL_LIMIT: f64 = 1e-9;

/// Errors raised by the spectral layer.
#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("graph has {vertex_count} vertices, above the dense cap {cap}")]
    TooLarge { vertex_count: usize, cap: usize },
    #[error("eigendecomposition failed: {0}")]
    ConvergenceFailure(String),
    #[error("signal has {got} entries but the decomposition covers {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error(
        "negative power of a singular operator: eps + lambda_min = {shifted_floor} is not positive"
    )]
    SingularPower { shifted_floor: f64 },
    #[error("regularization eps must be non-negative, got {0}")]
    NegativeEpsilon(f64),
    #[error("bandwidth omega must be non-negative, got {0}")]
    NegativeBandwidth(f64),
    #[error("exponent must be positive, got {0}")]
    InvalidExponent(f64),
    #[error("operation is undefined on the zero signal")]
    ZeroSignal,
}

/// Eigenvalues and orthonormal eigenbasis of the normalized Laplacian of a
/// graph, plus the residual accuracy the solver actually achieved.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    graph: Graph,
    eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    basis: Array2<f64>,
    /// Max over `j` of `|| L u_j - lambda_j u_j ||`.
    residual: f64,
    /// Additive spectral shift: 0 for a plain decomposition, `c` when this
    /// models `L + c I`. See [`SpectralDecomposition::shifted`].
    shift: f64,
}

/// Serialization shape for [`SpectralDecomposition::to_json`].
#[derive(Serialize)]
struct SpectrumExport<'a> {
    eigenvalues: &'a [f64],
    basis: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    /// Decompose the normalized Laplacian of `g` with the default size cap.
    pub fn compute(g: &Graph) -> Result<Self, SpectralError> {
        Self::compute_with_cap(g, DEFAULT_DENSE_CAP)
    }

    /// Decompose with an explicit cap on the dense problem size.
    pub fn compute_with_cap(g: &Graph, cap: usize) -> Result<Self, SpectralError> {
        let n = g.vertex_count();
        if n > cap {
            return Err(SpectralError::TooLarge {
                vertex_count: n,
                cap,
            });
        }
        let dense = dense_laplacian(g);
        let (mut eigenvalues, basis) = linalg::sym_eigen(dense)
            .map_err(|_| SpectralError::ConvergenceFailure("QL iteration stalled".into()))?;
        for v in eigenvalues.iter_mut() {
            if v.abs() <= ZERO_SNAP {
                *v = 0.0;
            }
        }
        let decomposition = SpectralDecomposition {
            graph: g.clone(),
            eigenvalues,
            basis,
            residual: 0.0,
            shift: 0.0,
        };
        decomposition.validated()
    }

    /// Check the spectral contracts and fill in the achieved residual.
    fn validated(mut self) -> Result<Self, SpectralError> {
        let n = self.vertex_count();
        let lo = self.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = self.eigenvalues.last().copied().unwrap_or(0.0);
        if lo < -ZERO_SNAP || hi > 2.0 + 1e-9 {
            return Err(SpectralError::ConvergenceFailure(format!(
                "spectrum [{lo}, {hi}] escapes [0, 2]"
            )));
        }
        let mut residual = 0.0f64;
        for j in 0..n {
            let column = Signal::new(self.basis.column(j).to_vec());
            let image = apply_laplacian(&self.graph, &column).expect("basis column length");
            let mut err = 0.0;
            for i in 0..n {
                let r = image[i] - self.eigenvalues[j] * column[i];
                err += r * r;
            }
            residual = residual.max(err.sqrt());
        }
        if residual > RESIDUAL_LIMIT {
            return Err(SpectralError::ConvergenceFailure(format!(
                "eigenpair residual {residual} above {RESIDUAL_LIMIT}"
            )));
        }
        self.residual = residual;
        Ok(self)
    }

    /// The decomposed graph.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Number of vertices covered by the decomposition.
    pub fn vertex_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenbasis; column `j` matches `eigenvalues()[j]`.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    /// Eigenvector `j` as a signal.
    pub fn eigenvector(&self, j: usize) -> Signal {
        Signal::new(self.basis.column(j).to_vec())
    }

    /// Worst eigenpair residual `|| L u_j - lambda_j u_j ||` achieved.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// A decomposition of the shifted operator `L + shift I`: same basis,
    /// every eigenvalue moved by `shift`.
    ///
    /// The result no longer matches [`apply_laplacian`] on the underlying
    /// graph; it exists so the operator calculus (and everything downstream
    /// of it) can be exercised on an invertible operator, which no connected
    /// graph Laplacian is.
    pub fn shifted(&self, shift: f64) -> SpectralDecomposition {
        assert!(shift.is_finite(), "shift must be finite");
        SpectralDecomposition {
            graph: self.graph.clone(),
            eigenvalues: self.eigenvalues.iter().map(|v| v + shift).collect(),
            basis: self.basis.clone(),
            residual: self.residual,
            shift: self.shift + shift,
        }
    }

    /// The additive shift this decomposition carries (0 unless produced by
    /// [`SpectralDecomposition::shifted`]).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn check_len(&self, f: &Signal) -> Result<(), SpectralError> {
        if f.len() != self.vertex_count() {
            return Err(SpectralError::LengthMismatch {
                expected: self.vertex_count(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Fourier coefficients `U^T f` with respect to the eigenbasis.
    pub fn fourier(&self, f: &Signal) -> Result<Vec<f64>, SpectralError> {
        self.check_len(f)?;
        let v = Array1::from_vec(f.values().to_vec());
        Ok(self.basis.t().dot(&v).to_vec())
    }

    /// Synthesize a signal from Fourier coefficients.
    pub fn inverse_fourier(&self, coefficients: &[f64]) -> Result<Signal, SpectralError> {
        if coefficients.len() != self.vertex_count() {
            return Err(SpectralError::LengthMismatch {
                expected: self.vertex_count(),
                got: coefficients.len(),
            });
        }
        let c = Array1::from_vec(coefficients.to_vec());
        Ok(Signal::new(self.basis.dot(&c).to_vec()))
    }

    /// Apply `(eps I + L)^t` through the eigenbasis.
    ///
    /// Negative `t` requires `eps + lambda_min > 0`; on a connected graph
    /// the Laplacian itself is singular, so inverting needs `eps > 0` (or a
    /// shifted decomposition).
    pub fn operator_power(&self, eps: f64, t: f64, f: &Signal) -> Result<Signal, SpectralError> {
        self.check_len(f)?;
        if eps < 0.0 {
            return Err(SpectralError::NegativeEpsilon(eps));
        }
        let floor = eps + self.eigenvalues[0];
        if t < 0.0 && floor <= INVERT_TOLERANCE {
            return Err(SpectralError::SingularPower {
                shifted_floor: floor,
            });
        }
        let mut coefficients = self.fourier(f)?;
        for (c, &lambda) in coefficients.iter_mut().zip(&self.eigenvalues) {
            *c *= (eps + lambda).powf(t);
        }
        self.inverse_fourier(&coefficients)
    }

    /// The Sobolev-type norm `|| (eps I + L)^(t/2) f ||`.
    pub fn sobolev_norm(&self, eps: f64, t: f64, f: &Signal) -> Result<f64, SpectralError> {
        Ok(self.operator_power(eps, t / 2.0, f)?.norm())
    }

    /// Number of eigenvalues in the band `lambda <= omega` (with the
    /// robustness slack [`BAND_TOLERANCE`]).
    pub fn band_dimension(&self, omega: f64) -> usize {
        self.eigenvalues
            .partition_point(|&lambda| lambda <= omega + BAND_TOLERANCE)
    }

    /// Orthogonal projection onto the bandlimited space spanned by
    /// eigenvectors with `lambda <= omega`. Eigenvalues equal to `omega`
    /// are kept.
    pub fn pw_project(&self, omega: f64, f: &Signal) -> Result<Signal, SpectralError> {
        if omega < 0.0 {
            return Err(SpectralError::NegativeBandwidth(omega));
        }
        let keep = self.band_dimension(omega);
        let mut coefficients = self.fourier(f)?;
        for c in coefficients.iter_mut().skip(keep) {
            *c = 0.0;
        }
        self.inverse_fourier(&coefficients)
    }

    /// The ratio `|| L^s f || / || f ||` used in Bernstein-type bandwidth
    /// tests. A signal lies in the band of `omega` exactly when this ratio
    /// stays at or below `omega^s` for every positive `s`.
    pub fn bernstein_ratio(&self, f: &Signal, s: f64) -> Result<f64, SpectralError> {
        if s.is_nan() || s <= 0.0 {
            return Err(SpectralError::InvalidExponent(s));
        }
        let norm = f.norm();
        if norm == 0.0 {
            return Err(SpectralError::ZeroSignal);
        }
        Ok(self.operator_power(0.0, s, f)?.norm() / norm)
    }

    /// Smallest bandwidth containing `f`: the largest eigenvalue whose
    /// Fourier coefficient exceeds `tol * ||f||` in magnitude. A tolerance
    /// of `1e-12` is appropriate for signals assembled in double precision.
    pub fn min_bandwidth(&self, f: &Signal, tol: f64) -> Result<f64, SpectralError> {
        let norm = f.norm();
        if norm == 0.0 {
            return Err(SpectralError::ZeroSignal);
        }
        let coefficients = self.fourier(f)?;
        let mut band = 0.0f64;
        for (c, &lambda) in coefficients.iter().zip(&self.eigenvalues) {
            if c.abs() > tol * norm {
                band = band.max(lambda);
            }
        }
        Ok(band)
    }

    /// Serialize eigenvalues and the basis (as rows) to a JSON document.
    pub fn to_json(&self) -> String {
        let n = self.vertex_count();
        let basis = (0..n)
            .map(|i| self.basis.row(i).to_vec())
            .collect::<Vec<_>>();
        let export = SpectrumExport {
            eigenvalues: &self.eigenvalues,
            basis,
        };
        serde_json::to_string(&export).expect("spectrum export cannot fail")
    }
}
