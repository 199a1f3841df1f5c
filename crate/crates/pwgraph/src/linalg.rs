//! Dense symmetric linear algebra used by the spectral and spline machinery.
//!
//! Everything here is deterministic: the same input matrix always produces
//! bit-identical factors, which is what makes seeded experiment runs
//! reproducible across repeated invocations.

use ndarray::Array2;

/// Iteration budget per eigenvalue in the implicit-shift QL sweep.
const MAX_QL_ITERATIONS: usize = 50;

/// The QL iteration failed to deflate an eigenvalue within its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct EigenFailure;

/// Full eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues sorted ascending and the matching orthonormal
/// eigenvectors as the columns of the returned matrix. Ties are broken by
/// the pre-sort position so the output is a pure function of the input, and
/// each eigenvector is normalized so its first non-negligible entry is
/// positive.
///
/// The reduction is the classical two-stage dense path: Householder
/// tridiagonalization with accumulated transformations, followed by QL
/// iteration with implicit Wilkinson shifts.
pub(crate) fn sym_eigen(mut a: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), EigenFailure> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut a, &mut d, &mut e);
    ql_implicit_shift(&mut d, &mut e, &mut a)?;
    if d.iter().any(|x| !x.is_finite()) {
        return Err(EigenFailure);
    }

    // Sort ascending with positional tie-break, then fix column signs.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let col = a.column(src);
        for r in 0..n {
            vectors[[r, dst]] = col[r];
        }
    }
    canonicalize_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Householder reduction to symmetric tridiagonal form.
///
/// On return `a` holds the accumulated orthogonal transformation, `d` the
/// diagonal of the reduced matrix, and `e[1..]` its subdiagonal.
fn tridiagonalize(a: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[[i, k]].abs();
            }
            if scale == 0.0 {
                e[i] = a[[i, l]];
            } else {
                for k in 0..=l {
                    a[[i, k]] /= scale;
                    h += a[[i, k]] * a[[i, k]];
                }
                let f = a[[i, l]];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[[i, l]] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[[j, i]] = a[[i, j]] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[[j, k]] * a[[i, k]];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[[k, j]] * a[[i, k]];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[[i, j]];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[[i, j]];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[[j, k]] -= f * e[k] + g * a[[i, k]];
                    }
                }
            }
        } else {
            e[i] = a[[i, l]];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    // Accumulate the product of the Householder reflectors.
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[[i, k]] * a[[k, j]];
                }
                for k in 0..i {
                    a[[k, j]] -= g * a[[k, i]];
                }
            }
        }
        d[i] = a[[i, i]];
        a[[i, i]] = 1.0;
        for j in 0..i {
            a[[j, i]] = 0.0;
            a[[i, j]] = 0.0;
        }
    }
}

/// QL iteration with implicit shifts on a symmetric tridiagonal matrix,
/// accumulating the rotations into the eigenvector matrix `z`.
fn ql_implicit_shift(d: &mut [f64], e: &mut [f64], z: &mut Array2<f64>) -> Result<(), EigenFailure> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            // Look for a negligible subdiagonal element to split the matrix.
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(EigenFailure);
            }
            // Wilkinson-style shift taken from the 2x2 block at the split.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation annihilated prematurely; recover and restart.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * f;
                    z[[k, i]] = c * z[[k, i]] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Flip eigenvector signs so the first entry whose magnitude is significant
/// relative to the column maximum is positive. Purely a determinism aid.
fn canonicalize_column_signs(z: &mut Array2<f64>) {
    let (n, cols) = (z.nrows(), z.ncols());
    for j in 0..cols {
        let mut peak = 0.0f64;
        for i in 0..n {
            peak = peak.max(z[[i, j]].abs());
        }
        if peak == 0.0 {
            continue;
        }
        let cutoff = 1e-12 * peak;
        for i in 0..n {
            let v = z[[i, j]];
            if v.abs() > cutoff {
                if v < 0.0 {
                    for r in 0..n {
                        z[[r, j]] = -z[[r, j]];
                    }
                }
                break;
            }
        }
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// if a pivot fails to stay strictly positive.
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !diag.is_finite() || diag <= 0.0 {
            return None;
        }
        let root = diag.sqrt();
        l[[j, j]] = root;
        for i in (j + 1)..n {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = sum / root;
        }
    }
    Some(l)
}

/// Solve `A x = b` given the lower Cholesky factor of `A`.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert_eq!(l.nrows(), n, "factor and right-hand side disagree");
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve `A x = b` with one pass of iterative refinement on top of the
/// Cholesky solve. The refinement step recovers most of the accuracy lost
/// when `A` carries a single dominant eigendirection, which is exactly the
/// shape interpolation Gram matrices take for small regularization.
pub(crate) fn cholesky_solve_refined(a: &Array2<f64>, l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let mut x = cholesky_solve(l, b);
    let n = b.len();
    let mut residual = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..n {
            s -= a[[i, k]] * x[k];
        }
        residual[i] = s;
    }
    let correction = cholesky_solve(l, &residual);
    for i in 0..n {
        x[i] += correction[i];
    }
    x
}
