//! Cross-checks the spline fit against a fully independent route.
//!
//! The library computes splines through the eigendecomposition: fundamental
//! solutions, a Gram system, a Cholesky solve. This oracle never touches
//! any of that. It poses the same problem — minimize `Y^T A^t Y` with
//! `A = eps I + L` subject to `Y` matching data on `W` — as a KKT saddle
//! system
//!
//! ```text
//! [ 2 A^t  C^T ] [ Y  ]   [ 0 ]
//! [ C      0   ] [ mu ] = [ y ]
//! ```
//!
//! with `A^t` formed by repeated dense multiplication and the block system
//! solved by Gaussian elimination with partial pivoting, implemented right
//! here. Agreement within 1e-7 on solutions and energies is required.

use ndarray::Array2;
use pwgraph::{dense_laplacian, spline, Graph, SpectralDecomposition};

/// Gaussian elimination with partial pivoting; nothing shared with the
/// library's solvers.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-13, "singular saddle system");
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let factor = a[row][col] / p;
            if factor != 0.0 {
                for (k, &pv) in pivot_row.iter().enumerate().skip(col) {
                    a[row][k] -= factor * pv;
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// `(eps I + L)^t` by repeated dense multiplication, integer `t >= 1`.
fn dense_operator_power(g: &Graph, eps: f64, t: usize) -> Array2<f64> {
    let n = g.vertex_count();
    let mut a = dense_laplacian(g);
    for i in 0..n {
        a[[i, i]] += eps;
    }
    let mut power = a.clone();
    for _ in 1..t {
        power = power.dot(&a);
    }
    power
}

/// Solve the constrained minimization through the KKT system.
fn kkt_spline(g: &Graph, w: &[usize], y: &[f64], t: usize, eps: f64) -> (Vec<f64>, f64) {
    let n = g.vertex_count();
    let m = w.len();
    let at = dense_operator_power(g, eps, t);
    let size = n + m;
    let mut matrix = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    for i in 0..n {
        for j in 0..n {
            matrix[i][j] = 2.0 * at[[i, j]];
        }
    }
    for (row, &v) in w.iter().enumerate() {
        matrix[v][n + row] = 1.0;
        matrix[n + row][v] = 1.0;
        rhs[n + row] = y[row];
    }
    let solved = solve_dense(matrix, rhs);
    let solution = solved[..n].to_vec();
    let mut energy_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            energy_sq += solution[i] * at[[i, j]] * solution[j];
        }
    }
    (solution, energy_sq.max(0.0).sqrt())
}

fn check_agreement(g: &Graph, label: &str, w: &[usize], t: usize, eps: f64) {
    let d = SpectralDecomposition::compute(g).unwrap();
    let y: Vec<f64> = w
        .iter()
        .map(|&v| (1.3 * v as f64).sin() + 0.2 * (2.1 * v as f64).cos())
        .collect();
    let model = spline::fit_spline(&d, w, &y, t as f64, eps).unwrap();
    let (oracle, oracle_energy) = kkt_spline(g, w, &y, t, eps);
    let worst = oracle
        .iter()
        .enumerate()
        .map(|(v, &expected)| (model.solution[v] - expected).abs())
        .fold(0.0f64, f64::max);
    assert!(
        worst <= 1e-7,
        "{label}, t = {t}, eps = {eps}: solutions disagree by {worst}"
    );
    let energy_gap = (model.sobolev_energy - oracle_energy).abs();
    assert!(
        energy_gap <= 1e-7 * oracle_energy.max(1.0),
        "{label}, t = {t}, eps = {eps}: energies {} vs {oracle_energy}",
        model.sobolev_energy
    );
}

#[test]
fn spline_solutions_match_the_saddle_point_oracle() {
    let cases: Vec<(&str, Graph, Vec<Vec<usize>>)> = vec![
        (
            "cycle(17)",
            Graph::cycle(17).unwrap(),
            vec![vec![0, 3, 6, 9, 12, 15], vec![2, 16]],
        ),
        (
            "path(9)",
            Graph::path(9).unwrap(),
            vec![vec![0, 4, 8], vec![1, 2, 3, 5, 7]],
        ),
        (
            "torus(3x5)",
            Graph::torus(&[3, 5]).unwrap(),
            vec![vec![0, 7, 11], vec![1, 4, 6, 9, 13]],
        ),
        (
            "irregular(12)",
            Graph::from_edges(
                12,
                &[
                    (0, 1),
                    (1, 2),
                    (2, 3),
                    (3, 4),
                    (4, 5),
                    (5, 6),
                    (6, 7),
                    (7, 8),
                    (8, 9),
                    (9, 10),
                    (10, 11),
                    (11, 0),
                    (0, 6),
                    (2, 9),
                    (4, 10),
                ],
            )
            .unwrap(),
            vec![vec![1, 5, 8], vec![0, 2, 4, 6, 11]],
        ),
    ];
    for (label, g, constraint_sets) in &cases {
        for w in constraint_sets {
            for &(t, eps) in &[(1usize, 0.5), (2, 0.1), (4, 1.0)] {
                check_agreement(g, label, w, t, eps);
            }
        }
    }
}

#[test]
fn lagrangian_reassembly_matches_the_oracle() {
    // Splines are linear in the data, so the Kronecker-data splines must
    // reassemble any fit; check that composite property against the oracle
    // route in one shot.
    let g = Graph::cycle(11).unwrap();
    let d = SpectralDecomposition::compute(&g).unwrap();
    let w = [1usize, 4, 7];
    let basis = spline::lagrangian_splines(&d, &w, 2.0, 0.3).unwrap();
    let y = [0.8, -1.4, 2.2];
    let (oracle, _) = kkt_spline(&g, &w, &y, 2, 0.3);
    for (v, &expected) in oracle.iter().enumerate() {
        let reassembled: f64 = basis
            .iter()
            .zip(&y)
            .map(|(model, &c)| c * model.solution[v])
            .sum();
        assert!(
            (reassembled - expected).abs() <= 1e-7,
            "vertex {v}: {reassembled} vs {expected}"
        );
    }
}
