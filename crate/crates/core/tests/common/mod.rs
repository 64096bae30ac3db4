#![allow(dead_code)]

use cdqp::{Matrix, QpProblem};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

/// `GᵀG + shift·I` with `G` an `n×n` uniform matrix.
pub fn random_spd(rng: &mut StdRng, n: usize, shift: f64) -> Matrix<f64> {
    let g = random_matrix(rng, n, n);
    g.transpose().matmul(&g).add_diag(shift).symmetrized()
}

/// Random problem with `m ≥ n` so `A` has full column rank almost surely.
pub fn random_problem(rng: &mut StdRng, n: usize, extra_rows: usize) -> QpProblem<f64> {
    let m = n + extra_rows;
    let p = random_spd(rng, n, 0.1);
    let a = shift_top_block(random_matrix(rng, m, n));
    let q = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let l = (0..m).map(|_| -rng.gen_range(0.2..2.0)).collect();
    let u = (0..m).map(|_| rng.gen_range(0.2..2.0)).collect();
    QpProblem::new(p, q, a, l, u).unwrap()
}

/// Adds `2I` to the top `n×n` block so `A` stays well conditioned.
fn shift_top_block(a: Matrix<f64>) -> Matrix<f64> {
    let (m, n) = (a.rows(), a.cols());
    let mut data = a.as_slice().to_vec();
    for i in 0..n.min(m) {
        data[i * n + i] += 2.0;
    }
    Matrix::from_row_major(m, n, data).unwrap()
}

pub fn example_problem() -> QpProblem<f64> {
    let p = Matrix::from_f64_rows(&[
        [3.0, 1.0, 3.0, 2.0],
        [1.0, 1.0, 2.0, 1.0],
        [3.0, 2.0, 8.0, 4.0],
        [2.0, 1.0, 4.0, 3.0],
    ]);
    QpProblem::new(
        p,
        vec![1.0; 4],
        Matrix::identity(4),
        vec![-2.0, -1.0, -3.0, -4.0],
        vec![10.0, 1.0, 3.0, 0.0],
    )
    .unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
