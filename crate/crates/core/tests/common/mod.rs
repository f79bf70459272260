//! Test-only oracles written directly from the block equations, sharing no
//! code with the operator assembly.

#![allow(dead_code)]

use std::f64::consts::PI;

use dlyap_core::{Matrix, TimeDelaySystem, Vector};
use nalgebra::dmatrix;
use rand::{Rng, RngExt};

pub fn example1() -> TimeDelaySystem {
    let a0 = -Matrix::identity(2, 2);
    let a1 = dmatrix![0.0, 1.0; -1.0, 0.0];
    let b1 = &a1 * (Matrix::identity(2, 2) * 0.3);
    let ad = dmatrix![0.0, -1.0; 1.0, 0.0] * PI;
    TimeDelaySystem::new(a0, a1, ad, b1, Matrix::identity(2, 2), 1.0).unwrap()
}

pub fn delay_free_scalar(a0: f64, h: f64) -> TimeDelaySystem {
    TimeDelaySystem::new(
        dmatrix![a0],
        dmatrix![0.0],
        dmatrix![0.0],
        dmatrix![0.0],
        dmatrix![0.0],
        h,
    )
    .unwrap()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let m = random_matrix(rng, n, n, 1.0);
    (&m + m.transpose()) * 0.5
}

pub fn random_system<R: Rng>(rng: &mut R, n: usize, n_d: usize) -> TimeDelaySystem {
    TimeDelaySystem::new(
        random_matrix(rng, n, n, 1.0),
        random_matrix(rng, n, n, 1.0),
        random_matrix(rng, n_d, n_d, 1.0),
        random_matrix(rng, n_d, n, 1.0),
        random_matrix(rng, n, n_d, 1.0),
        rng.random_range(0.2..2.0),
    )
    .unwrap()
}

/// Scaling-and-squaring Taylor exponential, for small test matrices only.
pub fn taylor_expm(m: &Matrix) -> Matrix {
    let norm: f64 = m.iter().map(|x| x.abs()).sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m / 2f64.powi(squarings);
    let n = m.nrows();
    let mut term = Matrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Induced 2-norm.
pub fn norm2(m: &Matrix) -> f64 {
    m.clone().singular_values().max()
}

/// Shifts `A0` left until `μ₂(A0) + ‖A1‖ + ∫‖A_D‖ ≤ -margin`, which makes
/// the system exponentially stable for any delay.
pub fn stabilize(mut sys: TimeDelaySystem, margin: f64) -> TimeDelaySystem {
    let n = sys.n();
    let sym = (&sys.a0 + sys.a0.transpose()) * 0.5;
    let log_norm = sym.symmetric_eigenvalues().max();
    let panels = 200;
    let kernel_mass: f64 = (0..panels)
        .map(|i| {
            let theta = -sys.h * (i as f64 + 0.5) / panels as f64;
            norm2(&(&sys.cd * taylor_expm(&(&sys.ad * theta)) * &sys.bd)) * sys.h / panels as f64
        })
        .sum::<f64>()
        * 1.01;
    let shift = log_norm + norm2(&sys.a1) + kernel_mass + margin;
    if shift > 0.0 {
        sys.a0 -= Matrix::identity(n, n) * shift;
    }
    sys
}

/// Column-stacking, written out by hand.
pub fn vec_of(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn stack(blocks: &[&Matrix]) -> Vector {
    Vector::from_vec(blocks.iter().flat_map(|b| vec_of(b)).collect())
}

/// Six blocks with the shapes `n×n, n×n, n×n_d, n×n_d, n_d×n, n_d×n`.
pub fn random_blocks<R: Rng>(rng: &mut R, n: usize, n_d: usize) -> [Matrix; 6] {
    [
        random_matrix(rng, n, n, 1.0),
        random_matrix(rng, n, n, 1.0),
        random_matrix(rng, n, n_d, 1.0),
        random_matrix(rng, n, n_d, 1.0),
        random_matrix(rng, n_d, n, 1.0),
        random_matrix(rng, n_d, n, 1.0),
    ]
}

/// Right-hand side of the six-block ODE in matrix form.
pub fn literal_dynamics(sys: &TimeDelaySystem, w: &[Matrix; 6]) -> [Matrix; 6] {
    let shifted = &sys.cd * taylor_expm(&(&sys.ad * -sys.h));
    let (a0, a1, ad, bd, cd) = (&sys.a0, &sys.a1, &sys.ad, &sys.bd, &sys.cd);
    [
        &w[0] * a0 + &w[1] * a1 + &w[2] * bd + &w[3] * bd,
        -a1.transpose() * &w[0]
            - a0.transpose() * &w[1]
            - bd.transpose() * &w[4]
            - bd.transpose() * &w[5],
        -&w[2] * ad + &w[0] * cd,
        -&w[3] * ad - &w[1] * &shifted,
        ad.transpose() * &w[4] + shifted.transpose() * &w[0],
        ad.transpose() * &w[5] - cd.transpose() * &w[1],
    ]
}

/// Left-hand sides of the endpoint conditions (zero for a solution, except
/// the first, which equals `-Q`), in the row order of the stacked system.
pub fn literal_boundary(
    sys: &TimeDelaySystem,
    at0: &[Matrix; 6],
    ath: &[Matrix; 6],
) -> [Matrix; 6] {
    let (a0, a1, bd) = (&sys.a0, &sys.a1, &sys.bd);
    [
        &at0[0] * a0
            + &at0[1] * a1
            + &at0[3] * bd
            + a1.transpose() * &ath[0]
            + a0.transpose() * &ath[1]
            + bd.transpose() * &ath[4],
        &at0[0] - &ath[1],
        at0[2].clone(),
        at0[4].clone(),
        ath[3].clone(),
        ath[5].clone(),
    ]
}
