//! Shared fixtures for the benchmarks: the objectives and starting points
//! the experiments use, built once per benchmark group.

use betamomentum::objectives::{make_quadratic, LogSumExp};
use betamomentum::{Quadratic, Vector};

/// Diagonal quadratic with eigenvalues spread geometrically over `[mu, lip]`
/// and minimizer at the origin.
pub fn quadratic(dim: usize, mu: f64, lip: f64) -> Quadratic {
    let spectrum: Vec<f64> = (0..dim)
        .map(|i| {
            let t = if dim > 1 { i as f64 / (dim - 1) as f64 } else { 1.0 };
            mu * (lip / mu).powf(t)
        })
        .collect();
    make_quadratic(&spectrum, &vec![0.0; dim]).expect("valid spectrum")
}

/// Log-sum-exp with `μ = 1`, `L = 10`.
pub fn logsumexp(dim: usize, seed: u64) -> LogSumExp {
    LogSumExp::new(dim, 1.0, 9.0, seed).expect("valid log-sum-exp")
}

/// A start at unit distance per coordinate from `x_star`.
pub fn start_near(x_star: &Vector) -> Vector {
    x_star.map(|v| v + 1.0)
}
