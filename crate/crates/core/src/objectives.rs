//! Certified test functions in the strongly convex, smooth classes.
//!
//! Every objective carries its strong-convexity modulus `mu`, gradient
//! Lipschitz constant `lip` and its minimizer. Class membership is checked
//! empirically by [`certify`], which samples pairs of points around the
//! minimizer and counts violated inequalities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Oracle access to a `mu`-strongly convex function with `lip`-Lipschitz gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// `∇²f(x) v`, when the objective exposes second-order information.
    fn hessian_vec(&self, _x: &Vector, _v: &Vector) -> Option<Vector> {
        None
    }

    fn mu(&self) -> f64;

    fn lip(&self) -> f64;

    /// Lipschitz constant of the Hessian in Frobenius norm, when known.
    fn hess_lip(&self) -> Option<f64> {
        None
    }

    fn minimizer(&self) -> &Vector;

    fn min_value(&self) -> f64;

    /// `f(x) - f(x*)`, clamped at zero against rounding near the minimizer.
    fn gap(&self, x: &Vector) -> f64 {
        (self.value(x) - self.min_value()).max(0.0)
    }
}

/// `f(x) = ½ (x - x*)ᵀ D (x - x*)` with `D` diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    eigenvalues: Vector,
    x_star: Vector,
    mu: f64,
    lip: f64,
}

impl Quadratic {
    pub fn new(eigenvalues: &[f64], x_star: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidObjective("empty spectrum".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|&&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidObjective(format!(
                "eigenvalue {bad} is not a positive finite number"
            )));
        }
        check_dim(eigenvalues.len(), x_star.len())?;
        let mu = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let lip = eigenvalues.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            eigenvalues: DVector::from_column_slice(eigenvalues),
            x_star: DVector::from_column_slice(x_star),
            mu,
            lip,
        })
    }

    /// Replace the declared smoothness constant. Used to exercise certification
    /// against deliberately wrong constants.
    pub fn with_declared_lip(mut self, lip: f64) -> Self {
        self.lip = lip;
        self
    }

    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }
}

/// Canonical diagonal quadratic with the given spectrum and minimizer.
pub fn make_quadratic(eigenvalues: &[f64], x_star: &[f64]) -> Result<Quadratic> {
    Quadratic::new(eigenvalues, x_star)
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(x.iter().zip(self.x_star.iter()))
            .map(|(d, (xi, si))| d * (xi - si) * (xi - si))
            .sum::<f64>()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (x - &self.x_star).component_mul(&self.eigenvalues)
    }

    fn hessian_vec(&self, _x: &Vector, v: &Vector) -> Option<Vector> {
        Some(v.component_mul(&self.eigenvalues))
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn lip(&self) -> f64 {
        self.lip
    }

    fn hess_lip(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> &Vector {
        &self.x_star
    }

    fn min_value(&self) -> f64 {
        0.0
    }

    fn gap(&self, x: &Vector) -> f64 {
        self.value(x)
    }
}

/// `f(x) = log Σᵢ exp(aᵢᵀx - bᵢ) + (mu/2)‖x‖²`.
///
/// The rows `aᵢ` are Gaussian draws from a seeded ChaCha stream, rescaled so
/// that `‖A‖₂² = curvature`. Since the softmax Jacobian has spectral norm at
/// most ½, the log-sum-exp part is `curvature`-smooth and the declared
/// constant is `lip = curvature + mu`.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    a: DMatrix<f64>,
    b: Vector,
    mu: f64,
    lip: f64,
    x_star: Vector,
    min_value: f64,
}

const MINIMIZER_GRAD_TOL: f64 = 1e-12;

impl LogSumExp {
    pub fn new(dimension: usize, mu: f64, curvature: f64, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidObjective("dimension must be positive".into()));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidObjective(format!("mu = {mu} must be positive")));
        }
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::InvalidObjective(format!(
                "curvature = {curvature} must be positive"
            )));
        }
        let rows = 2 * dimension + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(rows, dimension, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sigma_max = a.singular_values().max();
        a *= curvature.sqrt() / sigma_max;

        let mut obj = Self {
            a,
            b,
            mu,
            lip: curvature + mu,
            x_star: DVector::zeros(dimension),
            min_value: 0.0,
        };
        obj.x_star = obj.solve_minimizer()?;
        obj.min_value = obj.value(&obj.x_star);
        Ok(obj)
    }

    fn softmax(&self, x: &Vector) -> (Vector, f64) {
        let z = &self.a * x - &self.b;
        let zmax = z.max();
        let e = z.map(|zi| (zi - zmax).exp());
        let total = e.sum();
        (e / total, zmax + total.ln())
    }

    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let (p, _) = self.softmax(x);
        let ap = self.a.tr_mul(&p);
        let weighted = DMatrix::from_fn(self.a.nrows(), self.a.ncols(), |i, j| p[i] * self.a[(i, j)]);
        let mut h = self.a.tr_mul(&weighted) - &ap * ap.transpose();
        for i in 0..h.nrows() {
            h[(i, i)] += self.mu;
        }
        h
    }

    /// Damped Newton from the origin; the objective is strongly convex so
    /// backtracking on `f` converges globally.
    fn solve_minimizer(&self) -> Result<Vector> {
        let mut x = DVector::zeros(self.a.ncols());
        let mut polish = 0;
        for _ in 0..200 {
            let g = self.gradient(&x);
            if g.norm() <= MINIMIZER_GRAD_TOL {
                // a couple of extra Newton steps push the residual to the rounding floor
                polish += 1;
                if polish > 2 {
                    return Ok(x);
                }
            }
            let h = self.hessian(&x);
            let dir = h
                .cholesky()
                .ok_or_else(|| Error::ObjectiveConstruction("hessian not positive definite".into()))?
                .solve(&g);
            let f0 = self.value(&x);
            let slope = g.dot(&dir);
            let mut t = 1.0;
            loop {
                let cand = &x - &dir * t;
                if self.value(&cand) <= f0 - 0.25 * t * slope || t < 1e-12 {
                    x = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        let residual = self.gradient(&x).norm();
        if residual <= MINIMIZER_GRAD_TOL {
            Ok(x)
        } else {
            Err(Error::ObjectiveConstruction(format!(
                "minimizer solve stalled at gradient norm {residual:e}"
            )))
        }
    }
}

/// Log-sum-exp plus quadratic regulariser with a unit-smooth log-sum-exp part.
pub fn make_smooth_nonquadratic(dimension: usize, mu: f64, seed: u64) -> Result<LogSumExp> {
    LogSumExp::new(dimension, mu, 1.0, seed)
}

impl Objective for LogSumExp {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let (_, lse) = self.softmax(x);
        lse + 0.5 * self.mu * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let (p, _) = self.softmax(x);
        self.a.tr_mul(&p) + x * self.mu
    }

    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        let (p, _) = self.softmax(x);
        let av = &self.a * v;
        let mean = p.dot(&av);
        let inner = DVector::from_fn(p.len(), |i, _| p[i] * (av[i] - mean));
        Some(self.a.tr_mul(&inner) + v * self.mu)
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn lip(&self) -> f64 {
        self.lip
    }

    fn minimizer(&self) -> &Vector {
        &self.x_star
    }

    fn min_value(&self) -> f64 {
        self.min_value
    }
}

/// Wraps an objective and supplies `∇²f(x)v` by a central difference of the
/// gradient, `(∇f(x+εv) - ∇f(x-εv)) / 2ε` with `ε = 1e-6 (1+‖x‖)/(1+‖v‖)`.
#[derive(Debug, Clone)]
pub struct FiniteDifferenceHessian<O>(pub O);

impl<O: Objective> Objective for FiniteDifferenceHessian<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.0.gradient(x)
    }
    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        let eps = 1e-6 * (1.0 + x.norm()) / (1.0 + v.norm());
        let plus = self.0.gradient(&(x + v * eps));
        let minus = self.0.gradient(&(x - v * eps));
        Some((plus - minus) / (2.0 * eps))
    }
    fn mu(&self) -> f64 {
        self.0.mu()
    }
    fn lip(&self) -> f64 {
        self.0.lip()
    }
    fn hess_lip(&self) -> Option<f64> {
        self.0.hess_lip()
    }
    fn minimizer(&self) -> &Vector {
        self.0.minimizer()
    }
    fn min_value(&self) -> f64 {
        self.0.min_value()
    }
}

/// Hides the hessian-vector oracle of the wrapped objective.
#[derive(Debug, Clone)]
pub struct GradientOnly<O>(pub O);

impl<O: Objective> Objective for GradientOnly<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.0.gradient(x)
    }
    fn mu(&self) -> f64 {
        self.0.mu()
    }
    fn lip(&self) -> f64 {
        self.0.lip()
    }
    fn minimizer(&self) -> &Vector {
        self.0.minimizer()
    }
    fn min_value(&self) -> f64 {
        self.0.min_value()
    }
}

/// Counts of sampled inequality violations. All zero for a correctly declared objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificationReport {
    pub samples: usize,
    pub strong_convexity: usize,
    pub smoothness: usize,
    /// `None` when the objective declares no Hessian Lipschitz constant.
    pub hessian_lipschitz: Option<usize>,
    /// `‖∇f(x)‖² ≤ 2L (f(x) - f*)`
    pub gradient_gap: usize,
    /// `f(x) - f* ≤ (L/2)‖x - x*‖²`
    pub gap_growth: usize,
    /// `‖∇f(x)‖ ≤ L ‖x - x*‖`
    pub gradient_growth: usize,
}

impl CertificationReport {
    pub fn total_violations(&self) -> usize {
        self.strong_convexity
            + self.smoothness
            + self.hessian_lipschitz.unwrap_or(0)
            + self.gradient_gap
            + self.gap_growth
            + self.gradient_growth
    }
}

const CERT_SLACK: f64 = 1e-12;

fn violates(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > CERT_SLACK * (1.0 + lhs.abs() + rhs.abs())
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &Vector, radius: f64) -> Vector {
    let n = center.len();
    let dir = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    center + dir * (r / norm)
}

fn dense_hessian<O: Objective + ?Sized>(obj: &O, x: &Vector) -> Option<DMatrix<f64>> {
    let n = obj.dim();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        h.set_column(j, &obj.hessian_vec(x, &e)?);
    }
    Some(h)
}

/// Samples `samples` pairs uniformly in the ball of `radius` around `x*` and
/// counts violations of the defining inequalities of the class.
pub fn certify<O: Objective + ?Sized>(
    obj: &O,
    samples: usize,
    radius: f64,
    rng_seed: u64,
) -> CertificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mu, lip) = (obj.mu(), obj.lip());
    let x_star = obj.minimizer();
    let mut report = CertificationReport {
        samples,
        hessian_lipschitz: obj.hess_lip().map(|_| 0),
        ..Default::default()
    };

    for _ in 0..samples {
        let x = sample_ball(&mut rng, x_star, radius);
        let y = sample_ball(&mut rng, x_star, radius);
        let (fx, fy) = (obj.value(&x), obj.value(&y));
        let (gx, gy) = (obj.gradient(&x), obj.gradient(&y));
        let d = &y - &x;

        let lower = fx + gx.dot(&d) + 0.5 * mu * d.norm_squared();
        if violates(lower, fy) {
            report.strong_convexity += 1;
        }
        if violates((&gx - &gy).norm(), lip * d.norm()) {
            report.smoothness += 1;
        }
        if let (Some(hl), Some(count)) = (obj.hess_lip(), report.hessian_lipschitz.as_mut()) {
            if let (Some(hx), Some(hy)) = (dense_hessian(obj, &x), dense_hessian(obj, &y)) {
                if violates((hx - hy).norm(), hl * d.norm()) {
                    *count += 1;
                }
            }
        }

        let gap = obj.gap(&x);
        let dist = (&x - x_star).norm();
        if violates(gx.norm_squared(), 2.0 * lip * gap) {
            report.gradient_gap += 1;
        }
        if violates(gap, 0.5 * lip * dist * dist) {
            report.gap_growth += 1;
        }
        if violates(gx.norm(), lip * dist) {
            report.gradient_growth += 1;
        }
    }
    report
}
