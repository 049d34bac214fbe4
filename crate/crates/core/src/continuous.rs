//! High- and low-resolution ODEs of the momentum family.
//!
//! The beta-high-resolution ODE is
//!
//! ```text
//! Ẍ + 2√μ Ẋ + β√s ∇²f(X) Ẋ + (1+√(μs)) ∇f(X) = 0
//! ```
//!
//! and its `s → 0` limit, shared by heavy ball and NAG-SC, is
//! `Ẍ + 2√μ Ẋ + ∇f(X) = 0`. Both are integrated in phase space with a
//! fixed-step classical RK4 scheme.

use std::io::{self, Write};

use crate::error::{check_dim, Error, Result};
use crate::methods::{initial_velocity, run, MethodConfig, Trajectory};
use crate::objectives::Objective;
use crate::Vector;

/// Which vector field produced an [`OdeSolution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    HighResolution { beta: f64, step: f64 },
    /// The step only enters through the initial velocity.
    LowResolution { step: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub dynamics: Dynamics,
    pub integrator_step: f64,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `(X(t), Ẋ(t))`: a grid value when `t` is a grid time, otherwise cubic
    /// Hermite interpolation between the bracketing nodes (fourth-order accurate).
    pub fn sample_at(&self, t: f64) -> Result<(Vector, Vector)> {
        let h = self.integrator_step;
        let pos = t / h;
        let nearest = pos.round();
        let last = self.times.len() - 1;
        if t < 0.0 || pos > last as f64 + 1e-9 * (1.0 + pos) {
            return Err(Error::Span {
                requested: t,
                available: self.t_end(),
            });
        }
        if (pos - nearest).abs() <= 1e-9 * (1.0 + pos) {
            let i = (nearest as usize).min(last);
            return Ok((self.positions[i].clone(), self.velocities[i].clone()));
        }
        let i = (pos.floor() as usize).min(last - 1);
        let u = pos - i as f64;
        let (x0, x1) = (&self.positions[i], &self.positions[i + 1]);
        let (v0, v1) = (&self.velocities[i], &self.velocities[i + 1]);
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let x = x0 * h00 + v0 * (h10 * h) + x1 * h01 + v1 * (h11 * h);
        let dh00 = (6.0 * u2 - 6.0 * u) / h;
        let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
        let dh01 = (-6.0 * u2 + 6.0 * u) / h;
        let dh11 = 3.0 * u2 - 2.0 * u;
        let v = x0 * dh00 + v0 * dh10 + x1 * dh01 + v1 * dh11;
        Ok((x, v))
    }

    /// `sup ‖Ẋ(t)‖` over grid times `t ≤ t_max`.
    pub fn max_velocity_norm(&self, t_max: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.velocities)
            .take_while(|(t, _)| **t <= t_max + 1e-12)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// `sup ‖∇f(X(t))‖` over grid times `t ≤ t_max`.
    pub fn max_gradient_norm<O: Objective + ?Sized>(&self, obj: &O, t_max: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.positions)
            .take_while(|(t, _)| **t <= t_max + 1e-12)
            .map(|(_, x)| obj.gradient(x).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,X_0..,V_0..,gap`.
    pub fn write_csv<O: Objective + ?Sized, W: Write>(&self, obj: &O, mut out: W) -> io::Result<()> {
        let n = self.positions[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("X_{i}")));
        header.extend((0..n).map(|i| format!("V_{i}")));
        header.push("gap".into());
        writeln!(out, "{}", header.join(","))?;
        for ((t, x), v) in self.times.iter().zip(&self.positions).zip(&self.velocities) {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|c| c.to_string()));
            row.extend(v.iter().map(|c| c.to_string()));
            row.push(obj.gap(x).to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Phase-space field of the beta-high-resolution ODE.
pub fn hr_rhs<O: Objective + ?Sized>(
    beta: f64,
    s: f64,
    obj: &O,
    x: &Vector,
    v: &Vector,
) -> Result<(Vector, Vector)> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    let mu = obj.mu();
    let mut dv = v * (-2.0 * mu.sqrt()) - obj.gradient(x) * (1.0 + (mu * s).sqrt());
    if beta != 0.0 {
        let hv = obj.hessian_vec(x, v).ok_or(Error::MissingHessian { beta })?;
        dv -= hv * (beta * s.sqrt());
    }
    Ok((v.clone(), dv))
}

/// Phase-space field of the low-resolution ODE.
pub fn lr_rhs<O: Objective + ?Sized>(obj: &O, x: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    let dv = v * (-2.0 * obj.mu().sqrt()) - obj.gradient(x);
    Ok((v.clone(), dv))
}

/// Classical fourth-order Runge–Kutta with fixed step `h` on `(X, V)` from
/// `t = 0` until the first grid time `≥ t_end`.
pub fn integrate<F>(mut rhs: F, x0: &Vector, v0: &Vector, t_end: f64, h: f64) -> Result<OdeSolution>
where
    F: FnMut(&Vector, &Vector) -> Result<(Vector, Vector)>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::ParameterDomain(format!("integrator step h = {h} must be positive")));
    }
    if !(t_end >= h) {
        return Err(Error::ParameterDomain(format!("t_end = {t_end} must be at least h = {h}")));
    }
    check_dim(x0.len(), v0.len())?;
    let n = (t_end / h - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut positions = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    let (mut x, mut v) = (x0.clone(), v0.clone());
    times.push(0.0);
    positions.push(x.clone());
    velocities.push(v.clone());

    let half = 0.5 * h;
    for i in 1..=n {
        let (k1x, k1v) = rhs(&x, &v)?;
        let (k2x, k2v) = rhs(&(&x + &k1x * half), &(&v + &k1v * half))?;
        let (k3x, k3v) = rhs(&(&x + &k2x * half), &(&v + &k2v * half))?;
        let (k4x, k4v) = rhs(&(&x + &k3x * h), &(&v + &k3v * h))?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let t = i as f64 * h;
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::IntegrationBlowup { t });
        }
        times.push(t);
        positions.push(x.clone());
        velocities.push(v.clone());
    }
    Ok(OdeSolution {
        times,
        positions,
        velocities,
        dynamics: Dynamics::Custom,
        integrator_step: h,
    })
}

/// Integrator step `h ≤ min(√s, 1/√L)/50` chosen so that `√s/h` is an integer.
pub fn integrator_step(s: f64, lip: f64) -> f64 {
    let sqrt_s = s.sqrt();
    let target = sqrt_s.min(1.0 / lip.sqrt()) / 50.0;
    sqrt_s / (sqrt_s / target).ceil()
}

/// Integrates the beta-high-resolution ODE from `X(0) = x0`,
/// `Ẋ(0) = -2√s∇f(x0)/(1+√(μs))`.
pub fn solve_hr<O: Objective + ?Sized>(
    beta: f64,
    s: f64,
    obj: &O,
    x0: &Vector,
    t_end: f64,
) -> Result<OdeSolution> {
    check_dim(obj.dim(), x0.len())?;
    if !(0.0..=1.0).contains(&beta) || !(s > 0.0) {
        return Err(Error::ParameterDomain(format!("beta = {beta}, s = {s}")));
    }
    if beta != 0.0 && obj.hessian_vec(x0, x0).is_none() {
        return Err(Error::MissingHessian { beta });
    }
    let v0 = initial_velocity(obj, x0, s);
    let h = integrator_step(s, obj.lip());
    let mut sol = integrate(|x, v| hr_rhs(beta, s, obj, x, v), x0, &v0, t_end, h)?;
    sol.dynamics = Dynamics::HighResolution { beta, step: s };
    Ok(sol)
}

/// Integrates the low-resolution ODE with the same initial data as [`solve_hr`].
pub fn solve_lr<O: Objective + ?Sized>(obj: &O, x0: &Vector, s: f64, t_end: f64) -> Result<OdeSolution> {
    check_dim(obj.dim(), x0.len())?;
    let v0 = initial_velocity(obj, x0, s);
    let h = integrator_step(s, obj.lip());
    let mut sol = integrate(|x, v| lr_rhs(obj, x, v), x0, &v0, t_end, h)?;
    sol.dynamics = Dynamics::LowResolution { step: s };
    Ok(sol)
}

/// `max_{0 ≤ k ≤ ⌊T/√s⌋} ‖x_k - X(k√s)‖`.
pub fn deviation(traj: &Trajectory, sol: &OdeSolution, horizon: f64) -> Result<f64> {
    let sqrt_s = traj.config.step.sqrt();
    let k_max = (horizon / sqrt_s + 1e-9).floor() as usize;
    if k_max > traj.steps() {
        return Err(Error::Span {
            requested: horizon,
            available: traj.steps() as f64 * sqrt_s,
        });
    }
    if k_max as f64 * sqrt_s > sol.t_end() * (1.0 + 1e-12) {
        return Err(Error::Span {
            requested: horizon,
            available: sol.t_end(),
        });
    }
    let mut worst: f64 = 0.0;
    for k in 0..=k_max {
        let (x, _) = sol.sample_at(k as f64 * sqrt_s)?;
        worst = worst.max((&traj.iterates[k] - x).norm());
    }
    Ok(worst)
}

/// One rung per step size: deviation of the discrete method from the high-
/// and low-resolution solutions over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationLadder {
    pub beta: f64,
    pub horizon: f64,
    /// `(s, deviation_hr, deviation_lr)`
    pub rows: Vec<(f64, f64, f64)>,
}

impl DeviationLadder {
    /// Rows in the given order; true when both columns strictly decrease.
    pub fn strictly_decreasing(&self) -> (bool, bool) {
        let dec = |col: fn(&(f64, f64, f64)) -> f64| self.rows.windows(2).all(|w| col(&w[1]) < col(&w[0]));
        (dec(|r| r.1), dec(|r| r.2))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,deviation_hr,deviation_lr")?;
        for (s, hr, lr) in &self.rows {
            writeln!(out, "{s},{hr},{lr}")?;
        }
        Ok(())
    }
}

pub fn deviation_ladder<O: Objective + ?Sized>(
    obj: &O,
    x0: &Vector,
    beta: f64,
    steps: &[f64],
    horizon: f64,
) -> Result<DeviationLadder> {
    let mut rows = Vec::with_capacity(steps.len());
    for &s in steps {
        let k_max = (horizon / s.sqrt() + 1e-9).floor() as usize;
        let traj = run(&MethodConfig::new(beta, s, k_max.max(1))?, obj, x0)?;
        let t_end = (k_max as f64 * s.sqrt()).max(s.sqrt());
        let hr = solve_hr(beta, s, obj, x0, t_end)?;
        let lr = solve_lr(obj, x0, s, t_end)?;
        rows.push((s, deviation(&traj, &hr, horizon)?, deviation(&traj, &lr, horizon)?));
    }
    Ok(DeviationLadder { beta, horizon, rows })
}

/// `(3 + (2-β)²)/2`, the constant of the continuous-time rate bound (divided by `s`).
pub fn rate_bound_constant(beta: f64) -> f64 {
    (3.0 + (2.0 - beta).powi(2)) / 2.0
}

/// Outcome of comparing `f(X(t)) - f*` with `((3+(2-β)²)/(2s))‖x0-x*‖² e^{-√μ t/4}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub constant: f64,
    pub max_ratio: f64,
    pub worst_time: f64,
    /// False when `s > 1/L`: the ratio is reported but carries no guarantee.
    pub binding: bool,
    pub passed: bool,
}

pub const BOUND_RATIO_TOL: f64 = 1e-9;

pub fn continuous_rate_check<O: Objective + ?Sized>(
    sol: &OdeSolution,
    obj: &O,
    beta: f64,
    s: f64,
) -> Result<BoundReport> {
    match sol.dynamics {
        Dynamics::HighResolution { beta: b, step } if b == beta && step == s => {}
        other => {
            return Err(Error::Configuration(format!(
                "solution dynamics {other:?} do not match beta = {beta}, s = {s}"
            )))
        }
    }
    let constant = rate_bound_constant(beta);
    let r2 = (&sol.positions[0] - obj.minimizer()).norm_squared();
    let rate = obj.mu().sqrt() / 4.0;
    let (mut max_ratio, mut worst_time) = (0.0_f64, 0.0);
    for (t, x) in sol.times.iter().zip(&sol.positions) {
        let bound = constant / s * r2 * (-rate * t).exp();
        let gap = obj.gap(x);
        let ratio = if bound > 0.0 {
            gap / bound
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_time = *t;
        }
    }
    Ok(BoundReport {
        constant,
        max_ratio,
        worst_time,
        binding: s <= 1.0 / obj.lip(),
        passed: max_ratio <= 1.0 + BOUND_RATIO_TOL,
    })
}
