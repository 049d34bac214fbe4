//! Lyapunov energy functionals and the decrement inequalities they satisfy.

use std::io::{self, Write};

use crate::continuous::{Dynamics, OdeSolution};
use crate::error::{check_dim, Error, Result};
use crate::methods::{Trajectory, Variant};
use crate::objectives::Objective;
use crate::phase::coefficients_ab;
use crate::Vector;

/// A sequence of energies with pointwise decrements checked against a bound.
///
/// Row `i` describes the index `index[i]` (iteration `k` or time `t`): the
/// energy there, its decrement (`E(k+1) - E(k)` or an estimate of `dE/dt`)
/// and the right-hand side it must not exceed.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub index_label: &'static str,
    pub index: Vec<f64>,
    pub values: Vec<f64>,
    pub decrements: Vec<f64>,
    pub bound_rhs: Vec<f64>,
    /// Row numbers where `decrement > rhs + tolerance`.
    pub violations: Vec<usize>,
    /// False when the step lies outside the hypothesis of the inequality.
    pub binding: bool,
    /// `max_i (decrement - rhs)`; negative means every row holds strictly.
    pub worst_margin: f64,
}

impl EnergySeries {
    fn build(
        index_label: &'static str,
        index: Vec<f64>,
        values: Vec<f64>,
        decrements: Vec<f64>,
        bound_rhs: Vec<f64>,
        tolerances: &[f64],
        binding: bool,
    ) -> Self {
        let mut violations = Vec::new();
        let mut worst_margin = f64::NEG_INFINITY;
        for i in 0..decrements.len() {
            let margin = decrements[i] - bound_rhs[i];
            worst_margin = worst_margin.max(margin);
            if !(margin <= tolerances[i]) {
                violations.push(i);
            }
        }
        Self {
            index_label,
            index,
            values,
            decrements,
            bound_rhs,
            violations,
            binding,
            worst_margin,
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// CSV with header `k,E,dE,rhs,violated` (`t` in place of `k` for continuous series).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{},E,dE,rhs,violated", self.index_label)?;
        let mut flagged = self.violations.iter().peekable();
        for i in 0..self.len() {
            let violated = flagged.next_if_eq(&&i).is_some();
            writeln!(
                out,
                "{},{},{},{},{}",
                self.index[i], self.values[i], self.decrements[i], self.bound_rhs[i], violated as u8
            )?;
        }
        Ok(())
    }
}

/// `(1+√(μs))(f(X)-f*) + ¼‖V‖² + ¼‖V + 2√μ(X-x*) + β√s∇f(X)‖²`.
pub fn continuous_energy<O: Objective + ?Sized>(beta: f64, s: f64, obj: &O, x: &Vector, v: &Vector) -> Result<f64> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    let mu = obj.mu();
    let mixed = v + (x - obj.minimizer()) * (2.0 * mu.sqrt()) + obj.gradient(x) * (beta * s.sqrt());
    Ok((1.0 + (mu * s).sqrt()) * obj.gap(x) + 0.25 * v.norm_squared() + 0.25 * mixed.norm_squared())
}

/// The nonnegative slack `Δ_β` in `dE/dt ≤ -(√μ/4)E - Δ_β`.
pub fn continuous_decrement_delta<O: Objective + ?Sized>(
    beta: f64,
    s: f64,
    obj: &O,
    x: &Vector,
    v: &Vector,
) -> Result<f64> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    let sqrt_mu = obj.mu().sqrt();
    let grad_coeff = (8.0 * beta * s * sqrt_mu - 3.0 * s * beta * beta * sqrt_mu) / 4.0;
    Ok(0.25
        * (grad_coeff * obj.gradient(x).norm_squared()
            + 2.0 * sqrt_mu * v.norm_squared()
            + (sqrt_mu + obj.mu() * s.sqrt()) * obj.gap(x)))
}

fn check_matching_solution(sol: &OdeSolution, beta: f64, s: f64) -> Result<()> {
    match sol.dynamics {
        Dynamics::HighResolution { beta: b, step } if b == beta && step == s => Ok(()),
        other => Err(Error::Configuration(format!(
            "solution dynamics {other:?} do not match beta = {beta}, s = {s}"
        ))),
    }
}

fn energies_along<O: Objective + ?Sized>(sol: &OdeSolution, beta: f64, s: f64, obj: &O) -> Result<Vec<f64>> {
    sol.positions
        .iter()
        .zip(&sol.velocities)
        .map(|(x, v)| continuous_energy(beta, s, obj, x, v))
        .collect()
}

/// Checks `dE/dt ≤ -(√μ/4)E` at interior grid points with `dE/dt` estimated
/// by central differences.
///
/// The tolerance at each point is `10·h²·|E'''|`, with `E'''` estimated by a
/// five-point third difference over the neighbouring nodes, plus the
/// rounding error of the difference quotient.
pub fn check_continuous_decay<O: Objective + ?Sized>(
    sol: &OdeSolution,
    beta: f64,
    s: f64,
    obj: &O,
) -> Result<EnergySeries> {
    check_matching_solution(sol, beta, s)?;
    let energies = energies_along(sol, beta, s, obj)?;
    let n = energies.len();
    if n < 5 {
        return Err(Error::Span {
            requested: 4.0 * sol.integrator_step,
            available: sol.t_end(),
        });
    }
    let h = sol.integrator_step;
    let rate = obj.mu().sqrt() / 4.0;
    let third = |j: usize| -> f64 {
        let j = j.clamp(2, n - 3);
        (energies[j + 2] - 2.0 * energies[j + 1] + 2.0 * energies[j - 1] - energies[j - 2]) / (2.0 * h * h * h)
    };

    let rows = 1..n - 1;
    let mut index = Vec::with_capacity(n - 2);
    let mut values = Vec::with_capacity(n - 2);
    let mut decrements = Vec::with_capacity(n - 2);
    let mut rhs = Vec::with_capacity(n - 2);
    let mut tolerances = Vec::with_capacity(n - 2);
    for i in rows {
        let de = (energies[i + 1] - energies[i - 1]) / (2.0 * h);
        let e3 = (i.saturating_sub(1)..=i + 1).map(third).fold(0.0_f64, |m, x| m.max(x.abs()));
        let scale = energies[i - 1].abs().max(energies[i + 1].abs());
        let roundoff = 8.0 * f64::EPSILON * (1.0 + scale) / h;
        index.push(sol.times[i]);
        values.push(energies[i]);
        decrements.push(de);
        rhs.push(-rate * energies[i]);
        tolerances.push(10.0 * h * h * e3 + roundoff);
    }
    Ok(EnergySeries::build("t", index, values, decrements, rhs, &tolerances, true))
}

/// Integrated form of the continuous decay, `E(t) ≤ E(0)e^{-√μt/4}`, and the
/// sign of `Δ_β` along the same solution.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// `max_t E(t)/(E(0)e^{-√μt/4})` (0 when `E(0) = 0` and `E ≡ 0`).
    pub max_ratio: f64,
    pub worst_time: f64,
    pub min_delta: f64,
    pub negative_delta_count: usize,
    pub passed: bool,
}

pub const ENVELOPE_TOL: f64 = 1e-9;

pub fn check_continuous_envelope<O: Objective + ?Sized>(
    sol: &OdeSolution,
    beta: f64,
    s: f64,
    obj: &O,
) -> Result<EnvelopeReport> {
    check_matching_solution(sol, beta, s)?;
    let energies = energies_along(sol, beta, s, obj)?;
    let e0 = energies[0];
    let rate = obj.mu().sqrt() / 4.0;
    let (mut max_ratio, mut worst_time) = (0.0_f64, 0.0);
    let mut envelope_ok = true;
    for (t, e) in sol.times.iter().zip(&energies) {
        let bound = e0 * (-rate * t).exp();
        if *e > bound * (1.0 + ENVELOPE_TOL) + 1e-14 {
            envelope_ok = false;
        }
        let ratio = if bound > 0.0 { e / bound } else if *e > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_time = *t;
        }
    }
    let mut min_delta = f64::INFINITY;
    let mut negative_delta_count = 0;
    for (x, v) in sol.positions.iter().zip(&sol.velocities) {
        let d = continuous_decrement_delta(beta, s, obj, x, v)?;
        min_delta = min_delta.min(d);
        if d < 0.0 {
            negative_delta_count += 1;
        }
    }
    Ok(EnvelopeReport {
        max_ratio,
        worst_time,
        min_delta,
        negative_delta_count,
        passed: envelope_ok && negative_delta_count == 0,
    })
}

fn require_small_step(mu: f64, s: f64) -> Result<f64> {
    let r = (mu * s).sqrt();
    if !(r < 1.0) {
        return Err(Error::ParameterDomain(format!("need mu*s < 1, got mu*s = {}", mu * s)));
    }
    Ok(r)
}

/// The discrete energy
/// `((1+r)/(1-r))(f-f*) + ¼‖v‖² + ¼‖v + (2√μ/(1-r))(y-x*) + β√s∇f‖² - βs‖∇f‖²/(2(1-r))`
/// with `r = √(μs)`, `f` and `∇f` taken at `x_k` and the mixed term anchored
/// at `y = x_k + √s·v_k = x_{k+1}`.
///
/// Anchoring the mixed term at `x_k` instead breaks the telescoping of its
/// increment through the phase-space recursion, and the inner-product form
/// of the decrement bound then fails along ordinary runs; see
/// [`discrete_energy_with_anchor`].
pub fn discrete_energy<O: Objective + ?Sized>(beta: f64, s: f64, obj: &O, x: &Vector, v: &Vector) -> Result<f64> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    discrete_energy_with_anchor(beta, s, obj, x, v, &(x + v * s.sqrt()))
}

/// The discrete energy with the mixed term anchored at an arbitrary point.
pub fn discrete_energy_with_anchor<O: Objective + ?Sized>(
    beta: f64,
    s: f64,
    obj: &O,
    x: &Vector,
    v: &Vector,
    anchor: &Vector,
) -> Result<f64> {
    check_dim(obj.dim(), x.len())?;
    check_dim(obj.dim(), v.len())?;
    check_dim(obj.dim(), anchor.len())?;
    let mu = obj.mu();
    let r = require_small_step(mu, s)?;
    let g = obj.gradient(x);
    let mixed = v + (anchor - obj.minimizer()) * (2.0 * mu.sqrt() / (1.0 - r)) + &g * (beta * s.sqrt());
    Ok((1.0 + r) / (1.0 - r) * obj.gap(x) + 0.25 * v.norm_squared() + 0.25 * mixed.norm_squared()
        - beta * s * g.norm_squared() / (2.0 * (1.0 - r)))
}

/// The recursive inequality along a trajectory, with the two intermediate
/// bounds it is assembled from recorded alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDecrementReport {
    /// `E(k+1) - E(k) ≤ -√(μs)·min{1/6, A/B}·E(k+1)`, binding for `s ≤ 1/(4L)`.
    pub recursive: EnergySeries,
    /// The inner-product form valid for `s ≤ 1/L`.
    pub inner_product: EnergySeries,
    /// The expanded lower bound on the decrement, valid for `s ≤ 1/(2L)`.
    pub expanded: EnergySeries,
    pub a: f64,
    pub b: f64,
    /// `min{1/6, A/B}`
    pub min_ratio: f64,
    /// `E(0)`, and `max_k E(k)(1+√(μs)·min{1/6, A/B})^k / E(0)`.
    pub initial_energy: f64,
    pub envelope_ratio: f64,
}

impl DiscreteDecrementReport {
    pub fn hypothesis_holds(&self) -> bool {
        self.recursive.binding
    }
}

pub const DISCRETE_REL_TOL: f64 = 1e-12;

/// Evaluates the discrete energy on the stored `(x_k, v_k)` of `traj` and
/// checks every decrement; the last iterate has no velocity and is skipped.
pub fn check_discrete_decrement<O: Objective + ?Sized>(
    traj: &Trajectory,
    beta: f64,
    s: f64,
    obj: &O,
) -> Result<DiscreteDecrementReport> {
    let cfg = &traj.config;
    if cfg.beta != beta || cfg.step != s || cfg.variant == Variant::GradientDescent {
        return Err(Error::Configuration(format!(
            "trajectory ({}, beta = {}, s = {}) does not match beta = {beta}, s = {s}",
            cfg.variant.name(),
            cfg.beta,
            cfg.step
        )));
    }
    let (mu, lip) = (obj.mu(), obj.lip());
    let r = require_small_step(mu, s)?;
    if traj.velocities.len() < 2 {
        return Err(Error::Span {
            requested: 2.0,
            available: traj.velocities.len() as f64,
        });
    }
    let energies: Vec<f64> = traj
        .iterates
        .iter()
        .zip(&traj.velocities)
        .map(|(x, v)| discrete_energy(beta, s, obj, x, v))
        .collect::<Result<_>>()?;

    let (a, b) = coefficients_ab(beta, s, mu, lip)?;
    let min_ratio = (1.0 / 6.0_f64).min(a / b);
    let q = (1.0 + r) / (1.0 - r);
    let x_star = obj.minimizer();

    let rows = energies.len() - 1;
    let index: Vec<f64> = (0..rows).map(|k| k as f64).collect();
    let values = energies[..rows].to_vec();
    let decrements: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let tolerances: Vec<f64> = energies[1..].iter().map(|e| DISCRETE_REL_TOL * (1.0 + e.abs())).collect();

    let mut rhs_recursive = Vec::with_capacity(rows);
    let mut rhs_inner = Vec::with_capacity(rows);
    let mut rhs_expanded = Vec::with_capacity(rows);
    for k in 0..rows {
        let (x1, v1) = (&traj.iterates[k + 1], &traj.velocities[k + 1]);
        let g1 = obj.gradient(x1);
        let gap1 = obj.gap(x1);
        let (g1_sq, v1_sq) = (g1.norm_squared(), v1.norm_squared());
        let dist_sq = (x1 - x_star).norm_squared();

        rhs_recursive.push(-r * min_ratio * energies[k + 1]);

        rhs_inner.push(
            -r / (1.0 - r) * (q * g1.dot(&(x1 - x_star)) + v1_sq)
                + 0.5 * q * s * ((1.0 + beta) * r + (1.0 - beta)) / (1.0 - r) * g1_sq,
        );

        let grad_weight = (beta * beta * s * r - (beta * beta - beta) * s) / (2.0 * r);
        rhs_expanded.push(
            -r * a * gap1
                - r * (r / (1.0 - r).powi(2)) * (gap1 - grad_weight * g1_sq)
                - r * (mu / (2.0 * (1.0 - r).powi(2)) * dist_sq + v1_sq / (1.0 - r)),
        );
    }

    let series = |rhs: Vec<f64>, binding: bool| {
        EnergySeries::build("k", index.clone(), values.clone(), decrements.clone(), rhs, &tolerances, binding)
    };

    let e0 = energies[0];
    let factor = 1.0 + r * min_ratio;
    let envelope_ratio = if e0 > 0.0 {
        energies
            .iter()
            .enumerate()
            .map(|(k, e)| e * factor.powi(k as i32) / e0)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };

    Ok(DiscreteDecrementReport {
        recursive: series(rhs_recursive, s <= 1.0 / (4.0 * lip)),
        inner_product: series(rhs_inner, s <= 1.0 / lip),
        expanded: series(rhs_expanded, s <= 1.0 / (2.0 * lip)),
        a,
        b,
        min_ratio,
        initial_energy: e0,
        envelope_ratio,
    })
}
