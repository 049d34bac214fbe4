//! The beta-generalised momentum method and its baselines.
//!
//! For `0 ≤ β ≤ 1` and step `s`, with momentum `α = (1-√(μs))/(1+√(μs))`,
//! the single-variable update is
//!
//! ```text
//! x_{k+1} = x_k + α(x_k - x_{k-1}) - s∇f(x_k) - βαs(∇f(x_k) - ∇f(x_{k-1}))
//! ```
//!
//! started from `x_1 = x_0 - 2s∇f(x_0)/(1+√(μs))`. `β = 0` is Polyak's heavy
//! ball with that momentum and `β = 1` is NAG-SC. The equivalent two-sequence
//! form is kept for cross-validation.

use std::io::{self, Write};

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    SingleVariable,
    TwoSequence,
    /// `x_{k+1} = x_k + α(x_k - x_{k-1}) - s∇f(x_k)`
    HeavyBallReference,
    /// NAG-SC in its single-variable form.
    NagScReference,
    GradientDescent,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::SingleVariable => "single_variable",
            Variant::TwoSequence => "two_sequence",
            Variant::HeavyBallReference => "heavy_ball_reference",
            Variant::NagScReference => "nag_sc_reference",
            Variant::GradientDescent => "gradient_descent",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Variant::SingleVariable,
            Variant::TwoSequence,
            Variant::HeavyBallReference,
            Variant::NagScReference,
            Variant::GradientDescent,
        ]
        .into_iter()
        .find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    pub beta: f64,
    pub step: f64,
    pub max_iter: usize,
    /// Early stop once `‖∇f(x_k)‖ ≤ grad_tol`; zero runs the full budget.
    pub grad_tol: f64,
    pub variant: Variant,
}

impl MethodConfig {
    pub fn new(beta: f64, step: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self {
            beta,
            step,
            max_iter,
            grad_tol: 0.0,
            variant: Variant::SingleVariable,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_grad_tol(mut self, grad_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::ParameterDomain(format!("beta = {} not in [0, 1]", self.beta)));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::ParameterDomain(format!("step = {} must be positive", self.step)));
        }
        if self.max_iter == 0 {
            return Err(Error::ParameterDomain("max_iter must be positive".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "grad_tol = {} must be nonnegative",
                self.grad_tol
            )));
        }
        Ok(())
    }

    /// `√(μs)`
    pub fn sqrt_mu_s(&self, mu: f64) -> f64 {
        (mu * self.step).sqrt()
    }

    /// `α = (1-√(μs))/(1+√(μs))`
    pub fn momentum(&self, mu: f64) -> f64 {
        let r = self.sqrt_mu_s(mu);
        (1.0 - r) / (1.0 + r)
    }
}

/// Iterates and per-step diagnostics of one discrete run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_0 ..= x_K`
    pub iterates: Vec<Vector>,
    /// `v_k = (x_{k+1} - x_k)/√s` for `k < K`
    pub velocities: Vec<Vector>,
    pub gaps: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub config: MethodConfig,
}

impl Trajectory {
    /// Number of steps `K` taken.
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    /// CSV with header `k,x_0..,v_0..,gap,grad_norm`; the final row has empty
    /// velocity fields since `v_K` needs `x_{K+1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.iterates[0].len();
        let mut header = vec!["k".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..n).map(|i| format!("v_{i}")));
        header.push("gap".into());
        header.push("grad_norm".into());
        writeln!(out, "{}", header.join(","))?;
        for (k, x) in self.iterates.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(x.iter().map(|c| c.to_string()));
            match self.velocities.get(k) {
                Some(v) => row.extend(v.iter().map(|c| c.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), n)),
            }
            row.push(self.gaps[k].to_string());
            row.push(self.grad_norms[k].to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_point<O: Objective + ?Sized>(obj: &O, x: &Vector) -> Result<()> {
    check_dim(obj.dim(), x.len())
}

/// Returns `(x_0, x_1)` with `x_1 = x_0 - 2s∇f(x_0)/(1+√(μs))`.
pub fn init_state<O: Objective + ?Sized>(
    config: &MethodConfig,
    obj: &O,
    x0: &Vector,
) -> Result<(Vector, Vector)> {
    check_point(obj, x0)?;
    let r = config.sqrt_mu_s(obj.mu());
    let x1 = x0 - obj.gradient(x0) * (2.0 * config.step / (1.0 + r));
    Ok((x0.clone(), x1))
}

/// `v_0 = -2√s∇f(x_0)/(1+√(μs))`, the velocity implied by [`init_state`].
pub fn initial_velocity<O: Objective + ?Sized>(obj: &O, x0: &Vector, step: f64) -> Vector {
    let r = (obj.mu() * step).sqrt();
    obj.gradient(x0) * (-2.0 * step.sqrt() / (1.0 + r))
}

// The argument order of every update is fixed: the specialisation tests
// compare the beta endpoints against the reference methods bitwise.

fn single_variable_update(
    alpha: f64,
    beta: f64,
    step: f64,
    x_prev: &Vector,
    x_curr: &Vector,
    g_prev: &Vector,
    g_curr: &Vector,
) -> Vector {
    x_curr + (x_curr - x_prev) * alpha - g_curr * step - (g_curr - g_prev) * (beta * alpha * step)
}

fn heavy_ball_update(alpha: f64, step: f64, x_prev: &Vector, x_curr: &Vector, g_curr: &Vector) -> Vector {
    x_curr + (x_curr - x_prev) * alpha - g_curr * step
}

fn nag_sc_update(
    alpha: f64,
    step: f64,
    x_prev: &Vector,
    x_curr: &Vector,
    g_prev: &Vector,
    g_curr: &Vector,
) -> Vector {
    x_curr + (x_curr - x_prev) * alpha - g_curr * step - (g_curr - g_prev) * (alpha * step)
}

/// One step of the single-variable recursion (also serves the two reference variants).
pub fn step_single_variable<O: Objective + ?Sized>(
    config: &MethodConfig,
    obj: &O,
    x_prev: &Vector,
    x_curr: &Vector,
) -> Result<Vector> {
    check_point(obj, x_prev)?;
    check_point(obj, x_curr)?;
    let alpha = config.momentum(obj.mu());
    let (g_prev, g_curr) = (obj.gradient(x_prev), obj.gradient(x_curr));
    Ok(match config.variant {
        Variant::HeavyBallReference => heavy_ball_update(alpha, config.step, x_prev, x_curr, &g_curr),
        Variant::NagScReference => nag_sc_update(alpha, config.step, x_prev, x_curr, &g_prev, &g_curr),
        Variant::SingleVariable | Variant::TwoSequence => {
            single_variable_update(alpha, config.beta, config.step, x_prev, x_curr, &g_prev, &g_curr)
        }
        Variant::GradientDescent => {
            return Err(Error::Configuration(
                "gradient descent has no two-point recursion".into(),
            ))
        }
    })
}

fn require_mu_s_below_one(mu: f64, step: f64) -> Result<f64> {
    let r = (mu * step).sqrt();
    if r < 1.0 {
        Ok(r)
    } else {
        Err(Error::ParameterDomain(format!("mu*s = {} must be < 1", mu * step)))
    }
}

/// `y_0^β = x_0 + (1-β)s∇f(x_0)`, the start that makes the first two-sequence
/// step land on `x_1 = x_0 - 2s∇f(x_0)/(1+√(μs))`. At `β = 1` this is exactly `x_0`.
pub fn initial_y_beta<O: Objective + ?Sized>(config: &MethodConfig, obj: &O, x0: &Vector) -> Result<Vector> {
    check_point(obj, x0)?;
    require_mu_s_below_one(obj.mu(), config.step)?;
    Ok(x0 + obj.gradient(x0) * ((1.0 - config.beta) * config.step))
}

/// One step of the two-sequence form; returns `(x_{k+1}, y_{k+1}^β)`.
pub fn step_two_sequence<O: Objective + ?Sized>(
    config: &MethodConfig,
    obj: &O,
    x_curr: &Vector,
    y_beta_curr: &Vector,
) -> Result<(Vector, Vector)> {
    check_point(obj, x_curr)?;
    check_point(obj, y_beta_curr)?;
    let r = require_mu_s_below_one(obj.mu(), config.step)?;
    let alpha = (1.0 - r) / (1.0 + r);
    let g = obj.gradient(x_curr);
    let y_next = x_curr - &g * config.step;
    let y_beta_next = x_curr - &g * (config.beta * config.step);
    let x_next = &y_next + (&y_beta_next - y_beta_curr) * alpha;
    Ok((x_next, y_beta_next))
}

fn finite(x: &Vector) -> bool {
    x.iter().all(|c| c.is_finite())
}

/// Drives the configured variant from `x0`, recording the full trajectory.
pub fn run<O: Objective + ?Sized>(config: &MethodConfig, obj: &O, x0: &Vector) -> Result<Trajectory> {
    config.validate()?;
    check_point(obj, x0)?;
    if !finite(x0) {
        return Err(Error::Divergence { k: 0 });
    }
    let sqrt_s = config.step.sqrt();
    let alpha = config.momentum(obj.mu());

    let mut iterates = vec![x0.clone()];
    let mut gradients = vec![obj.gradient(x0)];
    let mut y_beta = match config.variant {
        Variant::TwoSequence => Some(initial_y_beta(config, obj, x0)?),
        _ => None,
    };

    for k in 0..config.max_iter {
        let g_curr = &gradients[k];
        if config.grad_tol > 0.0 && g_curr.norm() <= config.grad_tol {
            break;
        }
        let x_curr = &iterates[k];
        let next = if k == 0 {
            match config.variant {
                Variant::GradientDescent => x_curr - g_curr * config.step,
                Variant::TwoSequence => {
                    let (x1, y1) = step_two_sequence(config, obj, x_curr, y_beta.as_ref().unwrap())?;
                    y_beta = Some(y1);
                    x1
                }
                _ => init_state(config, obj, x_curr)?.1,
            }
        } else {
            let (x_prev, g_prev) = (&iterates[k - 1], &gradients[k - 1]);
            match config.variant {
                Variant::GradientDescent => x_curr - g_curr * config.step,
                Variant::TwoSequence => {
                    let (x_next, y_next) = step_two_sequence(config, obj, x_curr, y_beta.as_ref().unwrap())?;
                    y_beta = Some(y_next);
                    x_next
                }
                Variant::HeavyBallReference => heavy_ball_update(alpha, config.step, x_prev, x_curr, g_curr),
                Variant::NagScReference => nag_sc_update(alpha, config.step, x_prev, x_curr, g_prev, g_curr),
                Variant::SingleVariable => {
                    single_variable_update(alpha, config.beta, config.step, x_prev, x_curr, g_prev, g_curr)
                }
            }
        };
        if !finite(&next) {
            return Err(Error::Divergence { k: k + 1 });
        }
        let g_next = obj.gradient(&next);
        if !finite(&g_next) {
            return Err(Error::Divergence { k: k + 1 });
        }
        iterates.push(next);
        gradients.push(g_next);
    }

    let velocities = iterates.windows(2).map(|w| (&w[1] - &w[0]) / sqrt_s).collect();
    let gaps: Vec<f64> = iterates.iter().map(|x| obj.gap(x)).collect();
    if let Some(k) = gaps.iter().position(|g| !g.is_finite()) {
        return Err(Error::Divergence { k });
    }
    Ok(Trajectory {
        velocities,
        gaps,
        grad_norms: gradients.iter().map(|g| g.norm()).collect(),
        iterates,
        config: *config,
    })
}
