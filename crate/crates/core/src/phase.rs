//! Phase transition of the guaranteed rate in `beta`.
//!
//! The discrete energy contracts by `1 + √(μs)·min{1/6, A_β/B_β}` per step.
//! On the step window `25μ/(12L-μ)² ≤ s ≤ 1/(4L)` the ratio `A_β/B_β`
//! crosses `1/6` exactly once in `[0, 1]`, at `β_c`; the sign of the
//! quadratic `h(β)` tells which side a given `β` lies on.
//!
//! Everything is evaluated in terms of `r = √(μs)` and `Ls`, in which each
//! expression is polynomial. Steps are also written `s = 1/(cL)`.

use crate::error::{Error, Result};

/// Relative slack on `s` when testing window membership.
const WINDOW_SLACK: f64 = 1e-12;

/// `|A/B - 1/6|` below which a point is classified as [`Regime::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWindow {
    pub s_min: f64,
    pub s_max: f64,
    /// `c = 1/(sL)` range, `c_min = 4` and `c_max = (12L-μ)²/(25μL)`.
    pub c_min: f64,
    pub c_max: f64,
    pub empty: bool,
}

impl StepWindow {
    pub fn contains(&self, s: f64) -> bool {
        !self.empty && s >= self.s_min * (1.0 - WINDOW_SLACK) && s <= self.s_max * (1.0 + WINDOW_SLACK)
    }
}

fn check_constants(mu: f64, lip: f64) -> Result<()> {
    if !(mu > 0.0) || !(lip.is_finite()) || mu > lip {
        return Err(Error::ParameterDomain(format!("need 0 < mu <= L, got mu = {mu}, L = {lip}")));
    }
    Ok(())
}

pub fn step_window(mu: f64, lip: f64) -> Result<StepWindow> {
    check_constants(mu, lip)?;
    let spread = 12.0 * lip - mu;
    let s_min = 25.0 * mu / (spread * spread);
    let s_max = 1.0 / (4.0 * lip);
    Ok(StepWindow {
        s_min,
        s_max,
        c_min: 4.0,
        c_max: spread * spread / (25.0 * mu * lip),
        empty: s_min > s_max,
    })
}

/// `(r, Ls, μs)` after checking `0 < μs < 1`.
fn params(s: f64, mu: f64, lip: f64) -> Result<(f64, f64, f64)> {
    check_constants(mu, lip)?;
    let mus = mu * s;
    if !(s > 0.0) || !(mus < 1.0) {
        return Err(Error::ParameterDomain(format!("need s > 0 and mu*s < 1, got s = {s}, mu*s = {mus}")));
    }
    Ok((mus.sqrt(), lip * s, mus))
}

/// `(A_β, B_β)` from the recursive decrement inequality.
pub fn coefficients_ab(beta: f64, s: f64, mu: f64, lip: f64) -> Result<(f64, f64)> {
    let (r, ls, mus) = params(s, mu, lip)?;
    let bracket = (beta - beta * beta) * mus + (3.0 + beta * beta - 2.0 * beta) * r + 2.0 - 2.0 * beta;
    let a = (1.0 - ls * bracket / r) / ((1.0 - r) * (1.0 - r));
    let b = 1.0 / (1.0 - r) + beta * beta * ls / 2.0;
    Ok((a, b))
}

/// `h(β)`, whose sign equals the sign of `A_β/B_β - 1/6`.
pub fn h_poly(beta: f64, s: f64, mu: f64, lip: f64) -> Result<f64> {
    let (r, ls, mus) = params(s, mu, lip)?;
    let b2 = beta * beta;
    Ok((ls * mus - ls * r) * b2 + (2.0 * ls * r - ls * mus + 2.0 * ls) * beta + (r - 3.0 * ls * r - 2.0 * ls)
        - ((ls / 2.0) * r * (1.0 - r) * (1.0 - r) * b2 + r - mus) / 6.0)
}

pub fn h_poly_derivative(beta: f64, s: f64, mu: f64, lip: f64) -> Result<f64> {
    let (r, ls, mus) = params(s, mu, lip)?;
    let quad = ls * mus - ls * r - ls * r * (1.0 - r) * (1.0 - r) / 12.0;
    Ok(2.0 * quad * beta + 2.0 * ls * r - ls * mus + 2.0 * ls)
}

/// Coefficients `(a, b, c)` of `h(β) = aβ² + bβ + c` in their closed forms.
pub fn critical_coefficients(s: f64, mu: f64, lip: f64) -> Result<(f64, f64, f64)> {
    let (r, ls, mus) = params(s, mu, lip)?;
    let a = ls * r * (r - 1.0) * (1.0 - (r - 1.0) / 12.0);
    let b = ls * (2.0 * r - mus + 2.0);
    let c = 5.0 / 6.0 * r - 3.0 * ls * r - 2.0 * ls + mus / 6.0;
    Ok((a, b, c))
}

/// Both roots of `h` from the quadratic formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormRoots {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub disc: f64,
    /// `(-b - √disc)/(2a)`; lies outside `[0, 1]` whenever `a < 0 < b`.
    pub minus_root: f64,
    /// `(-b + √disc)/(2a)`, evaluated as `-2c/(b + √disc)` to avoid cancellation.
    pub plus_root: f64,
    /// The root lying in `[0, 1]`, if any.
    pub beta_c: Option<f64>,
    pub in_window: bool,
}

pub fn beta_critical_closed(s: f64, mu: f64, lip: f64) -> Result<ClosedFormRoots> {
    let (a, b, c) = critical_coefficients(s, mu, lip)?;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NoRealRoot(disc));
    }
    let sq = disc.sqrt();
    let minus_root = (-b - sq) / (2.0 * a);
    let plus_root = if b + sq != 0.0 { -2.0 * c / (b + sq) } else { (-b + sq) / (2.0 * a) };
    let unit = |x: f64| (-1e-12..=1.0 + 1e-12).contains(&x);
    let beta_c = [plus_root, minus_root].into_iter().find(|x| unit(*x)).map(|x| x.clamp(0.0, 1.0));
    Ok(ClosedFormRoots {
        a,
        b,
        c,
        disc,
        minus_root,
        plus_root,
        beta_c,
        in_window: step_window(mu, lip)?.contains(s),
    })
}

/// Result of locating the sign change of `h` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalBeta {
    Root(f64),
    /// `h(1) < 0`: every `β ∈ [0, 1]` has `A_β/B_β < 1/6`.
    UniformSubcritical,
    /// `h(0) > 0`: every `β ∈ [0, 1]` has `A_β/B_β > 1/6`.
    UniformSupercritical,
}

impl CriticalBeta {
    pub fn root(self) -> Option<f64> {
        match self {
            CriticalBeta::Root(b) => Some(b),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriticalBeta::Root(_) => "root",
            CriticalBeta::UniformSubcritical => "uniform-subcritical",
            CriticalBeta::UniformSupercritical => "uniform-supercritical",
        }
    }
}

/// Bisection on `h` over `[0, 1]` down to an interval of width `tol`.
///
/// Works for any step with `μs < 1`; only an empty window is refused.
pub fn beta_critical_bisection(s: f64, mu: f64, lip: f64, tol: f64) -> Result<CriticalBeta> {
    let window = step_window(mu, lip)?;
    if window.empty {
        return Err(Error::WindowEmpty {
            s_min: window.s_min,
            s_max: window.s_max,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::ParameterDomain(format!("tolerance must be positive, got {tol}")));
    }
    let h = |beta: f64| h_poly(beta, s, mu, lip);
    let (h0, h1) = (h(0.0)?, h(1.0)?);
    if h0 > 0.0 {
        return Ok(CriticalBeta::UniformSupercritical);
    }
    if h1 < 0.0 {
        return Ok(CriticalBeta::UniformSubcritical);
    }
    if h0 == 0.0 {
        return Ok(CriticalBeta::Root(0.0));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if h(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalBeta::Root(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `A_β/B_β < 1/6`: the rate is governed by `A_β/B_β`.
    Subcritical,
    /// `A_β/B_β > 1/6`: the NAG-SC-type rate `1 + √(μs)/6`.
    Supercritical,
    Boundary,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Supercritical => "supercritical",
            Regime::Boundary => "boundary",
        }
    }
}

pub fn classify(beta: f64, s: f64, mu: f64, lip: f64) -> Result<Regime> {
    let (a, b) = coefficients_ab(beta, s, mu, lip)?;
    let diff = a / b - 1.0 / 6.0;
    Ok(if diff.abs() <= BOUNDARY_TOL {
        Regime::Boundary
    } else if diff > 0.0 {
        Regime::Supercritical
    } else {
        Regime::Subcritical
    })
}

/// Per-step energy contraction `1 + √(μs)·min{1/6, A_β/B_β}` implied by the
/// recursive decrement inequality.
pub fn lemma_rate_factor(beta: f64, s: f64, mu: f64, lip: f64) -> Result<f64> {
    let (a, b) = coefficients_ab(beta, s, mu, lip)?;
    Ok(1.0 + (mu * s).sqrt() * (1.0 / 6.0_f64).min(a / b))
}

/// Subcritical per-step denominator as a rational function of `c` and
/// `√(μ/L)`, in the form stated with the main rate theorem.
pub fn subcritical_rate_factor(beta: f64, c: f64, mu_over_l: f64) -> f64 {
    let q = mu_over_l.sqrt();
    let sc = c.sqrt();
    let b2 = beta * beta;
    let num = (b2 - beta) / (c * c) * mu_over_l + (1.0 / sc - (3.0 + b2 - 2.0 * beta) / (c * sc)) * q
        - (2.0 - 2.0 * beta) / c;
    let den = b2 / (2.0 * c * c * sc) * mu_over_l * q - (1.0 / c + b2 / (c * c)) * mu_over_l
        + (1.0 / sc + b2 / (2.0 * c * sc)) * q;
    1.0 + num / den
}

/// `1 + (1/(6√c))√(μ/L)`.
pub fn supercritical_rate_factor(c: f64, mu_over_l: f64) -> f64 {
    1.0 + mu_over_l.sqrt() / (6.0 * c.sqrt())
}

/// `C` with `E_β(0) ≤ C·L·‖x₀-x*‖²`, from bounding each term of the
/// initial energy:
/// `½(1+r)/(1-r) + Ls/(1+r)² + (2μ/L)/(1-r)² + (Ls/2)((2-β-βr)/(1+r))²`.
pub fn initial_energy_constant(beta: f64, s: f64, mu: f64, lip: f64) -> Result<f64> {
    let (r, ls, _) = params(s, mu, lip)?;
    let tail = (2.0 - beta - beta * r) / (1.0 + r);
    Ok(0.5 * (1.0 + r) / (1.0 - r)
        + ls / ((1.0 + r) * (1.0 + r))
        + 2.0 * mu / lip / ((1.0 - r) * (1.0 - r))
        + ls / 2.0 * tail * tail)
}

/// `C' = ((c + c√(μ/(cL)) - β)/(c(1 - √(μ/(cL)))))·C`, the prefactor of the
/// gap bound as stated with the main rate theorem.
pub fn gap_constant(beta: f64, s: f64, mu: f64, lip: f64) -> Result<f64> {
    let (r, ls, _) = params(s, mu, lip)?;
    let c = 1.0 / ls;
    Ok((c + c * r - beta) / (c * (1.0 - r)) * initial_energy_constant(beta, s, mu, lip)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub regime: Regime,
    /// Per-step denominator of the bound.
    pub rate_factor: f64,
    /// `C'·L·r²/rate_factor^k`.
    pub bound: f64,
    pub constant: f64,
    /// On the boundary both forms are reported; this is the subcritical one.
    pub alternate_factor: Option<f64>,
    /// Set when `s` lies outside the step window: the bound is not guaranteed.
    pub advisory: bool,
}

/// The gap bound after `k` steps from a start at squared distance `r2` from
/// the minimizer, with the regime chosen by comparing `beta` to `β_c`.
pub fn rate_bound(beta: f64, s: f64, mu: f64, lip: f64, k: u32, r2: f64) -> Result<RateBound> {
    let (c, mu_over_l) = (1.0 / (lip * s), mu / lip);
    let roots = beta_critical_closed(s, mu, lip)?;
    let mut regime = match roots.beta_c {
        Some(bc) if beta <= bc => Regime::Subcritical,
        Some(_) => Regime::Supercritical,
        None if h_poly(beta, s, mu, lip)? > 0.0 => Regime::Supercritical,
        None => Regime::Subcritical,
    };
    if classify(beta, s, mu, lip)? == Regime::Boundary {
        regime = Regime::Boundary;
    }
    let sub = subcritical_rate_factor(beta, c, mu_over_l);
    let sup = supercritical_rate_factor(c, mu_over_l);
    let (rate_factor, alternate_factor) = match regime {
        Regime::Subcritical => (sub, None),
        Regime::Supercritical => (sup, None),
        Regime::Boundary => (sup, Some(sub)),
    };
    let constant = gap_constant(beta, s, mu, lip)?;
    Ok(RateBound {
        regime,
        rate_factor,
        bound: constant * lip * r2 / rate_factor.powi(k as i32),
        constant,
        alternate_factor,
        advisory: !roots.in_window,
    })
}

/// Everything the phase analysis says about one `(β, s, μ, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub mu: f64,
    pub lip: f64,
    pub step: f64,
    pub beta: f64,
    pub window: StepWindow,
    pub in_window: bool,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    pub h_value: f64,
    pub beta_c_closed: Option<f64>,
    /// `None` when the window is empty.
    pub beta_c_bisect: Option<CriticalBeta>,
    pub regime: Regime,
    /// The per-step denominator of the regime's bound.
    pub rate_factor: f64,
}

pub const BISECTION_TOL: f64 = 1e-12;

pub fn phase_report(beta: f64, s: f64, mu: f64, lip: f64) -> Result<PhaseReport> {
    let window = step_window(mu, lip)?;
    let (a, b) = coefficients_ab(beta, s, mu, lip)?;
    let regime = classify(beta, s, mu, lip)?;
    let (c, mu_over_l) = (1.0 / (lip * s), mu / lip);
    let beta_c_closed = match beta_critical_closed(s, mu, lip) {
        Ok(roots) => roots.beta_c,
        Err(Error::NoRealRoot(_)) => None,
        Err(e) => return Err(e),
    };
    let beta_c_bisect = if window.empty {
        None
    } else {
        Some(beta_critical_bisection(s, mu, lip, BISECTION_TOL)?)
    };
    Ok(PhaseReport {
        mu,
        lip,
        step: s,
        beta,
        window,
        in_window: window.contains(s),
        a,
        b,
        ratio: a / b,
        h_value: h_poly(beta, s, mu, lip)?,
        beta_c_closed,
        beta_c_bisect,
        regime,
        rate_factor: match regime {
            Regime::Subcritical => subcritical_rate_factor(beta, c, mu_over_l),
            _ => supercritical_rate_factor(c, mu_over_l),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MU: f64 = 1.0;
    const L: f64 = 10.0;
    const S: f64 = 1.0 / 40.0;

    #[test]
    fn window_examples() {
        let w = step_window(MU, L).unwrap();
        assert_relative_eq!(w.s_min, 25.0 / 14161.0, max_relative = 1e-15);
        assert_eq!(w.s_max, 0.025);
        assert_eq!(w.c_min, 4.0);
        assert_relative_eq!(w.c_max, 14161.0 / 250.0, max_relative = 1e-15);
        assert!(!w.empty && w.contains(S) && w.contains(w.s_min) && !w.contains(1.0 / 1600.0));

        // 25/121 < 1/4: the window stays nonempty all the way up to μ = L.
        let same = step_window(2.0, 2.0).unwrap();
        assert_relative_eq!(same.s_min, 25.0 / 242.0);
        assert!(!same.empty && same.contains(0.11));

        let tiny = step_window(1e-12, L).unwrap();
        assert!(tiny.s_min < 1e-13);
        assert!(step_window(2.0, 1.0).is_err());
    }

    #[test]
    fn ab_examples() {
        let (a, b) = coefficients_ab(1.0, S, MU, L).unwrap();
        assert_relative_eq!(a, 0.5 / (1.0 - S.sqrt()).powi(2), max_relative = 1e-14);
        assert_relative_eq!(a, 0.70545, epsilon = 1e-5);
        assert_relative_eq!(b, 1.31281, epsilon = 1e-5);
        assert_relative_eq!(a / b, 0.53736, epsilon = 1e-5);
        let (a0, b0) = coefficients_ab(0.0, S, MU, L).unwrap();
        assert_relative_eq!(a0, -4.1089, epsilon = 1e-4);
        assert!(a0 / b0 < 1.0 / 6.0);
        let (a, b) = coefficients_ab(1.0, 1e-14, MU, L).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-6);
        assert_relative_eq!(b, 1.0, epsilon = 1e-6);
        assert!(coefficients_ab(1.0, 1.0, MU, L).is_err());
    }

    #[test]
    fn h_examples() {
        assert_relative_eq!(h_poly(0.0, S, MU, L).unwrap(), -0.48266, epsilon = 1e-5);
        assert_relative_eq!(h_poly(1.0, S, MU, L).unwrap(), 0.054537, epsilon = 1e-6);
        for i in 0..=20 {
            let beta = i as f64 / 20.0;
            assert!(h_poly_derivative(beta, S, MU, L).unwrap() >= 0.0);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let eps = 1e-6;
        for beta in [0.1, 0.5, 0.9] {
            let fd = (h_poly(beta + eps, S, MU, L).unwrap() - h_poly(beta - eps, S, MU, L).unwrap()) / (2.0 * eps);
            assert_relative_eq!(h_poly_derivative(beta, S, MU, L).unwrap(), fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn remark_coefficients_reproduce_h() {
        let (a, b, c) = critical_coefficients(S, MU, L).unwrap();
        assert_relative_eq!(a, -0.035613, epsilon = 1e-6);
        assert_relative_eq!(b, 0.572807, epsilon = 1e-6);
        assert_relative_eq!(c, -0.482658, epsilon = 1e-6);
        for beta in [0.0, 0.3, 0.77, 1.0] {
            let poly = a * beta * beta + b * beta + c;
            assert_relative_eq!(poly, h_poly(beta, S, MU, L).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn closed_form_picks_the_unit_root() {
        let roots = beta_critical_closed(S, MU, L).unwrap();
        assert!(roots.in_window);
        assert!(roots.minus_root > 1.0, "printed root {}", roots.minus_root);
        assert_relative_eq!(roots.beta_c.unwrap(), 0.8920972397056566, epsilon = 1e-12);
        assert_eq!(roots.beta_c, Some(roots.plus_root));
        let CriticalBeta::Root(bis) = beta_critical_bisection(S, MU, L, 1e-10).unwrap() else {
            panic!("expected a root");
        };
        assert!((bis - roots.beta_c.unwrap()).abs() <= 1e-8);
        assert_relative_eq!(
            beta_critical_closed(1.0 / 80.0, MU, L).unwrap().beta_c.unwrap(),
            0.737843646920737,
            epsilon = 1e-10
        );
    }

    #[test]
    fn bisection_uniform_and_empty_cases() {
        let conservative = MU / (16.0 * L * L);
        assert_eq!(
            beta_critical_bisection(conservative, MU, L, 1e-10).unwrap(),
            CriticalBeta::UniformSupercritical
        );
        assert!(beta_critical_bisection(0.1, 2.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn regimes_around_beta_c() {
        let bc = beta_critical_closed(S, MU, L).unwrap().beta_c.unwrap();
        assert_eq!(classify(0.3, S, MU, L).unwrap(), Regime::Subcritical);
        assert_eq!(classify(1.0, S, MU, L).unwrap(), Regime::Supercritical);
        assert_eq!(classify(bc, S, MU, L).unwrap(), Regime::Boundary);
    }

    #[test]
    fn printed_rate_factors() {
        let q = (MU / L).sqrt();
        assert_relative_eq!(supercritical_rate_factor(4.0, MU / L), 1.0 + q / 12.0, max_relative = 1e-15);
        let r = rate_bound(1.0, S, MU, L, 0, 1.0).unwrap();
        assert_eq!(r.regime, Regime::Supercritical);
        assert_eq!(r.rate_factor, supercritical_rate_factor(4.0, MU / L));
        assert!(!r.advisory);
        assert_relative_eq!(lemma_rate_factor(1.0, S, MU, L).unwrap(), r.rate_factor, max_relative = 1e-15);
    }

    #[test]
    fn printed_subcritical_form_is_one_plus_ratio() {
        // The rational function equals 1 + A/B without the √(μs) factor the
        // lemma attaches to it.
        for beta in [0.0, 0.3, 0.6] {
            let (a, b) = coefficients_ab(beta, S, MU, L).unwrap();
            let printed = subcritical_rate_factor(beta, 4.0, MU / L);
            assert_relative_eq!(printed, 1.0 + a / b, max_relative = 1e-12);
        }
    }

    #[test]
    fn constants_at_nag_step() {
        let c = initial_energy_constant(1.0, S, MU, L).unwrap();
        let r = S.sqrt();
        let expect = 0.5 * (1.0 + r) / (1.0 - r)
            + 0.25 / (1.0 + r).powi(2)
            + 0.2 / (1.0 - r).powi(2)
            + 0.125 * ((1.0 - r) / (1.0 + r)).powi(2);
        assert_relative_eq!(c, expect, max_relative = 1e-14);
        let cp = gap_constant(1.0, S, MU, L).unwrap();
        assert_relative_eq!(cp, (3.0 + 4.0 * r) / (4.0 * (1.0 - r)) * c, max_relative = 1e-14);
    }

    #[test]
    fn report_fields_agree() {
        let rep = phase_report(0.3, S, MU, L).unwrap();
        assert_eq!(rep.regime, Regime::Subcritical);
        assert!(rep.h_value < 0.0 && rep.ratio < 1.0 / 6.0 && rep.in_window);
        let (bc, bis) = (rep.beta_c_closed.unwrap(), rep.beta_c_bisect.unwrap().root().unwrap());
        assert!((bc - bis).abs() < 1e-10);
        let equal = phase_report(1.0, 0.11, 2.0, 2.0).unwrap();
        assert!(!equal.window.empty && equal.in_window && equal.beta_c_bisect.is_some());
    }
}
