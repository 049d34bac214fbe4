//! Regime map over `(μ/L, c, β)` grids with `L = 1`.

use std::io::{self, Write};

use betamomentum::phase::phase_report;
use betamomentum::CriticalBeta;

/// Agreement required between the closed-form and bisected `β_c`.
pub const ROOT_AGREEMENT_TOL: f64 = 1e-8;

/// Parses `0.1,0.2` lists and inclusive `start:stop:step` ranges; the two
/// forms may be mixed, e.g. `0:0.5:0.1,0.9`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(format!("bad range {part:?}: need step > 0 and stop >= start"));
                }
                // Index-based so the endpoint is hit exactly and no drift accumulates.
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| if i == n && ((stop - start) / step - n as f64).abs() < 1e-9 {
                    stop
                } else {
                    start + i as f64 * step
                }));
            }
            _ => return Err(format!("bad grid entry {part:?}")),
        }
    }
    if out.is_empty() {
        return Err("grid is empty".into());
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err("grid contains a non-finite value".into());
    }
    Ok(out)
}

/// One cell of the regime map; numeric fields are `None` when the cell lies
/// outside the domain of the phase formulas (`μ > L` or `μs ≥ 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub mu_over_l: f64,
    pub c: f64,
    pub beta: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub h: Option<f64>,
    pub regime: &'static str,
    pub beta_c: Option<f64>,
    /// Bisection result: the root, or a uniform-regime label.
    pub beta_c_bisect: Option<CriticalBeta>,
    pub in_window: bool,
}

impl PhaseRow {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.a? / self.b?)
    }

    /// True unless the row is in the window and its two `β_c` disagree.
    pub fn roots_agree(&self) -> bool {
        if !self.in_window {
            return true;
        }
        match (self.beta_c, self.beta_c_bisect) {
            (Some(closed), Some(CriticalBeta::Root(bis))) => (closed - bis).abs() <= ROOT_AGREEMENT_TOL,
            (None, Some(CriticalBeta::UniformSubcritical | CriticalBeta::UniformSupercritical)) => true,
            _ => false,
        }
    }
}

pub fn phase_rows(mu_over_l: &[f64], cs: &[f64], betas: &[f64]) -> Vec<PhaseRow> {
    let mut rows = Vec::with_capacity(mu_over_l.len() * cs.len() * betas.len());
    for &m in mu_over_l {
        for &c in cs {
            for &beta in betas {
                rows.push(phase_row(m, c, beta));
            }
        }
    }
    rows
}

fn phase_row(mu_over_l: f64, c: f64, beta: f64) -> PhaseRow {
    let s = 1.0 / c;
    match phase_report(beta, s, mu_over_l, 1.0) {
        Ok(rep) => PhaseRow {
            mu_over_l,
            c,
            beta,
            a: Some(rep.a),
            b: Some(rep.b),
            h: Some(rep.h_value),
            regime: rep.regime.name(),
            beta_c: rep.beta_c_closed,
            beta_c_bisect: rep.beta_c_bisect,
            in_window: rep.in_window,
        },
        Err(_) => PhaseRow {
            mu_over_l,
            c,
            beta,
            a: None,
            b: None,
            h: None,
            regime: "invalid",
            beta_c: None,
            beta_c_bisect: None,
            in_window: false,
        },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_phase_csv<W: Write>(rows: &[PhaseRow], mut out: W) -> io::Result<()> {
    writeln!(out, "mu_over_L,c,beta,A,B,h,ratio,regime,beta_c,beta_c_bisect,in_window")?;
    for r in rows {
        let bisect = match r.beta_c_bisect {
            Some(CriticalBeta::Root(b)) => b.to_string(),
            Some(other) => other.label().to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.mu_over_l,
            r.c,
            r.beta,
            opt(r.a),
            opt(r.b),
            opt(r.h),
            opt(r.ratio()),
            r.regime,
            opt(r.beta_c),
            bisect,
            r.in_window
        )?;
    }
    Ok(())
}

/// Regime changes between consecutive `β` within each `(μ/L, c)` block,
/// as `(μ/L, c, β_before, β_after)`. Boundary rows are skipped so that
/// landing exactly on `β_c` still counts as a single flip.
pub fn regime_flips(rows: &[PhaseRow]) -> Vec<(f64, f64, f64, f64)> {
    let mut flips = Vec::new();
    let mut prev: Option<&PhaseRow> = None;
    for r in rows.iter().filter(|r| r.regime == "subcritical" || r.regime == "supercritical") {
        if let Some(p) = prev {
            if p.mu_over_l == r.mu_over_l && p.c == r.c && p.regime != r.regime {
                flips.push((r.mu_over_l, r.c, p.beta, r.beta));
            }
        }
        prev = Some(r);
    }
    flips
}
