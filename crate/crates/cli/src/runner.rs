//! Executes an [`ExperimentConfig`]: one discrete run per `(β, s)` cell, the
//! requested checks on each, CSV artifacts, `summary.txt` and `cells.json`.
//!
//! Every inequality is evaluated even outside its hypothesis; there it is
//! marked advisory and cannot fail the run. The exit status is nonzero iff a
//! binding check fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use betamomentum::continuous::{continuous_rate_check, deviation_ladder, solve_hr};
use betamomentum::energy::{check_continuous_decay, check_continuous_envelope, check_discrete_decrement};
use betamomentum::methods::run;
use betamomentum::phase::{beta_critical_closed, gap_constant, rate_bound, step_window};
use betamomentum::{Error, MethodConfig, Objective, Trajectory, Vector};
use serde::Serialize;

use crate::config::{BetaName, BetaSpec, CheckKind, ExperimentConfig};
use crate::sweep::{phase_rows, regime_flips, write_phase_csv, PhaseRow};

/// Slack on the geometric energy envelope, relative to `E(0)`.
const ENVELOPE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    AdvisoryPass,
    AdvisoryFail,
}

impl Status {
    fn of(binding: bool, passed: bool) -> Self {
        match (binding, passed) {
            (true, true) => Status::Pass,
            (true, false) => Status::Fail,
            (false, true) => Status::AdvisoryPass,
            (false, false) => Status::AdvisoryFail,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::AdvisoryPass => "ADVISORY-PASS",
            Status::AdvisoryFail => "ADVISORY-FAIL",
        }
    }

    pub fn is_binding(self) -> bool {
        matches!(self, Status::Pass | Status::Fail)
    }
}

/// One line of the summary: a single inequality on a single cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub cell: String,
    pub check: &'static str,
    pub inequality: &'static str,
    pub status: Status,
    /// Largest `lhs - rhs` (or the analogous excess) seen; `None` when the
    /// check could not be evaluated.
    pub worst_margin: Option<f64>,
    pub detail: String,
}

/// What the `run` command learned about one `(β, s)` cell; serialised to
/// `cells.json` so that plot scripts can draw bound overlays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub tag: String,
    pub beta_spec: String,
    pub beta: Option<f64>,
    pub step: f64,
    pub c: f64,
    pub mu: f64,
    pub lip: f64,
    /// `OK`, `diverged`, `invalid` or `unresolved`.
    pub state: String,
    pub message: Option<String>,
    pub in_window: bool,
    pub step_le_inv_l: bool,
    pub step_le_inv_4l: bool,
    pub sqrt_mu_s: f64,
    pub r2: f64,
    pub regime: Option<&'static str>,
    pub rate_factor: Option<f64>,
    pub gap_constant: Option<f64>,
    pub initial_energy: Option<f64>,
    pub min_ratio: Option<f64>,
    pub files: BTreeMap<&'static str, String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub cells: Vec<CellRecord>,
    pub outcomes: Vec<Outcome>,
    /// File names (relative to the output directory) written by the run.
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn binding_failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.status == Status::Fail).count()
    }

    pub fn exit_code(&self) -> u8 {
        u8::from(self.binding_failures() > 0)
    }

    pub fn render(&self) -> String {
        let mut text = String::new();
        let advisory = self.outcomes.iter().filter(|o| !o.status.is_binding()).count();
        let _ = writeln!(
            text,
            "cells: {}  checks: {}  binding failures: {}  advisory: {}",
            self.cells.len(),
            self.outcomes.len(),
            self.binding_failures(),
            advisory
        );
        for o in &self.outcomes {
            let margin = o.worst_margin.map(|m| format!("{m:e}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                text,
                "{:<13} {} {}/{} worst_margin={} {}",
                o.status.label(),
                o.cell,
                o.check,
                o.inequality,
                margin,
                o.detail
            );
        }
        let _ = writeln!(text, "result: {}", if self.exit_code() == 0 { "PASS" } else { "FAIL" });
        text
    }
}

fn tag(beta: &BetaSpec, s: f64) -> String {
    format!("b{beta}_s{s}")
}

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Runs every requested check and writes all artifacts into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, obj: &dyn Objective, out_dir: &Path) -> io::Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let mut summary = RunSummary::default();
    let x0 = cfg.x0();
    let (mu, lip) = (obj.mu(), obj.lip());
    let r2 = (&x0 - obj.minimizer()).norm_squared();
    let steps = cfg.step_sizes(lip);
    let mut ladder_betas: Vec<f64> = Vec::new();

    for &s in &steps {
        for spec in &cfg.betas {
            let cell = run_cell(cfg, obj, &x0, r2, spec, s, out_dir, &mut summary)?;
            if let (Some(b), "OK") = (cell.beta, cell.state.as_str()) {
                if !ladder_betas.contains(&b) {
                    ladder_betas.push(b);
                }
            }
            summary.cells.push(cell);
        }
    }

    if cfg.wants(CheckKind::DeviationLadder) {
        for &beta in &ladder_betas {
            deviation_check(cfg, obj, &x0, beta, out_dir, &mut summary)?;
        }
    }

    if cfg.wants(CheckKind::PhaseSweep) {
        let (ml, cs, bs) = match &cfg.phase {
            Some(g) => (g.mu_over_l.clone(), g.c.clone(), g.beta.clone()),
            None => {
                let mut bs = ladder_betas.clone();
                bs.sort_by(f64::total_cmp);
                (vec![mu / lip], steps.iter().map(|s| 1.0 / (s * lip)).collect(), bs)
            }
        };
        phase_check(&ml, &cs, &bs, out_dir, &mut summary)?;
    }

    let mut w = create(out_dir, "cells.json")?;
    serde_json::to_writer_pretty(&mut w, &summary.cells)?;
    writeln!(w)?;
    w.flush()?;
    summary.files.push("cells.json".into());
    fs::write(out_dir.join("summary.txt"), summary.render())?;
    summary.files.push("summary.txt".into());
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    obj: &dyn Objective,
    x0: &Vector,
    r2: f64,
    spec: &BetaSpec,
    s: f64,
    out_dir: &Path,
    summary: &mut RunSummary,
) -> io::Result<CellRecord> {
    let (mu, lip) = (obj.mu(), obj.lip());
    let name = tag(spec, s);
    let in_window = step_window(mu, lip).map(|w| w.contains(s)).unwrap_or(false);
    let (le_l, le_4l) = (s <= 1.0 / lip, s <= 1.0 / (4.0 * lip));
    let mut cell = CellRecord {
        tag: name.clone(),
        beta_spec: spec.to_string(),
        beta: None,
        step: s,
        c: 1.0 / (s * lip),
        mu,
        lip,
        state: "OK".into(),
        message: None,
        in_window,
        step_le_inv_l: le_l,
        step_le_inv_4l: le_4l,
        sqrt_mu_s: (mu * s).sqrt(),
        r2,
        regime: None,
        rate_factor: None,
        gap_constant: None,
        initial_energy: None,
        min_ratio: None,
        files: BTreeMap::new(),
    };
    let beta = match *spec {
        BetaSpec::Value(b) => b,
        BetaSpec::Named(BetaName::Critical) => match beta_critical_closed(s, mu, lip) {
            Ok(roots) if roots.beta_c.is_some() => roots.beta_c.unwrap(),
            other => {
                let msg = match other {
                    Ok(_) => "no critical beta in [0, 1] at this step".to_string(),
                    Err(e) => e.to_string(),
                };
                cell.state = "unresolved".into();
                cell.message = Some(msg.clone());
                push(summary, &name, "cell", "critical_beta", in_window, false, None, msg);
                return Ok(cell);
            }
        },
    };
    cell.beta = Some(beta);

    let method = match MethodConfig::new(beta, s, cfg.max_iter) {
        Ok(m) => m,
        Err(e) => {
            cell.state = "invalid".into();
            cell.message = Some(e.to_string());
            push(summary, &name, "cell", "parameter_domain", true, false, None, e.to_string());
            return Ok(cell);
        }
    };

    // Outside s ≤ 1/(4L) nothing promises convergence, so a blow-up there is advisory.
    let traj = match run(&method, obj, x0) {
        Ok(t) => t,
        Err(e) => {
            cell.state = if matches!(e, Error::Divergence { .. }) { "diverged" } else { "invalid" }.into();
            cell.message = Some(e.to_string());
            push(summary, &name, "cell", "run", le_4l, false, None, e.to_string());
            return Ok(cell);
        }
    };
    let file = format!("trajectory_{name}.csv");
    traj.write_csv(create(out_dir, &file)?)?;
    cell.files.insert("trajectory", file.clone());
    summary.files.push(file);

    if let Ok(rb) = rate_bound(beta, s, mu, lip, 0, r2) {
        cell.regime = Some(rb.regime.name());
        cell.rate_factor = Some(rb.rate_factor);
        cell.gap_constant = gap_constant(beta, s, mu, lip).ok();
    }

    if cfg.wants(CheckKind::EnergyDecrement) {
        energy_checks(obj, &traj, beta, s, out_dir, &mut cell, summary)?;
    }
    if cfg.wants(CheckKind::ContinuousBound) {
        continuous_checks(cfg, obj, x0, beta, s, out_dir, &mut cell, summary)?;
    }
    Ok(cell)
}

#[allow(clippy::too_many_arguments)]
fn push(summary: &mut RunSummary, cell: &str, check: &'static str, inequality: &'static str, binding: bool, passed: bool, margin: Option<f64>, detail: String) {
    summary.outcomes.push(Outcome {
        cell: cell.to_string(),
        check,
        inequality,
        status: Status::of(binding, passed),
        worst_margin: margin,
        detail,
    });
}

fn energy_checks(
    obj: &dyn Objective,
    traj: &Trajectory,
    beta: f64,
    s: f64,
    out_dir: &Path,
    cell: &mut CellRecord,
    summary: &mut RunSummary,
) -> io::Result<()> {
    const CHECK: &str = "energy_decrement";
    let rep = match check_discrete_decrement(traj, beta, s, obj) {
        Ok(r) => r,
        Err(e) => {
            push(summary, &cell.tag, CHECK, "recursive", cell.step_le_inv_4l, false, None, e.to_string());
            return Ok(());
        }
    };
    let file = format!("energy_{}.csv", cell.tag);
    rep.recursive.write_csv(create(out_dir, &file)?)?;
    cell.files.insert("energy", file.clone());
    summary.files.push(file);
    cell.initial_energy = Some(rep.initial_energy);
    cell.min_ratio = Some(rep.min_ratio);

    for (name, series) in [
        ("recursive", &rep.recursive),
        ("inner_product", &rep.inner_product),
        ("expanded", &rep.expanded),
    ] {
        let detail = format!("{} violations over {} steps", series.violations.len(), series.len());
        push(
            summary,
            &cell.tag,
            CHECK,
            name,
            series.binding,
            series.violations.is_empty(),
            Some(series.worst_margin),
            detail,
        );
    }
    let excess = rep.envelope_ratio - 1.0;
    push(
        summary,
        &cell.tag,
        CHECK,
        "geometric_envelope",
        rep.recursive.binding,
        excess <= ENVELOPE_SLACK,
        Some(excess),
        format!("max E(k)(1+sqrt(mu s) min(1/6, A/B))^k / E(0) = {}", rep.envelope_ratio),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn continuous_checks(
    cfg: &ExperimentConfig,
    obj: &dyn Objective,
    x0: &Vector,
    beta: f64,
    s: f64,
    out_dir: &Path,
    cell: &mut CellRecord,
    summary: &mut RunSummary,
) -> io::Result<()> {
    const CHECK: &str = "continuous_bound";
    let binding = cell.step_le_inv_l;
    let sol = match solve_hr(beta, s, obj, x0, cfg.ode.t_end) {
        Ok(sol) => sol,
        Err(e) => {
            push(summary, &cell.tag, CHECK, "integration", binding, false, None, e.to_string());
            return Ok(());
        }
    };
    let file = format!("ode_{}.csv", cell.tag);
    sol.write_csv(obj, create(out_dir, &file)?)?;
    cell.files.insert("ode", file.clone());
    summary.files.push(file);

    match continuous_rate_check(&sol, obj, beta, s) {
        Ok(rep) => push(
            summary,
            &cell.tag,
            CHECK,
            "gap_bound",
            binding && rep.binding,
            rep.passed,
            Some(rep.max_ratio - 1.0),
            format!("max ratio {} at t = {}", rep.max_ratio, rep.worst_time),
        ),
        Err(e) => push(summary, &cell.tag, CHECK, "gap_bound", binding, false, None, e.to_string()),
    }
    match check_continuous_decay(&sol, beta, s, obj) {
        Ok(series) => push(
            summary,
            &cell.tag,
            CHECK,
            "energy_decay",
            binding && series.binding,
            series.violations.is_empty(),
            Some(series.worst_margin),
            format!("{} violations over {} nodes", series.violations.len(), series.len()),
        ),
        Err(e) => push(summary, &cell.tag, CHECK, "energy_decay", binding, false, None, e.to_string()),
    }
    match check_continuous_envelope(&sol, beta, s, obj) {
        Ok(rep) => push(
            summary,
            &cell.tag,
            CHECK,
            "energy_envelope",
            binding,
            rep.passed,
            Some(rep.max_ratio - 1.0),
            format!("max ratio {} at t = {}; {} negative decrements", rep.max_ratio, rep.worst_time, rep.negative_delta_count),
        ),
        Err(e) => push(summary, &cell.tag, CHECK, "energy_envelope", binding, false, None, e.to_string()),
    }
    Ok(())
}

fn deviation_check(
    cfg: &ExperimentConfig,
    obj: &dyn Objective,
    x0: &Vector,
    beta: f64,
    out_dir: &Path,
    summary: &mut RunSummary,
) -> io::Result<()> {
    const CHECK: &str = "deviation_ladder";
    let cell = format!("b{beta}");
    let lip = obj.lip();
    let binding = cfg.deviation.steps.len() >= 2 && cfg.deviation.steps.iter().all(|&s| s <= 1.0 / lip);
    let ladder = match deviation_ladder(obj, x0, beta, &cfg.deviation.steps, cfg.deviation.horizon) {
        Ok(l) => l,
        Err(e) => {
            push(summary, &cell, CHECK, "hr_decreasing", binding, false, None, e.to_string());
            return Ok(());
        }
    };
    let file = format!("deviation_b{beta}.csv");
    ladder.write_csv(create(out_dir, &file)?)?;
    summary.files.push(file);
    let (hr_ok, lr_ok) = ladder.strictly_decreasing();
    // Largest increase between consecutive rungs; negative when strictly decreasing.
    let worst = |col: fn(&(f64, f64, f64)) -> f64| {
        ladder.rows.windows(2).map(|w| col(&w[1]) - col(&w[0])).fold(f64::NEG_INFINITY, f64::max)
    };
    let fmt = |col: fn(&(f64, f64, f64)) -> f64| {
        ladder.rows.iter().map(|r| col(r).to_string()).collect::<Vec<_>>().join(" -> ")
    };
    push(summary, &cell, CHECK, "hr_decreasing", binding, hr_ok, Some(worst(|r| r.1)), fmt(|r| r.1));
    push(summary, &cell, CHECK, "lr_decreasing", binding, lr_ok, Some(worst(|r| r.2)), fmt(|r| r.2));
    Ok(())
}

fn phase_check(ml: &[f64], cs: &[f64], bs: &[f64], out_dir: &Path, summary: &mut RunSummary) -> io::Result<()> {
    const CHECK: &str = "phase_sweep";
    let rows = phase_rows(ml, cs, bs);
    write_phase_csv(&rows, create(out_dir, "phase_sweep.csv")?)?;
    summary.files.push("phase_sweep.csv".into());

    let in_window: Vec<&PhaseRow> = rows.iter().filter(|r| r.in_window).collect();
    let disagree = in_window.iter().filter(|r| !r.roots_agree()).count();
    let worst = in_window
        .iter()
        .filter_map(|r| Some((r.beta_c? - r.beta_c_bisect?.root()?).abs()))
        .fold(0.0_f64, f64::max);
    push(
        summary,
        "grid",
        CHECK,
        "closed_form_vs_bisection",
        !in_window.is_empty(),
        disagree == 0,
        Some(worst),
        format!("{disagree} of {} in-window rows disagree; {} rows total", in_window.len(), rows.len()),
    );
    // Sign coherence of h with A/B - 1/6 on every evaluable row.
    let incoherent = rows
        .iter()
        .filter(|r| match (r.h, r.ratio()) {
            (Some(h), Some(q)) => (q - 1.0 / 6.0).abs() > 1e-12 && (h > 0.0) != (q > 1.0 / 6.0),
            _ => false,
        })
        .count();
    push(
        summary,
        "grid",
        CHECK,
        "sign_coherence",
        true,
        incoherent == 0,
        None,
        format!("{incoherent} rows where sign(h) differs from sign(A/B - 1/6); {} regime flips", regime_flips(&rows).len()),
    );
    Ok(())
}

/// Where a run writes its artifacts: `--out` if given, otherwise the
/// config's `output_dir` under the output root.
pub fn resolve_output_dir(cfg: &ExperimentConfig, out: Option<&Path>, root: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => root.unwrap_or_else(|| Path::new(".")).join(&cfg.output_dir),
    }
}
