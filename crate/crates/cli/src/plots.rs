//! Self-contained matplotlib scripts for the CSVs of a run directory.
//!
//! Each script names the CSV files it reads explicitly, so it keeps working
//! after the directory is copied elsewhere; run it from inside the directory.

use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotReport {
    /// Script file names written into the directory.
    pub written: Vec<String>,
    /// One notice per plot that was skipped for lack of input.
    pub notices: Vec<String>,
}

const PRELUDE: &str = r#"import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(name):
    with open(name, newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, key):
    return [float(r[key]) for r in rows if r[key] != ""]


def positive(values):
    # Exact zeros and underflowed bounds have no place on a log axis.
    return [v if v > 0.0 else float("nan") for v in values]


def cells():
    if not os.path.exists("cells.json"):
        return {}
    with open("cells.json") as fh:
        return {c["tag"]: c for c in json.load(fh)}
"#;

const GAPS: &str = r#"
fig, ax = plt.subplots(figsize=(7, 4.5))
meta = cells()
for name in FILES:
    tag = name[len("trajectory_"):-len(".csv")]
    rows = read(name)
    k = column(rows, "k")
    gap = column(rows, "gap")
    line, = ax.semilogy(k, positive(gap), label=tag)
    c = meta.get(tag, {})
    # The stated subcritical factor can be <= 1 (even negative); such a
    # "bound" does not decay and is left off the plot.
    if (c.get("rate_factor") or 0.0) > 1.0 and c.get("gap_constant") is not None:
        scale = c["gap_constant"] * c["lip"] * c["r2"]
        bound = [scale / c["rate_factor"] ** j for j in k]
        ax.semilogy(k, positive(bound), "--", color=line.get_color(), alpha=0.6,
                    label=f"{tag} bound ({c['regime']})")
ax.set_xlabel("k")
ax.set_ylabel("f(x_k) - f*")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("gaps.png", dpi=150)
"#;

const ENERGY: &str = r#"
fig, ax = plt.subplots(figsize=(7, 4.5))
meta = cells()
for name in FILES:
    tag = name[len("energy_"):-len(".csv")]
    rows = read(name)
    k = column(rows, "k")
    e = column(rows, "E")
    line, = ax.semilogy(k, positive(e), label=tag)
    c = meta.get(tag, {})
    if c.get("initial_energy") is not None and c.get("min_ratio") is not None:
        q = 1.0 + c["sqrt_mu_s"] * c["min_ratio"]
        ax.semilogy(k, positive([c["initial_energy"] / q ** j for j in k]), "--",
                    color=line.get_color(), alpha=0.6, label=f"{tag} envelope")
ax.set_xlabel("k")
ax.set_ylabel("E(k)")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("energy.png", dpi=150)
"#;

const DEVIATION: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4.5))
for name in FILES:
    tag = name[len("deviation_"):-len(".csv")]
    rows = read(name)
    s = column(rows, "s")
    ax.loglog(s, column(rows, "deviation_hr"), "o-", label=f"{tag} high-resolution")
    ax.loglog(s, column(rows, "deviation_lr"), "s--", label=f"{tag} low-resolution")
ax.set_xlabel("s")
ax.set_ylabel("max_k |x_k - X(k sqrt(s))|")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("deviation.png", dpi=150)
"#;

const PHASE: &str = r#"
rows = [r for r in read(FILES[0]) if r["regime"] != "invalid"]
for ratio in sorted({float(r["mu_over_L"]) for r in rows}):
    sub = [r for r in rows if float(r["mu_over_L"]) == ratio]
    cs = sorted({float(r["c"]) for r in sub})
    betas = sorted({float(r["beta"]) for r in sub})
    grid = [[float("nan")] * len(cs) for _ in betas]
    for r in sub:
        grid[betas.index(float(r["beta"]))][cs.index(float(r["c"]))] = float(r["ratio"]) - 1.0 / 6.0
    fig, ax = plt.subplots(figsize=(6, 4.5))
    extent = [min(cs), max(cs), min(betas), max(betas)] if len(cs) > 1 and len(betas) > 1 else None
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="coolwarm", extent=extent)
    fig.colorbar(im, ax=ax, label="A/B - 1/6")
    curve = sorted({(float(r["c"]), float(r["beta_c"])) for r in sub if r["beta_c"] != ""})
    if curve and extent is not None:
        ax.plot([c for c, _ in curve], [b for _, b in curve], "k-", lw=1.5, label="beta_c")
        ax.legend()
    ax.set_xlabel("c  (s = 1/(cL))")
    ax.set_ylabel("beta")
    ax.set_title(f"mu/L = {ratio}")
    fig.tight_layout()
    fig.savefig(f"phase_mu{ratio}.png", dpi=150)
"#;

struct PlotKind {
    script: &'static str,
    prefix: &'static str,
    body: &'static str,
}

const KINDS: [PlotKind; 4] = [
    PlotKind {
        script: "plot_gaps.py",
        prefix: "trajectory_",
        body: GAPS,
    },
    PlotKind {
        script: "plot_energy.py",
        prefix: "energy_",
        body: ENERGY,
    },
    PlotKind {
        script: "plot_deviation.py",
        prefix: "deviation_",
        body: DEVIATION,
    },
    PlotKind {
        script: "plot_phase.py",
        prefix: "phase_sweep",
        body: PHASE,
    },
];

/// Writes one script per plot kind whose input CSVs exist in `dir`.
pub fn emit_plots(dir: &Path) -> io::Result<PlotReport> {
    let mut csvs: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();

    let mut report = PlotReport {
        written: Vec::new(),
        notices: Vec::new(),
    };
    for kind in &KINDS {
        let inputs: Vec<&String> = csvs.iter().filter(|n| n.starts_with(kind.prefix)).collect();
        if inputs.is_empty() {
            report.notices.push(format!("skipping {}: no {}*.csv in {}", kind.script, kind.prefix, dir.display()));
            continue;
        }
        let list = inputs.iter().map(|n| format!("    {n:?},\n")).collect::<String>();
        let text = format!("{PRELUDE}\nFILES = [\n{list}]\n{}", kind.body);
        fs::write(dir.join(kind.script), text)?;
        report.written.push(kind.script.to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_yields_only_notices() {
        let dir = tempfile::tempdir().unwrap();
        let rep = emit_plots(dir.path()).unwrap();
        assert!(rep.written.is_empty());
        assert_eq!(rep.notices.len(), 4);
    }

    #[test]
    fn scripts_reference_the_present_csvs() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["trajectory_b0_s0.025.csv", "phase_sweep.csv", "notes.txt"] {
            fs::write(dir.path().join(name), "x\n").unwrap();
        }
        let rep = emit_plots(dir.path()).unwrap();
        assert_eq!(rep.written, vec!["plot_gaps.py", "plot_phase.py"]);
        let gaps = fs::read_to_string(dir.path().join("plot_gaps.py")).unwrap();
        assert!(gaps.contains("\"trajectory_b0_s0.025.csv\""));
        let phase = fs::read_to_string(dir.path().join("plot_phase.py")).unwrap();
        assert!(phase.contains("beta_c"));
    }
}
