//! Output files of a run: `report.json`, `spectrum.csv`, `autocorr.csv`
//! and optional point dumps.
//!
//! The JSON report holds only quantities fixed by the configuration, the
//! seed and the realisation count. Thread counts and timings are left out
//! so that reruns produce identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use diffract_core::spectral::{AtomCandidate, Check};

use crate::pointset::write_pointset;
use crate::runner::{RunOptions, RunOutcome};
use crate::scenario::Scenario;

pub const VERSION: &str = env!("DIFFRACT_VERSION");

fn checks_json(checks: &[Check]) -> Value {
    checks.iter().map(|c| json!({"name": c.name, "value": c.value, "limit": c.limit, "pass": c.pass})).collect()
}

fn candidate_json(c: &AtomCandidate) -> Value {
    json!({"k": c.k, "weight": c.weight, "stderr": c.stderr, "z": c.z})
}

pub fn report_json(s: &Scenario, opts: &RunOptions, out: &RunOutcome) -> Value {
    let cmp = &out.comparison;
    let m = &cmp.metrics;
    let atoms: Vec<Value> = cmp
        .atoms
        .iter()
        .map(|a| json!({"k": a.k, "estimate": a.estimate, "stderr": a.stderr, "model": a.model, "rel_error": a.rel_error, "z": a.z}))
        .collect();
    let extras: serde_json::Map<String, Value> = out
        .extras
        .iter()
        .map(|e| (e.name.clone(), json!({"value": e.value, "stderr": e.stderr, "expected": e.expected})))
        .collect();
    let mut report = json!({
        "scenario": s.config,
        "seed": opts.seed,
        "realisations": opts.realisations,
        "version": VERSION,
        "model": {"label": cmp.label, "exact": cmp.exact_model},
        "metrics": {
            "density_points": m.density_points,
            "density_mean_rel": m.density_mean_rel,
            "density_max_rel": m.density_max_rel,
            "density_l1_rel": m.density_l1_rel,
            "atom_max_rel": m.atom_max_rel,
            "zero_atom_z": m.zero_atom_z,
        },
        "atoms": atoms,
        "unexplained_atoms": cmp.unexplained.iter().map(candidate_json).collect::<Vec<_>>(),
        "extras": extras,
        "checks": checks_json(&out.checks),
        "pass": out.pass(),
    });
    if let Some(p) = &out.pair {
        report["pair"] = json!({
            "statistic": p.statistic,
            "edges": p.edges,
            "estimate": p.estimate,
            "stderr": p.stderr,
            "model": p.model,
        });
    }
    if let Some(h) = &out.autocorr {
        report["autocorr_atom_at_zero"] = json!({"value": h.atom_at_zero(), "stderr": h.atom_stderr()});
    }
    report
}

fn coordinate_header(prefix: &str, dim: usize) -> String {
    if dim == 1 {
        prefix.to_string()
    } else {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
    }
}

fn join(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

/// `k,mean,stderr`; `mean` is the band-smoothed density estimate. In more
/// than one dimension `k` becomes `k1,…,kd`.
pub fn spectrum_csv(out: &RunOutcome) -> String {
    let grid = out.spectrum.grid();
    let mut text = format!("{},mean,stderr\n", coordinate_header("k", grid.dim()));
    for (i, k) in grid.iter().enumerate() {
        let (m, se) = out.spectrum.background(i);
        writeln!(text, "{},{m:?},{se:?}", join(k)).unwrap();
    }
    text
}

/// `z,re,im,stderr` per autocorrelation bin; header only when no
/// histogram was configured.
pub fn autocorr_csv(out: &RunOutcome, dim: usize) -> String {
    let mut text = format!("{},re,im,stderr\n", coordinate_header("z", dim));
    if let Some(h) = &out.autocorr {
        for (z, v, se) in h.rows() {
            writeln!(text, "{},{:?},{:?},{se:?}", join(&z), v.re, v.im).unwrap();
        }
    }
    text
}

pub fn write_outputs(dir: &Path, s: &Scenario, opts: &RunOptions, out: &RunOutcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&report_json(s, opts, out)).expect("report serialises");
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    std::fs::write(dir.join("spectrum.csv"), spectrum_csv(out))?;
    std::fs::write(dir.join("autocorr.csv"), autocorr_csv(out, s.dim()))?;
    for (r, ps) in &out.dumps {
        std::fs::write(dir.join(format!("points_{r}.txt")), write_pointset(ps))?;
    }
    Ok(())
}
