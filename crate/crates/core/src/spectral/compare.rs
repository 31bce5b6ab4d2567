//! Empirical-versus-model comparison.

use alloc::string::String;
use alloc::vec::Vec;

use crate::measures::{distance, SpectralModel};
use crate::spectral::periodogram::{atom_scan, AtomCandidate, EmpiricalSpectrum};
use crate::{Error, Result};

/// Comparison limits. `None` means the quantity is reported but not
/// checked; the numerical knobs below it fall back to the listed defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tolerances {
    /// Mean relative density error over the compared grid.
    pub density_mean_rel: Option<f64>,
    /// Largest relative density error.
    pub density_max_rel: Option<f64>,
    /// `Σ|est − model| / Σ model` over the compared grid.
    pub density_l1_rel: Option<f64>,
    /// Largest relative atom weight error.
    pub atom_rel: Option<f64>,
    /// Largest tolerated `|z|` of the atom estimate at 0 when the model
    /// has no atom there.
    pub zero_atom_z: Option<f64>,
    /// Largest tolerated number of grid points flagged as unexplained atoms.
    pub max_unexplained: Option<usize>,
    /// Model atoms lighter than this are ignored. Default `1e-3`.
    pub atom_floor: Option<f64>,
    /// Density rows closer than this to a model atom are skipped.
    /// Default [`EmpiricalSpectrum::default_exclusion_radius`].
    pub exclusion_radius: Option<f64>,
    /// Matching distance between atoms and grid points. Default `1e-9`.
    pub atom_tol: Option<f64>,
    /// Atom-scan threshold in standard errors. Default 5.
    pub scan_z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub k: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub model: f64,
    /// `|est − model|/model`, or the absolute error where the model is 0.
    pub rel_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomRow {
    pub k: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub model: f64,
    pub rel_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub density_points: usize,
    pub density_mean_rel: f64,
    pub density_max_rel: f64,
    pub density_l1_rel: f64,
    pub atom_max_rel: f64,
    pub zero_atom_z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub label: String,
    pub exact_model: bool,
    pub realisations: usize,
    pub density: Vec<DensityRow>,
    pub atoms: Vec<AtomRow>,
    pub unexplained: Vec<AtomCandidate>,
    pub metrics: Metrics,
    pub checks: Vec<Check>,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

fn check(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.into(), value, limit, pass: value <= limit }
}

/// Compares an empirical spectrum with a model on the spectrum's grid.
///
/// Density rows cover every grid point that is off the singular set and
/// farther than the exclusion radius from each model atom of weight at
/// least the floor. Atom rows cover every such model atom that sits on a
/// grid point.
pub fn compare(emp: &EmpiricalSpectrum, model: &SpectralModel, tol: &Tolerances) -> Result<ComparisonReport> {
    let grid = emp.grid();
    if grid.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), found: model.dim() });
    }
    let floor = tol.atom_floor.unwrap_or(1e-3);
    let radius = tol.exclusion_radius.unwrap_or_else(|| emp.default_exclusion_radius());
    let atom_tol = tol.atom_tol.unwrap_or(1e-9);
    let scan_z = tol.scan_z.unwrap_or(5.0);
    let reach = grid.half_extent() + radius;
    let heavy: Vec<(Vec<f64>, f64)> = model.atoms_in_box(reach).into_iter().filter(|(_, w)| *w >= floor).collect();
    let near_heavy = |k: &[f64], r: f64| heavy.iter().any(|(p, _)| distance(p, k) < r);

    let mut density = Vec::new();
    for (i, k) in grid.iter().enumerate() {
        if model.is_singular(k, atom_tol) || near_heavy(k, radius) {
            continue;
        }
        let (est, se) = emp.background(i);
        let m = model.density(k);
        let diff = est - m;
        let rel_error = if m > 0.0 { diff.abs() / m } else { diff.abs() };
        density.push(DensityRow { k: k.to_vec(), estimate: est, stderr: se, model: m, rel_error, z: z_score(diff, se) });
    }

    let mut atoms = Vec::new();
    for (p, w) in &heavy {
        let Some((i, d)) = grid.nearest(p) else { break };
        if d > atom_tol {
            continue;
        }
        let (est, se) = emp.atom(i);
        let diff = est - w;
        atoms.push(AtomRow { k: p.clone(), estimate: est, stderr: se, model: *w, rel_error: diff.abs() / w, z: z_score(diff, se) });
    }

    let unexplained: Vec<AtomCandidate> = atom_scan(emp, scan_z).into_iter().filter(|c| !near_heavy(&c.k, radius)).collect();

    let zero = alloc::vec![0.0; grid.dim()];
    let zero_atom_z = match grid.nearest(&zero) {
        Some((i, d)) if d <= atom_tol && !near_heavy(&zero, atom_tol.max(f64::MIN_POSITIVE)) => {
            let (est, se) = emp.atom(i);
            Some(z_score(est, se).abs())
        }
        _ => None,
    };

    let n = density.len();
    let sum_abs: f64 = density.iter().map(|r| (r.estimate - r.model).abs()).sum();
    let sum_model: f64 = density.iter().map(|r| r.model.abs()).sum();
    let metrics = Metrics {
        density_points: n,
        density_mean_rel: if n > 0 { density.iter().map(|r| r.rel_error).sum::<f64>() / n as f64 } else { 0.0 },
        density_max_rel: density.iter().fold(0.0, |m, r| m.max(r.rel_error)),
        density_l1_rel: if sum_model > 0.0 { sum_abs / sum_model } else { sum_abs },
        atom_max_rel: atoms.iter().fold(0.0, |m, r| m.max(r.rel_error)),
        zero_atom_z,
    };

    let mut checks = Vec::new();
    if let Some(l) = tol.density_mean_rel {
        checks.push(check("density_mean_rel", metrics.density_mean_rel, l));
    }
    if let Some(l) = tol.density_max_rel {
        checks.push(check("density_max_rel", metrics.density_max_rel, l));
    }
    if let Some(l) = tol.density_l1_rel {
        checks.push(check("density_l1_rel", metrics.density_l1_rel, l));
    }
    if let Some(l) = tol.atom_rel {
        checks.push(check("atom_rel", metrics.atom_max_rel, l));
    }
    if let (Some(l), Some(z)) = (tol.zero_atom_z, zero_atom_z) {
        checks.push(check("zero_atom_z", z, l));
    }
    if let Some(l) = tol.max_unexplained {
        checks.push(check("unexplained_atoms", unexplained.len() as f64, l as f64));
    }

    Ok(ComparisonReport {
        label: model.label().into(),
        exact_model: model.is_exact(),
        realisations: emp.realisations(),
        density,
        atoms,
        unexplained,
        metrics,
        checks,
    })
}
