//! Estimators that turn realisations into empirical autocorrelations and
//! diffraction spectra, the Bartlett spectrum of a model, and the
//! empirical-versus-model comparison.

mod autocorr;
mod compare;
mod periodogram;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use autocorr::{empirical_autocorr, min_separation, pair_difference_measure, palm_first_moment, radial_product_density, AcHistogram};
pub use compare::{compare, AtomRow, Check, ComparisonReport, DensityRow, Metrics, Tolerances};
pub use periodogram::{
    ac_density_estimate, atom_scan, bragg_weight, periodogram, AtomCandidate, BandConfig, EmpiricalSpectrum, KGrid,
};

use crate::measures::{norm, PurePoint, SpectralModel};
use crate::{Error, Result};

fn is_origin(k: &[f64], scale: f64) -> bool {
    norm(k) <= 1e-12 * scale
}

/// The Bartlett spectrum `γ̂ − ρ²δ_0`. The model's atom at 0 must carry at
/// least `ρ²`; it is removed when it carries exactly that.
pub fn bartlett(model: &SpectralModel, rho: f64) -> Result<SpectralModel> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid("rho", "must be nonnegative and finite"));
    }
    let required = rho * rho;
    let slack = 1e-12 * required.max(1.0);
    let label = format!("bartlett({})", model.label());
    let pure_point = match model.pure_point() {
        PurePoint::Finite(atoms) => {
            let w0: f64 = atoms.iter().filter(|(p, _)| is_origin(p, 1.0)).map(|(_, w)| w).sum();
            if w0 < required - slack {
                return Err(Error::InconsistentOrigin { weight: w0, required });
            }
            let mut out: Vec<(Vec<f64>, f64)> = atoms.iter().filter(|(p, _)| !is_origin(p, 1.0)).cloned().collect();
            if w0 - required > slack {
                out.push((alloc::vec![0.0; model.dim()], w0 - required));
            }
            PurePoint::Finite(out)
        }
        PurePoint::Lattice { spacing, weight } => {
            let zero = alloc::vec![0.0; model.dim()];
            let w0 = weight(&zero);
            if w0 < required - slack {
                return Err(Error::InconsistentOrigin { weight: w0, required });
            }
            let weight = weight.clone();
            let spacing = *spacing;
            PurePoint::Lattice {
                spacing,
                weight: Arc::new(move |k: &[f64]| {
                    if is_origin(k, spacing) {
                        let w = weight(k) - required;
                        if w > slack { w } else { 0.0 }
                    } else {
                        weight(k)
                    }
                }),
            }
        }
    };
    Ok(model.clone().with_pure_point(pure_point).with_label(label))
}

/// Adds `weight·δ_0`; inverse of [`bartlett`] for `weight = ρ²`.
pub fn add_origin_atom(model: &SpectralModel, weight: f64) -> Result<SpectralModel> {
    if !(weight >= 0.0) || !weight.is_finite() {
        return Err(Error::invalid("weight", "must be nonnegative and finite"));
    }
    let pure_point = match model.pure_point() {
        PurePoint::Finite(atoms) => {
            let mut out: Vec<(Vec<f64>, f64)> = atoms.iter().filter(|(p, _)| !is_origin(p, 1.0)).cloned().collect();
            let w0 = weight + atoms.iter().filter(|(p, _)| is_origin(p, 1.0)).map(|(_, w)| w).sum::<f64>();
            if w0 > 0.0 {
                out.push((alloc::vec![0.0; model.dim()], w0));
            }
            PurePoint::Finite(out)
        }
        PurePoint::Lattice { spacing, weight: lattice_weight } => {
            let lattice_weight = lattice_weight.clone();
            let spacing = *spacing;
            PurePoint::Lattice {
                spacing,
                weight: Arc::new(move |k: &[f64]| {
                    if is_origin(k, spacing) {
                        lattice_weight(k) + weight
                    } else {
                        lattice_weight(k)
                    }
                }),
            }
        }
    };
    Ok(model.clone().with_pure_point(pure_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::{renewal_ac_density, InterArrivalLaw};
    use crate::measures::{spectral_eval, AveragingWindow, SingularSet};
    use crate::processes::{analytic_centre_model, poisson_model, CentreProcess};
    use crate::renewal::analytic_renewal_model;
    use proptest::prelude::*;

    #[test]
    fn bartlett_of_poisson_is_flat() {
        let b = bartlett(&poisson_model(2.0, 1), 2.0).unwrap();
        let v = spectral_eval(&b, &[0.0], 1e-9).unwrap();
        assert_eq!(v.pp_weight, 0.0);
        assert_eq!(b.density(&[0.3]), 2.0);
    }

    #[test]
    fn bartlett_of_integer_lattice() {
        let m = analytic_centre_model(&CentreProcess::lattice(1.0, 1).unwrap(), 10.0).unwrap();
        let b = bartlett(&m, 1.0).unwrap();
        assert_eq!(spectral_eval(&b, &[0.0], 1e-9).unwrap().pp_weight, 0.0);
        for k in [-2.0, -1.0, 1.0, 3.0] {
            assert_eq!(spectral_eval(&b, &[k], 1e-9).unwrap().pp_weight, 1.0);
        }
        assert_eq!(b.atoms_in_box(2.5).len(), 4);
        let back = add_origin_atom(&b, 1.0).unwrap();
        assert_eq!(back.atoms_in_box(2.5), m.atoms_in_box(2.5));
    }

    #[test]
    fn bartlett_of_gamma_renewal() {
        let law = InterArrivalLaw::gamma(2.0).unwrap();
        let b = bartlett(&analytic_renewal_model(&law), 1.0).unwrap();
        assert!(b.atoms_in_box(100.0).is_empty());
        let k = 1.0;
        assert_eq!(b.density(&[k]), renewal_ac_density(&law, k).unwrap());
    }

    #[test]
    fn bartlett_rejects_light_origin() {
        assert!(matches!(bartlett(&poisson_model(1.0, 1), 1.5), Err(Error::InconsistentOrigin { .. })));
    }

    proptest! {
        #[test]
        fn bartlett_inverts_added_origin(rho in 0.0f64..5.0, level in 0.1f64..3.0) {
            let m = SpectralModel::new(
                1,
                "flat",
                PurePoint::Finite(alloc::vec![(alloc::vec![1.5], 0.25), (alloc::vec![-1.5], 0.25)]),
                Arc::new(move |_: &[f64]| level),
                SingularSet::None,
            );
            let back = bartlett(&add_origin_atom(&m, rho * rho).unwrap(), rho).unwrap();
            let PurePoint::Finite(atoms) = back.pure_point() else { unreachable!() };
            let PurePoint::Finite(orig) = m.pure_point() else { unreachable!() };
            prop_assert_eq!(atoms, orig);
            prop_assert_eq!(back.density(&[0.7]), level);
        }
    }

    #[test]
    fn model_against_itself_has_zero_error() {
        let law = InterArrivalLaw::two_atom(2.0 / 3.0, 4.0 / 3.0, 0.5).unwrap();
        let model = analytic_renewal_model(&law);
        let grid = KGrid::line(0.0, 4.0, 0.05).unwrap();
        let w = AveragingWindow::interval(1e4).unwrap();
        let emp = EmpiricalSpectrum::exact(&model, grid, w, BandConfig::default(), 1e-9).unwrap();
        let tol = Tolerances {
            density_mean_rel: Some(0.0),
            density_max_rel: Some(0.0),
            density_l1_rel: Some(0.0),
            atom_rel: Some(0.0),
            max_unexplained: Some(0),
            ..Tolerances::default()
        };
        let report = compare(&emp, &model, &tol).unwrap();
        assert!(report.pass(), "{:?}", report.checks);
        assert_eq!(report.metrics.density_max_rel, 0.0);
        // Atoms at 0, 1.5, 3 on the grid.
        assert_eq!(report.atoms.len(), 3);
        assert!(report.density.len() > 60);
    }

    #[test]
    fn compare_flags_mismatch() {
        let grid = KGrid::line(0.0, 2.0, 0.1).unwrap();
        let w = AveragingWindow::interval(100.0).unwrap();
        let emp = EmpiricalSpectrum::exact(&poisson_model(1.0, 1), grid, w, BandConfig::default(), 1e-9).unwrap();
        let tol = Tolerances { density_mean_rel: Some(0.05), atom_rel: Some(0.05), ..Tolerances::default() };
        let report = compare(&emp, &poisson_model(1.2, 1), &tol).unwrap();
        assert!(!report.pass());
        assert!((report.metrics.density_mean_rel - 0.2 / 1.2).abs() < 1e-12);
    }
}
