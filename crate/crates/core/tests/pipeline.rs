//! Simulate, estimate and compare through the public API only.

use diffract_core::charfun::InterArrivalLaw;
use diffract_core::clusters::{compound_model, sample_compound, CentreRegime, ClusterLaw, WeightLaw};
use diffract_core::processes::{analytic_centre_model, sample_centre, CentreProcess};
use diffract_core::renewal::{analytic_renewal_model, simulate_renewal};
use diffract_core::rng::{stream, Purpose};
use diffract_core::spectral::{compare, BandConfig, EmpiricalSpectrum, KGrid, Tolerances};
use diffract_core::AveragingWindow;
use rand::Rng;

#[test]
fn gamma_renewal_spectrum_matches_model() {
    let law = InterArrivalLaw::gamma(2.0).unwrap();
    let model = analytic_renewal_model(&law);
    let window = AveragingWindow::interval(2000.0).unwrap();
    let mut spec = EmpiricalSpectrum::new(KGrid::line(0.2, 2.0, 0.1).unwrap(), window, BandConfig::default()).unwrap();
    for r in 0..60 {
        spec.add(&simulate_renewal(&law, 2000.0, &mut stream(9, r, Purpose::Renewal)).unwrap()).unwrap();
    }
    let tol = Tolerances { density_mean_rel: Some(0.08), ..Tolerances::default() };
    let report = compare(&spec, &model, &tol).unwrap();
    assert_eq!(report.metrics.density_points, 19);
    assert!(report.pass(), "{:?}", report.checks);
}

#[test]
fn lattice_gas_atoms_sit_on_integers() {
    let window = AveragingWindow::interval(1000.0).unwrap();
    let centres = CentreProcess::lattice(1.0, 1).unwrap();
    let law = ClusterLaw::random_weight(WeightLaw::Bernoulli(0.4), 1).unwrap();
    let base = analytic_centre_model(&centres, 4.0).unwrap();
    let model = compound_model(&base, 1.0, &law, CentreRegime::DeterministicComb).unwrap();
    let mut spec = EmpiricalSpectrum::new(KGrid::line(0.0, 2.0, 0.05).unwrap(), window.clone(), BandConfig::default()).unwrap();
    for r in 0..40 {
        let c = sample_centre(&centres, &window, &mut stream(4, r, Purpose::Process)).unwrap();
        spec.add(&sample_compound(&c, &law, &mut stream(4, r, Purpose::Cluster)).unwrap()).unwrap();
    }
    let tol = Tolerances { atom_rel: Some(0.05), max_unexplained: Some(0), ..Tolerances::default() };
    let report = compare(&spec, &model, &tol).unwrap();
    let ks: Vec<f64> = report.atoms.iter().map(|a| a.k[0]).collect();
    assert_eq!(ks.len(), 3);
    assert!(ks.iter().all(|k| (k - k.round()).abs() < 1e-9));
    assert!(report.pass(), "{:?}", report.checks);
}

#[test]
fn streams_are_keyed_by_every_component() {
    let draw = |s, r, p| stream(s, r, p).random::<u64>();
    let base = draw(1, 2, Purpose::Process);
    assert_eq!(base, draw(1, 2, Purpose::Process));
    assert_ne!(base, draw(2, 2, Purpose::Process));
    assert_ne!(base, draw(1, 3, Purpose::Process));
    assert_ne!(base, draw(1, 2, Purpose::Cluster));
}
