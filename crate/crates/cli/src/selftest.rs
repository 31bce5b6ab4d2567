//! Deterministic identity suites behind `diffract selftest`.

use std::f64::consts::PI;

use rand::Rng;

use diffract_core::branching::analytic_cbbm_model;
use diffract_core::charfun::{gaussian_psf_check, riesz_fourier, InterArrivalLaw, Rational};
use diffract_core::clusters::{compound_model, CentreRegime, ClusterLaw};
use diffract_core::processes::{analytic_centre_model, poisson_model, sample_centre, CentreProcess, FibonacciGas, Profile};
use diffract_core::renewal::analytic_renewal_model;
use diffract_core::rng::{stream, Purpose};
use diffract_core::spectral::{add_origin_atom, bartlett, empirical_autocorr, pair_difference_measure, periodogram, KGrid};
use diffract_core::{AveragingWindow, Complex64, FiniteCluster, SpectralModel, WeightedPointSet};

/// Every identity in the suites must hold to this absolute or relative
/// accuracy.
pub const TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Psf,
    Riesz,
    Identities,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCheck {
    pub name: String,
    pub error: f64,
    pub limit: f64,
}

impl SelfCheck {
    fn new(name: impl Into<String>, error: f64, limit: f64) -> Self {
        Self { name: name.into(), error, limit }
    }

    pub fn pass(&self) -> bool {
        self.error <= self.limit
    }
}

pub fn run_suite(suite: Suite) -> Vec<SelfCheck> {
    match suite {
        Suite::Psf => psf(),
        Suite::Riesz => riesz(),
        Suite::Identities => identities(),
    }
}

fn psf() -> Vec<SelfCheck> {
    // e^{−π r²} < 1e-12 from r ≈ 2.95 on; both sums are truncated well beyond.
    [(1, 1.0), (1, 2.0), (1, 0.5), (2, 1.0), (2, 2.0), (2, 0.75), (3, 1.0), (3, 1.5)]
        .into_iter()
        .map(|(d, b)| SelfCheck::new(format!("psf d={d} b={b}"), gaussian_psf_check(d, b, 8.0), 1e-12))
        .collect()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn riesz() -> Vec<SelfCheck> {
    let mut out = Vec::new();
    for i in 0..20u64 {
        let mut rng = stream(0x5e1f, i, Purpose::Marks);
        let d = rng.random_range(1..=3usize);
        let alpha = d as f64 * rng.random_range(0.05..0.95);
        let k: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c: f64 = rng.random_range(0.25..4.0);
        let ck: Vec<f64> = k.iter().map(|v| c * v).collect();
        let name = format!("riesz homogeneity d={d} alpha={alpha:.4} c={c:.4}");
        let error = match (riesz_fourier(d, alpha, &k), riesz_fourier(d, alpha, &ck)) {
            (Ok(a), Ok(b)) => relative(b, c.powf(-alpha) * a),
            _ => f64::INFINITY,
        };
        out.push(SelfCheck::new(name, error, TOLERANCE));
    }
    let self_dual = riesz_fourier(1, 0.5, &[1.0]).map_or(f64::INFINITY, |v| (v - 1.0).abs());
    out.push(SelfCheck::new("riesz self-dual d=1 alpha=1/2", self_dual, TOLERANCE));
    // |x|^{-1} in R³ pairs with |k|^{-2}/π.
    let coulomb = riesz_fourier(3, 2.0, &[0.0, 0.5, 0.0]).map_or(f64::INFINITY, |v| relative(v, 4.0 / PI));
    out.push(SelfCheck::new("riesz d=3 alpha=2 constant", coulomb, TOLERANCE));
    out
}

fn model_difference(a: &SpectralModel, b: &SpectralModel, ks: &[Vec<f64>], reach: f64) -> f64 {
    let atoms_a = a.atoms_in_box(reach);
    let atoms_b = b.atoms_in_box(reach);
    if atoms_a.len() != atoms_b.len() {
        return f64::INFINITY;
    }
    let mut err: f64 = 0.0;
    for ((ka, wa), (kb, wb)) in atoms_a.iter().zip(&atoms_b) {
        let dk = ka.iter().zip(kb).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()));
        err = err.max(dk).max(relative(*wa, *wb));
    }
    for k in ks {
        if a.is_singular(k, 1e-9) {
            continue;
        }
        err = err.max(relative(a.density(k), b.density(k)));
    }
    err
}

fn probe_points(dim: usize) -> Vec<Vec<f64>> {
    [0.13, 0.61, 1.37, 2.9]
        .iter()
        .map(|&t| (0..dim).map(|a| t * (1.0 + 0.37 * a as f64)).collect())
        .collect()
}

fn integer_segment() -> WeightedPointSet {
    let w = AveragingWindow::cube(1, 50.0).and_then(|w| w.with_center(&[49.5])).expect("valid window");
    sample_centre(&CentreProcess::lattice(1.0, 1).expect("valid lattice"), &w, &mut stream(0, 0, Purpose::Process))
        .expect("lattice sample")
}

fn identities() -> Vec<SelfCheck> {
    let mut out = Vec::new();
    let rational = |n, d| Rational::new(n, d).expect("valid rational");
    let matern = CentreProcess::Matern { rho: 1.0, radius: 0.5, dim: 2 };
    let mut models: Vec<(&str, SpectralModel, f64, CentreRegime)> = vec![
        ("poisson d=1", poisson_model(1.3, 1), 1.3, CentreRegime::RandomProcess),
        ("poisson d=2", poisson_model(0.7, 2), 0.7, CentreRegime::RandomProcess),
        ("lattice d=1", analytic_centre_model(&CentreProcess::Lattice { spacing: 1.0, dim: 1 }, 4.0).expect("model"), 1.0, CentreRegime::DeterministicComb),
        ("lattice d=2", analytic_centre_model(&CentreProcess::Lattice { spacing: 0.5, dim: 2 }, 4.0).expect("model"), 4.0, CentreRegime::DeterministicComb),
        ("matern d=2", analytic_centre_model(&matern, 4.0).expect("model"), matern.intensity(), CentreRegime::RandomProcess),
        ("renewal gamma 2", analytic_renewal_model(&InterArrivalLaw::Gamma { alpha: 2.0 }), 1.0, CentreRegime::RandomProcess),
        (
            "renewal two-atom 2/3,4/3",
            analytic_renewal_model(&InterArrivalLaw::two_atom_rational(rational(2, 3), rational(4, 3), rational(1, 2)).expect("law")),
            1.0,
            CentreRegime::RandomProcess,
        ),
        ("branching d=3", analytic_cbbm_model(1.0, 2.0, 3, 2.0).expect("model"), 1.0, CentreRegime::RandomProcess),
    ];
    let gas = CentreProcess::FibonacciGas(FibonacciGas::fibonacci(Profile::Tent).expect("valid gas"));
    models.push(("fibonacci gas", analytic_centre_model(&gas, 4.0).expect("model"), gas.intensity(), CentreRegime::DeterministicComb));

    for (name, model, rho, regime) in &models {
        let dim = model.dim();
        let law = ClusterLaw::deterministic(FiniteCluster::point(dim, Complex64::new(1.0, 0.0)));
        let err = match compound_model(model, *rho, &law, *regime) {
            Ok(m) => model_difference(&m, model, &probe_points(dim), 3.2),
            Err(_) => f64::INFINITY,
        };
        out.push(SelfCheck::new(format!("compound delta_0 identity: {name}"), err, TOLERANCE));
    }

    for (name, model, rho, _) in models.iter().filter(|(n, ..)| n.starts_with("poisson") || n.starts_with("lattice")) {
        let dim = model.dim();
        let err = match bartlett(model, *rho).and_then(|b| add_origin_atom(&b, rho * rho)) {
            Ok(m) => model_difference(&m, model, &probe_points(dim), 3.2),
            Err(_) => f64::INFINITY,
        };
        out.push(SelfCheck::new(format!("bartlett round trip: {name}"), err, TOLERANCE));
    }

    for trial in 0..8u64 {
        let mut rng = stream(0x1d, trial, Purpose::Marks);
        let dim = 1 + (trial as usize % 2);
        let n = rng.random_range(1..=20usize);
        let w = AveragingWindow::cube(dim, 5.0).expect("valid window");
        let mut ps = WeightedPointSet::new(w);
        let mut x = vec![0.0; dim];
        for _ in 0..n {
            x.iter_mut().for_each(|v| *v = rng.random_range(-4.9..4.9));
            ps.push(&x, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).expect("inside");
        }
        let ks: Vec<Vec<f64>> = (0..6).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let grid = KGrid::from_points(dim, &ks).expect("grid");
        let pairs = pair_difference_measure(&ps);
        let err = match periodogram(&ps, &grid) {
            Ok(values) => ks
                .iter()
                .zip(values)
                .map(|(k, v)| {
                    let ft: Complex64 = pairs
                        .iter()
                        .map(|(z, m)| {
                            let t = -2.0 * PI * k.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
                            m * Complex64::new(t.cos(), t.sin())
                        })
                        .sum::<Complex64>();
                    (ft.re - v).abs().max(ft.im.abs()) / (1.0 + v.abs())
                })
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        out.push(SelfCheck::new(format!("periodogram = FT of pair measure, n={n} d={dim}"), err, TOLERANCE));
    }

    let comb = integer_segment();
    let err = match empirical_autocorr(&comb, 0.1, 100.0) {
        Ok(h) => {
            let mut e = (h.atom_at_zero() - 1.0).abs();
            for (z, _, _) in h.rows() {
                let m = h.mass(h.index_of(&z).expect("bin"));
                let n = z[0].round();
                let expected = if (z[0] - n).abs() < 1e-9 && n.abs() < 100.0 && n != 0.0 { (100.0 - n.abs()) / 100.0 } else { 0.0 };
                e = e.max((m.re - expected).abs()).max(m.im.abs());
            }
            e
        }
        Err(_) => f64::INFINITY,
    };
    out.push(SelfCheck::new("integer comb edge bias", err, TOLERANCE));
    out
}
