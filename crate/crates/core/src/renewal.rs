//! Stationary renewal processes on the line and their diffraction.

use alloc::sync::Arc;
use alloc::vec;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::charfun::{g_alpha, lattice_classification, nu_atoms, renewal_ac_density, InterArrivalLaw};
use crate::measures::{AveragingWindow, PurePoint, SingularSet, SpectralModel, WeightedPointSet};
use crate::{Error, Result};

/// One draw from the law.
pub fn sample_gap<R: Rng + ?Sized>(law: &InterArrivalLaw, rng: &mut R) -> f64 {
    match law {
        InterArrivalLaw::Exponential => Exp1.sample(rng),
        InterArrivalLaw::Gamma { alpha } => gamma_draw(*alpha, 1.0 / alpha, rng),
        InterArrivalLaw::Deterministic => 1.0,
        _ => {
            let atoms = law.atoms().unwrap_or_default();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (a, p) in &atoms {
                acc += p;
                if u < acc {
                    return a.position;
                }
            }
            atoms.last().map_or(1.0, |(a, _)| a.position)
        }
    }
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale)
        .expect("shape and scale validated at construction")
        .sample(rng)
}

/// One draw from the equilibrium delay law with density `1 − F(x)`.
///
/// The delay is `U·Y` with `U` uniform on `[0, 1)` and `Y` drawn from the
/// size-biased law `x·dϱ(x)`.
pub fn sample_equilibrium_delay<R: Rng + ?Sized>(law: &InterArrivalLaw, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let size_biased = match law {
        // Size-biased Exp(1) is Gamma(2, 1).
        InterArrivalLaw::Exponential => gamma_draw(2.0, 1.0, rng),
        InterArrivalLaw::Gamma { alpha } => gamma_draw(alpha + 1.0, 1.0 / alpha, rng),
        InterArrivalLaw::Deterministic => 1.0,
        _ => {
            // Atom a_i with probability p_i·a_i (these sum to the mean, 1).
            let atoms = law.atoms().unwrap_or_default();
            let v: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = atoms.last().map_or(1.0, |(a, _)| a.position);
            for (a, p) in &atoms {
                acc += p * a.position;
                if v < acc {
                    chosen = a.position;
                    break;
                }
            }
            chosen
        }
    };
    u * size_biased
}

/// A stationary renewal process restricted to the window `(0, length)`,
/// all weights one.
pub fn simulate_renewal<R: Rng + ?Sized>(
    law: &InterArrivalLaw,
    length: f64,
    rng: &mut R,
) -> Result<WeightedPointSet> {
    let window = AveragingWindow::interval(length)?;
    let mut out = WeightedPointSet::with_capacity(window, (length * 1.1) as usize + 16);
    let one = Complex64::new(1.0, 0.0);
    let mut x = sample_equilibrium_delay(law, rng);
    while x < length {
        if x > 0.0 {
            out.push_unchecked(&[x], one);
        }
        x += sample_gap(law, rng);
    }
    Ok(out)
}

/// Diffraction of the stationary renewal process: `δ_0 + (1 − h)λ` for
/// non-lattice laws and `δ_{Z/b} + (1 − h)λ` when the support lies in `bZ`.
pub fn analytic_renewal_model(law: &InterArrivalLaw) -> SpectralModel {
    let density_law = law.clone();
    let density = Arc::new(move |k: &[f64]| renewal_ac_density(&density_law, k[0]).unwrap_or(0.0));
    match lattice_classification(law) {
        Some(b) => {
            let spacing = 1.0 / b;
            SpectralModel::new(
                1,
                "renewal",
                PurePoint::Lattice {
                    spacing,
                    weight: Arc::new(|_: &[f64]| 1.0),
                },
                density,
                SingularSet::Lattice { spacing },
            )
        }
        None => SpectralModel::new(
            1,
            "renewal",
            PurePoint::Finite(vec![(vec![0.0], 1.0)]),
            density,
            SingularSet::Points(vec![vec![0.0]]),
        ),
    }
}

/// Autocorrelation of the renewal process away from the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RenewalAutocorr {
    /// Density of `ν + ν̃` with respect to Lebesgue measure.
    Density(f64),
    /// Mass of the atom of `ν + ν̃` at the queried point (0 if none).
    Atom(f64),
}

/// `ν + ν̃` at `x ≠ 0`.
pub fn analytic_renewal_ac_density(law: &InterArrivalLaw, x: f64) -> Result<RenewalAutocorr> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::invalid("x", "must be finite and nonzero"));
    }
    let r = x.abs();
    match law {
        InterArrivalLaw::Exponential => Ok(RenewalAutocorr::Density(1.0)),
        InterArrivalLaw::Gamma { alpha } => Ok(RenewalAutocorr::Density(g_alpha(*alpha, r, 1e-16))),
        _ => {
            let atoms = law.atoms().unwrap_or_default();
            let smallest = atoms
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(a, _)| a.position)
                .fold(f64::INFINITY, f64::min);
            let n = (r / smallest).floor() as usize + 1;
            let tol = 1e-9 * r.max(1.0);
            let mass = nu_atoms(&atoms, n, r + tol)
                .into_iter()
                .filter(|(z, _)| (z - r).abs() <= tol)
                .map(|(_, m)| m)
                .sum();
            Ok(RenewalAutocorr::Atom(mass))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::{h, Rational};
    use crate::measures::spectral_eval;
    use crate::rng::{stream, Purpose};
    use core::f64::consts::PI;

    #[test]
    fn deterministic_law_gives_shifted_lattice() {
        let mut rng = stream(1, 0, Purpose::Renewal);
        for _ in 0..20 {
            let ps = simulate_renewal(&InterArrivalLaw::Deterministic, 10.0, &mut rng).unwrap();
            assert_eq!(ps.len(), 10);
            let u = ps.position(0)[0];
            assert!((0.0..1.0).contains(&u));
            for (i, x) in ps.positions().enumerate() {
                assert!((x[0] - (u + i as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponential_counts_are_poisson() {
        let length = 50.0;
        let n = 4000;
        let mut counts = Vec::with_capacity(n);
        for r in 0..n {
            let mut rng = stream(2, r as u64, Purpose::Renewal);
            counts.push(simulate_renewal(&InterArrivalLaw::Exponential, length, &mut rng).unwrap().len() as f64);
        }
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Mean: sd sqrt(L/n). Variance of the sample variance ≈ (2L² + L)/n.
        assert!((mean - length).abs() < 3.0 * (length / n as f64).sqrt());
        assert!((var - length).abs() < 3.0 * ((2.0 * length * length + length) / n as f64).sqrt());
    }

    #[test]
    fn point_density_is_one_for_every_law() {
        let laws = [
            InterArrivalLaw::Exponential,
            InterArrivalLaw::gamma(0.7).unwrap(),
            InterArrivalLaw::gamma(8.0).unwrap(),
            InterArrivalLaw::two_atom(2.0 / 3.0, 4.0 / 3.0, 0.5).unwrap(),
            InterArrivalLaw::Deterministic,
        ];
        let length = 200.0;
        for law in &laws {
            let n = 200;
            let counts: Vec<f64> = (0..n)
                .map(|r| {
                    let mut rng = stream(3, r, Purpose::Renewal);
                    simulate_renewal(law, length, &mut rng).unwrap().len() as f64 / length
                })
                .collect();
            let mean = counts.iter().sum::<f64>() / n as f64;
            let sd = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let se = (sd / (n as f64).sqrt()).max(1e-12);
            assert!((mean - 1.0).abs() <= 3.0 * se + 1e-12, "{law:?}: {mean} ± {se}");
        }
    }

    #[test]
    fn equilibrium_delay_matches_its_cdf() {
        // For Gamma(2) the delay has density 1 − F(x) = (1 + 2x)e^{−2x}, so
        // P(D ≤ t) = 1 − (1 + t)e^{−2t}.
        let law = InterArrivalLaw::gamma(2.0).unwrap();
        let mut rng = stream(4, 0, Purpose::Renewal);
        let n = 20000;
        let t = 0.5;
        let hits = (0..n).filter(|_| sample_equilibrium_delay(&law, &mut rng) <= t).count() as f64 / n as f64;
        let p = 1.0 - (1.0 + t) * (-2.0 * t).exp();
        assert!((hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn models_match_closed_forms() {
        let exp = analytic_renewal_model(&InterArrivalLaw::Exponential);
        let v = spectral_eval(&exp, &[0.0], 1e-9).unwrap();
        assert_eq!(v.pp_weight, 1.0);
        assert_eq!(v.ac, None);
        assert!((exp.density(&[0.7]) - 1.0).abs() < 1e-14);

        let g2 = analytic_renewal_model(&InterArrivalLaw::gamma(2.0).unwrap());
        for k in [0.1, 1.0, 3.3] {
            let pk2 = (PI * k).powi(2);
            assert!((g2.density(&[k]) - (2.0 + pk2) / (4.0 + pk2)).abs() < 1e-14);
        }
        assert!((g2.density(&[1.0]) - 0.855_8).abs() < 1e-4);
    }

    #[test]
    fn rational_tiling_model_is_periodic_with_lattice_atoms() {
        let r = |n, d| Rational::new(n, d).unwrap();
        let law = InterArrivalLaw::two_atom_rational(r(2, 3), r(4, 3), r(1, 2)).unwrap();
        let m = analytic_renewal_model(&law);
        for k in [1.5, 3.0, -1.5] {
            let v = spectral_eval(&m, &[k], 1e-9).unwrap();
            assert_eq!(v.pp_weight, 1.0);
            assert_eq!(v.ac, None);
        }
        assert_eq!(spectral_eval(&m, &[0.75], 1e-9).unwrap().pp_weight, 0.0);
        for k in [0.1, 0.6, 1.1] {
            assert!((m.density(&[k]) - m.density(&[k + 1.5])).abs() < 1e-12);
            assert!((m.density(&[k]) - (1.0 - h(&law, k).unwrap())).abs() < 1e-12);
        }
    }

    #[test]
    fn autocorrelation_examples() {
        let g2 = InterArrivalLaw::gamma(2.0).unwrap();
        let v = analytic_renewal_ac_density(&g2, 0.5).unwrap();
        assert!(matches!(v, RenewalAutocorr::Density(d) if (d - (1.0 - (-2f64).exp())).abs() < 1e-12));
        assert_eq!(
            analytic_renewal_ac_density(&InterArrivalLaw::Exponential, -3.0).unwrap(),
            RenewalAutocorr::Density(1.0)
        );
        assert_eq!(
            analytic_renewal_ac_density(&InterArrivalLaw::Deterministic, 3.0).unwrap(),
            RenewalAutocorr::Atom(1.0)
        );
        assert_eq!(
            analytic_renewal_ac_density(&InterArrivalLaw::Deterministic, 2.5).unwrap(),
            RenewalAutocorr::Atom(0.0)
        );
        // Two-atom law {1/2, 3/2}: mass at 1 is P(gap=1/2)² = 1/4.
        let law = InterArrivalLaw::two_atom(0.5, 1.5, 0.5).unwrap();
        let RenewalAutocorr::Atom(m) = analytic_renewal_ac_density(&law, 1.0).unwrap() else {
            panic!("atomic law must give an atom");
        };
        assert!((m - 0.25).abs() < 1e-15);
        assert!(analytic_renewal_ac_density(&g2, 0.0).is_err());
    }
}
