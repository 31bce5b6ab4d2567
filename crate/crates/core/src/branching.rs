//! Critical branching Brownian motion started from a Poisson field.
//!
//! Particles diffuse with transition density
//! `p_t(x) = (4πt)^{−d/2} e^{−|x|²/4t}` (variance `2t` per coordinate), live
//! for an `Exp(V)` time, and then either split into two at their current
//! position or die, each with probability 1/2. The simulation runs on the
//! torus `[−L, L)^d`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::measures::{unit_ball_volume, AveragingWindow, PurePoint, SingularSet, SpectralModel, WeightedPointSet};
use crate::processes::sample_poisson;
use crate::special::adaptive_simpson;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchingConfig {
    pub rho: f64,
    /// Branching rate `V`.
    pub rate: f64,
    pub dim: usize,
    /// Observation time `T`.
    pub horizon: f64,
    pub box_halfwidth: f64,
    pub inner_halfwidth: f64,
}

impl BranchingConfig {
    pub fn new(rho: f64, rate: f64, dim: usize, horizon: f64, box_halfwidth: f64, inner_halfwidth: f64) -> Result<Self> {
        let cfg = Self {
            rho,
            rate,
            dim,
            horizon,
            box_halfwidth,
            inner_halfwidth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::invalid("rho", "must be positive and finite"));
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::invalid("V", "must be nonnegative and finite"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("T", "must be nonnegative and finite"));
        }
        if self.dim < 3 {
            return Err(Error::invalid("dim", "equilibria exist in d >= 3 only"));
        }
        if !(self.inner_halfwidth > 0.0) {
            return Err(Error::invalid("inner_halfwidth", "must be positive"));
        }
        let margin = 3.0 * (4.0 * self.horizon).sqrt();
        if self.inner_halfwidth + margin > self.box_halfwidth {
            return Err(Error::invalid(
                "box_halfwidth",
                alloc::format!(
                    "must be at least inner_halfwidth + 3·sqrt(4T) = {}",
                    self.inner_halfwidth + margin
                ),
            ));
        }
        Ok(())
    }

    pub fn box_window(&self) -> AveragingWindow {
        AveragingWindow::cube(self.dim, self.box_halfwidth).expect("validated half-width")
    }

    pub fn inner_window(&self) -> AveragingWindow {
        AveragingWindow::cube(self.dim, self.inner_halfwidth).expect("validated half-width")
    }

    /// Largest live population tolerated before aborting.
    pub fn population_limit(&self) -> usize {
        (100.0 * self.rho * self.box_window().volume()).ceil() as usize + 100
    }
}

fn wrap(x: f64, half: f64) -> f64 {
    let side = 2.0 * half;
    let y = num_traits::Euclid::rem_euclid(&(x + half), &side) - half;
    // rem_euclid can round up to exactly `side`.
    if y >= half {
        -half
    } else {
        y
    }
}

/// Configuration at time `T` on the whole torus.
///
/// Lineages are independent given the initial field, so each one is
/// followed depth first; the random stream is consumed in a fixed order.
pub fn evolve_torus<R: Rng + ?Sized>(cfg: &BranchingConfig, rng: &mut R) -> Result<WeightedPointSet> {
    cfg.validate()?;
    let dim = cfg.dim;
    let half = cfg.box_halfwidth;
    let window = cfg.box_window();
    let initial = sample_poisson(cfg.rho, &window, rng);
    if cfg.horizon == 0.0 {
        return Ok(initial);
    }
    let limit = cfg.population_limit();
    let mut out = WeightedPointSet::with_capacity(window, initial.len() + initial.len() / 8);
    let mut stack: Vec<(Vec<f64>, f64)> = Vec::new();
    let one = Complex64::new(1.0, 0.0);
    let mut pos = vec![0.0; dim];

    let displace = |x: &mut [f64], dt: f64, rng: &mut R| {
        let s = (2.0 * dt).sqrt();
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *xi = wrap(*xi + s * z, half);
        }
    };

    for x0 in initial.positions() {
        stack.push((x0.to_vec(), 0.0));
        while let Some((mut x, born)) = stack.pop() {
            let life = if cfg.rate > 0.0 {
                let e: f64 = Exp1.sample(rng);
                e / cfg.rate
            } else {
                f64::INFINITY
            };
            if born + life >= cfg.horizon {
                displace(&mut x, cfg.horizon - born, rng);
                pos.copy_from_slice(&x);
                out.push_if_inside(&pos, one);
                continue;
            }
            displace(&mut x, life, rng);
            if rng.random::<bool>() {
                stack.push((x.clone(), born + life));
                stack.push((x, born + life));
            }
            if stack.len() + out.len() > limit {
                return Err(Error::PopulationExplosion {
                    count: stack.len() + out.len(),
                    limit,
                });
            }
        }
    }
    Ok(out)
}

/// Configuration at time `T` restricted to the inner window.
pub fn simulate_cbbm<R: Rng + ?Sized>(cfg: &BranchingConfig, rng: &mut R) -> Result<WeightedPointSet> {
    evolve_torus(cfg, rng)?.restrict(&cfg.inner_window())
}

/// `f_t(r) = (V/2)∫_0^{2t} (4πu)^{−d/2} e^{−r²/4u} du`, the density of the
/// Palm first moment in excess of `ρ` at time `t`.
pub fn f_t(rate: f64, dim: usize, t: f64, r: f64) -> f64 {
    if t <= 0.0 || rate == 0.0 {
        return 0.0;
    }
    let d = dim as f64;
    // Integrate over s = ln u; below u_min the integrand underflows.
    let u_min = r * r / (4.0 * 745.0);
    let u_max = 2.0 * t;
    if u_max <= u_min {
        return 0.0;
    }
    let integrand = |s: f64| {
        let u = s.exp();
        (4.0 * PI * u).powf(-d / 2.0) * (-r * r / (4.0 * u)).exp() * u
    };
    0.5 * rate * adaptive_simpson(&integrand, u_min.ln(), u_max.ln(), 1e-10, 0.0)
}

/// `f_∞(r) = (V/2)·Γ(d/2 − 1)/(4π^{d/2}) · r^{2−d}`.
pub fn f_infinity(rate: f64, dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    0.5 * rate * crate::special::gamma(d / 2.0 - 1.0) / (4.0 * PI.powf(d / 2.0)) * r.powf(2.0 - d)
}

/// Equilibrium diffraction
/// `ρ²δ_0 + ρ(1 + (V/2)/((2π)^α |k|^α))λ`; `alpha = 2` is branching
/// Brownian motion, `alpha < 2` the symmetric α-stable analogue.
pub fn analytic_cbbm_model(rho: f64, rate: f64, dim: usize, alpha: f64) -> Result<SpectralModel> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("alpha", "must lie in (0, 2]"));
    }
    if !(dim as f64 > alpha) {
        return Err(Error::invalid("dim", "must exceed alpha"));
    }
    if !(rho > 0.0) || !(rate >= 0.0) {
        return Err(Error::invalid("rho", "rho must be positive and V nonnegative"));
    }
    let density = move |k: &[f64]| {
        let kn = crate::measures::norm(k);
        rho * (1.0 + 0.5 * rate / (2.0 * PI * kn).powf(alpha))
    };
    let (density, singular): (Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, SingularSet) = if rate == 0.0 {
        (Arc::new(move |_: &[f64]| rho), SingularSet::None)
    } else {
        (Arc::new(density), SingularSet::Points(vec![vec![0.0; dim]]))
    };
    Ok(SpectralModel::new(
        dim,
        "branching",
        PurePoint::Finite(vec![(vec![0.0; dim], rho * rho)]),
        density,
        singular,
    ))
}

/// Radial Palm statistics on the torus: for every particle, the number of
/// other particles at minimum-image distance in each shell.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPalm {
    edges: Vec<f64>,
    /// Partner counts per shell minus the count expected from a uniform
    /// background at the realisation's own density `(N − 1)/vol`.
    excess: Vec<f64>,
    centres: f64,
    realisations: usize,
}

impl TorusPalm {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("edges", "must be increasing, nonnegative, at least two"));
        }
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            excess: vec![0.0; bins],
            centres: 0.0,
            realisations: 0,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn realisations(&self) -> usize {
        self.realisations
    }

    fn shell_volume(&self, dim: usize, i: usize) -> f64 {
        let d = dim as i32;
        unit_ball_volume(dim) * (self.edges[i + 1].powi(d) - self.edges[i].powi(d))
    }

    /// Adds one torus configuration; `half` is the torus half-width.
    pub fn add(&mut self, ps: &WeightedPointSet, half: f64) -> Result<()> {
        let dim = ps.dim();
        let r_max = *self.edges.last().expect("at least two edges");
        if 2.0 * r_max >= 2.0 * half {
            return Err(Error::invalid("edges", "largest radius must be below the torus half-width"));
        }
        let n = ps.len();
        let side = 2.0 * half;
        let cells = ((side / r_max).floor() as usize).max(1);
        let cell_len = side / cells as f64;
        let cell_of = |x: f64| (((x + half) / cell_len).floor() as usize).min(cells - 1);
        let flat = |c: &[usize]| c.iter().fold(0usize, |acc, ci| acc * cells + ci);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells.pow(dim as u32)];
        let mut home = vec![0usize; dim];
        for i in 0..n {
            for (h, x) in home.iter_mut().zip(ps.position(i)) {
                *h = cell_of(*x);
            }
            buckets[flat(&home)].push(i);
        }
        // Neighbouring cells, with duplicates removed when cells < 3.
        let span: Vec<i64> = if cells >= 3 { vec![-1, 0, 1] } else { (0..cells as i64).collect() };
        let bins = self.excess.len();
        let mut counts = vec![0.0; bins];
        let r2_edges: Vec<f64> = self.edges.iter().map(|e| e * e).collect();
        let mut neighbour = vec![0usize; dim];
        let mut offsets = vec![0usize; dim];
        for i in 0..n {
            let x = ps.position(i);
            for (h, xi) in home.iter_mut().zip(x) {
                *h = cell_of(*xi);
            }
            offsets.iter_mut().for_each(|o| *o = 0);
            loop {
                for a in 0..dim {
                    let v = if cells >= 3 {
                        (home[a] as i64 + span[offsets[a]]).rem_euclid(cells as i64)
                    } else {
                        span[offsets[a]]
                    };
                    neighbour[a] = v as usize;
                }
                for &j in &buckets[flat(&neighbour)] {
                    if j == i {
                        continue;
                    }
                    let y = ps.position(j);
                    let mut r2 = 0.0;
                    for (xa, ya) in x.iter().zip(y) {
                        let mut dz = (xa - ya).abs();
                        if dz > half {
                            dz = side - dz;
                        }
                        r2 += dz * dz;
                    }
                    if r2 >= r2_edges[0] && r2 < r2_edges[bins] {
                        let b = r2_edges.partition_point(|e| *e <= r2) - 1;
                        counts[b] += 1.0;
                    }
                }
                let mut a = 0;
                loop {
                    if a == dim {
                        break;
                    }
                    offsets[a] += 1;
                    if offsets[a] < span.len() {
                        break;
                    }
                    offsets[a] = 0;
                    a += 1;
                }
                if a == dim {
                    break;
                }
            }
        }
        let vol = side.powi(dim as i32);
        let background = if n > 0 { (n as f64 - 1.0) / vol } else { 0.0 };
        for (b, c) in counts.iter().enumerate() {
            self.excess[b] += c - n as f64 * background * self.shell_volume(dim, b);
        }
        self.centres += n as f64;
        self.realisations += 1;
        Ok(())
    }

    /// Associative merge of two accumulators over the same shells.
    pub fn merge(&mut self, other: &TorusPalm) {
        for (a, b) in self.excess.iter_mut().zip(&other.excess) {
            *a += b;
        }
        self.centres += other.centres;
        self.realisations += other.realisations;
    }

    /// Excess Palm density per shell, to be compared with `f_T`.
    pub fn excess_density(&self, dim: usize) -> Vec<f64> {
        (0..self.excess.len())
            .map(|b| self.excess[b] / (self.centres * self.shell_volume(dim, b)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::special::gamma_q;

    /// Closed form via the upper incomplete gamma function.
    fn f_t_closed(rate: f64, dim: usize, t: f64, r: f64) -> f64 {
        let s = dim as f64 / 2.0 - 1.0;
        let upper = crate::special::gamma(s) * gamma_q(s, r * r / (8.0 * t));
        0.5 * rate * r.powf(2.0 - dim as f64) / (4.0 * PI.powf(dim as f64 / 2.0)) * upper
    }

    #[test]
    fn f_t_matches_closed_form_and_riemann_sum() {
        for (dim, t, r) in [(3, 10.0, 1.0), (3, 4.0, 0.2), (3, 4.0, 2.0), (4, 1.0, 0.5), (5, 0.3, 1.5)] {
            let v = f_t(2.0, dim, t, r);
            let c = f_t_closed(2.0, dim, t, r);
            assert!((v - c).abs() < 1e-8 * c, "d={dim} t={t} r={r}: {v} vs {c}");
        }
        // Midpoint Riemann sum in u on a fine grid.
        let (t, r) = (10.0, 1.0);
        let n = 2_000_000;
        let h = 2.0 * t / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * h;
            sum += (4.0 * PI * u).powf(-1.5) * (-r * r / (4.0 * u)).exp();
        }
        assert!((f_t(2.0, 3, t, r) - sum * h).abs() < 1e-6);
    }

    #[test]
    fn f_t_approaches_green_function_from_below() {
        let r = 1.0;
        let inf = f_infinity(2.0, 3, r);
        assert!((inf - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let mut last = 0.0;
        for t in [0.5, 1.0, 4.0, 16.0, 1e4] {
            let v = f_t(2.0, 3, t, r);
            assert!(v > last && v < inf);
            last = v;
        }
        assert!((last - inf).abs() < 1e-2 * inf);
    }

    #[test]
    fn model_examples() {
        let m = analytic_cbbm_model(1.0, 2.0, 3, 2.0).unwrap();
        assert!((m.density(&[1.0, 0.0, 0.0]) - (1.0 + 1.0 / (4.0 * PI * PI))).abs() < 1e-14);
        assert!((m.density(&[0.0, 0.6, 0.8]) - 1.025_33).abs() < 1e-5);
        let m = analytic_cbbm_model(1.0, 3.0, 3, 1.0).unwrap();
        assert!((m.density(&[1.0 / (2.0 * PI), 0.0, 0.0]) - 2.5).abs() < 1e-14);
        let m = analytic_cbbm_model(1.5, 0.0, 3, 2.0).unwrap();
        assert_eq!(m.density(&[0.3, 0.0, 0.0]), 1.5);
        assert!(analytic_cbbm_model(1.0, 1.0, 2, 2.0).is_err());
        // The d = 3 Green function pairs with its transform through the
        // Riesz formula: FT of (V/2)/(4π|x|) is (V/2)/(4π²|k|²).
        let riesz = crate::charfun::riesz_fourier(3, 2.0, &[0.0, 0.0, 0.5]).unwrap() / (4.0 * PI);
        let m = analytic_cbbm_model(1.0, 2.0, 3, 2.0).unwrap();
        assert!((m.density(&[0.0, 0.0, 0.5]) - 1.0 - riesz).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(BranchingConfig::new(1.0, 2.0, 3, 4.0, 16.0, 4.0).is_ok());
        assert!(BranchingConfig::new(1.0, 2.0, 3, 4.0, 15.0, 4.0).is_err());
        assert!(BranchingConfig::new(1.0, 2.0, 2, 4.0, 16.0, 4.0).is_err());
    }

    #[test]
    fn zero_horizon_returns_initial_field() {
        let cfg = BranchingConfig::new(1.0, 2.0, 3, 0.0, 4.0, 2.0).unwrap();
        let a = evolve_torus(&cfg, &mut stream(5, 0, Purpose::Branching)).unwrap();
        let b = sample_poisson(1.0, &cfg.box_window(), &mut stream(5, 0, Purpose::Branching));
        assert_eq!(a, b);
    }

    #[test]
    fn particle_count_is_conserved_on_average() {
        let cfg = BranchingConfig::new(1.0, 2.0, 3, 1.0, 7.0, 1.0).unwrap();
        let n = 300;
        let counts: Vec<f64> = (0..n)
            .map(|r| evolve_torus(&cfg, &mut stream(6, r, Purpose::Branching)).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let sd = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let expected = cfg.box_window().volume();
        assert!((mean - expected).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn without_branching_the_count_is_fixed() {
        let cfg = BranchingConfig::new(1.0, 0.0, 3, 1.0, 7.0, 1.0).unwrap();
        let a = evolve_torus(&cfg, &mut stream(7, 0, Purpose::Branching)).unwrap();
        let b = sample_poisson(1.0, &cfg.box_window(), &mut stream(7, 0, Purpose::Branching));
        assert_eq!(a.len(), b.len());
    }

    #[test]
    fn torus_palm_matches_brute_force() {
        let cfg = BranchingConfig::new(1.0, 2.0, 3, 0.25, 3.5, 0.5).unwrap();
        let ps = evolve_torus(&cfg, &mut stream(8, 0, Purpose::Branching)).unwrap();
        let edges = vec![0.1, 0.5, 1.0, 1.4];
        let mut palm = TorusPalm::new(edges.clone()).unwrap();
        palm.add(&ps, 3.5).unwrap();
        let n = ps.len();
        let mut counts = vec![0.0; 3];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r: f64 = ps
                    .position(i)
                    .iter()
                    .zip(ps.position(j))
                    .map(|(a, b)| {
                        let d = (a - b).abs();
                        let d = if d > 3.5 { 7.0 - d } else { d };
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                for b in 0..3 {
                    if r >= edges[b] && r < edges[b + 1] {
                        counts[b] += 1.0;
                    }
                }
            }
        }
        let bg = (n as f64 - 1.0) / 343.0;
        for b in 0..3 {
            let shell = 4.0 / 3.0 * PI * (edges[b + 1].powi(3) - edges[b].powi(3));
            let expected = (counts[b] - n as f64 * bg * shell) / (n as f64 * shell);
            assert!((palm.excess_density(3)[b] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn wrap_stays_on_torus() {
        for x in [-5.0, -1.0, 0.0, 0.999_999, 1.0, 3.0, 7.5] {
            let y = wrap(x, 1.0);
            assert!((-1.0..1.0).contains(&y));
            assert!(((x - y) / 2.0 - ((x - y) / 2.0).round()).abs() < 1e-12);
        }
    }
}
