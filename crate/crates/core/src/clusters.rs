//! Cluster (compound) processes: every centre is replaced by an independent
//! copy of a finite random measure, and the diffraction of the result
//! follows from the first two Fourier moments of the cluster law.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::measures::{AveragingWindow, FiniteCluster, SpectralModel, WeightedPointSet};
use crate::{Error, Result};

/// Law of a random displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Displacement {
    /// Isotropic centred Gaussian with standard deviation `sigma` per axis.
    Gaussian { sigma: f64, dim: usize },
    /// Uniform on the cube `[−a, a]^d`.
    Uniform { a: f64, dim: usize },
}

impl Displacement {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian { dim, .. } | Self::Uniform { dim, .. } => *dim,
        }
    }

    /// `ν̂(k)`; real because both laws are symmetric.
    pub fn fourier(&self, k: &[f64]) -> f64 {
        match self {
            Self::Gaussian { sigma, .. } => {
                let k2: f64 = k.iter().map(|v| v * v).sum();
                (-2.0 * PI * PI * sigma * sigma * k2).exp()
            }
            Self::Uniform { a, .. } => k
                .iter()
                .map(|ki| {
                    let x = 2.0 * PI * a * ki;
                    if x == 0.0 {
                        1.0
                    } else {
                        x.sin() / x
                    }
                })
                .product(),
        }
    }

    /// Typical extent; beyond `reach()` the displacement has negligible mass.
    pub fn reach(&self) -> f64 {
        match self {
            Self::Gaussian { sigma, .. } => 8.0 * sigma,
            Self::Uniform { a, .. } => *a,
        }
    }

    fn validate(&self) -> Result<()> {
        let (v, dim) = match self {
            Self::Gaussian { sigma, dim } => (*sigma, *dim),
            Self::Uniform { a, dim } => (*a, *dim),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid("displacement", "scale must be positive and finite"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Gaussian { sigma, .. } => {
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = sigma * z;
                }
            }
            Self::Uniform { a, .. } => {
                for o in out.iter_mut() {
                    let u: f64 = rng.random();
                    *o = a * (2.0 * u - 1.0);
                }
            }
        }
    }
}

/// Law of a random scalar weight.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightLaw {
    /// 1 with probability `p`, else 0.
    Bernoulli(f64),
    /// Finitely many `(value, probability)` pairs.
    Discrete(Vec<(Complex64, f64)>),
}

impl WeightLaw {
    fn values(&self) -> Vec<(Complex64, f64)> {
        match self {
            Self::Bernoulli(p) => vec![(Complex64::new(1.0, 0.0), *p), (Complex64::new(0.0, 0.0), 1.0 - p)],
            Self::Discrete(v) => v.clone(),
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.values().iter().map(|(h, p)| h * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values().iter().map(|(h, p)| h.norm_sqr() * p).sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let values = self.values();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (h, p) in &values {
            acc += p;
            if u < acc {
                return *h;
            }
        }
        values.last().map_or(Complex64::new(0.0, 0.0), |(h, _)| *h)
    }
}

fn check_probabilities(name: &'static str, probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::invalid(name, "probabilities must be nonnegative"));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(name, alloc::format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Law `Q` of a finite random measure `Ψ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterLaw {
    Deterministic(FiniteCluster),
    /// `H·δ_0` with random `H`.
    RandomWeight { weight: WeightLaw, dim: usize },
    /// `δ_Y` with `Y ~ ν`.
    RandomDisplacement(Displacement),
    /// `Σ_{j ≤ K} δ_{Y_j}` with `K` drawn from `k_table` (probabilities on
    /// `0, 1, …, K_max`) and i.i.d. `Y_j ~ ν`.
    NeymanScott { k_table: Vec<f64>, displacement: Displacement },
    /// `±δ_0` with `P(+1) = p`.
    SignedBernoulli { p: f64, dim: usize },
}

impl ClusterLaw {
    pub fn deterministic(cluster: FiniteCluster) -> Self {
        Self::Deterministic(cluster)
    }

    pub fn random_weight(weight: WeightLaw, dim: usize) -> Result<Self> {
        match &weight {
            WeightLaw::Bernoulli(p) => check_probabilities("p", [*p, 1.0 - p].into_iter())?,
            WeightLaw::Discrete(v) => {
                if v.iter().any(|(h, _)| !h.is_finite()) {
                    return Err(Error::NonFinite);
                }
                check_probabilities("weight", v.iter().map(|(_, p)| *p))?
            }
        }
        nonzero(dim)?;
        Ok(Self::RandomWeight { weight, dim })
    }

    pub fn random_displacement(displacement: Displacement) -> Result<Self> {
        displacement.validate()?;
        Ok(Self::RandomDisplacement(displacement))
    }

    pub fn neyman_scott(k_table: Vec<f64>, displacement: Displacement) -> Result<Self> {
        displacement.validate()?;
        if k_table.is_empty() {
            return Err(Error::invalid("k_table", "must not be empty"));
        }
        check_probabilities("k_table", k_table.iter().copied())?;
        Ok(Self::NeymanScott { k_table, displacement })
    }

    pub fn signed_bernoulli(p: f64, dim: usize) -> Result<Self> {
        check_probabilities("p", [p, 1.0 - p].into_iter())?;
        nonzero(dim)?;
        Ok(Self::SignedBernoulli { p, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Deterministic(c) => c.dim(),
            Self::RandomWeight { dim, .. } | Self::SignedBernoulli { dim, .. } => *dim,
            Self::RandomDisplacement(d) => d.dim(),
            Self::NeymanScott { displacement, .. } => displacement.dim(),
        }
    }

    /// Whether every realisation has real weights.
    pub fn is_real(&self) -> bool {
        match self {
            Self::Deterministic(c) => c.is_real(),
            Self::RandomWeight { weight, .. } => weight.values().iter().all(|(h, p)| *p == 0.0 || h.im == 0.0),
            _ => true,
        }
    }

    /// `(m, E K²)` of the cluster size for Neyman–Scott laws.
    fn size_moments(k_table: &[f64]) -> (f64, f64) {
        k_table.iter().enumerate().fold((0.0, 0.0), |(m, m2), (k, p)| {
            let k = k as f64;
            (m + k * p, m2 + k * k * p)
        })
    }

    /// Expected total mass `m = E Ψ(R^d)`.
    pub fn mean_mass(&self) -> Complex64 {
        self.mean_ft(&vec![0.0; self.dim()])
    }

    /// `E_Q Ψ̂(k)`.
    pub fn mean_ft(&self, k: &[f64]) -> Complex64 {
        match self {
            Self::Deterministic(c) => c.fourier(k),
            Self::RandomWeight { weight, .. } => weight.mean(),
            Self::RandomDisplacement(d) => Complex64::new(d.fourier(k), 0.0),
            Self::NeymanScott { k_table, displacement } => {
                let (m, _) = Self::size_moments(k_table);
                Complex64::new(m * displacement.fourier(k), 0.0)
            }
            Self::SignedBernoulli { p, .. } => Complex64::new(2.0 * p - 1.0, 0.0),
        }
    }

    /// `E_Q |Ψ̂(k)|²`.
    pub fn second_ft(&self, k: &[f64]) -> f64 {
        match self {
            Self::Deterministic(c) => c.fourier(k).norm_sqr(),
            Self::RandomWeight { weight, .. } => weight.second_moment(),
            Self::RandomDisplacement(_) | Self::SignedBernoulli { .. } => 1.0,
            Self::NeymanScott { k_table, displacement } => {
                let (m, m2) = Self::size_moments(k_table);
                m + (m2 - m) * displacement.fourier(k).powi(2)
            }
        }
    }

    /// Radius beyond which cluster points are (practically) never placed.
    pub fn reach(&self) -> f64 {
        match self {
            Self::Deterministic(c) => c
                .iter()
                .map(|(x, _)| x.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            Self::RandomWeight { .. } | Self::SignedBernoulli { .. } => 0.0,
            Self::RandomDisplacement(d) | Self::NeymanScott { displacement: d, .. } => d.reach(),
        }
    }

    /// `E_Q Ψ` and `E_Q(Ψ ∗ Ψ̃)` as atom lists, when both are atomic.
    fn atomic_moments(&self) -> Result<(Vec<(Vec<f64>, Complex64)>, Vec<(Vec<f64>, Complex64)>)> {
        let dim = self.dim();
        let origin = vec![0.0; dim];
        match self {
            Self::Deterministic(c) => {
                let atoms: Vec<(Vec<f64>, Complex64)> = c.iter().map(|(x, w)| (x.to_vec(), w)).collect();
                let second = convolve(&atoms, &reflect(&atoms));
                Ok((atoms, second))
            }
            Self::RandomWeight { weight, .. } => Ok((
                vec![(origin.clone(), weight.mean())],
                vec![(origin, Complex64::new(weight.second_moment(), 0.0))],
            )),
            Self::SignedBernoulli { p, .. } => Ok((
                vec![(origin.clone(), Complex64::new(2.0 * p - 1.0, 0.0))],
                vec![(origin, Complex64::new(1.0, 0.0))],
            )),
            Self::RandomDisplacement(_) | Self::NeymanScott { .. } => {
                Err(Error::NonAtomic("cluster law has diffuse moments"))
            }
        }
    }
}

fn nonzero(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dim", "must be positive"))
    } else {
        Ok(())
    }
}

/// One draw from `Q`.
pub fn sample_cluster<R: Rng + ?Sized>(law: &ClusterLaw, rng: &mut R) -> FiniteCluster {
    let dim = law.dim();
    match law {
        ClusterLaw::Deterministic(c) => c.clone(),
        ClusterLaw::RandomWeight { weight, .. } => FiniteCluster::point(dim, weight.sample(rng)),
        ClusterLaw::SignedBernoulli { p, .. } => {
            let u: f64 = rng.random();
            FiniteCluster::point(dim, Complex64::new(if u < *p { 1.0 } else { -1.0 }, 0.0))
        }
        ClusterLaw::RandomDisplacement(d) => {
            let mut y = vec![0.0; dim];
            d.sample(rng, &mut y);
            let mut c = FiniteCluster::new(dim);
            c.push(&y, Complex64::new(1.0, 0.0)).expect("finite offset of matching dimension");
            c
        }
        ClusterLaw::NeymanScott { k_table, displacement } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut count = k_table.len() - 1;
            for (k, p) in k_table.iter().enumerate() {
                acc += p;
                if u < acc {
                    count = k;
                    break;
                }
            }
            let mut c = FiniteCluster::new(dim);
            let mut y = vec![0.0; dim];
            for _ in 0..count {
                displacement.sample(rng, &mut y);
                c.push(&y, Complex64::new(1.0, 0.0)).expect("finite offset of matching dimension");
            }
            c
        }
    }
}

/// `Σ_j T_{x_j} Ψ_j` restricted to the centres' window.
pub fn sample_compound<R: Rng + ?Sized>(
    centres: &WeightedPointSet,
    law: &ClusterLaw,
    rng: &mut R,
) -> Result<WeightedPointSet> {
    sample_compound_in(centres, law, centres.window(), rng)
}

/// `Σ_j T_{x_j} Ψ_j` restricted to `window`. Clusters are drawn in the
/// order of the centres.
pub fn sample_compound_in<R: Rng + ?Sized>(
    centres: &WeightedPointSet,
    law: &ClusterLaw,
    window: &AveragingWindow,
    rng: &mut R,
) -> Result<WeightedPointSet> {
    if law.dim() != centres.dim() || window.dim() != centres.dim() {
        return Err(Error::DimensionMismatch {
            expected: centres.dim(),
            found: if law.dim() != centres.dim() { law.dim() } else { window.dim() },
        });
    }
    if !centres.has_unit_weights() {
        return Err(Error::WeightedCentres);
    }
    let mut out = WeightedPointSet::with_capacity(window.clone(), centres.len());
    let mut y = vec![0.0; centres.dim()];
    for x in centres.positions() {
        let cluster = sample_cluster(law, rng);
        for (offset, w) in cluster.iter() {
            for ((yi, xi), oi) in y.iter_mut().zip(x).zip(offset) {
                *yi = xi + oi;
            }
            out.push_if_inside(&y, w);
        }
    }
    Ok(out)
}

/// How the centres are generated; complex cluster laws are only admitted on
/// a deterministic comb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CentreRegime {
    RandomProcess,
    DeterministicComb,
}

/// `γ̂_R = |E Ψ̂|²·γ̂_P + ρ(E|Ψ̂|² − |E Ψ̂|²)·λ`.
pub fn compound_model(
    centre_model: &SpectralModel,
    rho: f64,
    law: &ClusterLaw,
    regime: CentreRegime,
) -> Result<SpectralModel> {
    if law.dim() != centre_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: centre_model.dim(),
            found: law.dim(),
        });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid("rho", "must be positive and finite"));
    }
    if regime == CentreRegime::RandomProcess && !law.is_real() {
        return Err(Error::ComplexClusterWithRandomCentre);
    }
    let factor_law = law.clone();
    let density_law = law.clone();
    let base = centre_model.density_fn().clone();
    let factor = Arc::new(move |k: &[f64]| factor_law.mean_ft(k).norm_sqr());
    let density = Arc::new(move |k: &[f64]| {
        let mean = density_law.mean_ft(k).norm_sqr();
        let base = if mean == 0.0 { 0.0 } else { mean * base(k) };
        base + rho * (density_law.second_ft(k) - mean).max(0.0)
    });
    let mut label = String::from(centre_model.label());
    label.push_str("+cluster");
    Ok(centre_model.transformed(label, factor, density))
}

fn reflect(atoms: &[(Vec<f64>, Complex64)]) -> Vec<(Vec<f64>, Complex64)> {
    atoms
        .iter()
        .map(|(x, w)| (x.iter().map(|v| -v).collect(), w.conj()))
        .collect()
}

fn convolve(a: &[(Vec<f64>, Complex64)], b: &[(Vec<f64>, Complex64)]) -> Vec<(Vec<f64>, Complex64)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (x, wx) in a {
        for (y, wy) in b {
            out.push((x.iter().zip(y).map(|(p, q)| p + q).collect(), wx * wy));
        }
    }
    merge(out)
}

/// Merges atoms that coincide up to `1e-12` relative tolerance, in
/// lexicographic order of position.
fn merge(mut atoms: Vec<(Vec<f64>, Complex64)>) -> Vec<(Vec<f64>, Complex64)> {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1.0));
    atoms.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut out: Vec<(Vec<f64>, Complex64)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.iter_mut().rev().take(8).find(|(y, _)| close(y, &x)) {
            Some(slot) => slot.1 += w,
            None => out.push((x, w)),
        }
    }
    out
}

/// Autocorrelation atoms of the compound process when the centre
/// autocorrelation and the cluster moments are purely atomic:
/// `(E Ψ ∗ (E Ψ)~) ∗ γ_P + ρ(E(Ψ ∗ Ψ̃) − E Ψ ∗ (E Ψ)~)`.
pub fn compound_autocorr_atoms(
    centre_ac_atoms: &[(Vec<f64>, Complex64)],
    rho: f64,
    law: &ClusterLaw,
) -> Result<Vec<(Vec<f64>, Complex64)>> {
    if centre_ac_atoms.iter().any(|(x, _)| x.len() != law.dim()) {
        return Err(Error::DimensionMismatch {
            expected: law.dim(),
            found: centre_ac_atoms.iter().map(|(x, _)| x.len()).find(|&d| d != law.dim()).unwrap_or(0),
        });
    }
    let (mean, second) = law.atomic_moments()?;
    let mean_pair = convolve(&mean, &reflect(&mean));
    let mut all = convolve(&mean_pair, centre_ac_atoms);
    all.extend(second.into_iter().map(|(x, w)| (x, w * rho)));
    all.extend(mean_pair.into_iter().map(|(x, w)| (x, -w * rho)));
    Ok(merge(all)
        .into_iter()
        .filter(|(_, w)| w.norm() > 1e-14)
        .collect())
}
