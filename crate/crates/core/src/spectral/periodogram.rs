//! Periodogram estimators of the diffraction measure.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::measures::{distance, AveragingWindow, SpectralModel};
use crate::spectral::autocorr::stderr;
use crate::{Error, Result};

/// A finite list of wavevectors, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    dim: usize,
    coords: Vec<f64>,
}

impl KGrid {
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    /// `start, start + step, …` up to `stop` inclusive (within `step/2`).
    pub fn line(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::invalid("grid", "need start <= stop and step > 0"));
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        let coords = (0..=n).map(|i| start + i as f64 * step).collect();
        Ok(Self { dim: 1, coords })
    }

    /// Cartesian product of per-axis coordinate lists, first axis slowest.
    pub fn product(axes: &[Vec<f64>]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("axes", "need at least one axis"));
        }
        let dim = axes.len();
        let mut coords = Vec::new();
        let mut idx = vec![0usize; dim];
        if axes.iter().any(|a| a.is_empty()) {
            return Ok(Self { dim, coords });
        }
        loop {
            coords.extend(idx.iter().zip(axes).map(|(&i, a)| a[i]));
            let mut a = dim;
            loop {
                if a == 0 {
                    return Ok(Self { dim, coords });
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Index and distance of the grid point closest to `k`.
    pub fn nearest(&self, k: &[f64]) -> Option<(usize, f64)> {
        self.iter()
            .map(|p| distance(p, k))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest `|k_i|` over the grid.
    pub fn half_extent(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `e^{−2πi k·x}`, with the phase reduced modulo 1 before scaling.
fn plane_wave(k: &[f64], x: &[f64]) -> Complex64 {
    let t: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
    let (s, c) = (TAU * (t - t.round())).sin_cos();
    Complex64::new(c, -s)
}

/// `|Σ w_x e^{−2πi k·x}|² / vol` at every grid point.
pub fn periodogram(ps: &crate::WeightedPointSet, grid: &KGrid) -> Result<Vec<f64>> {
    if grid.dim() != ps.dim() {
        return Err(Error::DimensionMismatch { expected: ps.dim(), found: grid.dim() });
    }
    let vol = ps.window().volume();
    Ok(grid
        .iter()
        .map(|k| {
            let s: Complex64 = ps.iter().map(|(x, w)| w * plane_wave(k, x)).sum();
            s.norm_sqr() / vol
        })
        .collect())
}

/// Neighbouring frequencies used to separate Bragg peaks from the diffuse
/// background. Around each grid point `k` the offsets are
/// `k ± j·e_a/side` for every axis `a` and `guard <= j < guard + band`,
/// where `side` is the window side length. These are zeros of the window
/// kernel centred at `k`, so an atom at `k` leaks into them only through
/// boundary terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandConfig {
    pub guard: usize,
    pub band: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self { guard: 3, band: 10 }
    }
}

impl BandConfig {
    fn validate(&self) -> Result<()> {
        if self.guard == 0 || self.band == 0 {
            return Err(Error::invalid("band", "guard and band must be positive"));
        }
        Ok(())
    }

    /// Offsets per grid point.
    pub fn offsets(&self, dim: usize) -> usize {
        2 * self.band * dim
    }

    /// Distance in units of `1/side` beyond which an atom no longer
    /// touches the band.
    pub fn reach(&self) -> usize {
        self.guard + self.band
    }
}

/// Per-grid-point sums over realisations.
#[derive(Clone, Debug, PartialEq, Default)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Self { sum: vec![0.0; n], sum_sq: vec![0.0; n] }
    }

    fn add(&mut self, i: usize, v: f64) {
        self.sum[i] += v;
        self.sum_sq[i] += v * v;
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    fn mean_se(&self, i: usize, n: usize) -> (f64, f64) {
        (self.sum[i] / n.max(1) as f64, stderr(self.sum[i], self.sum_sq[i], n))
    }
}

/// Periodogram statistics over realisations on a common window.
///
/// For each grid point three quantities are tracked per realisation: the
/// periodogram `I(k)`, the band background `B(k)` (mean periodogram over
/// the band offsets) and the excess `I(k) − B(k)`. `B` estimates the
/// absolutely continuous density and `(I − B)/vol` the atom weight.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSpectrum {
    grid: KGrid,
    window: AveragingWindow,
    band: BandConfig,
    realisations: usize,
    intensity: Moments,
    background: Moments,
    excess: Moments,
}

impl EmpiricalSpectrum {
    pub fn new(grid: KGrid, window: AveragingWindow, band: BandConfig) -> Result<Self> {
        band.validate()?;
        if grid.dim() != window.dim() {
            return Err(Error::DimensionMismatch { expected: window.dim(), found: grid.dim() });
        }
        let n = grid.len();
        Ok(Self {
            grid,
            window,
            band,
            realisations: 0,
            intensity: Moments::zeros(n),
            background: Moments::zeros(n),
            excess: Moments::zeros(n),
        })
    }

    /// Spectrum of a single realisation.
    pub fn from_realisation(grid: KGrid, band: BandConfig, ps: &crate::WeightedPointSet) -> Result<Self> {
        let mut s = Self::new(grid, ps.window().clone(), band)?;
        s.add(ps)?;
        Ok(s)
    }

    /// A one-realisation spectrum holding the model's exact values: the
    /// density (0 on the singular set) as background and
    /// `vol × atom weight` as excess.
    pub fn exact(model: &SpectralModel, grid: KGrid, window: AveragingWindow, band: BandConfig, atom_tol: f64) -> Result<Self> {
        if model.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), found: model.dim() });
        }
        let mut s = Self::new(grid, window, band)?;
        let vol = s.window.volume();
        for i in 0..s.grid.len() {
            let k = s.grid.point(i);
            let bg = if model.is_singular(k, atom_tol) { 0.0 } else { model.density(k) };
            let ex: f64 = vol * model.atoms_near(k, atom_tol).iter().map(|(_, w)| w).sum::<f64>();
            s.intensity.add(i, bg + ex);
            s.background.add(i, bg);
            s.excess.add(i, ex);
        }
        s.realisations = 1;
        Ok(s)
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn band(&self) -> BandConfig {
        self.band
    }

    pub fn realisations(&self) -> usize {
        self.realisations
    }

    pub fn volume(&self) -> f64 {
        self.window.volume()
    }

    /// Spacing of the band offsets, `1/side`.
    pub fn resolution(&self) -> f64 {
        1.0 / self.window.side_length()
    }

    /// Radius around an atom inside which the band is contaminated.
    pub fn default_exclusion_radius(&self) -> f64 {
        self.band.reach() as f64 * self.resolution()
    }

    /// Mean periodogram and its standard error at grid index `i`.
    pub fn intensity(&self, i: usize) -> (f64, f64) {
        self.intensity.mean_se(i, self.realisations)
    }

    /// Band-smoothed density estimate and its standard error.
    pub fn background(&self, i: usize) -> (f64, f64) {
        self.background.mean_se(i, self.realisations)
    }

    /// Atom weight estimate `(I − B)/vol` and its standard error.
    pub fn atom(&self, i: usize) -> (f64, f64) {
        let (m, s) = self.excess.mean_se(i, self.realisations);
        let vol = self.volume();
        (m / vol, s / vol)
    }

    /// Accumulates one realisation observed in the same window.
    pub fn add(&mut self, ps: &crate::WeightedPointSet) -> Result<()> {
        if ps.window() != &self.window {
            return Err(Error::invalid("window", "realisation window differs from the spectrum window"));
        }
        let dim = self.grid.dim();
        let n = self.grid.len();
        let band = self.band.band;
        let guard = self.band.guard;
        let per_k = self.band.offsets(dim);
        let step = self.resolution();
        let mut centre = vec![Complex64::new(0.0, 0.0); n];
        let mut side = vec![Complex64::new(0.0, 0.0); n * per_k];
        // Powers s_a^j, j = guard..guard+band, of s_a = e^{−2πi x_a/side}.
        let mut powers = vec![Complex64::new(0.0, 0.0); dim * band];
        for (x, w) in ps.iter() {
            for a in 0..dim {
                let unit = plane_wave(&[step], &x[a..a + 1]);
                let mut p = plane_wave(&[guard as f64 * step], &x[a..a + 1]);
                for t in 0..band {
                    powers[a * band + t] = p;
                    p *= unit;
                }
            }
            for i in 0..n {
                let base = w * plane_wave(self.grid.point(i), x);
                centre[i] += base;
                let acc = &mut side[i * per_k..(i + 1) * per_k];
                for (slot, p) in acc.chunks_exact_mut(2).zip(&powers) {
                    slot[0] += base * p;
                    slot[1] += base * p.conj();
                }
            }
        }
        let vol = self.volume();
        for i in 0..n {
            let c = centre[i].norm_sqr() / vol;
            let b = side[i * per_k..(i + 1) * per_k].iter().map(|z| z.norm_sqr()).sum::<f64>() / (per_k as f64 * vol);
            self.intensity.add(i, c);
            self.background.add(i, b);
            self.excess.add(i, c - b);
        }
        self.realisations += 1;
        Ok(())
    }

    /// Associative merge; the result depends only on the multiset of
    /// realisations up to floating-point summation order.
    pub fn merge(&mut self, other: &EmpiricalSpectrum) -> Result<()> {
        if self.grid != other.grid || self.window != other.window || self.band != other.band {
            return Err(Error::invalid("spectrum", "grid, window or band differ"));
        }
        self.intensity.merge(&other.intensity);
        self.background.merge(&other.background);
        self.excess.merge(&other.excess);
        self.realisations += other.realisations;
        Ok(())
    }
}

/// Atom weight at the grid point nearest `k0`, with standard error.
pub fn bragg_weight(spec: &EmpiricalSpectrum, k0: &[f64], atom_tol: f64) -> Result<(f64, f64)> {
    let (i, d) = nearest(spec, k0)?;
    if d > atom_tol {
        return Err(Error::OffGrid(d));
    }
    Ok(spec.atom(i))
}

/// Density estimate at grid point `k`, refused within `radius` of any of
/// `excluded_atoms`.
pub fn ac_density_estimate(spec: &EmpiricalSpectrum, k: &[f64], excluded_atoms: &[Vec<f64>], radius: f64) -> Result<(f64, f64)> {
    if excluded_atoms.iter().any(|a| distance(a, k) < radius) {
        return Err(Error::InsideExclusion);
    }
    let (i, d) = nearest(spec, k)?;
    if d > 1e-9 * (1.0 + k.iter().fold(0.0, |m: f64, v| m.max(v.abs()))) {
        return Err(Error::OffGrid(d));
    }
    Ok(spec.background(i))
}

fn nearest(spec: &EmpiricalSpectrum, k: &[f64]) -> Result<(usize, f64)> {
    if k.len() != spec.grid.dim() {
        return Err(Error::DimensionMismatch { expected: spec.grid.dim(), found: k.len() });
    }
    spec.grid.nearest(k).ok_or(Error::Empty("grid"))
}

/// A grid point whose atom estimate stands out of the noise.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomCandidate {
    pub index: usize,
    pub k: Vec<f64>,
    pub weight: f64,
    pub stderr: f64,
    pub z: f64,
}

/// Grid points whose atom estimate exceeds `z_threshold` standard errors.
pub fn atom_scan(spec: &EmpiricalSpectrum, z_threshold: f64) -> Vec<AtomCandidate> {
    (0..spec.grid.len())
        .filter_map(|i| {
            let (w, se) = spec.atom(i);
            let z = if se > 0.0 { w / se } else if w > 0.0 { f64::INFINITY } else { 0.0 };
            (z > z_threshold).then(|| AtomCandidate { index: i, k: spec.grid.point(i).to_vec(), weight: w, stderr: se, z })
        })
        .collect()
}
