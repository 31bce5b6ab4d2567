//! Realisations, averaging windows, finite clusters and spectral measures.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    Ball,
    Cube,
}

/// An open ball or open cube in `R^d`, used as one member of a nested
/// averaging sequence. `scale` is the radius (ball) or half-width (cube).
///
/// Membership is strict: points on the boundary are outside.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingWindow {
    kind: WindowKind,
    scale: f64,
    center: Vec<f64>,
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    core::f64::consts::PI.powf(half) / libm::tgamma(half + 1.0)
}

impl AveragingWindow {
    pub fn new(kind: WindowKind, dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        Ok(Self {
            kind,
            scale,
            center: vec![0.0; dim],
        })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(WindowKind::Cube, dim, half_width)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(WindowKind::Ball, dim, radius)
    }

    /// The open interval `(0, length)`.
    pub fn interval(length: f64) -> Result<Self> {
        Self::cube(1, length / 2.0)?.with_center(&[length / 2.0])
    }

    pub fn with_center(mut self, center: &[f64]) -> Result<Self> {
        if center.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: center.len(),
            });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.center = center.to_vec();
        Ok(self)
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        match self.kind {
            WindowKind::Cube => (2.0 * self.scale).powi(d),
            WindowKind::Ball => unit_ball_volume(self.dim()) * self.scale.powi(d),
        }
    }

    /// Edge length of the bounding cube; its inverse is the spacing of the
    /// natural Fourier frequencies of the window.
    pub fn side_length(&self) -> f64 {
        2.0 * self.scale
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self.kind {
            WindowKind::Cube => x
                .iter()
                .zip(&self.center)
                .all(|(xi, ci)| (xi - ci).abs() < self.scale),
            WindowKind::Ball => {
                let r2: f64 = x
                    .iter()
                    .zip(&self.center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                r2 < self.scale * self.scale
            }
        }
    }

    /// Same shape and centre, scale enlarged by `by` (which may be negative).
    /// Returns `None` when the result would be empty.
    pub fn dilated(&self, by: f64) -> Option<Self> {
        let scale = self.scale + by;
        (scale > 0.0).then(|| Self {
            kind: self.kind,
            scale,
            center: self.center.clone(),
        })
    }

    pub fn eroded(&self, by: f64) -> Option<Self> {
        self.dilated(-by)
    }

    /// Volume of the `t`-thickened boundary `{x : dist(x, boundary) <= t}`.
    /// For the cube this uses the sup-norm thickening, which contains the
    /// Euclidean one.
    pub fn boundary_layer_volume(&self, t: f64) -> f64 {
        let d = self.dim() as i32;
        let outer = self.scale + t;
        let inner = (self.scale - t).max(0.0);
        match self.kind {
            WindowKind::Cube => (2.0 * outer).powi(d) - (2.0 * inner).powi(d),
            WindowKind::Ball => unit_ball_volume(self.dim()) * (outer.powi(d) - inner.powi(d)),
        }
    }

    /// Lower and upper corners of the bounding cube.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().map(|c| c - self.scale).collect();
        let hi = self.center.iter().map(|c| c + self.scale).collect();
        (lo, hi)
    }

    /// `vol(W ∩ (W - z))`, the translation edge-correction factor.
    /// Closed form for cubes only.
    pub fn overlap_volume(&self, z: &[f64]) -> Option<f64> {
        match self.kind {
            WindowKind::Cube => Some(
                z.iter()
                    .map(|zi| (2.0 * self.scale - zi.abs()).max(0.0))
                    .product(),
            ),
            WindowKind::Ball => None,
        }
    }
}

/// A finite realisation: points with complex weights inside a window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointSet {
    window: AveragingWindow,
    coords: Vec<f64>,
    weights: Vec<Complex64>,
}

impl WeightedPointSet {
    pub fn new(window: AveragingWindow) -> Self {
        Self {
            window,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn with_capacity(window: AveragingWindow, n: usize) -> Self {
        let d = window.dim();
        Self {
            window,
            coords: Vec::with_capacity(n * d),
            weights: Vec::with_capacity(n),
        }
    }

    pub fn from_points<'a, I>(window: AveragingWindow, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], Complex64)>,
    {
        let mut ps = Self::new(window);
        for (x, w) in points {
            ps.push(x, w)?;
        }
        Ok(ps)
    }

    pub fn push(&mut self, x: &[f64], w: Complex64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) || !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::NonFinite);
        }
        if !self.window.contains(x) {
            return Err(Error::OutsideWindow);
        }
        self.push_unchecked(x, w);
        Ok(())
    }

    /// Adds the point if it lies in the window; returns whether it did.
    pub(crate) fn push_if_inside(&mut self, x: &[f64], w: Complex64) -> bool {
        let inside = self.window.contains(x);
        if inside {
            self.push_unchecked(x, w);
        }
        inside
    }

    pub(crate) fn push_unchecked(&mut self, x: &[f64], w: Complex64) {
        debug_assert!(self.window.contains(x));
        self.coords.extend_from_slice(x);
        self.weights.push(w);
    }

    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    /// Flat coordinate buffer, `len() * dim()` values in point order.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], Complex64)> + '_ {
        self.positions().zip(self.weights.iter().copied())
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|w| *w == Complex64::new(1.0, 0.0))
    }

    pub fn restrict(&self, w: &AveragingWindow) -> Result<Self> {
        restrict(self, w)
    }
}

/// The points of `ps` strictly inside `w`, weights unchanged. The result
/// carries `w` as its window.
pub fn restrict(ps: &WeightedPointSet, w: &AveragingWindow) -> Result<WeightedPointSet> {
    if ps.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            found: w.dim(),
        });
    }
    let mut out = WeightedPointSet::new(w.clone());
    for (x, wt) in ps.iter() {
        out.push_if_inside(x, wt);
    }
    Ok(out)
}

/// A realisation of a finite (possibly signed or complex) cluster measure,
/// as offsets relative to its centre.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FiniteCluster {
    dim: usize,
    offsets: Vec<f64>,
    weights: Vec<Complex64>,
}

impl FiniteCluster {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            offsets: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// `w·δ_0`.
    pub fn point(dim: usize, w: Complex64) -> Self {
        let mut c = Self::new(dim);
        c.offsets.extend(core::iter::repeat_n(0.0, dim));
        c.weights.push(w);
        c
    }

    pub fn from_parts(dim: usize, parts: &[(Vec<f64>, Complex64)]) -> Result<Self> {
        let mut c = Self::new(dim);
        for (x, w) in parts {
            c.push(x, *w)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, offset: &[f64], w: Complex64) -> Result<()> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: offset.len(),
            });
        }
        if offset.iter().any(|v| !v.is_finite()) || !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::NonFinite);
        }
        self.offsets.extend_from_slice(offset);
        self.weights.push(w);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Complex64)> + '_ {
        self.offsets
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter().copied())
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.weights.iter().all(|w| w.im == 0.0)
    }

    /// `Σ w e^{-2πi k·x}`.
    pub fn fourier(&self, k: &[f64]) -> Complex64 {
        self.iter()
            .map(|(x, w)| w * phase(k, x))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}

/// `e^{-2πi k·x}`.
#[inline]
pub fn phase(k: &[f64], x: &[f64]) -> Complex64 {
    let dot: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
    let (s, c) = (-core::f64::consts::TAU * dot).sin_cos();
    Complex64::new(c, s)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Pure-point part of a spectral measure.
#[derive(Clone)]
pub enum PurePoint {
    /// An explicit finite list of `(position, weight)` atoms.
    Finite(Vec<(Vec<f64>, f64)>),
    /// Atoms on `spacing·Z^d`, weight given per atom. Atoms whose weight is
    /// zero are absent.
    Lattice { spacing: f64, weight: DensityFn },
}

impl fmt::Debug for PurePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PurePoint::Finite(atoms) => f.debug_tuple("Finite").field(atoms).finish(),
            PurePoint::Lattice { spacing, .. } => f
                .debug_struct("Lattice")
                .field("spacing", spacing)
                .finish_non_exhaustive(),
        }
    }
}

/// Wavevectors where the density formula is undefined.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularSet {
    None,
    Points(Vec<Vec<f64>>),
    Lattice { spacing: f64 },
}

/// Pure point atoms plus an absolutely continuous density. Singular
/// continuous parts are not representable; none of the implemented models
/// has one.
#[derive(Clone)]
pub struct SpectralModel {
    dim: usize,
    label: String,
    pure_point: PurePoint,
    density: DensityFn,
    singular: SingularSet,
    exact: bool,
}

impl fmt::Debug for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralModel")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("pure_point", &self.pure_point)
            .field("singular", &self.singular)
            .field("exact", &self.exact)
            .finish_non_exhaustive()
    }
}

/// Result of [`spectral_eval`]. `ac` is `None` on the singular set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralValue {
    pub pp_weight: f64,
    pub ac: Option<f64>,
}

impl SpectralModel {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        pure_point: PurePoint,
        density: DensityFn,
        singular: SingularSet,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            pure_point,
            density,
            singular,
            exact: true,
        }
    }

    /// Marks the model as numerically approximate (e.g. quadrature inside
    /// the density).
    pub fn approximate(mut self) -> Self {
        self.exact = false;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn pure_point(&self) -> &PurePoint {
        &self.pure_point
    }

    pub fn singular(&self) -> &SingularSet {
        &self.singular
    }

    pub fn density_fn(&self) -> &DensityFn {
        &self.density
    }

    /// Raw density formula; callers are responsible for avoiding the
    /// singular set.
    pub fn density(&self, k: &[f64]) -> f64 {
        (self.density)(k)
    }

    pub fn is_singular(&self, k: &[f64], tol: f64) -> bool {
        match &self.singular {
            SingularSet::None => false,
            SingularSet::Points(pts) => pts.iter().any(|p| distance(p, k) <= tol),
            SingularSet::Lattice { spacing } => {
                let nearest: Vec<f64> = k.iter().map(|ki| (ki / spacing).round() * spacing).collect();
                distance(&nearest, k) <= tol
            }
        }
    }

    /// All atoms with positive weight within distance `tol` of `k`.
    pub fn atoms_near(&self, k: &[f64], tol: f64) -> Vec<(Vec<f64>, f64)> {
        match &self.pure_point {
            PurePoint::Finite(atoms) => atoms
                .iter()
                .filter(|(p, w)| *w > 0.0 && distance(p, k) <= tol)
                .cloned()
                .collect(),
            PurePoint::Lattice { spacing, weight } => {
                let lo: Vec<i64> = k.iter().map(|ki| ((ki - tol) / spacing).ceil() as i64).collect();
                let hi: Vec<i64> = k.iter().map(|ki| ((ki + tol) / spacing).floor() as i64).collect();
                let mut out = Vec::new();
                for_each_int_point(&lo, &hi, |n| {
                    let p: Vec<f64> = n.iter().map(|&ni| ni as f64 * spacing).collect();
                    if distance(&p, k) <= tol {
                        let w = weight(&p);
                        if w > 0.0 {
                            out.push((p, w));
                        }
                    }
                });
                out
            }
        }
    }

    /// All atoms with positive weight in the cube `|k_i| <= half_width`.
    pub fn atoms_in_box(&self, half_width: f64) -> Vec<(Vec<f64>, f64)> {
        match &self.pure_point {
            PurePoint::Finite(atoms) => atoms
                .iter()
                .filter(|(p, w)| *w > 0.0 && p.iter().all(|x| x.abs() <= half_width))
                .cloned()
                .collect(),
            PurePoint::Lattice { spacing, weight } => {
                let m = (half_width / spacing).floor() as i64;
                let lo = vec![-m; self.dim];
                let hi = vec![m; self.dim];
                let mut out = Vec::new();
                for_each_int_point(&lo, &hi, |n| {
                    let p: Vec<f64> = n.iter().map(|&ni| ni as f64 * spacing).collect();
                    let w = weight(&p);
                    if w > 0.0 {
                        out.push((p, w));
                    }
                });
                out
            }
        }
    }

    /// Rescales every atom weight by `factor(k)` and replaces the density.
    pub(crate) fn transformed(
        &self,
        label: String,
        factor: DensityFn,
        density: DensityFn,
    ) -> SpectralModel {
        let pure_point = match &self.pure_point {
            PurePoint::Finite(atoms) => PurePoint::Finite(
                atoms
                    .iter()
                    .map(|(p, w)| (p.clone(), w * factor(p)))
                    .collect(),
            ),
            PurePoint::Lattice { spacing, weight } => {
                let weight = weight.clone();
                PurePoint::Lattice {
                    spacing: *spacing,
                    weight: Arc::new(move |k: &[f64]| weight(k) * factor(k)),
                }
            }
        };
        SpectralModel {
            dim: self.dim,
            label,
            pure_point,
            density,
            singular: self.singular.clone(),
            exact: self.exact,
        }
    }

    pub(crate) fn with_pure_point(mut self, pure_point: PurePoint) -> Self {
        self.pure_point = pure_point;
        self
    }
}

/// Pure-point weight and density of `m` at `k`.
///
/// Fails when more than one atom lies within `atom_tol` of `k`, which means
/// the tolerance is too coarse for the model.
pub fn spectral_eval(m: &SpectralModel, k: &[f64], atom_tol: f64) -> Result<SpectralValue> {
    if k.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: k.len(),
        });
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let atoms = m.atoms_near(k, atom_tol);
    if atoms.len() > 1 {
        return Err(Error::AmbiguousAtoms { count: atoms.len() });
    }
    let pp_weight = atoms.first().map_or(0.0, |(_, w)| *w);
    let ac = (!m.is_singular(k, atom_tol)).then(|| m.density(k));
    Ok(SpectralValue { pp_weight, ac })
}

/// Calls `f` for every integer vector in the box `lo..=hi`.
pub(crate) fn for_each_int_point(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut cur = lo.to_vec();
    loop {
        f(&cur);
        let mut axis = 0;
        loop {
            if axis == cur.len() {
                return;
            }
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = lo[axis];
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn window_volumes() {
        assert_eq!(AveragingWindow::cube(1, 1.0).unwrap().volume(), 2.0);
        assert_eq!(AveragingWindow::cube(2, 2.0).unwrap().volume(), 16.0);
        let b = AveragingWindow::ball(3, 1.0).unwrap().volume();
        assert!((b - 4.0 * PI / 3.0).abs() < 1e-14);
        let disc = AveragingWindow::ball(2, 2.0).unwrap().volume();
        assert!((disc - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn window_rejects_bad_parameters() {
        assert!(AveragingWindow::cube(0, 1.0).is_err());
        assert!(AveragingWindow::cube(1, 0.0).is_err());
        assert!(AveragingWindow::ball(2, f64::NAN).is_err());
    }

    #[test]
    fn boundary_points_are_outside() {
        let w = AveragingWindow::cube(1, 1.0).unwrap();
        assert!(w.contains(&[0.999]));
        assert!(!w.contains(&[1.0]));
        assert!(!w.contains(&[-1.0]));
        let b = AveragingWindow::ball(2, 1.0).unwrap();
        assert!(!b.contains(&[1.0, 0.0]));
        assert!(b.contains(&[0.6, 0.6]));
        assert!(!b.contains(&[0.8, 0.8]));
    }

    #[test]
    fn van_hove_ratio_vanishes() {
        for kind in [WindowKind::Ball, WindowKind::Cube] {
            let mut last = f64::INFINITY;
            for scale in [10.0, 100.0, 1000.0, 10000.0] {
                let w = AveragingWindow::new(kind, 3, scale).unwrap();
                let ratio = w.boundary_layer_volume(2.0) / w.volume();
                assert!(ratio < last);
                last = ratio;
            }
            assert!(last < 1e-2);
        }
    }

    #[test]
    fn restrict_examples() {
        let w = AveragingWindow::cube(1, 5.0).unwrap();
        let ps = WeightedPointSet::from_points(w, [(&[0.5][..], one()), (&[3.0][..], one())]).unwrap();
        let unit = AveragingWindow::cube(1, 1.0).unwrap();
        let r = restrict(&ps, &unit).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.position(0), &[0.5]);

        let empty = WeightedPointSet::new(w_clone(&unit));
        assert!(restrict(&empty, &unit).unwrap().is_empty());

        let inside = restrict(&r, &unit).unwrap();
        assert_eq!(inside, r);

        let plane = AveragingWindow::cube(2, 1.0).unwrap();
        assert!(matches!(
            restrict(&ps, &plane),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn w_clone(w: &AveragingWindow) -> AveragingWindow {
        w.clone()
    }

    #[test]
    fn push_validates() {
        let mut ps = WeightedPointSet::new(AveragingWindow::cube(2, 1.0).unwrap());
        assert_eq!(ps.push(&[2.0, 0.0], one()), Err(Error::OutsideWindow));
        assert_eq!(ps.push(&[0.0], one()), Err(Error::DimensionMismatch { expected: 2, found: 1 }));
        assert_eq!(
            ps.push(&[0.0, 0.0], Complex64::new(f64::INFINITY, 0.0)),
            Err(Error::NonFinite)
        );
        ps.push(&[0.0, 0.5], Complex64::new(0.0, -2.0)).unwrap();
        assert_eq!(ps.len(), 1);
    }

    fn poisson_like(rho: f64) -> SpectralModel {
        SpectralModel::new(
            1,
            "poisson",
            PurePoint::Finite(vec![(vec![0.0], rho * rho)]),
            Arc::new(move |_| rho),
            SingularSet::None,
        )
    }

    #[test]
    fn spectral_eval_examples() {
        let v = spectral_eval(&poisson_like(1.0), &[0.0], 1e-9).unwrap();
        assert_eq!(v, SpectralValue { pp_weight: 1.0, ac: Some(1.0) });
        let v = spectral_eval(&poisson_like(2.0), &[0.7], 1e-9).unwrap();
        assert_eq!(v, SpectralValue { pp_weight: 0.0, ac: Some(2.0) });

        let lattice = SpectralModel::new(
            1,
            "Z",
            PurePoint::Lattice { spacing: 1.0, weight: Arc::new(|_| 1.0) },
            Arc::new(|_| 0.0),
            SingularSet::None,
        );
        let v = spectral_eval(&lattice, &[1.0], 1e-9).unwrap();
        assert_eq!(v, SpectralValue { pp_weight: 1.0, ac: Some(0.0) });
        assert!(matches!(
            spectral_eval(&lattice, &[0.5], 0.6),
            Err(Error::AmbiguousAtoms { count: 2 })
        ));
    }

    #[test]
    fn singular_points_flag_density() {
        let m = SpectralModel::new(
            1,
            "s",
            PurePoint::Finite(vec![(vec![0.0], 1.0)]),
            Arc::new(|_| 1.0),
            SingularSet::Lattice { spacing: 1.5 },
        );
        assert_eq!(spectral_eval(&m, &[3.0], 1e-9).unwrap().ac, None);
        assert_eq!(spectral_eval(&m, &[2.0], 1e-9).unwrap().ac, Some(1.0));
    }

    #[test]
    fn lattice_atoms_in_box_2d() {
        let m = SpectralModel::new(
            2,
            "Z2",
            PurePoint::Lattice { spacing: 0.5, weight: Arc::new(|_| 1.0) },
            Arc::new(|_| 0.0),
            SingularSet::None,
        );
        assert_eq!(m.atoms_in_box(1.0).len(), 25);
    }

    #[test]
    fn cluster_fourier_of_two_points() {
        let c = FiniteCluster::from_parts(1, &[(vec![0.0], one()), (vec![0.5], one())]).unwrap();
        let v = c.fourier(&[1.0]);
        assert!(v.norm() < 1e-15);
        assert_eq!(c.fourier(&[0.0]), Complex64::new(2.0, 0.0));
    }

    proptest::proptest! {
        #[test]
        fn volume_scales_like_power(scale in 0.1f64..50.0, c in 0.1f64..10.0, dim in 1usize..5, ball in proptest::bool::ANY) {
            let kind = if ball { WindowKind::Ball } else { WindowKind::Cube };
            let a = AveragingWindow::new(kind, dim, scale).unwrap().volume();
            let b = AveragingWindow::new(kind, dim, c * scale).unwrap().volume();
            let expected = c.powi(dim as i32) * a;
            proptest::prop_assert!((b - expected).abs() <= 1e-12 * expected);
        }

        #[test]
        fn restrict_is_idempotent(xs in proptest::collection::vec(-10.0f64..10.0, 0..40), half in 0.5f64..9.0) {
            let big = AveragingWindow::cube(1, 10.0).unwrap();
            let mut ps = WeightedPointSet::new(big);
            for x in &xs {
                ps.push(&[*x], Complex64::new(1.0, 0.0)).unwrap();
            }
            let w = AveragingWindow::cube(1, half).unwrap();
            let once = restrict(&ps, &w).unwrap();
            let twice = restrict(&once, &w).unwrap();
            proptest::prop_assert_eq!(once, twice);
        }
    }
}
