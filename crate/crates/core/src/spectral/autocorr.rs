//! Direct-space estimators: binned autocorrelation, Palm first moment and
//! the edge-corrected radial product density.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::measures::{unit_ball_volume, WeightedPointSet, WindowKind};
use crate::{Error, Result};

const MAX_PAIRS: u64 = 10_000_000_000;

/// Histogram of difference vectors on cube bins of side `bin_width`
/// centred at `j·bin_width`, `j ∈ {−M, …, M}^d`, averaged over realisations.
///
/// Each realisation contributes bin masses `Σ w_x conj(w_y)/vol` over
/// ordered pairs `x ≠ y`; the atom at 0 is kept apart.
#[derive(Clone, Debug, PartialEq)]
pub struct AcHistogram {
    dim: usize,
    bin_width: f64,
    half_bins: usize,
    sum: Vec<Complex64>,
    sum_sq: Vec<f64>,
    atom_sum: f64,
    atom_sum_sq: f64,
    realisations: usize,
}

impl AcHistogram {
    pub fn new(dim: usize, bin_width: f64, max_lag: f64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::invalid("bin_width", "must be positive and finite"));
        }
        if !(max_lag >= 0.0) || !max_lag.is_finite() {
            return Err(Error::invalid("max_lag", "must be nonnegative and finite"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        let half_bins = (max_lag / bin_width).ceil() as usize;
        let n = (2 * half_bins + 1).pow(dim as u32);
        Ok(Self {
            dim,
            bin_width,
            half_bins,
            sum: vec![Complex64::new(0.0, 0.0); n],
            sum_sq: vec![0.0; n],
            atom_sum: 0.0,
            atom_sum_sq: 0.0,
            realisations: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn bin_volume(&self) -> f64 {
        self.bin_width.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    pub fn realisations(&self) -> usize {
        self.realisations
    }

    /// Largest `|z_i|` covered by the bins.
    pub fn reach(&self) -> f64 {
        (self.half_bins as f64 + 0.5) * self.bin_width
    }

    /// Flat index of the bin containing `z`, if any.
    pub fn index_of(&self, z: &[f64]) -> Option<usize> {
        let side = 2 * self.half_bins + 1;
        let mut idx = 0usize;
        for zi in z.iter().rev() {
            // Rounding half away from zero keeps index(−z) = −index(z).
            let j = (zi / self.bin_width).round();
            if j.abs() > self.half_bins as f64 {
                return None;
            }
            idx = idx * side + (j as i64 + self.half_bins as i64) as usize;
        }
        Some(idx)
    }

    pub fn bin_center(&self, index: usize) -> Vec<f64> {
        let side = 2 * self.half_bins + 1;
        let mut rest = index;
        (0..self.dim)
            .map(|_| {
                let j = (rest % side) as i64 - self.half_bins as i64;
                rest /= side;
                j as f64 * self.bin_width
            })
            .collect()
    }

    /// Mean mass per bin.
    pub fn mass(&self, index: usize) -> Complex64 {
        self.sum[index] / self.realisations.max(1) as f64
    }

    /// Mean mass per bin divided by the bin volume.
    pub fn density(&self, index: usize) -> Complex64 {
        self.mass(index) / self.bin_volume()
    }

    /// Standard error of the real part of [`density`](Self::density) from
    /// the spread between realisations.
    pub fn density_stderr(&self, index: usize) -> f64 {
        stderr(self.sum[index].re, self.sum_sq[index], self.realisations) / self.bin_volume()
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atom_sum / self.realisations.max(1) as f64
    }

    pub fn atom_stderr(&self) -> f64 {
        stderr(self.atom_sum, self.atom_sum_sq, self.realisations)
    }

    /// `(bin centre, density, stderr)` rows in index order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<f64>, Complex64, f64)> + '_ {
        (0..self.len()).map(|i| (self.bin_center(i), self.density(i), self.density_stderr(i)))
    }

    fn compatible(&self, other: &Self) -> bool {
        self.dim == other.dim && self.bin_width == other.bin_width && self.half_bins == other.half_bins
    }

    /// Adds one realisation given its bin masses and atom.
    fn add_realisation(&mut self, masses: &[Complex64], atom: f64) {
        for ((s, q), m) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(masses) {
            *s += m;
            *q += m.re * m.re;
        }
        self.atom_sum += atom;
        self.atom_sum_sq += atom * atom;
        self.realisations += 1;
    }

    /// Associative merge of accumulated realisations.
    pub fn merge(&mut self, other: &AcHistogram) -> Result<()> {
        if !self.compatible(other) {
            return Err(Error::invalid("histogram", "bins differ"));
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.atom_sum += other.atom_sum;
        self.atom_sum_sq += other.atom_sum_sq;
        self.realisations += other.realisations;
        Ok(())
    }
}

pub(crate) fn stderr(sum: f64, sum_sq: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

/// Indices sorted by the first coordinate.
fn sorted_by_first(ps: &WeightedPointSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| ps.position(a)[0].total_cmp(&ps.position(b)[0]));
    order
}

/// Calls `f(i, j)` for every unordered pair `i < j` (in sorted order) with
/// `|x_i[0] − x_j[0]| < reach`.
fn for_each_close_pair(ps: &WeightedPointSet, order: &[usize], reach: f64, mut f: impl FnMut(usize, usize)) {
    for (a, &i) in order.iter().enumerate() {
        let xi = ps.position(i)[0];
        for &j in &order[a + 1..] {
            if ps.position(j)[0] - xi >= reach {
                break;
            }
            f(i, j);
        }
    }
}

fn count_close_pairs(ps: &WeightedPointSet, order: &[usize], reach: f64) -> u64 {
    let mut hi = 0;
    let mut total = 0u64;
    for a in 0..order.len() {
        let xi = ps.position(order[a])[0];
        hi = hi.max(a + 1);
        while hi < order.len() && ps.position(order[hi])[0] - xi < reach {
            hi += 1;
        }
        total += (hi - a - 1) as u64;
    }
    2 * total
}

/// Autocorrelation histogram of a single realisation: ordered pairs of
/// distinct points, both in the window, binned by `x − y` up to `max_lag`
/// per coordinate.
pub fn empirical_autocorr(ps: &WeightedPointSet, bin_width: f64, max_lag: f64) -> Result<AcHistogram> {
    let mut hist = AcHistogram::new(ps.dim(), bin_width, max_lag)?;
    let vol = ps.window().volume();
    let order = sorted_by_first(ps);
    let reach = hist.reach();
    let pairs = count_close_pairs(ps, &order, reach);
    if pairs > MAX_PAIRS {
        return Err(Error::TooManyPairs { pairs });
    }
    let mut masses = vec![Complex64::new(0.0, 0.0); hist.len()];
    let dim = ps.dim();
    let mut z = vec![0.0; dim];
    let mut neg = vec![0.0; dim];
    for_each_close_pair(ps, &order, reach, |i, j| {
        for a in 0..dim {
            z[a] = ps.position(i)[a] - ps.position(j)[a];
            neg[a] = -z[a];
        }
        if let (Some(p), Some(q)) = (hist.index_of(&z), hist.index_of(&neg)) {
            let w = ps.weights()[i] * ps.weights()[j].conj() / vol;
            masses[p] += w;
            masses[q] += w.conj();
        }
    });
    let atom = ps.weights().iter().map(|w| w.norm_sqr()).sum::<f64>() / vol;
    hist.add_realisation(&masses, atom);
    Ok(hist)
}

/// Every difference `x − y` (including `x = y`) with mass
/// `w_x conj(w_y)/vol`, unmerged. Quadratic in the number of points.
pub fn pair_difference_measure(ps: &WeightedPointSet) -> Vec<(Vec<f64>, Complex64)> {
    let vol = ps.window().volume();
    let mut out = Vec::with_capacity(ps.len() * ps.len());
    for (x, wx) in ps.iter() {
        for (y, wy) in ps.iter() {
            let z = x.iter().zip(y).map(|(a, b)| a - b).collect();
            out.push((z, wx * wy.conj() / vol));
        }
    }
    out
}

/// Palm first moment: for every point `x` of the window eroded by the
/// neighbourhood size, the histogram of `y − x` over the other points,
/// normalised per centre and averaged over realisations. Only bins lying
/// completely within `max_radius` (sup norm) are kept, and the atom at 0
/// is 1 by construction.
pub fn palm_first_moment(realisations: &[WeightedPointSet], bin_width: f64, max_radius: f64) -> Result<AcHistogram> {
    let first = realisations.first().ok_or(Error::Empty("realisations"))?;
    let dim = first.dim();
    let half_bins = ((max_radius / bin_width) - 0.5).floor();
    if half_bins < 0.0 {
        return Err(Error::invalid("max_radius", "must be at least half a bin width"));
    }
    let mut hist = AcHistogram::new(dim, bin_width, half_bins * bin_width)?;
    let reach = hist.reach();
    for ps in realisations {
        if ps.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: ps.dim() });
        }
        let margin = match ps.window().kind() {
            WindowKind::Cube => reach,
            WindowKind::Ball => reach * (dim as f64).sqrt(),
        };
        let Some(inner) = ps.window().eroded(margin) else {
            continue;
        };
        let order = sorted_by_first(ps);
        let mut masses = vec![Complex64::new(0.0, 0.0); hist.len()];
        let mut centres = 0usize;
        let mut z = vec![0.0; dim];
        let mut lo = 0;
        for (a, &i) in order.iter().enumerate() {
            let x = ps.position(i);
            if !inner.contains(x) {
                continue;
            }
            centres += 1;
            while ps.position(order[lo])[0] <= x[0] - reach {
                lo += 1;
            }
            for (b, &j) in order.iter().enumerate().skip(lo) {
                let y = ps.position(j);
                if y[0] - x[0] >= reach {
                    break;
                }
                if b == a {
                    continue;
                }
                for d in 0..dim {
                    z[d] = y[d] - x[d];
                }
                if let Some(p) = hist.index_of(&z) {
                    masses[p] += Complex64::new(1.0, 0.0);
                }
            }
        }
        if centres == 0 {
            continue;
        }
        for m in masses.iter_mut() {
            *m /= centres as f64;
        }
        hist.add_realisation(&masses, 1.0);
    }
    if hist.realisations() == 0 {
        return Err(Error::Empty("points in the eroded window"));
    }
    Ok(hist)
}

/// Edge-corrected estimate of the second-order product density `ρ₂(r)` on
/// the shells `[edges[i], edges[i+1])` for a cube window:
/// `Σ_{x≠y} 1[|x−y| ∈ shell] / vol(W ∩ (W − (x−y)))` divided by the
/// shell volume.
pub fn radial_product_density(ps: &WeightedPointSet, edges: &[f64]) -> Result<Vec<f64>> {
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("edges", "must be increasing, nonnegative, at least two"));
    }
    if ps.window().kind() != WindowKind::Cube {
        return Err(Error::invalid("window", "edge correction needs a cube window"));
    }
    let dim = ps.dim();
    let bins = edges.len() - 1;
    let r_max = edges[bins];
    let r2: Vec<f64> = edges.iter().map(|e| e * e).collect();
    let order = sorted_by_first(ps);
    let mut sums = vec![0.0; bins];
    let mut z = vec![0.0; dim];
    for_each_close_pair(ps, &order, r_max, |i, j| {
        let mut d2 = 0.0;
        for a in 0..dim {
            z[a] = ps.position(i)[a] - ps.position(j)[a];
            d2 += z[a] * z[a];
        }
        if d2 >= r2[0] && d2 < r2[bins] {
            let b = r2.partition_point(|e| *e <= d2) - 1;
            let overlap = ps.window().overlap_volume(&z).expect("cube window");
            // Both orders of the pair.
            sums[b] += 2.0 / overlap;
        }
    });
    let d = dim as i32;
    Ok(sums
        .iter()
        .enumerate()
        .map(|(b, s)| s / (unit_ball_volume(dim) * (edges[b + 1].powi(d) - edges[b].powi(d))))
        .collect())
}

/// Smallest distance between two distinct points, `None` below two points.
pub fn min_separation(ps: &WeightedPointSet) -> Option<f64> {
    if ps.len() < 2 {
        return None;
    }
    let order = sorted_by_first(ps);
    let mut best = f64::INFINITY;
    for (a, &i) in order.iter().enumerate() {
        let x = ps.position(i);
        for &j in &order[a + 1..] {
            let y = ps.position(j);
            if y[0] - x[0] >= best {
                break;
            }
            best = best.min(crate::measures::distance(x, y));
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AveragingWindow;
    use crate::processes::sample_poisson;
    use crate::rng::{stream, Purpose};

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn separation_matches_brute_force() {
        let w = AveragingWindow::cube(2, 3.0).unwrap();
        let ps = sample_poisson(3.0, &w, &mut stream(8, 0, Purpose::Process));
        let mut best = f64::INFINITY;
        for (i, x) in ps.positions().enumerate() {
            for y in ps.positions().skip(i + 1) {
                best = best.min(((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt());
            }
        }
        assert_eq!(min_separation(&ps), Some(best));
        assert_eq!(min_separation(&WeightedPointSet::new(w)), None);
    }

    #[test]
    fn single_point() {
        let w = AveragingWindow::interval(10.0).unwrap();
        let ps = WeightedPointSet::from_points(w, [(&[3.0][..], one())]).unwrap();
        let h = empirical_autocorr(&ps, 0.5, 5.0).unwrap();
        assert_eq!(h.atom_at_zero(), 0.1);
        assert!(h.rows().all(|(_, d, _)| d == Complex64::new(0.0, 0.0)));
    }

    fn integer_segment() -> WeightedPointSet {
        // Z ∩ [0, 100) in the window (−0.5, 99.5).
        let w = AveragingWindow::cube(1, 50.0).unwrap().with_center(&[49.5]).unwrap();
        let mut ps = WeightedPointSet::new(w);
        for n in 0..100 {
            ps.push(&[n as f64], one()).unwrap();
        }
        ps
    }

    #[test]
    fn integer_comb_edge_bias_is_exact() {
        let ps = integer_segment();
        let h = empirical_autocorr(&ps, 0.1, 100.0).unwrap();
        assert_eq!(h.atom_at_zero(), 1.0);
        for (z, _, _) in h.rows() {
            let i = h.index_of(&z).unwrap();
            let m = h.mass(i);
            let n = (z[0]).round();
            if (z[0] - n).abs() < 1e-9 && n != 0.0 && n.abs() < 100.0 {
                assert!((m.re - (100.0 - n.abs()) / 100.0).abs() < 1e-12, "z = {n}");
                assert!(((1.0 - m.re) - n.abs() / 100.0).abs() < 1e-12);
                assert_eq!(m.im, 0.0);
            } else {
                assert_eq!(m, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let w = AveragingWindow::interval(20.0).unwrap();
        let mut ps = WeightedPointSet::new(w);
        let mut rng = stream(3, 0, Purpose::Process);
        let base = sample_poisson(1.0, &AveragingWindow::interval(20.0).unwrap(), &mut rng);
        for (i, x) in base.positions().enumerate() {
            ps.push(x, Complex64::new(1.0 + i as f64 * 0.1, -0.3 * i as f64)).unwrap();
        }
        let h = empirical_autocorr(&ps, 0.25, 6.0).unwrap();
        for (z, d, _) in h.rows() {
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            let j = h.index_of(&neg).unwrap();
            assert_eq!(h.density(j), d.conj());
        }
    }

    #[test]
    fn two_dimensional_bins() {
        let w = AveragingWindow::cube(2, 5.0).unwrap();
        let ps = WeightedPointSet::from_points(w, [(&[0.0, 0.0][..], one()), (&[1.0, -2.0][..], one())]).unwrap();
        let h = empirical_autocorr(&ps, 0.5, 3.0).unwrap();
        let i = h.index_of(&[1.0, -2.0]).unwrap();
        assert_eq!(h.bin_center(i), vec![1.0, -2.0]);
        assert_eq!(h.mass(i).re, 0.01);
        assert_eq!(h.mass(h.index_of(&[-1.0, 2.0]).unwrap()).re, 0.01);
        let total: f64 = (0..h.len()).map(|i| h.mass(i).re).sum();
        assert_eq!(total, 0.02);
    }

    #[test]
    fn poisson_palm_is_flat() {
        let w = AveragingWindow::interval(2000.0).unwrap();
        let reals: Vec<WeightedPointSet> = (0..20)
            .map(|r| sample_poisson(1.0, &w, &mut stream(4, r, Purpose::Process)))
            .collect();
        let palm = palm_first_moment(&reals, 0.5, 5.0).unwrap();
        assert_eq!(palm.atom_at_zero(), 1.0);
        let mean: f64 = (0..palm.len()).map(|i| palm.density(i).re).sum::<f64>() / palm.len() as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn palm_matches_brute_force() {
        let w = AveragingWindow::cube(2, 4.0).unwrap();
        let ps = sample_poisson(2.0, &w, &mut stream(5, 0, Purpose::Process));
        let palm = palm_first_moment(core::slice::from_ref(&ps), 0.5, 1.6).unwrap();
        // Bins j·0.5 with |j| ≤ 2 reach 1.25 ≤ 1.6; erosion by the reach.
        let inner = w.eroded(1.25).unwrap();
        let mut counts = vec![0.0; palm.len()];
        let mut centres = 0.0;
        for (i, x) in ps.positions().enumerate() {
            if !inner.contains(x) {
                continue;
            }
            centres += 1.0;
            for (j, y) in ps.positions().enumerate() {
                if i != j {
                    let z = [y[0] - x[0], y[1] - x[1]];
                    if let Some(b) = palm.index_of(&z) {
                        counts[b] += 1.0;
                    }
                }
            }
        }
        for b in 0..palm.len() {
            assert!((palm.mass(b).re - counts[b] / centres).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_is_associative_and_matches_sequential_adds() {
        let w = AveragingWindow::interval(100.0).unwrap();
        let hists: Vec<AcHistogram> = (0..3)
            .map(|r| {
                let ps = sample_poisson(1.0, &w, &mut stream(6, r, Purpose::Process));
                empirical_autocorr(&ps, 0.5, 3.0).unwrap()
            })
            .collect();
        let mut left = hists[0].clone();
        left.merge(&hists[1]).unwrap();
        left.merge(&hists[2]).unwrap();
        let mut right = hists[1].clone();
        right.merge(&hists[2]).unwrap();
        let mut other = hists[0].clone();
        other.merge(&right).unwrap();
        for i in 0..left.len() {
            assert!((left.mass(i) - other.mass(i)).norm() < 1e-15);
        }
        assert_eq!(left.realisations(), 3);
    }

    #[test]
    fn product_density_of_poisson_is_rho_squared() {
        let w = AveragingWindow::cube(2, 15.0).unwrap();
        let edges = [0.5, 1.0, 1.5, 2.0];
        let n = 40;
        let mut acc = vec![0.0; 3];
        for r in 0..n {
            let ps = sample_poisson(1.0, &w, &mut stream(7, r, Purpose::Process));
            for (a, v) in acc.iter_mut().zip(radial_product_density(&ps, &edges).unwrap()) {
                *a += v / n as f64;
            }
        }
        for v in acc {
            assert!((v - 1.0).abs() < 0.05, "{v}");
        }
    }
}
