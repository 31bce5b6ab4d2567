//! Centre processes: homogeneous Poisson, lattices, Matérn hard-core
//! thinning and the particle gas on the Fibonacci model set.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::measures::{
    distance, for_each_int_point, unit_ball_volume, AveragingWindow, PurePoint, SingularSet, SpectralModel,
    WeightedPointSet, WindowKind,
};
use crate::special::{gauss_legendre, integrate_gl};
use crate::{Error, Result};

/// The golden ratio `τ`.
pub const TAU: f64 = 1.618_033_988_749_895;
/// Its algebraic conjugate `τ' = 1 − τ`.
pub const TAU_CONJ: f64 = 1.0 - TAU;
const SQRT5: f64 = 2.236_067_977_499_79;

/// Occupation probability as a function of the internal coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `f ≡ q` on the window.
    Constant(f64),
    /// `f(y) = 1 − |y − c|/h` on `[c − h, c + h)`.
    Tent,
}

/// Particle gas on the model set `Λ = {m + nτ : m + nτ' ∈ W}` with
/// `W = [center − half_width, center + half_width)`: each point `x` is
/// occupied independently with probability `f(x*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FibonacciGas {
    center: f64,
    half_width: f64,
    profile: Profile,
}

impl FibonacciGas {
    pub fn new(center: f64, half_width: f64, profile: Profile) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() || !center.is_finite() {
            return Err(Error::invalid("window_halfwidth", "must be positive and finite"));
        }
        if let Profile::Constant(q) = profile {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::invalid("profile", "constant profile must lie in [0, 1]"));
            }
        }
        Ok(Self {
            center,
            half_width,
            profile,
        })
    }

    /// The Fibonacci chain window `[−1, τ − 1)`.
    pub fn fibonacci(profile: Profile) -> Result<Self> {
        Self::new((TAU - 2.0) / 2.0, TAU / 2.0, profile)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// `dens(Λ) = vol(W)/√5`.
    pub fn model_set_density(&self) -> f64 {
        2.0 * self.half_width / SQRT5
    }

    pub fn in_window(&self, y: f64) -> bool {
        y >= self.center - self.half_width && y < self.center + self.half_width
    }

    pub fn f(&self, y: f64) -> f64 {
        if !self.in_window(y) {
            return 0.0;
        }
        match self.profile {
            Profile::Constant(q) => q,
            Profile::Tent => 1.0 - (y - self.center).abs() / self.half_width,
        }
    }

    /// `(1/vol W)∫_W f`.
    pub fn mean_f(&self) -> f64 {
        match self.profile {
            Profile::Constant(q) => q,
            Profile::Tent => 0.5,
        }
    }

    /// `V̄ = (1/vol W)∫_W f(1 − f)`.
    pub fn mean_variance(&self) -> f64 {
        match self.profile {
            Profile::Constant(q) => q * (1.0 - q),
            Profile::Tent => 1.0 / 6.0,
        }
    }

    /// `|f̂(κ)|` with `f̂(κ) = ∫_W f(y) e^{−2πiκy} dy`.
    pub fn profile_ft_abs(&self, kappa: f64) -> f64 {
        let h = self.half_width;
        match self.profile {
            Profile::Constant(q) => q * 2.0 * h * sinc(2.0 * kappa * h).abs(),
            Profile::Tent => h * sinc(kappa * h).powi(2),
        }
    }

    /// All `(x, x*)` with `x ∈ [lo, hi]` and `x* ∈ W`, sorted by `x`.
    pub fn enumerate(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let (w_lo, w_hi) = (self.center - self.half_width, self.center + self.half_width);
        // x − x* = n√5.
        let n_lo = ((lo - w_hi) / SQRT5).floor() as i64 - 1;
        let n_hi = ((hi - w_lo) / SQRT5).ceil() as i64 + 1;
        let mut out = Vec::new();
        for n in n_lo..=n_hi {
            let nf = n as f64;
            let m_lo = (w_lo - nf * TAU_CONJ).ceil() as i64 - 1;
            let m_hi = (w_hi - nf * TAU_CONJ).floor() as i64 + 1;
            for m in m_lo..=m_hi {
                let x = m as f64 + nf * TAU;
                let star = m as f64 + nf * TAU_CONJ;
                if x >= lo && x <= hi && self.in_window(star) {
                    out.push((x, star));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// The deterministic comb `Σ f(x*) δ_x` restricted to `w`.
    pub fn weighted_comb(&self, w: &AveragingWindow) -> Result<WeightedPointSet> {
        check_dim(w, 1)?;
        let (lo, hi) = w.bounds();
        let mut out = WeightedPointSet::new(w.clone());
        for (x, star) in self.enumerate(lo[0], hi[0]) {
            out.push_if_inside(&[x], Complex64::new(self.f(star), 0.0));
        }
        Ok(out)
    }

    /// Fourier module points `k = (b − aτ')/√5` with `|k| ≤ cutoff` and
    /// `|k*| ≤ cutoff`, as `(k, k*)` pairs.
    pub fn fourier_module(&self, cutoff: f64) -> Vec<(f64, f64)> {
        // a = k + k*, 2b − a = √5(k − k*).
        let a_max = (2.0 * cutoff).ceil() as i64;
        let mut out = Vec::new();
        for a in -a_max..=a_max {
            let b_lo = ((a as f64 - SQRT5 * 2.0 * cutoff) / 2.0).floor() as i64;
            let b_hi = ((a as f64 + SQRT5 * 2.0 * cutoff) / 2.0).ceil() as i64;
            for b in b_lo..=b_hi {
                let k = (b as f64 - a as f64 * TAU_CONJ) / SQRT5;
                let star = (a as f64 * TAU - b as f64) / SQRT5;
                if k.abs() <= cutoff && star.abs() <= cutoff {
                    out.push((k, star));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CentreProcess {
    Poisson { rho: f64, dim: usize },
    /// The lattice `bZ^d`.
    Lattice { spacing: f64, dim: usize },
    /// Matérn type II hard-core thinning of a Poisson process of intensity
    /// `rho` with exclusion radius `radius`.
    Matern { rho: f64, radius: f64, dim: usize },
    FibonacciGas(FibonacciGas),
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

impl CentreProcess {
    pub fn poisson(rho: f64, dim: usize) -> Result<Self> {
        positive("rho", rho)?;
        nonzero_dim(dim)?;
        Ok(Self::Poisson { rho, dim })
    }

    pub fn lattice(spacing: f64, dim: usize) -> Result<Self> {
        positive("b", spacing)?;
        nonzero_dim(dim)?;
        Ok(Self::Lattice { spacing, dim })
    }

    pub fn matern(rho: f64, radius: f64, dim: usize) -> Result<Self> {
        positive("rho", rho)?;
        positive("R", radius)?;
        if dim < 2 {
            return Err(Error::invalid("dim", "Matérn process requires dim >= 2"));
        }
        Ok(Self::Matern { rho, radius, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Poisson { dim, .. } | Self::Lattice { dim, .. } | Self::Matern { dim, .. } => *dim,
            Self::FibonacciGas(_) => 1,
        }
    }

    /// Mean number of points per unit volume.
    pub fn intensity(&self) -> f64 {
        match self {
            Self::Poisson { rho, .. } => *rho,
            Self::Lattice { spacing, dim } => spacing.powi(-(*dim as i32)),
            Self::Matern { rho, radius, dim } => matern_intensity(*rho, *radius, *dim),
            Self::FibonacciGas(gas) => gas.model_set_density() * gas.mean_f(),
        }
    }
}

fn nonzero_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dim", "must be positive"))
    } else {
        Ok(())
    }
}

fn check_dim(w: &AveragingWindow, dim: usize) -> Result<()> {
    if w.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: w.dim(),
        });
    }
    Ok(())
}

/// `ρ_eff = (1 − e^{−ρv})/v` with `v = vol(B_R)`.
pub fn matern_intensity(rho: f64, radius: f64, dim: usize) -> f64 {
    let v = unit_ball_volume(dim) * radius.powi(dim as i32);
    -(-rho * v).exp_m1() / v
}

/// A uniform point in `w`.
pub fn uniform_in_window<R: Rng + ?Sized>(w: &AveragingWindow, rng: &mut R, out: &mut [f64]) {
    loop {
        for (o, c) in out.iter_mut().zip(w.center()) {
            let u: f64 = rng.random();
            *o = c + w.scale() * (2.0 * u - 1.0);
        }
        if w.kind() == WindowKind::Cube || w.contains(out) {
            return;
        }
    }
}

/// A `Poisson(mean)` count; zero for a zero mean.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

/// Homogeneous Poisson process of intensity `rho` in `w`.
pub fn sample_poisson<R: Rng + ?Sized>(rho: f64, w: &AveragingWindow, rng: &mut R) -> WeightedPointSet {
    let n = poisson_count(rho * w.volume(), rng);
    let mut out = WeightedPointSet::with_capacity(w.clone(), n);
    let mut x = vec![0.0; w.dim()];
    for _ in 0..n {
        uniform_in_window(w, rng, &mut x);
        // Points on the boundary have probability zero; drop them if drawn.
        out.push_if_inside(&x, Complex64::new(1.0, 0.0));
    }
    out
}

/// One realisation of `p` inside `w`.
pub fn sample_centre<R: Rng + ?Sized>(
    p: &CentreProcess,
    w: &AveragingWindow,
    rng: &mut R,
) -> Result<WeightedPointSet> {
    check_dim(w, p.dim())?;
    match p {
        CentreProcess::Poisson { rho, .. } => Ok(sample_poisson(*rho, w, rng)),
        CentreProcess::Lattice { spacing, dim } => {
            let (lo, hi) = w.bounds();
            let lo: Vec<i64> = lo.iter().map(|v| (v / spacing).floor() as i64).collect();
            let hi: Vec<i64> = hi.iter().map(|v| (v / spacing).ceil() as i64).collect();
            let mut out = WeightedPointSet::new(w.clone());
            let mut x = vec![0.0; *dim];
            for_each_int_point(&lo, &hi, |n| {
                for (xi, ni) in x.iter_mut().zip(n) {
                    *xi = *ni as f64 * spacing;
                }
                out.push_if_inside(&x, Complex64::new(1.0, 0.0));
            });
            Ok(out)
        }
        CentreProcess::Matern { rho, radius, .. } => Ok(sample_matern(*rho, *radius, w, rng)),
        CentreProcess::FibonacciGas(gas) => {
            let (lo, hi) = w.bounds();
            let mut out = WeightedPointSet::new(w.clone());
            for (x, star) in gas.enumerate(lo[0], hi[0]) {
                let u: f64 = rng.random();
                if u < gas.f(star) {
                    out.push_if_inside(&[x], Complex64::new(1.0, 0.0));
                }
            }
            Ok(out)
        }
    }
}

fn sample_matern<R: Rng + ?Sized>(rho: f64, radius: f64, w: &AveragingWindow, rng: &mut R) -> WeightedPointSet {
    let dim = w.dim();
    let parent_window = w.dilated(radius).expect("dilation by a positive radius");
    let parents = sample_poisson(rho, &parent_window, rng);
    let n = parents.len();
    let marks: Vec<f64> = (0..n).map(|_| rng.random()).collect();

    let (lo, hi) = parent_window.bounds();
    let cells: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (((h - l) / radius).ceil() as usize).max(1))
        .collect();
    let cell_of = |x: &[f64]| -> Vec<usize> {
        x.iter()
            .zip(&lo)
            .zip(&cells)
            .map(|((xi, l), c)| (((xi - l) / radius).floor() as usize).min(c - 1))
            .collect()
    };
    let flat = |c: &[usize]| -> usize {
        let mut idx = 0;
        for (ci, n) in c.iter().zip(&cells).rev() {
            idx = idx * n + ci;
        }
        idx
    };
    let total_cells: usize = cells.iter().product();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); total_cells];
    for i in 0..n {
        buckets[flat(&cell_of(parents.position(i)))].push(i);
    }

    let mut out = WeightedPointSet::new(w.clone());
    let offsets_lo = vec![-1i64; dim];
    let offsets_hi = vec![1i64; dim];
    for i in 0..n {
        let x = parents.position(i);
        if !w.contains(x) {
            continue;
        }
        let home = cell_of(x);
        let mut killed = false;
        for_each_int_point(&offsets_lo, &offsets_hi, |off| {
            if killed {
                return;
            }
            let mut c = Vec::with_capacity(dim);
            for ((h, o), n) in home.iter().zip(off).zip(&cells) {
                let v = *h as i64 + o;
                if v < 0 || v >= *n as i64 {
                    return;
                }
                c.push(v as usize);
            }
            for &j in &buckets[flat(&c)] {
                if j != i && marks[j] < marks[i] && distance(parents.position(j), x) < radius {
                    killed = true;
                    return;
                }
            }
        });
        if !killed {
            out.push_unchecked(x, Complex64::new(1.0, 0.0));
        }
    }
    out
}

/// Volume of `B_R(0) ∩ B_R(r e_1)` for `d ∈ {2, 3}`.
fn lens_volume(dim: usize, radius: f64, r: f64) -> f64 {
    if r >= 2.0 * radius {
        return 0.0;
    }
    match dim {
        2 => 2.0 * radius * radius * (r / (2.0 * radius)).acos() - 0.5 * r * (4.0 * radius * radius - r * r).sqrt(),
        _ => PI * (4.0 * radius + r) * (2.0 * radius - r).powi(2) / 12.0,
    }
}

/// Second-order product density of the Matérn II process at distance `r`,
/// in `d ∈ {2, 3}`: zero below `R` and
/// `2[U(1 − e^{−ρv}) − v(1 − e^{−ρU})]/(vU(U − v))` above, with `v = vol B_R`
/// and `U = vol(B_R(x) ∪ B_R(y))`.
pub fn matern_product_density(rho: f64, radius: f64, dim: usize, r: f64) -> f64 {
    if r < radius {
        return 0.0;
    }
    let v = unit_ball_volume(dim) * radius.powi(dim as i32);
    let u = 2.0 * v - lens_volume(dim, radius, r);
    let a = -(-rho * v).exp_m1();
    let b = -(-rho * u).exp_m1();
    2.0 * (u * a - v * b) / (v * u * (u - v))
}

/// `∫_{r_lo}^{r_hi} g(r) e^{−2πik·x} dx` over the shell, for radial `g` in
/// `d ∈ {2, 3}`, by Gauss–Legendre quadrature.
pub fn radial_fourier(dim: usize, g: &dyn Fn(f64) -> f64, r_lo: f64, r_hi: f64, k: f64) -> f64 {
    let rule = gauss_legendre(12);
    let panels = 64;
    let kk = 2.0 * PI * k;
    match dim {
        2 => 2.0 * PI * integrate_gl(&|r| g(r) * libm::j0(kk * r) * r, r_lo, r_hi, panels, &rule),
        _ => {
            if k == 0.0 {
                4.0 * PI * integrate_gl(&|r| g(r) * r * r, r_lo, r_hi, panels, &rule)
            } else {
                2.0 / k * integrate_gl(&|r| g(r) * r * (kk * r).sin(), r_lo, r_hi, panels, &rule)
            }
        }
    }
}

/// Closed-form diffraction of `p`. Lattice and Fibonacci atoms are
/// enumerated up to `|k| ≤ k_cutoff` (for the model set also
/// `|k*| ≤ k_cutoff`). The Matérn density transforms the product density by
/// quadrature and is marked approximate; only `d ∈ {2, 3}` is supported.
pub fn analytic_centre_model(p: &CentreProcess, k_cutoff: f64) -> Result<SpectralModel> {
    positive("k_cutoff", k_cutoff)?;
    match *p {
        CentreProcess::Poisson { rho, dim } => Ok(poisson_model(rho, dim)),
        CentreProcess::Lattice { spacing, dim } => {
            let weight = spacing.powi(-2 * dim as i32);
            Ok(SpectralModel::new(
                dim,
                "lattice",
                PurePoint::Lattice {
                    spacing: 1.0 / spacing,
                    weight: Arc::new(move |_: &[f64]| weight),
                },
                Arc::new(|_: &[f64]| 0.0),
                SingularSet::None,
            ))
        }
        CentreProcess::Matern { rho, radius, dim } => {
            if !(dim == 2 || dim == 3) {
                return Err(Error::invalid("dim", "Matérn model is available in d = 2 and d = 3 only"));
            }
            let rho_eff = matern_intensity(rho, radius, dim);
            let density = move |k: &[f64]| {
                let kn = crate::measures::norm(k);
                let inner = radial_fourier(dim, &|_| rho_eff * rho_eff, 0.0, radius, kn);
                let outer = radial_fourier(
                    dim,
                    &|r| rho_eff * rho_eff - matern_product_density(rho, radius, dim, r),
                    radius,
                    2.0 * radius,
                    kn,
                );
                rho_eff - inner - outer
            };
            Ok(SpectralModel::new(
                dim,
                "matern",
                PurePoint::Finite(vec![(vec![0.0; dim], rho_eff * rho_eff)]),
                Arc::new(density),
                SingularSet::None,
            )
            .approximate())
        }
        CentreProcess::FibonacciGas(gas) => {
            let dens = gas.model_set_density();
            // Fix the overall constant so the k = 0 atom is (dens·f̄)².
            let c = (dens * gas.mean_f() / gas.profile_ft_abs(0.0)).powi(2);
            let atoms: Vec<(Vec<f64>, f64)> = gas
                .fourier_module(k_cutoff)
                .into_iter()
                .map(|(k, star)| (vec![k], c * gas.profile_ft_abs(-star).powi(2)))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            let level = dens * gas.mean_variance();
            Ok(SpectralModel::new(
                1,
                "fibonacci-gas",
                PurePoint::Finite(atoms),
                Arc::new(move |_: &[f64]| level),
                SingularSet::None,
            ))
        }
    }
}

/// `ρ²δ_0 + ρλ`.
pub fn poisson_model(rho: f64, dim: usize) -> SpectralModel {
    SpectralModel::new(
        dim,
        "poisson",
        PurePoint::Finite(vec![(vec![0.0; dim], rho * rho)]),
        Arc::new(move |_: &[f64]| rho),
        SingularSet::None,
    )
}
