//! Mean-one inter-arrival laws, their characteristic functions and the
//! renewal kernels built from them, plus the lattice Poisson summation and
//! Riesz-kernel identities.
//!
//! All Fourier transforms use the convention `f̂(k) = ∫ e^{-2πikx} f(x) dx`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::special::{exp_m1, gamma, gamma_p, ln_1p, ln_gamma};
use crate::{Error, Result};

/// An exact positive rational `num/den`, always stored in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("rational", "zero denominator"));
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i64;
        Ok(Self {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// One atom of a discrete inter-arrival law. `exact` is kept when the
/// position was supplied as a rational, and enables exact lattice detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub exact: Option<Rational>,
}

impl Atom {
    pub fn real(position: f64) -> Self {
        Self { position, exact: None }
    }

    pub fn rational(r: Rational) -> Self {
        Self {
            position: r.to_f64(),
            exact: Some(r),
        }
    }
}

/// A probability law on `(0, ∞)` with mean exactly one.
#[derive(Clone, Debug, PartialEq)]
pub enum InterArrivalLaw {
    Exponential,
    Gamma { alpha: f64 },
    /// `p·δ_a + (1-p)·δ_b`.
    TwoAtom { a: Atom, b: Atom, p: f64 },
    FiniteAtoms(Vec<(Atom, f64)>),
    /// `δ_1`.
    Deterministic,
}

const MEAN_TOL: f64 = 1e-12;
const COMMENSURABILITY_TOL: f64 = 1e-9;
const MAX_COMMENSURATE_DENOMINATOR: u64 = 1000;

impl InterArrivalLaw {
    pub fn gamma(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be positive and finite"));
        }
        Ok(Self::Gamma { alpha })
    }

    pub fn two_atom(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::two_atom_exact(Atom::real(a), Atom::real(b), p)
    }

    pub fn two_atom_rational(a: Rational, b: Rational, p: Rational) -> Result<Self> {
        let law = Self::two_atom_exact(Atom::rational(a), Atom::rational(b), p.to_f64())?;
        // p·a + (1-p)·b == 1 over the integers.
        let lhs = p.num as i128 * a.num as i128 * b.den as i128
            + (p.den - p.num) as i128 * b.num as i128 * a.den as i128;
        let rhs = p.den as i128 * a.den as i128 * b.den as i128;
        if lhs != rhs {
            return Err(Error::invalid(
                "p",
                format!("two-atom law must have mean 1: p·a+(1-p)·b = {}", lhs as f64 / rhs as f64),
            ));
        }
        Ok(law)
    }

    fn two_atom_exact(a: Atom, b: Atom, p: f64) -> Result<Self> {
        if !(a.position > 0.0) || !(b.position > 0.0) || !a.position.is_finite() || !b.position.is_finite() {
            return Err(Error::invalid("a,b", "atoms must be strictly positive and finite"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("p", "must be a probability"));
        }
        let mean = p * a.position + (1.0 - p) * b.position;
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(Error::invalid(
                "p",
                format!("two-atom law must have mean 1: p·a+(1-p)·b = {mean}"),
            ));
        }
        Ok(Self::TwoAtom { a, b, p })
    }

    pub fn finite_atoms(atoms: Vec<(Atom, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("atoms", "must not be empty"));
        }
        if atoms
            .iter()
            .any(|(a, p)| !(a.position > 0.0) || !a.position.is_finite() || !(*p >= 0.0))
        {
            return Err(Error::invalid(
                "atoms",
                "positions must be strictly positive and probabilities nonnegative",
            ));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MEAN_TOL {
            return Err(Error::invalid("atoms", format!("probabilities sum to {total}, not 1")));
        }
        let mean: f64 = atoms.iter().map(|(a, p)| a.position * p).sum();
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(Error::invalid("atoms", format!("mean is {mean}, not 1")));
        }
        Ok(Self::FiniteAtoms(atoms))
    }

    /// `(atom, probability)` pairs for discrete laws; `None` for laws with a
    /// density.
    pub fn atoms(&self) -> Option<Vec<(Atom, f64)>> {
        match self {
            Self::Exponential | Self::Gamma { .. } => None,
            Self::TwoAtom { a, b, p } => Some(vec![(*a, *p), (*b, 1.0 - *p)]),
            Self::FiniteAtoms(atoms) => Some(atoms.clone()),
            Self::Deterministic => Some(vec![(Atom::rational(Rational { num: 1, den: 1 }), 1.0)]),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Exponential => 1.0,
            Self::Gamma { alpha } => 1.0 / alpha,
            Self::Deterministic => 0.0,
            _ => {
                let atoms = self.atoms().unwrap_or_default();
                atoms.iter().map(|(a, p)| p * a.position * a.position).sum::<f64>() - 1.0
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential => -(-x).exp_m1(),
            Self::Gamma { alpha } => gamma_p(*alpha, alpha * x),
            _ => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .filter(|(a, _)| a.position <= x)
                .map(|(_, p)| p)
                .sum(),
        }
    }
}

fn twopi_i(k: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * k)
}

/// `ϱ̂(k) = ∫ e^{-2πikx} dϱ(x)`.
pub fn charfun(law: &InterArrivalLaw, k: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) - one_minus_charfun(law, k)
}

/// `1 - ϱ̂(k)`, evaluated without cancellation near `k = 0`.
pub fn one_minus_charfun(law: &InterArrivalLaw, k: f64) -> Complex64 {
    match law {
        InterArrivalLaw::Exponential => {
            let z = twopi_i(k);
            z / (Complex64::new(1.0, 0.0) + z)
        }
        InterArrivalLaw::Gamma { alpha } => {
            // Principal branch: 1 + 2πik/α has positive real part.
            let log = ln_1p(twopi_i(k) / alpha);
            -exp_m1(-log * alpha)
        }
        _ => {
            let mut u = Complex64::new(0.0, 0.0);
            for (a, p) in law.atoms().unwrap_or_default() {
                let theta = PI * k * a.position;
                let s = theta.sin();
                // 1 - e^{-2iθ} = 2 sin²θ + i sin 2θ
                u += Complex64::new(2.0 * s * s, (2.0 * theta).sin()) * p;
            }
            u
        }
    }
}

/// Base `b` of the coarsest lattice `bZ` containing the support, or `None`
/// when the law is not strictly lattice-like.
///
/// Rational atoms are handled exactly. Float atoms are declared commensurate
/// when every ratio to the first atom matches a continued-fraction
/// convergent with denominator at most 1000 to within `1e-9`; anything else
/// is reported as non-lattice.
pub fn lattice_classification(law: &InterArrivalLaw) -> Option<f64> {
    let atoms: Vec<Atom> = law
        .atoms()?
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(a, _)| a)
        .collect();
    if atoms.iter().all(|a| a.exact.is_some()) {
        let mut num_gcd = 0u64;
        let mut den_lcm = 1u64;
        for a in &atoms {
            let r = a.exact.expect("checked above");
            num_gcd = gcd(num_gcd, r.num.unsigned_abs());
            den_lcm = lcm(den_lcm, r.den.unsigned_abs());
        }
        return Some(num_gcd as f64 / den_lcm as f64);
    }
    let base = atoms[0].position;
    let mut ratios = Vec::with_capacity(atoms.len());
    for a in &atoms {
        ratios.push(rational_approximation(a.position / base)?);
    }
    let den_lcm = ratios.iter().fold(1u64, |acc, (_, q)| lcm(acc, *q));
    let mut g = 0u64;
    for (p, q) in &ratios {
        g = gcd(g, p * (den_lcm / q));
    }
    Some(base * g as f64 / den_lcm as f64)
}

fn rational_approximation(x: f64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as u64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_COMMENSURATE_DENOMINATOR {
            return None;
        }
        if (h2 as f64 / k2 as f64 - x).abs() <= COMMENSURABILITY_TOL * x.max(1.0) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac <= 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

fn check_regular(law: &InterArrivalLaw, k: f64) -> Result<Complex64> {
    if k == 0.0 {
        return Err(Error::Singular);
    }
    if let Some(b) = lattice_classification(law) {
        let t = k * b;
        if (t - t.round()).abs() <= 1e-12 * t.abs().max(1.0) {
            return Err(Error::Singular);
        }
    }
    let u = one_minus_charfun(law, k);
    if u.norm_sqr() == 0.0 {
        return Err(Error::Singular);
    }
    Ok(u)
}

/// `h(k) = 2(|ϱ̂|² − Re ϱ̂)/|1 − ϱ̂|²`; the AC diffraction density of the
/// stationary renewal process is `1 − h`.
pub fn h(law: &InterArrivalLaw, k: f64) -> Result<f64> {
    let u = check_regular(law, k)?;
    let n = u.norm_sqr();
    Ok(2.0 * (n - u.re) / n)
}

/// `1 − h(k) = (1 − |ϱ̂|²)/|1 − ϱ̂|²`, computed directly.
pub fn renewal_ac_density(law: &InterArrivalLaw, k: f64) -> Result<f64> {
    let u = check_regular(law, k)?;
    let n = u.norm_sqr();
    Ok(((2.0 * u.re - n) / n).max(0.0))
}

/// `ν̂(k) = ϱ̂/(1 − ϱ̂)`.
pub fn nu_hat(law: &InterArrivalLaw, k: f64) -> Result<Complex64> {
    let u = check_regular(law, k)?;
    Ok((Complex64::new(1.0, 0.0) - u) / u)
}

/// Cumulative masses `ν_n([0, x])` of `ν_n = ϱ + ϱ*ϱ + … + ϱ^{*n}` at the
/// points of `grid`.
///
/// Atomic laws are convolved exactly. Laws with a density are convolved
/// numerically as Stieltjes integrals against the exact CDF on a uniform
/// grid of step at most `x_max/1000`, with trapezoid interpolation of the
/// previous convolution power.
pub fn nu_partial(law: &InterArrivalLaw, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let x_max = *grid.last().ok_or(Error::Empty("grid"))?;
    if !(x_max > 0.0) || grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "must be increasing, nonnegative and end above 0"));
    }
    let mut max_step = grid[0];
    let mut min_step = f64::INFINITY;
    for w in grid.windows(2) {
        max_step = max_step.max(w[1] - w[0]);
        min_step = min_step.min(w[1] - w[0]);
    }
    let limit = x_max / 1000.0;
    if max_step > limit * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse { step: max_step, limit });
    }

    if let Some(atoms) = law.atoms() {
        let masses = nu_atoms(&atoms, n, x_max);
        let eps = 1e-12 * x_max;
        return Ok(grid
            .iter()
            .map(|x| masses.iter().filter(|(z, _)| *z <= x + eps).map(|(_, m)| m).sum())
            .collect());
    }

    let cells = ((x_max / min_step.min(limit)).ceil() as usize).clamp(1000, 20_000);
    let h = x_max / cells as f64;
    let cdf: Vec<f64> = (0..=cells).map(|i| law.cdf(i as f64 * h)).collect();
    let d_f: Vec<f64> = cdf.windows(2).map(|w| w[1] - w[0]).collect();

    let mut power = cdf.clone();
    let mut total = cdf.clone();
    for _ in 1..n {
        let mut next = vec![0.0; cells + 1];
        for (m, slot) in next.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for i in 0..m {
                let hi = power[m - i];
                let lo = power[m - i - 1];
                acc += d_f[i] * 0.5 * (hi + lo);
            }
            *slot = acc;
        }
        let mass = next[cells];
        for (t, v) in total.iter_mut().zip(&next) {
            *t += v;
        }
        power = next;
        if mass < 1e-17 {
            break;
        }
    }
    Ok(grid
        .iter()
        .map(|&x| {
            let pos = x / h;
            let i = (pos.floor() as usize).min(cells - 1);
            let t = pos - i as f64;
            total[i] * (1.0 - t) + total[i + 1] * t
        })
        .collect())
}

/// Atoms `(position, mass)` of `ν_n` restricted to `[0, x_max]`.
pub fn nu_atoms(atoms: &[(Atom, f64)], n: usize, x_max: f64) -> Vec<(f64, f64)> {
    let base: Vec<(f64, f64)> = atoms
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(a, p)| (a.position, *p))
        .collect();
    let merge_tol = 1e-12 * x_max.max(1.0);
    let mut power = base.clone();
    let mut total = Vec::new();
    for j in 1..=n {
        if j > 1 {
            let mut next: Vec<(f64, f64)> = Vec::new();
            for (x, px) in &power {
                for (y, py) in &base {
                    let z = x + y;
                    if z <= x_max + merge_tol {
                        next.push((z, px * py));
                    }
                }
            }
            power = merge_atoms(next, merge_tol);
        }
        if power.is_empty() {
            break;
        }
        total.extend(power.iter().copied());
    }
    merge_atoms(total, merge_tol)
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, m) in atoms {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= tol => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out
}

/// Density of `ν` for the mean-one gamma law of shape `alpha`:
/// `g_α(x) = α e^{−αx} Σ_{n≥1} (αx)^{nα−1}/Γ(nα)`.
///
/// Terms are summed past the peak of the series until ten consecutive
/// terms fall below `truncation_tol` times the running sum, or 10⁵ terms.
pub fn g_alpha(alpha: f64, x: f64, truncation_tol: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let ln_ax = (alpha * x).ln();
    let prefix = alpha.ln() - alpha * x;
    let mut sum = 0.0;
    let mut small_run = 0;
    for n in 1..=100_000u32 {
        let s = n as f64 * alpha;
        let term = (prefix + (s - 1.0) * ln_ax - ln_gamma(s)).exp();
        sum += term;
        let past_peak = s - 1.0 > alpha * x;
        if past_peak && term <= truncation_tol * sum {
            small_run += 1;
            if small_run >= 10 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    sum
}

/// Fourier transform of the unnormalised Riesz kernel `|x|^{α−d}` on `R^d`:
/// `(Γ(α/2)/π^{α/2}) / (Γ((d−α)/2)/π^{(d−α)/2}) · |k|^{−α}`.
pub fn riesz_fourier(d: usize, alpha: f64, k: &[f64]) -> Result<f64> {
    let df = d as f64;
    if !(alpha > 0.0 && alpha < df) {
        return Err(Error::invalid("alpha", format!("must lie in (0, {d})")));
    }
    if k.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: k.len() });
    }
    let norm = crate::measures::norm(k);
    if norm == 0.0 {
        return Err(Error::Singular);
    }
    let num = gamma(alpha / 2.0) / PI.powf(alpha / 2.0);
    let den = gamma((df - alpha) / 2.0) / PI.powf((df - alpha) / 2.0);
    Ok(num / den * norm.powf(-alpha))
}

/// `|Σ_{x∈bZ^d} e^{−π|x|²} − b^{−d} Σ_{k∈Z^d/b} e^{−π|k|²}|` with both sums
/// truncated at radius `r_max`. In `d = 2` the lattice side is summed shell
/// by shell using the shelling numbers of `Z²`.
pub fn gaussian_psf_check(d: usize, b: f64, r_max: f64) -> f64 {
    let lhs = if d == 2 {
        let m = (r_max / b).floor() as u64;
        shelling_numbers_z2(m * m)
            .into_iter()
            .filter(|(n, _)| (*n as f64).sqrt() * b <= r_max)
            .map(|(n, count)| count as f64 * (-PI * b * b * n as f64).exp())
            .sum()
    } else {
        lattice_gaussian_sum(d, b, r_max)
    };
    let rhs = b.powi(-(d as i32)) * lattice_gaussian_sum(d, 1.0 / b, r_max);
    (lhs - rhs).abs()
}

fn lattice_gaussian_sum(d: usize, spacing: f64, r_max: f64) -> f64 {
    let m = (r_max / spacing).floor() as i64;
    let lo = vec![-m; d];
    let hi = vec![m; d];
    let mut terms = Vec::new();
    crate::measures::for_each_int_point(&lo, &hi, |n| {
        let r2: f64 = n.iter().map(|&v| (v as f64 * spacing).powi(2)).sum();
        if r2 <= r_max * r_max {
            terms.push((-PI * r2).exp());
        }
    });
    // Smallest terms first.
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// `(|x|², η(|x|))` for every shell of `Z²` with `|x|² ≤ max_norm_sq`,
/// counted by brute force.
pub fn shelling_numbers_z2(max_norm_sq: u64) -> Vec<(u64, u64)> {
    let m = (max_norm_sq as f64).sqrt().floor() as i64 + 1;
    let mut counts = vec![0u64; max_norm_sq as usize + 1];
    for i in -m..=m {
        for j in -m..=m {
            let n = (i * i + j * j) as u64;
            if n <= max_norm_sq {
                counts[n as usize] += 1;
            }
        }
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(n, c)| (n as u64, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws() -> Vec<InterArrivalLaw> {
        vec![
            InterArrivalLaw::Exponential,
            InterArrivalLaw::gamma(0.7).unwrap(),
            InterArrivalLaw::gamma(2.0).unwrap(),
            InterArrivalLaw::gamma(8.0).unwrap(),
            InterArrivalLaw::two_atom(2.0 / 3.0, 4.0 / 3.0, 0.5).unwrap(),
            InterArrivalLaw::Deterministic,
        ]
    }

    #[test]
    fn charfun_at_zero_is_one() {
        for law in laws() {
            assert_eq!(charfun(&law, 0.0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn gamma_charfun_closed_form() {
        for alpha in [0.7, 2.0, 8.0] {
            let law = InterArrivalLaw::gamma(alpha).unwrap();
            for k in [-1.3, 0.2, 1.0, 3.7] {
                let expected = (Complex64::new(1.0, 0.0) + twopi_i(k) / alpha).powf(-alpha);
                assert!((charfun(&law, k) - expected).norm() < 1e-13);
            }
        }
        let det = charfun(&InterArrivalLaw::Deterministic, 1.0);
        assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gamma_charfun_matches_quadrature() {
        // Independent check of the closed form against ∫ e^{-2πikx} f_α(x) dx.
        let alpha: f64 = 2.0;
        let law = InterArrivalLaw::gamma(alpha).unwrap();
        let density = |x: f64| alpha.powf(alpha) / gamma(alpha) * x.powf(alpha - 1.0) * (-alpha * x).exp();
        let k = 1.0;
        let re = crate::special::adaptive_simpson(&|x: f64| density(x) * (2.0 * PI * k * x).cos(), 0.0, 40.0, 1e-12, 1e-15);
        let im = crate::special::adaptive_simpson(&|x: f64| -density(x) * (2.0 * PI * k * x).sin(), 0.0, 40.0, 1e-12, 1e-15);
        assert!((charfun(&law, k) - Complex64::new(re, im)).norm() < 1e-9);
    }

    #[test]
    fn mean_one_validation() {
        assert!(InterArrivalLaw::two_atom(0.5, 2.0, 0.5).is_err());
        assert!(InterArrivalLaw::two_atom(-1.0, 2.0, 0.5).is_err());
        assert!(InterArrivalLaw::gamma(0.0).is_err());
        let third = Rational::new(1, 3).unwrap();
        assert!(InterArrivalLaw::two_atom_rational(third, Rational::new(5, 3).unwrap(), Rational::new(1, 2).unwrap()).is_ok());
        assert!(InterArrivalLaw::two_atom_rational(third, Rational::new(4, 3).unwrap(), Rational::new(1, 2).unwrap()).is_err());
        assert!(InterArrivalLaw::finite_atoms(vec![(Atom::real(0.5), 0.5), (Atom::real(1.5), 0.5)]).is_ok());
        assert!(InterArrivalLaw::finite_atoms(vec![(Atom::real(0.5), 0.5), (Atom::real(1.5), 0.4)]).is_err());
    }

    #[test]
    fn variances() {
        assert_eq!(InterArrivalLaw::gamma(4.0).unwrap().variance(), 0.25);
        assert_eq!(InterArrivalLaw::Exponential.variance(), 1.0);
        assert_eq!(InterArrivalLaw::Deterministic.variance(), 0.0);
        let v = InterArrivalLaw::two_atom(0.5, 1.5, 0.5).unwrap().variance();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lattice_classification_examples() {
        let r = |n, d| Rational::new(n, d).unwrap();
        let exact = InterArrivalLaw::two_atom_rational(r(2, 3), r(4, 3), r(1, 2)).unwrap();
        assert_eq!(lattice_classification(&exact), Some(2.0 / 3.0));
        let float = InterArrivalLaw::two_atom(2.0 / 3.0, 4.0 / 3.0, 0.5).unwrap();
        let b = lattice_classification(&float).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(lattice_classification(&InterArrivalLaw::gamma(2.0).unwrap()), None);
        assert_eq!(lattice_classification(&InterArrivalLaw::Exponential), None);
        assert_eq!(lattice_classification(&InterArrivalLaw::Deterministic), Some(1.0));

        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        let a = 2.0 / (1.0 + tau);
        let golden = InterArrivalLaw::two_atom(a, tau * a, 0.5).unwrap();
        assert_eq!(lattice_classification(&golden), None);
    }

    #[test]
    fn lattice_classification_brute_force_oracle() {
        // Brute force: the largest b = 1/q (q ≤ 60) with every atom in bZ.
        let r = |n, d| Rational::new(n, d).unwrap();
        let cases = [(r(1, 2), r(3, 2), r(1, 2)), (r(3, 4), r(5, 4), r(1, 2)), (r(2, 5), r(8, 5), r(1, 2))];
        for (a, b, p) in cases {
            let law = InterArrivalLaw::two_atom_rational(a, b, p).unwrap();
            let mut best = 0.0;
            for q in 1..=60i64 {
                for num in 1..=60i64 {
                    let step = num as f64 / q as f64;
                    let fits = |x: f64| ((x / step) - (x / step).round()).abs() < 1e-9;
                    if fits(a.to_f64()) && fits(b.to_f64()) && step > best {
                        best = step;
                    }
                }
            }
            let got = lattice_classification(&law).unwrap();
            assert!((got - best).abs() < 1e-12, "{got} vs {best}");
        }
    }

    #[test]
    fn h_examples() {
        let exp = InterArrivalLaw::Exponential;
        for k in [0.1, 1.0, 2.5] {
            assert!(h(&exp, k).unwrap().abs() < 1e-14);
        }
        let g2 = InterArrivalLaw::gamma(2.0).unwrap();
        let expected = 2.0 / (PI * PI + 4.0);
        assert!((h(&g2, 1.0).unwrap() - expected).abs() < 1e-14);
        assert_eq!(h(&g2, 0.0), Err(Error::Singular));
    }

    #[test]
    fn h_gamma2_matches_quadrature_charfun() {
        // Second route: build ϱ̂ by quadrature of the density, then apply the
        // formula for h.
        let density = |x: f64| 4.0 * x * (-2.0 * x).exp();
        let k = 1.0;
        let re = crate::special::adaptive_simpson(&|x: f64| density(x) * (2.0 * PI * k * x).cos(), 0.0, 40.0, 1e-12, 1e-15);
        let im = crate::special::adaptive_simpson(&|x: f64| -density(x) * (2.0 * PI * k * x).sin(), 0.0, 40.0, 1e-12, 1e-15);
        let rho = Complex64::new(re, im);
        let quad_h = 2.0 * (rho.norm_sqr() - rho.re) / (Complex64::new(1.0, 0.0) - rho).norm_sqr();
        let g2 = InterArrivalLaw::gamma(2.0).unwrap();
        assert!((h(&g2, k).unwrap() - quad_h).abs() < 1e-9);
    }

    #[test]
    fn h_limit_at_zero_is_one_minus_variance() {
        for alpha in [0.7, 2.0, 8.0] {
            let law = InterArrivalLaw::gamma(alpha).unwrap();
            // Richardson extrapolation from k = 1e-4 and 5e-5 (h is even and
            // smooth, so the error is O(k²)).
            let (k1, k2) = (1e-4, 5e-5);
            let (h1, h2) = (h(&law, k1).unwrap(), h(&law, k2).unwrap());
            let limit = (4.0 * h2 - h1) / 3.0;
            assert!((limit - (1.0 - 1.0 / alpha)).abs() < 1e-6, "alpha={alpha}: {limit}");
            let tiny = h(&law, 1e-6).unwrap();
            assert!((tiny - (1.0 - 1.0 / alpha)).abs() < 1e-6);
        }
    }

    #[test]
    fn h_singular_on_dual_lattice() {
        let law = InterArrivalLaw::two_atom(2.0 / 3.0, 4.0 / 3.0, 0.5).unwrap();
        assert_eq!(h(&law, 1.5), Err(Error::Singular));
        assert_eq!(h(&law, -3.0), Err(Error::Singular));
        assert!(h(&law, 0.75).is_ok());
        assert_eq!(nu_hat(&law, 4.5), Err(Error::Singular));
    }

    #[test]
    fn nu_hat_examples() {
        let exp = InterArrivalLaw::Exponential;
        for k in [0.3, 1.0, -2.0] {
            let expected = Complex64::new(1.0, 0.0) / twopi_i(k);
            assert!((nu_hat(&exp, k).unwrap() - expected).norm() < 1e-14);
        }
        let det = nu_hat(&InterArrivalLaw::Deterministic, 0.5).unwrap();
        assert!((det - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn nu_hat_matches_geometric_partial_sums() {
        for law in laws() {
            for k in [0.37, 1.21] {
                let r = charfun(&law, k);
                if r.norm() > 0.99 {
                    continue;
                }
                let mut sum = Complex64::new(0.0, 0.0);
                let mut pow = Complex64::new(1.0, 0.0);
                for _ in 0..5000 {
                    pow *= r;
                    sum += pow;
                }
                assert!((nu_hat(&law, k).unwrap() - sum).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn nu_partial_deterministic_masses() {
        let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.001).collect();
        let cum = nu_partial(&InterArrivalLaw::Deterministic, 3, &grid).unwrap();
        assert_eq!(cum[999], 0.0);
        assert_eq!(cum[1000], 1.0);
        assert_eq!(cum[2000], 2.0);
        assert_eq!(cum[3000], 3.0);
        assert_eq!(cum[4000], 3.0);
    }

    #[test]
    fn nu_partial_exponential_is_lebesgue() {
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.005).collect();
        let cum = nu_partial(&InterArrivalLaw::Exponential, 80, &grid).unwrap();
        for (x, c) in grid.iter().zip(&cum) {
            assert!((c - x).abs() < 2e-4, "x={x} c={c}");
        }
    }

    #[test]
    fn nu_partial_rejects_coarse_grid() {
        let grid = [0.0, 0.5, 1.0];
        assert!(matches!(
            nu_partial(&InterArrivalLaw::Exponential, 3, &grid),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn g_alpha_examples() {
        for x in [0.01, 0.5, 3.0, 40.0] {
            assert!((g_alpha(1.0, x, 1e-16) - 1.0).abs() < 1e-12);
        }
        for x in [0.05, 0.25, 1.0, 4.0] {
            assert!((g_alpha(2.0, x, 1e-16) - (1.0 - (-4.0 * x).exp())).abs() < 1e-12);
        }
        assert!((g_alpha(2.0, 0.25, 1e-16) - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert!((g_alpha(0.7, 200.0, 1e-16) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn g_alpha_matches_numeric_convolution_density() {
        let x_max = 5.2;
        let n = 4000;
        let h = x_max / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        for alpha in [0.7, 2.0, 8.0] {
            let law = InterArrivalLaw::gamma(alpha).unwrap();
            let cum = nu_partial(&law, 200, &grid).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..n {
                let x = grid[i];
                if !(0.1..=5.0).contains(&x) {
                    continue;
                }
                let density = (cum[i + 1] - cum[i - 1]) / (2.0 * h);
                worst = worst.max((density - g_alpha(alpha, x, 1e-15)).abs());
            }
            assert!(worst < 1e-3, "alpha={alpha}: worst {worst}");
        }
    }

    #[test]
    fn riesz_examples() {
        let v = riesz_fourier(3, 2.0, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-14);
        // f_∞ = (V/2)/(4π|x|) transforms to (V/2)/(4π²|k|²).
        let ft = riesz_fourier(3, 2.0, &[0.0, 0.6, 0.8]).unwrap() / (4.0 * PI);
        assert!((ft - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        assert!((riesz_fourier(1, 0.5, &[1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!(riesz_fourier(2, 2.0, &[1.0, 0.0]).is_err());
        assert_eq!(riesz_fourier(3, 1.0, &[0.0; 3]), Err(Error::Singular));
    }

    #[test]
    fn psf_examples() {
        assert!(gaussian_psf_check(1, 1.0, 6.0) < 1e-12);
        assert!(gaussian_psf_check(1, 2.0, 6.0) < 1e-12);
        assert!(gaussian_psf_check(2, 1.0, 6.0) < 1e-12);
        assert!(gaussian_psf_check(2, 0.7, 6.0) < 1e-12);
        assert!(gaussian_psf_check(3, 1.3, 6.0) < 1e-12);
    }

    #[test]
    fn shelling_numbers_of_square_lattice() {
        let s = shelling_numbers_z2(5);
        assert_eq!(s, vec![(0, 1), (1, 4), (2, 4), (4, 4), (5, 8)]);
    }

    proptest::proptest! {
        #[test]
        fn charfun_bounded_and_hermitian(k in -20.0f64..20.0, which in 0usize..6) {
            let law = &laws()[which];
            let v = charfun(law, k);
            proptest::prop_assert!(v.norm() <= 1.0 + 1e-12);
            let w = charfun(law, -k);
            proptest::prop_assert!((v.conj() - w).norm() < 1e-12);
        }

        #[test]
        fn non_lattice_charfun_below_one(k in 0.01f64..20.0, which in 0usize..4) {
            let law = &laws()[which];
            proptest::prop_assert!(charfun(law, k).norm() < 1.0);
        }

        #[test]
        fn h_agrees_with_nu_hat_route(k in 0.01f64..10.0, which in 0usize..6) {
            let law = &laws()[which];
            if let (Ok(hv), Ok(nu)) = (h(law, k), nu_hat(law, k)) {
                let alt = -(nu + nu.conj()).re;
                proptest::prop_assert!((hv - alt).abs() <= 1e-12 * hv.abs().max(1.0), "{} vs {}", hv, alt);
            }
        }

        #[test]
        fn riesz_is_homogeneous(d in 1usize..5, frac in 0.05f64..0.95, c in 0.1f64..10.0, k0 in 0.1f64..3.0) {
            let alpha = frac * d as f64;
            let mut k = alloc::vec![0.0; d];
            k[0] = k0;
            let scaled: Vec<f64> = k.iter().map(|v| c * v).collect();
            let a = riesz_fourier(d, alpha, &k).unwrap();
            let b = riesz_fourier(d, alpha, &scaled).unwrap();
            proptest::prop_assert!((b - c.powf(-alpha) * a).abs() <= 1e-12 * b.abs());
        }
    }
}
