//! Turns a parsed configuration into samplers, an estimation grid and the
//! analytic model it is checked against.

use diffract_core::branching::{analytic_cbbm_model, f_t, BranchingConfig};
use diffract_core::charfun::{Atom, InterArrivalLaw, Rational};
use diffract_core::clusters::{compound_model, CentreRegime, ClusterLaw, Displacement, WeightLaw};
use diffract_core::processes::{analytic_centre_model, matern_product_density, CentreProcess, FibonacciGas, Profile};
use diffract_core::renewal::analytic_renewal_model;
use diffract_core::special::{gauss_legendre, integrate_gl};
use diffract_core::spectral::{BandConfig, KGrid, Tolerances};
use diffract_core::{AveragingWindow, Complex64, FiniteCluster, SpectralModel, WindowKind};

use crate::config::{
    ClusterConfig, ConfigError, DisplacementConfig, GridConfig, LawConfig, Number, ProcessConfig, ProfileConfig,
    ScenarioConfig, ToleranceConfig, WeightValue, WindowConfig,
};

/// Where the points of one realisation come from.
#[derive(Clone, Debug)]
pub enum Source {
    Centre(CentreProcess),
    Renewal(InterArrivalLaw),
    Branching(BranchingConfig),
}

/// Reference curve for the radial pair statistic.
#[derive(Clone, Debug)]
pub enum PairModel {
    /// Shell-averaged second-order product density `ρ₂`.
    ProductDensity(Vec<f64>),
    /// Shell-averaged excess `ρ·f_T` of the pair density over `ρ²`.
    BranchingExcess(Vec<f64>),
    /// No closed form is available; the statistic is only reported.
    Unavailable,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub source: Source,
    pub cluster: Option<ClusterLaw>,
    pub window: AveragingWindow,
    pub grid: KGrid,
    pub band: BandConfig,
    pub model: SpectralModel,
    /// Expected `Σ Re w` per unit volume.
    pub mass_density: f64,
    pub pair_edges: Option<Vec<f64>>,
    pub pair_model: PairModel,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Hard-core distance that every realisation must respect.
    pub fn hard_core(&self) -> Option<f64> {
        match (&self.source, &self.cluster) {
            (Source::Centre(CentreProcess::Matern { radius, .. }), None) => Some(*radius),
            _ => None,
        }
    }
}

type Res<T> = Result<T, ConfigError>;

fn core_err(path: &str) -> impl Fn(diffract_core::Error) -> ConfigError + '_ {
    move |e| ConfigError::at(path, e)
}

fn number(path: &str, n: &Number) -> Res<(f64, Option<Rational>)> {
    match n {
        Number::Float(v) => Ok((*v, None)),
        Number::Ratio(s) => {
            let (a, b) = s.split_once('/').ok_or_else(|| ConfigError::at(path, format!("`{s}` is not of the form n/d")))?;
            let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| ConfigError::at(path, format!("`{t}` is not an integer")));
            let r = Rational::new(parse(a)?, parse(b)?).map_err(core_err(path))?;
            Ok((r.to_f64(), Some(r)))
        }
    }
}

fn law(cfg: &LawConfig) -> Res<InterArrivalLaw> {
    let p = "process.law";
    match cfg {
        LawConfig::Exponential => Ok(InterArrivalLaw::Exponential),
        LawConfig::Gamma { alpha } => InterArrivalLaw::gamma(*alpha).map_err(core_err("process.law.alpha")),
        LawConfig::TwoAtom { a, b, p: prob } => {
            let (a, ra) = number("process.law.a", a)?;
            let (b, rb) = number("process.law.b", b)?;
            let (q, rq) = number("process.law.p", prob)?;
            match (ra, rb, rq) {
                (Some(ra), Some(rb), Some(rq)) => InterArrivalLaw::two_atom_rational(ra, rb, rq).map_err(core_err(p)),
                _ => InterArrivalLaw::two_atom(a, b, q).map_err(core_err(p)),
            }
        }
        LawConfig::FiniteAtoms { atoms } => {
            let mut out = Vec::with_capacity(atoms.len());
            for (i, atom) in atoms.iter().enumerate() {
                let path = format!("process.law.atoms[{i}].a");
                let (v, r) = number(&path, &atom.a)?;
                out.push((r.map_or(Atom::real(v), Atom::rational), atom.p));
            }
            InterArrivalLaw::finite_atoms(out).map_err(core_err(p))
        }
        LawConfig::Deterministic { a } => {
            if *a != 1.0 {
                return Err(ConfigError::at("process.law.a", "deterministic law must have a = 1 (mean one)"));
            }
            Ok(InterArrivalLaw::Deterministic)
        }
    }
}

fn window(cfg: &WindowConfig, dim: usize) -> Res<AveragingWindow> {
    let w = match cfg {
        WindowConfig::Interval { length } => {
            if dim != 1 {
                return Err(ConfigError::at("window.kind", "interval windows are one-dimensional"));
            }
            AveragingWindow::interval(*length).map_err(core_err("window.length"))?
        }
        WindowConfig::Cube { half_width, center } => {
            let w = AveragingWindow::cube(dim, *half_width).map_err(core_err("window.half_width"))?;
            match center {
                Some(c) => w.with_center(c).map_err(core_err("window.center"))?,
                None => w,
            }
        }
        WindowConfig::Ball { radius, center } => {
            let w = AveragingWindow::ball(dim, *radius).map_err(core_err("window.radius"))?;
            match center {
                Some(c) => w.with_center(c).map_err(core_err("window.center"))?,
                None => w,
            }
        }
    };
    Ok(w)
}

fn grid(cfg: &GridConfig, dim: usize) -> Res<KGrid> {
    let path = "estimator.k_grid";
    let g = match cfg {
        GridConfig::Line { start, stop, step } => {
            if dim != 1 {
                return Err(ConfigError::at(path, "a line grid needs a one-dimensional process; use `axes` or `points`"));
            }
            KGrid::line(*start, *stop, *step).map_err(core_err(path))?
        }
        GridConfig::Points { points } => KGrid::from_points(dim, points).map_err(core_err(path))?,
        GridConfig::Axes { axes } => {
            if axes.len() != dim {
                return Err(ConfigError::at(path, format!("expected {dim} axes, found {}", axes.len())));
            }
            KGrid::product(axes).map_err(core_err(path))?
        }
    };
    if g.is_empty() {
        return Err(ConfigError::at(path, "grid is empty"));
    }
    Ok(g)
}

fn weight(w: &WeightValue) -> Complex64 {
    match *w {
        WeightValue::Real(x) => Complex64::new(x, 0.0),
        WeightValue::Complex([re, im]) => Complex64::new(re, im),
    }
}

fn displacement(cfg: &DisplacementConfig, dim: usize) -> Displacement {
    match *cfg {
        DisplacementConfig::Gaussian { sigma } => Displacement::Gaussian { sigma, dim },
        DisplacementConfig::Uniform { a } => Displacement::Uniform { a, dim },
    }
}

fn cluster(cfg: &ClusterConfig, dim: usize) -> Res<ClusterLaw> {
    let path = "cluster";
    match cfg {
        ClusterConfig::Deterministic { points } => {
            let parts: Vec<(Vec<f64>, Complex64)> = points.iter().map(|p| (p.x.clone(), weight(&p.w))).collect();
            Ok(ClusterLaw::deterministic(FiniteCluster::from_parts(dim, &parts).map_err(core_err("cluster.points"))?))
        }
        ClusterConfig::Bernoulli { p } => ClusterLaw::random_weight(WeightLaw::Bernoulli(*p), dim).map_err(core_err("cluster.p")),
        ClusterConfig::RandomWeight { outcomes } => {
            let values = outcomes.iter().map(|o| (weight(&o.w), o.p)).collect();
            ClusterLaw::random_weight(WeightLaw::Discrete(values), dim).map_err(core_err("cluster.outcomes"))
        }
        ClusterConfig::Displacement { law } => {
            ClusterLaw::random_displacement(displacement(law, dim)).map_err(core_err("cluster.law"))
        }
        ClusterConfig::NeymanScott { k_table, displacement: d } => {
            ClusterLaw::neyman_scott(k_table.clone(), displacement(d, dim)).map_err(core_err(path))
        }
        ClusterConfig::SignedBernoulli { p } => ClusterLaw::signed_bernoulli(*p, dim).map_err(core_err("cluster.p")),
    }
}

fn tolerances(t: &ToleranceConfig) -> Tolerances {
    Tolerances {
        density_mean_rel: t.density_mean_rel,
        density_max_rel: t.density_max_rel,
        density_l1_rel: t.density_l1_rel,
        atom_rel: t.atom_rel,
        zero_atom_z: t.zero_atom_z,
        max_unexplained: t.max_unexplained,
        atom_floor: t.atom_floor,
        exclusion_radius: t.exclusion_radius,
        atom_tol: t.atom_tol,
        scan_z: t.scan_z,
    }
}

/// `∫ g(r) r^{d−1} dr / ∫ r^{d−1} dr` over each shell.
pub fn shell_averages(edges: &[f64], dim: usize, g: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let rule = gauss_legendre(16);
    let d = dim as i32;
    edges
        .windows(2)
        .map(|e| {
            let num = integrate_gl(&|r| g(r) * r.powi(d - 1), e[0], e[1], 8, &rule);
            num * dim as f64 / (e[1].powi(d) - e[0].powi(d))
        })
        .collect()
}

fn validate_edges(edges: &[f64]) -> Res<()> {
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::at("estimator.pair.edges", "must be increasing, nonnegative, at least two"));
    }
    Ok(())
}

/// Validates `cfg` and builds everything a run needs.
pub fn resolve(cfg: &ScenarioConfig) -> Res<Scenario> {
    let (source, dim) = match &cfg.process {
        ProcessConfig::Poisson { rho, dim } => (CentreProcess::poisson(*rho, *dim).map_err(core_err("process"))?, *dim),
        ProcessConfig::Lattice { spacing, dim } => (CentreProcess::lattice(*spacing, *dim).map_err(core_err("process"))?, *dim),
        ProcessConfig::Matern { rho, radius, dim } => {
            (CentreProcess::matern(*rho, *radius, *dim).map_err(core_err("process"))?, *dim)
        }
        ProcessConfig::FibonacciGas { center, half_width, profile } => {
            let profile = match profile {
                ProfileConfig::Tent => Profile::Tent,
                ProfileConfig::Constant { q } => Profile::Constant(*q),
            };
            let gas = FibonacciGas::new(*center, *half_width, profile).map_err(core_err("process"))?;
            (CentreProcess::FibonacciGas(gas), 1)
        }
        ProcessConfig::Renewal { law: l } => return resolve_with(cfg, Source::Renewal(law(l)?), 1),
        ProcessConfig::Branching { rho, rate, dim, horizon, box_halfwidth, inner_halfwidth } => {
            let b = BranchingConfig::new(*rho, *rate, *dim, *horizon, *box_halfwidth, *inner_halfwidth)
                .map_err(core_err("process"))?;
            return resolve_with(cfg, Source::Branching(b), *dim);
        }
    };
    resolve_with(cfg, Source::Centre(source), dim)
}

fn resolve_with(cfg: &ScenarioConfig, source: Source, dim: usize) -> Res<Scenario> {
    let window = window(&cfg.window, dim)?;
    let grid = grid(&cfg.estimator.k_grid, dim)?;
    let band = match cfg.estimator.band {
        Some(b) => BandConfig { guard: b.guard, band: b.band },
        None => BandConfig::default(),
    };
    if band.guard == 0 || band.band == 0 {
        return Err(ConfigError::at("estimator.band", "guard and band must be positive"));
    }
    if let Some(a) = &cfg.estimator.autocorr {
        if !(a.bin_width > 0.0) || !(a.max_lag >= 0.0) {
            return Err(ConfigError::at("estimator.autocorr", "bin_width must be positive and max_lag nonnegative"));
        }
    }
    let cutoff = cfg.estimator.model_cutoff.unwrap_or(grid.half_extent() + 1.0);
    let cluster = match &cfg.cluster {
        Some(c) => Some(cluster(c, dim)?),
        None => None,
    };

    let (model, base_density) = match &source {
        Source::Centre(p) => (analytic_centre_model(p, cutoff).map_err(core_err("process"))?, p.intensity()),
        Source::Renewal(l) => {
            if window.kind() != WindowKind::Cube || window.center() != [window.scale()] {
                return Err(ConfigError::at("window", "renewal processes are observed on an interval window (0, length)"));
            }
            (analytic_renewal_model(l), 1.0)
        }
        Source::Branching(b) => {
            if window.kind() != WindowKind::Cube
                || window.center().iter().any(|c| c.abs() + window.scale() > b.box_halfwidth)
            {
                return Err(ConfigError::at("window", "branching runs need a cube window inside the torus box"));
            }
            (analytic_cbbm_model(b.rho, b.rate, b.dim, 2.0).map_err(core_err("process"))?, b.rho)
        }
    };

    let (model, mass_density) = match &cluster {
        None => (model, base_density),
        Some(law) => {
            let regime = match &source {
                Source::Centre(CentreProcess::Lattice { .. } | CentreProcess::FibonacciGas(_)) => CentreRegime::DeterministicComb,
                Source::Centre(_) => CentreRegime::RandomProcess,
                _ => return Err(ConfigError::at("cluster", "clusters are supported on centre processes only")),
            };
            let m = compound_model(&model, base_density, law, regime).map_err(core_err("cluster"))?;
            (m, base_density * law.mean_mass().re)
        }
    };

    let pair_edges = cfg.estimator.pair.as_ref().map(|p| p.edges.clone());
    let pair_model = match &pair_edges {
        None => PairModel::Unavailable,
        Some(edges) => {
            validate_edges(edges)?;
            match (&source, &cluster) {
                (Source::Branching(b), _) => {
                    if edges[edges.len() - 1] >= b.box_halfwidth {
                        return Err(ConfigError::at("estimator.pair.edges", "largest radius must be below the torus half-width"));
                    }
                    let (rho, rate, dim, t) = (b.rho, b.rate, b.dim, b.horizon);
                    PairModel::BranchingExcess(shell_averages(edges, dim, &|r| rho * f_t(rate, dim, t, r)))
                }
                _ if window.kind() != WindowKind::Cube => {
                    return Err(ConfigError::at("estimator.pair", "the edge-corrected pair statistic needs a cube window"));
                }
                (Source::Centre(CentreProcess::Poisson { rho, .. }), None) => {
                    PairModel::ProductDensity(vec![rho * rho; edges.len() - 1])
                }
                (Source::Centre(CentreProcess::Matern { rho, radius, dim }), None) => {
                    let (rho, radius, dim) = (*rho, *radius, *dim);
                    PairModel::ProductDensity(shell_averages(edges, dim, &|r| matern_product_density(rho, radius, dim, r)))
                }
                _ => PairModel::Unavailable,
            }
        }
    };

    Ok(Scenario {
        config: cfg.clone(),
        source,
        cluster,
        window,
        grid,
        band,
        model,
        mass_density,
        pair_edges,
        pair_model,
        tolerances: tolerances(&cfg.tolerances),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_document, Document};

    fn scenario(process: &str, extra: &str) -> Res<Scenario> {
        let text = format!(
            r#"{{"name": "t", "process": {process}, "window": {{"kind": "interval", "length": 100.0}},
                "estimator": {{"k_grid": {{"type": "line", "start": 0.0, "stop": 2.0, "step": 0.5}}}} {extra}}}"#
        );
        let Document::Single(cfg) = parse_document(&text)? else { unreachable!() };
        resolve(&cfg)
    }

    #[test]
    fn mean_one_violation_names_the_law() {
        let err = scenario(r#"{"type": "renewal", "law": {"type": "two_atom", "a": 0.5, "b": 1.5, "p": 0.3}}"#, "").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("process.law"), "{msg}");
        assert!(msg.contains("mean 1"), "{msg}");
        let err = scenario(r#"{"type": "renewal", "law": {"type": "two_atom", "a": "1/2", "b": "3/2", "p": "1/3"}}"#, "").unwrap_err();
        assert!(err.to_string().contains("mean 1"));
    }

    #[test]
    fn rational_tiling_gets_lattice_atoms() {
        let s = scenario(r#"{"type": "renewal", "law": {"type": "two_atom", "a": "2/3", "b": "4/3", "p": "1/2"}}"#, "").unwrap();
        let atoms = s.model.atoms_in_box(3.2);
        let mut ks: Vec<f64> = atoms.iter().map(|(k, _)| k[0]).collect();
        ks.sort_by(f64::total_cmp);
        assert_eq!(ks.len(), 5);
        assert!((ks[4] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_cluster_needs_a_comb() {
        let cl = r#", "cluster": {"type": "random_weight", "outcomes": [{"w": [0.0, 1.0], "p": 1.0}]}"#;
        let err = scenario(r#"{"type": "poisson", "rho": 1.0, "dim": 1}"#, cl).unwrap_err();
        assert!(err.to_string().starts_with("cluster"));
        assert!(scenario(r#"{"type": "lattice", "spacing": 1.0, "dim": 1}"#, cl).is_ok());
    }

    #[test]
    fn shell_average_of_power() {
        // r² averaged over the 3-d shell [1, 2]: (3/5)(2⁵ − 1)/(2³ − 1).
        let v = shell_averages(&[1.0, 2.0], 3, &|r| r * r);
        assert!((v[0] - 0.6 * 31.0 / 7.0).abs() < 1e-12);
    }
}
