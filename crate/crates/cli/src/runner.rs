//! Monte-Carlo driver.
//!
//! Realisations are grouped in fixed chunks of [`CHUNK`]. Each chunk is
//! simulated independently and the chunk tallies are merged in index order,
//! so every reported number depends on the seed and the realisation count
//! only, never on the thread count.

use rayon::prelude::*;

use diffract_core::branching::{evolve_torus, TorusPalm};
use diffract_core::clusters::sample_compound_in;
use diffract_core::processes::sample_centre;
use diffract_core::renewal::simulate_renewal;
use diffract_core::rng::{stream, Purpose};
use diffract_core::spectral::{compare, empirical_autocorr, min_separation, radial_product_density, AcHistogram, Check, ComparisonReport, EmpiricalSpectrum};
use diffract_core::WeightedPointSet;

use crate::config::ConfigError;
use crate::scenario::{PairModel, Scenario, Source};

pub const CHUNK: u64 = 8;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("realisation {realisation}: {source}")]
    Simulation { realisation: u64, source: diffract_core::Error },
    #[error(transparent)]
    Estimation(#[from] diffract_core::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub realisations: u64,
    pub threads: usize,
    /// Realisations `0..dump_points` are kept for writing out.
    pub dump_points: u64,
}

/// One realisation: the points in the observation window and, for
/// branching runs, the full torus configuration.
pub struct Realisation {
    pub points: WeightedPointSet,
    pub torus: Option<WeightedPointSet>,
}

/// Draws realisation `r` of `s`. Streams depend on `(seed, r)` only.
pub fn realise(s: &Scenario, seed: u64, r: u64) -> Result<Realisation, diffract_core::Error> {
    match &s.source {
        Source::Centre(p) => {
            let mut rng = stream(seed, r, Purpose::Process);
            let points = match &s.cluster {
                None => sample_centre(p, &s.window, &mut rng)?,
                Some(law) => {
                    let outer = s.window.dilated(law.reach()).expect("dilation by a nonnegative reach");
                    let centres = sample_centre(p, &outer, &mut rng)?;
                    sample_compound_in(&centres, law, &s.window, &mut stream(seed, r, Purpose::Cluster))?
                }
            };
            Ok(Realisation { points, torus: None })
        }
        Source::Renewal(law) => {
            let points = simulate_renewal(law, s.window.side_length(), &mut stream(seed, r, Purpose::Renewal))?;
            Ok(Realisation { points, torus: None })
        }
        Source::Branching(cfg) => {
            let torus = evolve_torus(cfg, &mut stream(seed, r, Purpose::Branching))?;
            let points = torus.restrict(&s.window)?;
            Ok(Realisation { points, torus: Some(torus) })
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Sums {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Sums {
    fn add(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    /// Standard error of the mean.
    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum_sq / self.n - m * m).max(0.0) / (self.n - 1.0)).sqrt()
    }
}

#[derive(Clone, Debug)]
enum PairTally {
    None,
    Radial(Vec<Sums>),
    Torus { palm: TorusPalm, per_realisation: Vec<Sums> },
}

#[derive(Clone, Debug)]
struct Tally {
    spectrum: EmpiricalSpectrum,
    autocorr: Option<AcHistogram>,
    mass: Sums,
    torus_count: Sums,
    min_separation: Option<f64>,
    pair: PairTally,
    dumps: Vec<(u64, WeightedPointSet)>,
}

impl Tally {
    fn new(s: &Scenario) -> Result<Self, diffract_core::Error> {
        let pair = match (&s.pair_edges, &s.source) {
            (None, _) => PairTally::None,
            (Some(e), Source::Branching(_)) => PairTally::Torus {
                palm: TorusPalm::new(e.clone())?,
                per_realisation: vec![Sums::default(); e.len() - 1],
            },
            (Some(e), _) => PairTally::Radial(vec![Sums::default(); e.len() - 1]),
        };
        let autocorr = match &s.config.estimator.autocorr {
            Some(a) => Some(AcHistogram::new(s.dim(), a.bin_width, a.max_lag)?),
            None => None,
        };
        Ok(Self {
            spectrum: EmpiricalSpectrum::new(s.grid.clone(), s.window.clone(), s.band)?,
            autocorr,
            mass: Sums::default(),
            torus_count: Sums::default(),
            min_separation: None,
            pair,
            dumps: Vec::new(),
        })
    }

    fn add(&mut self, s: &Scenario, r: u64, real: Realisation, keep: bool) -> Result<(), diffract_core::Error> {
        let ps = &real.points;
        self.spectrum.add(ps)?;
        if let (Some(h), Some(a)) = (&mut self.autocorr, &s.config.estimator.autocorr) {
            h.merge(&empirical_autocorr(ps, a.bin_width, a.max_lag)?)?;
        }
        self.mass.add(ps.weights().iter().map(|w| w.re).sum());
        if s.hard_core().is_some() {
            if let Some(d) = min_separation(ps) {
                self.min_separation = Some(self.min_separation.map_or(d, |m| m.min(d)));
            }
        }
        match (&mut self.pair, &real.torus, &s.source) {
            (PairTally::Radial(sums), _, _) => {
                let est = radial_product_density(ps, s.pair_edges.as_deref().expect("pair edges"))?;
                sums.iter_mut().zip(est).for_each(|(t, v)| t.add(v));
            }
            (PairTally::Torus { palm, per_realisation }, Some(torus), Source::Branching(cfg)) => {
                let mut one = TorusPalm::new(palm.edges().to_vec())?;
                one.add(torus, cfg.box_halfwidth)?;
                let ex = one.excess_density(cfg.dim);
                per_realisation.iter_mut().zip(ex).for_each(|(t, v)| t.add(cfg.rho * v));
                palm.merge(&one);
            }
            _ => {}
        }
        if let Some(t) = &real.torus {
            self.torus_count.add(t.len() as f64);
        }
        if keep {
            self.dumps.push((r, real.points));
        }
        Ok(())
    }

    fn merge(&mut self, o: Tally) -> Result<(), diffract_core::Error> {
        self.spectrum.merge(&o.spectrum)?;
        if let (Some(a), Some(b)) = (&mut self.autocorr, &o.autocorr) {
            a.merge(b)?;
        }
        self.mass.merge(&o.mass);
        self.torus_count.merge(&o.torus_count);
        self.min_separation = match (self.min_separation, o.min_separation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        match (&mut self.pair, &o.pair) {
            (PairTally::Radial(a), PairTally::Radial(b)) => a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y)),
            (PairTally::Torus { palm: pa, per_realisation: a }, PairTally::Torus { palm: pb, per_realisation: b }) => {
                pa.merge(pb);
                a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
            }
            _ => {}
        }
        self.dumps.extend(o.dumps);
        Ok(())
    }
}

/// A scalar diagnostic with its model value where one exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Extra {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub expected: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSummary {
    /// `"product_density"` or `"excess_pair_density"`.
    pub statistic: &'static str,
    pub edges: Vec<f64>,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    pub model: Option<Vec<f64>>,
}

pub struct RunOutcome {
    pub comparison: ComparisonReport,
    pub spectrum: EmpiricalSpectrum,
    pub autocorr: Option<AcHistogram>,
    pub extras: Vec<Extra>,
    pub pair: Option<PairSummary>,
    /// Comparison checks followed by the scenario-level checks.
    pub checks: Vec<Check>,
    pub dumps: Vec<(u64, WeightedPointSet)>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.into(), value, limit, pass: value <= limit }
}

fn relative(est: f64, model: f64) -> f64 {
    if model != 0.0 {
        (est - model).abs() / model.abs()
    } else {
        (est - model).abs()
    }
}

fn shape_points(s: &Scenario) -> Result<Vec<usize>, ConfigError> {
    s.config
        .tolerances
        .shape
        .iter()
        .enumerate()
        .map(|(j, sc)| {
            let path = format!("tolerances.shape[{j}].k");
            if sc.k.len() != s.dim() {
                return Err(ConfigError::at(path, format!("expected {} coordinates", s.dim())));
            }
            match s.grid.nearest(&sc.k) {
                Some((i, d)) if d <= 1e-9 * (1.0 + sc.k.iter().fold(0.0, |m: f64, v| m.max(v.abs()))) => Ok(i),
                _ => Err(ConfigError::at(path, "not a point of the k grid")),
            }
        })
        .collect()
}

/// Simulates `opts.realisations` realisations of `s` and compares them with
/// the scenario's model.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    if opts.realisations == 0 {
        return Err(ConfigError::at("realisations", "must be positive").into());
    }
    let shape = shape_points(s)?;
    let chunks: Vec<u64> = (0..opts.realisations.div_ceil(CHUNK)).collect();
    let work = |c: &u64| -> Result<Tally, RunError> {
        let mut t = Tally::new(s)?;
        for r in c * CHUNK..((c + 1) * CHUNK).min(opts.realisations) {
            let real = realise(s, opts.seed, r).map_err(|source| RunError::Simulation { realisation: r, source })?;
            t.add(s, r, real, r < opts.dump_points)?;
        }
        Ok(t)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let tallies: Vec<Result<Tally, RunError>> = pool.install(|| chunks.par_iter().map(work).collect());
    let mut iter = tallies.into_iter();
    let mut total = iter.next().expect("at least one chunk")?;
    for t in iter {
        total.merge(t?)?;
    }

    let comparison = compare(&total.spectrum, &s.model, &s.tolerances)?;
    let mut checks = comparison.checks.clone();
    let tol = &s.config.tolerances;
    let vol = s.window.volume();
    let mut extras = Vec::new();

    let intensity = total.mass.mean() / vol;
    extras.push(Extra {
        name: "intensity".into(),
        value: intensity,
        stderr: Some(total.mass.stderr() / vol),
        expected: Some(s.mass_density),
    });
    if let Some(l) = tol.intensity_rel {
        checks.push(check("intensity_rel", relative(intensity, s.mass_density), l));
    }

    let (count, expected_count) = match &s.source {
        Source::Branching(cfg) => (&total.torus_count, cfg.rho * cfg.box_window().volume()),
        _ => (&total.mass, s.mass_density * vol),
    };
    let count_se = count.stderr();
    let count_z = if count_se > 0.0 { (count.mean() - expected_count).abs() / count_se } else { 0.0 };
    extras.push(Extra {
        name: "count".into(),
        value: count.mean(),
        stderr: Some(count_se),
        expected: Some(expected_count),
    });
    if let Some(l) = tol.count_z {
        checks.push(check("count_z", count_z, l));
    }

    if let (Some(r), Some(d)) = (s.hard_core(), total.min_separation) {
        extras.push(Extra { name: "min_separation".into(), value: d, stderr: None, expected: Some(r) });
        // Passes iff d ≥ r up to rounding.
        checks.push(check("hard_core_violation", (r - d).max(0.0), 1e-12 * r));
    }

    for (sc, &i) in tol.shape.iter().zip(&shape) {
        let (est, _) = total.spectrum.background(i);
        let label = |b: &str| format!("shape_{b}@{:?}", sc.k);
        if let Some(m) = sc.min {
            checks.push(Check { name: label("min"), value: est, limit: m, pass: est >= m });
        }
        if let Some(m) = sc.max {
            checks.push(check(&label("max"), est, m));
        }
    }

    let pair = match (&total.pair, &s.pair_edges) {
        (PairTally::None, _) | (_, None) => None,
        (PairTally::Radial(sums), Some(edges)) => Some(PairSummary {
            statistic: "product_density",
            edges: edges.clone(),
            estimate: sums.iter().map(Sums::mean).collect(),
            stderr: sums.iter().map(Sums::stderr).collect(),
            model: match &s.pair_model {
                PairModel::ProductDensity(m) => Some(m.clone()),
                _ => None,
            },
        }),
        (PairTally::Torus { palm, per_realisation }, Some(edges)) => {
            let rho = match &s.source {
                Source::Branching(cfg) => cfg.rho,
                _ => unreachable!("torus tally only for branching runs"),
            };
            Some(PairSummary {
                statistic: "excess_pair_density",
                edges: edges.clone(),
                estimate: palm.excess_density(s.dim()).into_iter().map(|v| rho * v).collect(),
                stderr: per_realisation.iter().map(Sums::stderr).collect(),
                model: match &s.pair_model {
                    PairModel::BranchingExcess(m) => Some(m.clone()),
                    _ => None,
                },
            })
        }
    };
    if let Some(PairSummary { estimate, model: Some(model), .. }) = &pair {
        let rel: Vec<f64> = estimate.iter().zip(model).map(|(e, m)| relative(*e, *m)).collect();
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        let max = rel.iter().fold(0.0, |a: f64, b| a.max(*b));
        extras.push(Extra { name: "pair_mean_rel".into(), value: mean, stderr: None, expected: None });
        extras.push(Extra { name: "pair_max_rel".into(), value: max, stderr: None, expected: None });
        if let Some(l) = tol.pair_mean_rel {
            checks.push(check("pair_mean_rel", mean, l));
        }
        if let Some(l) = tol.pair_max_rel {
            checks.push(check("pair_max_rel", max, l));
        }
    } else if tol.pair_mean_rel.is_some() || tol.pair_max_rel.is_some() {
        return Err(ConfigError::at("tolerances.pair_mean_rel", "no pair model is available for this scenario").into());
    }

    Ok(RunOutcome {
        comparison,
        spectrum: total.spectrum,
        autocorr: total.autocorr,
        extras,
        pair,
        checks,
        dumps: total.dumps,
    })
}
