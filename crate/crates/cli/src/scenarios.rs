//! Built-in scenario documents, selectable by name in place of a config
//! path.

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub json: &'static str,
}

macro_rules! builtin {
    ($name:literal, $summary:literal) => {
        Builtin { name: $name, summary: $summary, json: include_str!(concat!("../scenarios/", $name, ".json")) }
    };
}

pub const BUILTINS: &[Builtin] = &[
    builtin!("gamma_sweep", "Gamma renewal processes, alpha in {0.7, 1, 2, 8}"),
    builtin!("poisson_d1", "Poisson process on the line, rho = 1"),
    builtin!("poisson_d1_rho2", "Poisson process on the line, rho = 2"),
    builtin!("poisson_d2", "Poisson process in the plane, cube half-width 50"),
    builtin!("lambda_gas", "Integer lattice with Bernoulli(1/2) occupation"),
    builtin!("tiling_rational", "Two-atom renewal tiling with rational tile lengths 2/3, 4/3"),
    builtin!("tiling_irrational", "Two-atom renewal tiling with golden-ratio tile lengths"),
    builtin!("neyman_scott", "Poisson centres with uniform{0..3} Gaussian offspring, sigma = 0.2"),
    builtin!("gaussian_displacement", "Poisson centres displaced by Gaussian noise, sigma = 0.3"),
    builtin!("signed_poisson", "Poisson process with random signs"),
    builtin!("matern_d2", "Matern hard-core process in the plane, R = 0.5"),
    builtin!("fibonacci_gas", "Particle gas on the Fibonacci model set, tent profile"),
    builtin!("branching_d3", "Critical branching Brownian motion in d = 3 on a torus"),
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_document;
    use crate::scenario::resolve;

    #[test]
    fn every_builtin_resolves() {
        for b in BUILTINS {
            let doc = parse_document(b.json).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(doc.name(), b.name);
            for s in doc.scenarios() {
                resolve(s).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            }
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<&str> = BUILTINS.iter().map(|b| b.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), BUILTINS.len());
    }
}
