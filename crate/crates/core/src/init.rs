//! Starting points for the solvers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, Network};
use crate::seed;

/// How to draw `x⁰`. Serialized as `"truth"`, `"random"` or
/// `"perturbed-truth:<std>"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Initializer {
    Truth,
    /// Uniform in the unit box.
    Random,
    /// Truth plus i.i.d. `N(0, std²)` per coordinate.
    PerturbedTruth {
        std: f64,
    },
}

impl Initializer {
    pub fn draw(&self, net: &Network, rng_seed: u64) -> Result<Vec<f64>, GraphError> {
        let len = net.n() * net.p();
        let mut rng = seed::rng(rng_seed, &[seed::TAG_INIT]);
        match *self {
            Initializer::Random => Ok((0..len).map(|_| rng.random::<f64>()).collect()),
            Initializer::Truth => net
                .true_positions()
                .map(<[f64]>::to_vec)
                .ok_or(GraphError::MissingTruth),
            Initializer::PerturbedTruth { std } => {
                let truth = net.true_positions().ok_or(GraphError::MissingTruth)?;
                let noise = Normal::new(0.0, std).map_err(|_| GraphError::BadValue {
                    what: "initializer std",
                    index: 0,
                    value: std,
                })?;
                Ok(truth.iter().map(|v| v + noise.sample(&mut rng)).collect())
            }
        }
    }
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initializer::Truth => f.write_str("truth"),
            Initializer::Random => f.write_str("random"),
            Initializer::PerturbedTruth { std } => write!(f, "perturbed-truth:{std}"),
        }
    }
}

impl FromStr for Initializer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "truth" => Ok(Initializer::Truth),
            "random" => Ok(Initializer::Random),
            _ => {
                let std = s
                    .strip_prefix("perturbed-truth:")
                    .ok_or_else(|| format!("unknown initializer `{s}`"))?;
                let std: f64 = std
                    .parse()
                    .map_err(|_| format!("bad perturbation std `{std}`"))?;
                if !(std.is_finite() && std >= 0.0) {
                    return Err(format!("perturbation std must be nonnegative, got {std}"));
                }
                Ok(Initializer::PerturbedTruth { std })
            }
        }
    }
}

impl TryFrom<String> for Initializer {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Initializer> for String {
    fn from(i: Initializer) -> String {
        i.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        for s in ["truth", "random", "perturbed-truth:0.1"] {
            assert_eq!(s.parse::<Initializer>().unwrap().to_string(), s);
        }
        assert!("perturbed-truth:-1".parse::<Initializer>().is_err());
        assert!("convex".parse::<Initializer>().is_err());
    }

    #[test]
    fn zero_std_perturbation_is_truth() {
        let net = Network::new(
            2,
            2,
            vec![(0, 1)],
            &[],
            vec![vec![]; 2],
            Some(vec![0.1, 0.2, 0.3, 0.4]),
        )
        .unwrap();
        let x = Initializer::PerturbedTruth { std: 0.0 }
            .draw(&net, 3)
            .unwrap();
        assert_eq!(x, vec![0.1, 0.2, 0.3, 0.4]);
    }
}
