//! JSON file formats for systems and models.
//!
//! Ordering probabilities are strings holding exact rationals ("3/10", "1")
//! rather than JSON numbers, so exact models survive the round trip through
//! text. Lifetime model parameters are ordinary floating point numbers.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifetimes::{LifetimeModel, Marginal, MixturePart};
use crate::quality::PermutationModel;
use crate::reliability::ComponentStateModel;
use crate::structure::StructureFunction;
use crate::Rational;

/// A system given either by path sets or by a full truth table. Exactly one
/// of the two fields must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_sets: Option<Vec<Vec<usize>>>,
    /// Truth table over all 2^n subsets, indexed by the component mask.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_table: Option<Vec<bool>>,
}

impl SystemDescriptor {
    pub fn build(&self) -> Result<StructureFunction> {
        match (&self.path_sets, &self.truth_table) {
            (Some(paths), None) => StructureFunction::from_min_path_sets(self.n, paths),
            (None, Some(table)) => StructureFunction::from_truth_table(self.n, table),
            _ => Err(Error::InvalidDescriptor(
                "system descriptor needs exactly one of path_sets or truth_table".into(),
            )),
        }
    }

    pub fn from_structure(phi: &StructureFunction) -> Self {
        let paths = phi
            .minimal_path_sets()
            .into_iter()
            .map(crate::subsets::ids_from_mask)
            .collect();
        SystemDescriptor {
            n: phi.n(),
            path_sets: Some(paths),
            truth_table: None,
        }
    }
}

/// An explicit lifetime ordering distribution. Keys list component ids from
/// shortest-lived to longest-lived, comma separated; surrounding parentheses
/// and spaces are tolerated on input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermutationModelFile {
    pub n: usize,
    pub orderings: BTreeMap<String, String>,
}

fn parse_ordering_key(key: &str) -> Result<Vec<u8>> {
    let trimmed = key.trim().trim_start_matches('(').trim_end_matches(')');
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<u8>()
                .map_err(|_| Error::InvalidDescriptor(format!("bad ordering key {key:?}")))
        })
        .collect()
}

fn parse_rational(text: &str) -> Result<Rational> {
    Rational::from_str(text.trim())
        .map_err(|_| Error::InvalidDescriptor(format!("bad rational value {text:?}")))
}

impl PermutationModelFile {
    pub fn build(&self) -> Result<PermutationModel<Rational>> {
        let mut probs = BTreeMap::new();
        for (key, value) in &self.orderings {
            let perm = parse_ordering_key(key)?;
            if probs.insert(perm, parse_rational(value)?).is_some() {
                return Err(Error::InvalidDescriptor(format!(
                    "ordering key {key:?} appears twice"
                )));
            }
        }
        PermutationModel::new(self.n, probs)
    }

    pub fn from_model(model: &PermutationModel<Rational>) -> Self {
        let orderings = model
            .iter()
            .map(|(perm, p)| {
                let key = perm
                    .iter()
                    .map(u8::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                (key, p.to_string())
            })
            .collect();
        PermutationModelFile {
            n: model.n(),
            orderings,
        }
    }
}

/// One lifetime distribution; the exponential takes its rate directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalSpec {
    Exponential(f64),
    Weibull { shape: f64, scale: f64 },
    Uniform { max: f64 },
}

impl MarginalSpec {
    pub fn build(&self) -> Marginal {
        match *self {
            MarginalSpec::Exponential(rate) => Marginal::Exponential { rate },
            MarginalSpec::Weibull { shape, scale } => Marginal::Weibull { shape, scale },
            MarginalSpec::Uniform { max } => Marginal::Uniform { max },
        }
    }

    pub fn from_marginal(m: &Marginal) -> Self {
        match *m {
            Marginal::Exponential { rate } => MarginalSpec::Exponential(rate),
            Marginal::Weibull { shape, scale } => MarginalSpec::Weibull { shape, scale },
            Marginal::Uniform { max } => MarginalSpec::Uniform { max },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePartSpec {
    pub weight: f64,
    pub marginal: MarginalSpec,
}

/// Joint lifetime model selected by a "kind" tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LifetimeModelFile {
    Iid { n: usize, marginal: MarginalSpec },
    Independent { marginals: Vec<MarginalSpec> },
    ExchangeableMixture { n: usize, parts: Vec<MixturePartSpec> },
}

impl LifetimeModelFile {
    pub fn build(&self) -> Result<LifetimeModel> {
        let model = match self {
            LifetimeModelFile::Iid { n, marginal } => LifetimeModel::Iid {
                n: *n,
                marginal: marginal.build(),
            },
            LifetimeModelFile::Independent { marginals } => LifetimeModel::Independent {
                marginals: marginals.iter().map(MarginalSpec::build).collect(),
            },
            LifetimeModelFile::ExchangeableMixture { n, parts } => {
                LifetimeModel::ExchangeableMixture {
                    n: *n,
                    parts: parts
                        .iter()
                        .map(|p| MixturePart {
                            weight: p.weight,
                            marginal: p.marginal.build(),
                        })
                        .collect(),
                }
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &LifetimeModel) -> Self {
        match model {
            LifetimeModel::Iid { n, marginal } => LifetimeModelFile::Iid {
                n: *n,
                marginal: MarginalSpec::from_marginal(marginal),
            },
            LifetimeModel::Independent { marginals } => LifetimeModelFile::Independent {
                marginals: marginals.iter().map(MarginalSpec::from_marginal).collect(),
            },
            LifetimeModel::ExchangeableMixture { n, parts } => {
                LifetimeModelFile::ExchangeableMixture {
                    n: *n,
                    parts: parts
                        .iter()
                        .map(|p| MixturePartSpec {
                            weight: p.weight,
                            marginal: MarginalSpec::from_marginal(&p.marginal),
                        })
                        .collect(),
                }
            }
        }
    }
}

/// Component state model: the closed form of a lifetime model, or relative
/// frequencies over a reproducible sample set drawn at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateModelFile {
    Analytic {
        model: LifetimeModelFile,
    },
    Empirical {
        model: LifetimeModelFile,
        samples: usize,
        seed: u64,
        partitions: u32,
    },
}

impl StateModelFile {
    pub fn build(&self) -> Result<ComponentStateModel> {
        match self {
            StateModelFile::Analytic { model } => ComponentStateModel::analytic(model.build()?),
            StateModelFile::Empirical {
                model,
                samples,
                seed,
                partitions,
            } => ComponentStateModel::empirical(&model.build()?, *samples, *seed, *partitions),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_descriptor_round_trip() {
        let text = r#"{ "n": 4, "path_sets": [[2, 4], [3, 4]] }"#;
        let desc: SystemDescriptor = serde_json::from_str(text).unwrap();
        let phi = desc.build().unwrap();
        let back = SystemDescriptor::from_structure(&phi);
        assert_eq!(back.n, 4);
        assert_eq!(back.path_sets, Some(vec![vec![2, 4], vec![3, 4]]));
        let rebuilt = back.build().unwrap();
        for mask in 0..16 {
            assert_eq!(phi.value(mask), rebuilt.value(mask));
        }
    }

    #[test]
    fn system_descriptor_needs_exactly_one_source() {
        let none: SystemDescriptor = serde_json::from_str(r#"{ "n": 2 }"#).unwrap();
        assert!(matches!(none.build(), Err(Error::InvalidDescriptor(_))));
        let both: SystemDescriptor = serde_json::from_str(
            r#"{ "n": 1, "path_sets": [[1]], "truth_table": [false, true] }"#,
        )
        .unwrap();
        assert!(matches!(both.build(), Err(Error::InvalidDescriptor(_))));
    }

    #[test]
    fn truth_table_descriptor_builds() {
        let text = r#"{ "n": 2, "truth_table": [false, true, false, true] }"#;
        let phi = serde_json::from_str::<SystemDescriptor>(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(phi.minimal_path_sets(), vec![0b01]);
    }

    #[test]
    fn permutation_model_file_parses_exact_values() {
        let text = r#"{ "n": 2, "orderings": { "(1, 2)": "3/10", "2,1": "7/10" } }"#;
        let model = serde_json::from_str::<PermutationModelFile>(text)
            .unwrap()
            .build()
            .unwrap();
        let expect = Rational::new(3.into(), 10.into());
        assert_eq!(model.prob(&[1, 2]), expect);
        let back = PermutationModelFile::from_model(&model);
        assert_eq!(back.orderings["1,2"], "3/10");
        assert_eq!(back.orderings["2,1"], "7/10");
    }

    #[test]
    fn permutation_model_file_rejects_garbage() {
        let bad_key = PermutationModelFile {
            n: 2,
            orderings: BTreeMap::from([("1;2".into(), "1".into())]),
        };
        assert!(matches!(bad_key.build(), Err(Error::InvalidDescriptor(_))));
        let bad_value = PermutationModelFile {
            n: 2,
            orderings: BTreeMap::from([("1,2".into(), "0.5".into()), ("2,1".into(), "1/2".into())]),
        };
        assert!(matches!(bad_value.build(), Err(Error::InvalidDescriptor(_))));
        let bad_sum = PermutationModelFile {
            n: 2,
            orderings: BTreeMap::from([("1,2".into(), "1/2".into())]),
        };
        assert!(matches!(bad_sum.build(), Err(Error::InvariantViolation(_))));
        // JSON numbers are not acceptable probabilities
        let numeric = r#"{ "n": 2, "orderings": { "1,2": 0.5, "2,1": 0.5 } }"#;
        assert!(serde_json::from_str::<PermutationModelFile>(numeric).is_err());
    }

    #[test]
    fn lifetime_model_files_build_and_validate() {
        let iid = r#"{ "kind": "iid", "n": 4, "marginal": { "exponential": 1.0 } }"#;
        let model = serde_json::from_str::<LifetimeModelFile>(iid)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(model.n(), 4);
        let indep = r#"{ "kind": "independent", "marginals": [
            { "exponential": 1.0 },
            { "weibull": { "shape": 2.0, "scale": 1.0 } },
            { "uniform": { "max": 3.0 } }
        ] }"#;
        let model = serde_json::from_str::<LifetimeModelFile>(indep)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(model.n(), 3);
        let mixture = r#"{ "kind": "exchangeable_mixture", "n": 2, "parts": [
            { "weight": 0.5, "marginal": { "exponential": 1.0 } },
            { "weight": 0.5, "marginal": { "exponential": 3.0 } }
        ] }"#;
        let model = serde_json::from_str::<LifetimeModelFile>(mixture)
            .unwrap()
            .build()
            .unwrap();
        let round = LifetimeModelFile::from_model(&model);
        assert_eq!(
            serde_json::to_value(&round).unwrap(),
            serde_json::from_str::<serde_json::Value>(mixture).unwrap()
        );
        let bad = r#"{ "kind": "iid", "n": 2, "marginal": { "exponential": -1.0 } }"#;
        assert!(serde_json::from_str::<LifetimeModelFile>(bad)
            .unwrap()
            .build()
            .is_err());
    }

    #[test]
    fn state_model_files_build() {
        let analytic = r#"{ "kind": "analytic",
            "model": { "kind": "iid", "n": 2, "marginal": { "exponential": 1.0 } } }"#;
        let state = serde_json::from_str::<StateModelFile>(analytic)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(state.n(), 2);
        let empirical = r#"{ "kind": "empirical",
            "model": { "kind": "iid", "n": 2, "marginal": { "exponential": 1.0 } },
            "samples": 100, "seed": 7, "partitions": 4 }"#;
        let state = serde_json::from_str::<StateModelFile>(empirical)
            .unwrap()
            .build()
            .unwrap();
        match state {
            ComponentStateModel::Empirical { samples, .. } => assert_eq!(samples.count(), 100),
            _ => panic!("expected an empirical state model"),
        }
    }
}
