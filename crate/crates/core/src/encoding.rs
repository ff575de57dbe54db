//! Preprocessing `phi`: how states (and, for FSQ, current actions) become
//! network inputs.

use crate::envs::EnvDescriptor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    /// Raw values, concatenated.
    Identity,
    /// One-hot over discrete states (times lattice actions for FSQ).
    OneHot,
}

impl Encoding {
    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Identity => "identity",
            Encoding::OneHot => "one_hot",
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Self::Identity),
            "one_hot" => Ok(Self::OneHot),
            other => Err(format!("unknown encoding `{other}`")),
        }
    }
}

/// Grid `low, low + delta, ...` with `points` entries for one action coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionLattice {
    pub low: f64,
    pub delta: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureMap {
    Identity {
        state_dim: usize,
        action_dims: usize,
    },
    OneHot {
        n_states: usize,
        lattices: Vec<ActionLattice>,
    },
}

impl FeatureMap {
    /// Input map over auxiliary states `(s, a)`.
    pub fn for_fsq(encoding: Encoding, desc: &EnvDescriptor) -> Result<Self> {
        match encoding {
            Encoding::Identity => Ok(Self::Identity {
                state_dim: desc.state_dim,
                action_dims: desc.action_spec.dims(),
            }),
            Encoding::OneHot => {
                let n_states = discrete_states(desc)?;
                let spec = &desc.action_spec;
                let lattices = (0..spec.dims())
                    .map(|j| {
                        let span = (spec.high()[j] - spec.low()[j]) / spec.delta()[j];
                        if (span - span.round()).abs() > 1e-9 {
                            return Err(Error::validation(
                                "encoding",
                                format!("one_hot needs delta to divide the action range on coordinate {j}"),
                            ));
                        }
                        Ok(ActionLattice {
                            low: spec.low()[j],
                            delta: spec.delta()[j],
                            points: span.round() as usize + 1,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::OneHot { n_states, lattices })
            }
        }
    }

    /// Input map over states only.
    pub fn for_states(encoding: Encoding, desc: &EnvDescriptor) -> Result<Self> {
        match encoding {
            Encoding::Identity => Ok(Self::Identity {
                state_dim: desc.state_dim,
                action_dims: 0,
            }),
            Encoding::OneHot => Ok(Self::OneHot {
                n_states: discrete_states(desc)?,
                lattices: Vec::new(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Identity {
                state_dim,
                action_dims,
            } => state_dim + action_dims,
            Self::OneHot { n_states, lattices } => n_states * lattices.iter().map(|l| l.points).product::<usize>(),
        }
    }

    /// Index of the active unit for a one-hot map; `None` for identity maps.
    pub fn one_hot_index(&self, state: &[f64], action: &[f64]) -> Option<usize> {
        let Self::OneHot { n_states, lattices } = self else {
            return None;
        };
        let s = (state[0].round().max(0.0) as usize).min(n_states - 1);
        let mut index = s;
        for (l, a) in lattices.iter().zip(action) {
            let i = ((a - l.low) / l.delta).round().max(0.0) as usize;
            index = index * l.points + i.min(l.points - 1);
        }
        Some(index)
    }

    pub fn encode(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity { action_dims, .. } => {
                let mut v = state.to_vec();
                v.extend_from_slice(&action[..*action_dims]);
                v
            }
            Self::OneHot { .. } => {
                let mut v = vec![0.0; self.dim()];
                v[self.one_hot_index(state, action).expect("one-hot map")] = 1.0;
                v
            }
        }
    }
}

fn discrete_states(desc: &EnvDescriptor) -> Result<usize> {
    desc.discrete_states.ok_or_else(|| {
        Error::validation(
            "encoding",
            format!("one_hot needs a discrete-state environment, `{}` is continuous", desc.name),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_env, EnvOptions};

    #[test]
    fn identity_concatenates() {
        let env = make_env("point_reacher", &EnvOptions::default()).unwrap();
        let map = FeatureMap::for_fsq(Encoding::Identity, env.descriptor()).unwrap();
        assert_eq!(map.dim(), 4);
        assert_eq!(map.encode(&[1.0, 2.0], &[0.5, -0.5]), vec![1.0, 2.0, 0.5, -0.5]);
        let states = FeatureMap::for_states(Encoding::Identity, env.descriptor()).unwrap();
        assert_eq!(states.encode(&[1.0, 2.0], &[]), vec![1.0, 2.0]);
    }

    #[test]
    fn one_hot_covers_every_pair_once() {
        let options = EnvOptions {
            delta_a: 0.5,
            lattice_states: 4,
            ..EnvOptions::default()
        };
        let env = make_env("lattice_mdp", &options).unwrap();
        let map = FeatureMap::for_fsq(Encoding::OneHot, env.descriptor()).unwrap();
        assert_eq!(map.dim(), 4 * 5);
        let mut seen = vec![false; map.dim()];
        for s in 0..4 {
            for i in 0..5 {
                let a = -1.0 + 0.5 * i as f64;
                let idx = map.one_hot_index(&[s as f64], &[a]).unwrap();
                assert_eq!(idx, s * 5 + i);
                assert!(!seen[idx]);
                seen[idx] = true;
                let v = map.encode(&[s as f64], &[a]);
                assert_eq!(v.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn one_hot_needs_discrete_states() {
        let env = make_env("mountain_car", &EnvOptions::default()).unwrap();
        assert!(FeatureMap::for_fsq(Encoding::OneHot, env.descriptor()).is_err());
    }
}
