//! Coalitions, game specifications and uncertain value functions.
//!
//! Agents are indexed from 0 internally. Every serialized form (JSON game
//! files, reports, CSV) uses 1-based agent indices.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported agent count. Coalitions are stored as `u64` masks and
/// the default structure enumerates `2^N - 2` subcoalitions.
pub const MAX_AGENTS: usize = 16;

/// A nonempty set of agents, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(u64);

impl Coalition {
    pub fn from_mask(mask: u64) -> Result<Self> {
        if mask == 0 {
            return Err(Error::InvalidGame("empty coalition".into()));
        }
        Ok(Coalition(mask))
    }

    /// Builds a coalition from 0-based member indices.
    pub fn from_members(members: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in members {
            if i >= MAX_AGENTS {
                return Err(Error::InvalidGame(format!(
                    "agent index {} out of range",
                    i + 1
                )));
            }
            mask |= 1 << i;
        }
        Self::from_mask(mask)
    }

    pub fn singleton(agent: usize) -> Self {
        Coalition(1 << agent)
    }

    pub fn grand(n_agents: usize) -> Self {
        Coalition(full_mask(n_agents))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn contains(self, agent: usize) -> bool {
        agent < 64 && self.0 & (1 << agent) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// True when the coalition is a strict subset of the grand coalition on
    /// `n_agents` agents.
    pub fn is_proper(self, n_agents: usize) -> bool {
        let full = full_mask(n_agents);
        self.0 & !full == 0 && self.0 != full
    }

    /// Member indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..64).filter(move |i| mask & (1 << i) != 0)
    }

    /// `Σ_{i∈S} x_i`.
    pub fn total(self, x: &[f64]) -> f64 {
        self.members().map(|i| x[i]).sum()
    }

    pub fn indicator(self, n_agents: usize) -> Vec<f64> {
        (0..n_agents)
            .map(|i| if self.contains(i) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn one_based(self) -> Vec<usize> {
        self.members().map(|i| i + 1).collect()
    }
}

fn full_mask(n_agents: usize) -> u64 {
    if n_agents >= 64 {
        u64::MAX
    } else {
        (1u64 << n_agents) - 1
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.members().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Coalition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Coalition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(deserializer)?;
        if members.contains(&0) {
            return Err(serde::de::Error::custom("agent ids are 1-based"));
        }
        let zero_based: Vec<usize> = members.iter().map(|i| i - 1).collect();
        Coalition::from_members(&zero_based).map_err(serde::de::Error::custom)
    }
}

/// One affine piece `constant + slope·ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub constant: f64,
    pub slope: Vec<f64>,
}

impl AffinePiece {
    pub fn new(constant: f64, slope: Vec<f64>) -> Self {
        AffinePiece { constant, slope }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.constant + self.slope.iter().zip(xi).map(|(b, x)| b * x).sum::<f64>()
    }
}

/// Value form of one coalition: the maximum over its affine pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalitionValue {
    pub pieces: Vec<AffinePiece>,
}

impl CoalitionValue {
    pub fn affine(constant: f64, slope: Vec<f64>) -> Self {
        CoalitionValue {
            pieces: vec![AffinePiece::new(constant, slope)],
        }
    }

    pub fn max_affine(pieces: Vec<AffinePiece>) -> Self {
        CoalitionValue { pieces }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(xi))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-coalition value forms `u_S(ξ)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueModel {
    forms: BTreeMap<Coalition, CoalitionValue>,
}

impl ValueModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, coalition: Coalition, value: CoalitionValue) -> &mut Self {
        self.forms.insert(coalition, value);
        self
    }

    pub fn with(mut self, coalition: Coalition, value: CoalitionValue) -> Self {
        self.forms.insert(coalition, value);
        self
    }

    pub fn get(&self, coalition: Coalition) -> Option<&CoalitionValue> {
        self.forms.get(&coalition)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, &CoalitionValue)> {
        self.forms.iter().map(|(c, v)| (*c, v))
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

/// Evaluates `u_S(ξ)`.
pub fn coalition_value(model: &ValueModel, coalition: Coalition, xi: &[f64]) -> Result<f64> {
    model
        .get(coalition)
        .map(|form| form.eval(xi))
        .ok_or(Error::UnknownCoalition(coalition))
}

/// Validated description of an uncertain transferable-utility game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameSpecFile", into = "GameSpecFile")]
pub struct GameSpec {
    n_agents: usize,
    grand_value: f64,
    uncertainty_dim: usize,
    allowed: Vec<Vec<Coalition>>,
    value_model: ValueModel,
}

impl GameSpec {
    /// `allowed` defaults to every proper subcoalition containing each agent.
    pub fn new(
        n_agents: usize,
        grand_value: f64,
        uncertainty_dim: usize,
        value_model: ValueModel,
        allowed: Option<Vec<Vec<Coalition>>>,
    ) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::InvalidGame(format!(
                "at least 2 agents required, got {n_agents}"
            )));
        }
        if n_agents > MAX_AGENTS {
            return Err(Error::GuardExceeded {
                what: "agent count",
                limit: MAX_AGENTS,
                actual: n_agents,
            });
        }
        if uncertainty_dim == 0 {
            return Err(Error::InvalidGame("uncertainty dimension must be positive".into()));
        }
        if !grand_value.is_finite() {
            return Err(Error::InvalidGame("grand coalition value must be finite".into()));
        }
        let mut allowed = allowed.unwrap_or_else(|| default_allowed(n_agents));
        if allowed.len() != n_agents {
            return Err(Error::InvalidGame(format!(
                "allowed structure lists {} agents, expected {n_agents}",
                allowed.len()
            )));
        }
        for (agent, list) in allowed.iter_mut().enumerate() {
            list.sort();
            list.dedup();
            for &s in list.iter() {
                if !s.contains(agent) {
                    return Err(Error::InvalidGame(format!(
                        "coalition {s} is allowed for agent {} but does not contain it",
                        agent + 1
                    )));
                }
                if !s.is_proper(n_agents) {
                    return Err(Error::InvalidGame(format!(
                        "coalition {s} is not a proper subcoalition"
                    )));
                }
            }
        }
        for (agent, list) in allowed.iter().enumerate() {
            for &s in list {
                for j in s.members() {
                    if allowed[j].binary_search(&s).is_err() {
                        return Err(Error::InvalidGame(format!(
                            "coalition {s} allowed for agent {} but not for member {}",
                            agent + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        for s in allowed.iter().flatten() {
            let form = value_model.get(*s).ok_or(Error::UnknownCoalition(*s))?;
            if form.pieces.is_empty() {
                return Err(Error::InvalidGame(format!("coalition {s} has no affine piece")));
            }
            for piece in &form.pieces {
                if piece.slope.len() != uncertainty_dim {
                    return Err(Error::DimensionMismatch {
                        expected: uncertainty_dim,
                        found: piece.slope.len(),
                    });
                }
                if !piece.constant.is_finite() || piece.slope.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGame(format!(
                        "coalition {s} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(GameSpec {
            n_agents,
            grand_value,
            uncertainty_dim,
            allowed,
            value_model,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn grand_value(&self) -> f64 {
        self.grand_value
    }

    pub fn uncertainty_dim(&self) -> usize {
        self.uncertainty_dim
    }

    pub fn value_model(&self) -> &ValueModel {
        &self.value_model
    }

    /// Subcoalitions agent `agent` takes part in, ascending by mask.
    pub fn allowed(&self, agent: usize) -> &[Coalition] {
        &self.allowed[agent]
    }

    pub fn is_allowed(&self, agent: usize, coalition: Coalition) -> bool {
        self.allowed[agent].binary_search(&coalition).is_ok()
    }

    pub fn value(&self, coalition: Coalition, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.uncertainty_dim {
            return Err(Error::DimensionMismatch {
                expected: self.uncertainty_dim,
                found: xi.len(),
            });
        }
        coalition_value(&self.value_model, coalition, xi)
    }

    /// Copy of the game with a different grand-coalition value.
    pub fn with_grand_value(&self, grand_value: f64) -> Self {
        GameSpec {
            grand_value,
            ..self.clone()
        }
    }
}

/// Every proper subcoalition containing each agent.
pub fn default_allowed(n_agents: usize) -> Vec<Vec<Coalition>> {
    let full = full_mask(n_agents);
    (0..n_agents)
        .map(|i| {
            (1..full)
                .filter(|m| m & (1 << i) != 0)
                .map(Coalition)
                .collect()
        })
        .collect()
}

/// Union of the allowed structures, deduplicated, ascending by mask.
pub fn enumerate_subcoalitions(spec: &GameSpec) -> Vec<Coalition> {
    let mut all: Vec<Coalition> = spec.allowed.iter().flatten().copied().collect();
    all.sort();
    all.dedup();
    all
}

/// `Σ_{i∈S} x_i − u_S(ξ)`; positive means strictly rational for `S`.
pub fn excess(spec: &GameSpec, coalition: Coalition, x: &[f64], xi: &[f64]) -> Result<f64> {
    if x.len() != spec.n_agents {
        return Err(Error::DimensionMismatch {
            expected: spec.n_agents,
            found: x.len(),
        });
    }
    Ok(coalition.total(x) - spec.value(coalition, xi)?)
}

/// The subcoalition count `M = 2^N − 1` used by budgeted a priori bounds.
pub fn m_paper(n_agents: usize) -> usize {
    (1usize << n_agents) - 1
}

/// Number of proper nonempty subcoalitions, `2^N − 2`.
pub fn proper_subcoalition_count(n_agents: usize) -> usize {
    (1usize << n_agents) - 2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueEntry {
    coalition: Coalition,
    pieces: Vec<AffinePiece>,
}

/// On-disk layout of a [`GameSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpecFile {
    n_agents: usize,
    grand_value: f64,
    uncertainty_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    allowed: Option<Vec<Vec<Coalition>>>,
    values: Vec<ValueEntry>,
}

impl TryFrom<GameSpecFile> for GameSpec {
    type Error = Error;

    fn try_from(file: GameSpecFile) -> Result<Self> {
        let mut model = ValueModel::new();
        for entry in file.values {
            if model.get(entry.coalition).is_some() {
                return Err(Error::InvalidGame(format!(
                    "duplicate value entry for {}",
                    entry.coalition
                )));
            }
            model.insert(entry.coalition, CoalitionValue::max_affine(entry.pieces));
        }
        GameSpec::new(
            file.n_agents,
            file.grand_value,
            file.uncertainty_dim,
            model,
            file.allowed,
        )
    }
}

impl From<GameSpec> for GameSpecFile {
    fn from(spec: GameSpec) -> Self {
        let allowed = if spec.allowed == default_allowed(spec.n_agents) {
            None
        } else {
            Some(spec.allowed)
        };
        GameSpecFile {
            n_agents: spec.n_agents,
            grand_value: spec.grand_value,
            uncertainty_dim: spec.uncertainty_dim,
            allowed,
            values: spec
                .value_model
                .forms
                .into_iter()
                .map(|(coalition, v)| ValueEntry {
                    coalition,
                    pieces: v.pieces,
                })
                .collect(),
        }
    }
}
