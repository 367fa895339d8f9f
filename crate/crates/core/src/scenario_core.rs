//! The scenario core with private sampling.
//!
//! For every enforced subcoalition `S` the right-hand side is the largest
//! value of `u_S` over the samples of every member agent that takes part in
//! `S`:
//!
//! ```text
//! C = { x : Σ_i x_i = u_N,  Σ_{i∈S} x_i ≥ b_S  for all S },
//! b_S = max_{i∈S} max_k u_S(ξ_i^(k)).
//! ```

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{enumerate_subcoalitions, Coalition, GameSpec};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::sampling::PrivateSamples;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Agent limit for exhaustive vertex enumeration.
pub const VERTEX_AGENT_LIMIT: usize = 6;
const VERTEX_DEDUP_TOL: f64 = 1e-7;

/// One sample of one agent (0-based internally, 1-based when serialized).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleRef {
    pub agent: usize,
    pub index: usize,
}

impl Serialize for SampleRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SampleRef", 2)?;
        st.serialize_field("agent", &(self.agent + 1))?;
        st.serialize_field("sample", &(self.index + 1))?;
        st.end()
    }
}

/// `max_k u_S(ξ_i^(k))` for one agent and coalition, with the attaining sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentBound {
    pub coalition: Coalition,
    pub value: f64,
    pub sample: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEntry {
    pub coalition: Coalition,
    pub bound: f64,
    pub witness: Option<SampleRef>,
}

/// Tightened right-hand sides of the enforced subcoalition constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct TightenedBounds {
    entries: Vec<BoundEntry>,
    per_agent: Vec<Vec<AgentBound>>,
}

impl TightenedBounds {
    /// Bounds given directly, without sample provenance.
    pub fn from_values(n_agents: usize, values: &[(Coalition, f64)]) -> Self {
        let mut entries: Vec<BoundEntry> = values
            .iter()
            .map(|&(coalition, bound)| BoundEntry {
                coalition,
                bound,
                witness: None,
            })
            .collect();
        entries.sort_by_key(|e| e.coalition);
        TightenedBounds {
            entries,
            per_agent: vec![Vec::new(); n_agents],
        }
    }

    pub fn entries(&self) -> &[BoundEntry] {
        &self.entries
    }

    pub fn get(&self, coalition: Coalition) -> Option<&BoundEntry> {
        self.entries
            .binary_search_by_key(&coalition, |e| e.coalition)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn bound(&self, coalition: Coalition) -> Option<f64> {
        self.get(coalition).map(|e| e.bound)
    }

    /// Agent-wise maxima; empty when the bounds were given directly.
    pub fn agent_bounds(&self, agent: usize) -> &[AgentBound] {
        &self.per_agent[agent]
    }

    pub fn witnesses(&self) -> Vec<SampleRef> {
        let mut w: Vec<SampleRef> = self.entries.iter().filter_map(|e| e.witness).collect();
        w.sort();
        w.dedup();
        w
    }
}

fn check_samples(spec: &GameSpec, samples: &PrivateSamples) -> Result<()> {
    if samples.n_agents() != spec.n_agents() {
        return Err(Error::InvalidArgument(format!(
            "samples for {} agents, game has {}",
            samples.n_agents(),
            spec.n_agents()
        )));
    }
    if samples.dim() != spec.uncertainty_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.uncertainty_dim(),
            found: samples.dim(),
        });
    }
    Ok(())
}

/// Agent `agent`'s maxima over the listed sample indices (ascending; ties go
/// to the earliest index). `None` means all samples.
pub fn agent_maxima(
    spec: &GameSpec,
    samples: &PrivateSamples,
    agent: usize,
    selection: Option<&[usize]>,
) -> Result<Vec<AgentBound>> {
    let all: Vec<usize>;
    let indices = match selection {
        Some(sel) => sel,
        None => {
            all = (0..samples.count(agent)).collect();
            &all
        }
    };
    let mut out = Vec::new();
    for &s in spec.allowed(agent) {
        let mut best: Option<AgentBound> = None;
        for &k in indices {
            let value = spec.value(s, &samples.agent(agent)[k])?;
            if best.is_none_or(|b| value > b.value) {
                best = Some(AgentBound {
                    coalition: s,
                    value,
                    sample: k,
                });
            }
        }
        out.extend(best);
    }
    Ok(out)
}

fn tighten_impl(
    spec: &GameSpec,
    samples: &PrivateSamples,
    selection: Option<&[Vec<usize>]>,
) -> Result<TightenedBounds> {
    check_samples(spec, samples)?;
    let per_agent = (0..spec.n_agents())
        .map(|i| agent_maxima(spec, samples, i, selection.map(|s| s[i].as_slice())))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for s in enumerate_subcoalitions(spec) {
        let mut best: Option<BoundEntry> = None;
        for agent in s.members() {
            let Some(ab) = per_agent[agent].iter().find(|b| b.coalition == s) else {
                continue;
            };
            if best.is_none_or(|b| ab.value > b.bound) {
                best = Some(BoundEntry {
                    coalition: s,
                    bound: ab.value,
                    witness: Some(SampleRef {
                        agent,
                        index: ab.sample,
                    }),
                });
            }
        }
        match best {
            Some(e) => entries.push(e),
            None if selection.is_some() => {}
            None => return Err(Error::NoSamplesForCoalition(s)),
        }
    }
    Ok(TightenedBounds { entries, per_agent })
}

/// Tightened bounds from every sample; records the attaining
/// `(agent, sample)` per coalition, ties broken lexicographically.
pub fn tighten(spec: &GameSpec, samples: &PrivateSamples) -> Result<TightenedBounds> {
    tighten_impl(spec, samples, None)
}

/// Bounds rebuilt from a subset of each agent's samples. Coalitions for
/// which no member keeps a sample are left unconstrained.
pub fn tighten_selected(
    spec: &GameSpec,
    samples: &PrivateSamples,
    selection: &[Vec<usize>],
) -> Result<TightenedBounds> {
    if selection.len() != spec.n_agents() {
        return Err(Error::InvalidArgument("one selection per agent required".into()));
    }
    for (agent, sel) in selection.iter().enumerate() {
        if !sel.windows(2).all(|w| w[0] < w[1]) || sel.iter().any(|&k| k >= samples.count(agent)) {
            return Err(Error::InvalidArgument(format!(
                "selection for agent {} must be ascending sample indices",
                agent + 1
            )));
        }
    }
    tighten_impl(spec, samples, Some(selection))
}

/// Polyhedral description `{x : Σx = u_N, Σ_S x ≥ b_S}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioCore {
    n_agents: usize,
    grand_value: f64,
    bounds: TightenedBounds,
}

pub fn build(spec: &GameSpec, bounds: TightenedBounds) -> ScenarioCore {
    ScenarioCore::new(spec.n_agents(), spec.grand_value(), bounds)
}

impl ScenarioCore {
    pub fn new(n_agents: usize, grand_value: f64, bounds: TightenedBounds) -> Self {
        ScenarioCore {
            n_agents,
            grand_value,
            bounds,
        }
    }

    /// Builds the core straight from a game and its samples.
    pub fn from_samples(spec: &GameSpec, samples: &PrivateSamples) -> Result<Self> {
        Ok(build(spec, tighten(spec, samples)?))
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn grand_value(&self) -> f64 {
        self.grand_value
    }

    pub fn bounds(&self) -> &TightenedBounds {
        &self.bounds
    }

    /// The defining system with a zero objective.
    pub fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.n_agents);
        lp.add_eq(vec![1.0; self.n_agents], self.grand_value);
        for e in &self.bounds.entries {
            lp.add_ge(e.coalition.indicator(self.n_agents), e.bound);
        }
        lp
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.n_agents {
            return false;
        }
        (x.iter().sum::<f64>() - self.grand_value).abs() <= tol
            && self
                .bounds
                .entries
                .iter()
                .all(|e| e.coalition.total(x) >= e.bound - tol)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(lp::feasible(&self.to_lp())?.status == LpStatus::Infeasible)
    }

    /// `min_{x∈C} Σ_{i∈S} x_i`; `-inf` when the core is unbounded in that
    /// direction.
    pub fn coalition_min(&self, coalition: Coalition) -> Result<f64> {
        let mut lp = self.to_lp();
        lp.set_objective(coalition.indicator(self.n_agents));
        let out = lp::solve(&lp)?;
        match out.status {
            LpStatus::Optimal => Ok(out.objective),
            LpStatus::Unbounded => Ok(f64::NEG_INFINITY),
            LpStatus::Infeasible => Err(Error::EmptyCore),
        }
    }

    /// The allocation minimizing `x_1`, then `x_2`, … over the core.
    pub fn lexicographic_allocation(&self) -> Result<Vec<f64>> {
        let objectives: Vec<Vec<f64>> = (0..self.n_agents)
            .map(|i| Coalition::singleton(i).indicator(self.n_agents))
            .collect();
        let out = lp::solve_lexicographic(&self.to_lp(), &objectives)?;
        match out.status {
            LpStatus::Optimal => Ok(out.solution),
            LpStatus::Infeasible => Err(Error::EmptyCore),
            LpStatus::Unbounded => Err(Error::LpStatus("unbounded lexicographic selection")),
        }
    }

    /// Every basic feasible point, found by solving each choice of `N − 1`
    /// active subcoalition constraints together with efficiency.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n_agents;
        if n > VERTEX_AGENT_LIMIT {
            return Err(Error::GuardExceeded {
                what: "vertex enumeration agent count",
                limit: VERTEX_AGENT_LIMIT,
                actual: n,
            });
        }
        let rows: Vec<(Vec<f64>, f64)> = self
            .bounds
            .entries
            .iter()
            .map(|e| (e.coalition.indicator(n), e.bound))
            .collect();
        let mut found: Vec<Vec<f64>> = Vec::new();
        for active in (0..rows.len()).combinations(n - 1) {
            let m = DMatrix::from_fn(n, n, |r, c| {
                if r == 0 {
                    1.0
                } else {
                    rows[active[r - 1]].0[c]
                }
            });
            let rhs = DVector::from_fn(n, |r, _| {
                if r == 0 {
                    self.grand_value
                } else {
                    rows[active[r - 1]].1
                }
            });
            let lu = m.clone().lu();
            if lu.determinant().abs() < 1e-10 {
                continue;
            }
            let Some(x) = lu.solve(&rhs) else { continue };
            let x: Vec<f64> = x.iter().copied().collect();
            if !self.contains(&x, VERTEX_DEDUP_TOL) {
                continue;
            }
            let duplicate = found.iter().any(|v| {
                v.iter()
                    .zip(&x)
                    .all(|(a, b)| (a - b).abs() <= VERTEX_DEDUP_TOL)
            });
            if !duplicate {
                found.push(x);
            }
        }
        found.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(found)
    }

    /// True when `self ⊆ other`: every constraint of `other` either appears
    /// in `self` at least as tightly or is implied by `self`'s system
    /// (checked by LP).
    pub fn contained_in(&self, other: &ScenarioCore) -> Result<bool> {
        if self.is_empty()? {
            return Ok(true);
        }
        if self.n_agents != other.n_agents || self.grand_value != other.grand_value {
            return Ok(false);
        }
        for e in &other.bounds.entries {
            if self.bounds.bound(e.coalition).is_some_and(|b| b >= e.bound) {
                continue;
            }
            if self.coalition_min(e.coalition)? < e.bound - lp::TOLERANCE {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Set equality of two cores sharing the efficiency constraint.
    pub fn same_set_as(&self, other: &ScenarioCore) -> Result<bool> {
        Ok(self.contained_in(other)? && other.contained_in(self)?)
    }
}
