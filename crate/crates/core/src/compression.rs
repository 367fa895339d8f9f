//! Distributed compression: each agent keeps the samples whose value for
//! some allowed coalition can be attained with equality by an allocation
//! that respects the agent's other maxima.

use itertools::Itertools;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{Coalition, GameSpec};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::sampling::PrivateSamples;
use crate::scenario_core::{
    agent_maxima, build, tighten, tighten_selected, ScenarioCore, TightenedBounds,
};

/// Largest total sample count accepted by the exhaustive search.
pub const BRUTE_FORCE_LIMIT: usize = 18;

/// Which constraints accompany each equality test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressionOptions {
    /// Impose `Σ_i x_i = u_N`.
    pub efficiency: bool,
    /// Impose `x ≥ 0`.
    pub nonnegative: bool,
}

impl Default for CompressionOptions {
    fn default() -> Self {
        CompressionOptions {
            efficiency: true,
            nonnegative: false,
        }
    }
}

impl CompressionOptions {
    /// No efficiency equality, nonnegative payoffs.
    pub fn printed() -> Self {
        CompressionOptions {
            efficiency: false,
            nonnegative: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedSample {
    /// 0-based sample index within the agent's multi-sample.
    pub index: usize,
    /// Coalitions whose equality test selected this sample.
    pub recruited_by: Vec<Coalition>,
}

impl Serialize for CompressedSample {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CompressedSample", 2)?;
        st.serialize_field("sample", &(self.index + 1))?;
        st.serialize_field("recruited_by", &self.recruited_by)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompressionSet {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<CompressionOptions>,
    /// `I_i`, sorted by sample index.
    pub per_agent: Vec<Vec<CompressedSample>>,
}

impl CompressionSet {
    /// `s_i = |I_i|`.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.per_agent.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.per_agent.iter().map(Vec::len).sum()
    }

    pub fn selection(&self) -> Vec<Vec<usize>> {
        self.per_agent
            .iter()
            .map(|v| v.iter().map(|c| c.index).collect())
            .collect()
    }
}

/// `I_i` for one agent.
pub fn compress_agent(
    spec: &GameSpec,
    samples: &PrivateSamples,
    agent: usize,
    options: CompressionOptions,
) -> Result<Vec<CompressedSample>> {
    if agent >= spec.n_agents() || agent >= samples.n_agents() {
        return Err(Error::InvalidArgument(format!("no agent {}", agent + 1)));
    }
    if samples.count(agent) == 0 {
        return Err(Error::InvalidArgument(format!("agent {} holds no samples", agent + 1)));
    }
    let n = spec.n_agents();
    let maxima = agent_maxima(spec, samples, agent, None)?;
    let mut kept: Vec<CompressedSample> = Vec::new();
    for target in &maxima {
        let mut lp = LinearProgram::new(n);
        if options.efficiency {
            lp.add_eq(vec![1.0; n], spec.grand_value());
        }
        if options.nonnegative {
            lp.set_all_nonnegative();
        }
        for other in &maxima {
            let row = other.coalition.indicator(n);
            if other.coalition == target.coalition {
                lp.add_eq(row, other.value);
            } else {
                lp.add_ge(row, other.value);
            }
        }
        if lp::feasible(&lp)?.status != LpStatus::Optimal {
            continue;
        }
        match kept.iter_mut().find(|c| c.index == target.sample) {
            Some(c) => c.recruited_by.push(target.coalition),
            None => kept.push(CompressedSample {
                index: target.sample,
                recruited_by: vec![target.coalition],
            }),
        }
    }
    kept.sort_by_key(|c| c.index);
    Ok(kept)
}

/// Runs [`compress_agent`] for every agent.
pub fn compress_all(
    spec: &GameSpec,
    samples: &PrivateSamples,
    options: CompressionOptions,
) -> Result<CompressionSet> {
    let per_agent = (0..spec.n_agents())
        .into_par_iter()
        .map(|i| compress_agent(spec, samples, i, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressionSet {
        options: Some(options),
        per_agent,
    })
}

/// The core built from the selected samples only.
pub fn rebuild_core(
    spec: &GameSpec,
    samples: &PrivateSamples,
    selection: &[Vec<usize>],
) -> Result<ScenarioCore> {
    Ok(build(spec, tighten_selected(spec, samples, selection)?))
}

/// How the rebuilt core compares with the full one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Validity {
    /// Coalitions whose rebuilt bound is bit-identical.
    pub identical_bounds: usize,
    /// Coalitions whose rebuilt bound differs but whose full-sample
    /// constraint is implied by the rebuilt system.
    pub implied_bounds: Vec<Coalition>,
    /// Coalitions whose full-sample constraint cuts the rebuilt core.
    pub violated_bounds: Vec<Coalition>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.violated_bounds.is_empty()
    }
}

fn compare(full: &ScenarioCore, rebuilt: &ScenarioCore) -> Result<Validity> {
    let mut out = Validity {
        identical_bounds: 0,
        implied_bounds: Vec::new(),
        violated_bounds: Vec::new(),
    };
    let rebuilt_empty = rebuilt.is_empty()?;
    for e in full.bounds().entries() {
        let r = rebuilt.bounds().bound(e.coalition);
        if r.is_some_and(|b| b.to_bits() == e.bound.to_bits()) {
            out.identical_bounds += 1;
        } else if rebuilt_empty
            || rebuilt.coalition_min(e.coalition)? >= e.bound - lp::TOLERANCE
        {
            out.implied_bounds.push(e.coalition);
        } else {
            out.violated_bounds.push(e.coalition);
        }
    }
    Ok(out)
}

/// Checks that the samples kept in `set` define the same core as all samples.
pub fn check_validity(
    spec: &GameSpec,
    samples: &PrivateSamples,
    set: &CompressionSet,
) -> Result<Validity> {
    let full = ScenarioCore::from_samples(spec, samples)?;
    let rebuilt = rebuild_core(spec, samples, &set.selection())?;
    compare(&full, &rebuilt)
}

fn essential_coalitions(core: &ScenarioCore) -> Result<Vec<Coalition>> {
    let entries = core.bounds().entries();
    let mut out = Vec::new();
    for (skip, e) in entries.iter().enumerate() {
        let rest: Vec<(Coalition, f64)> = entries
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, e)| (e.coalition, e.bound))
            .collect();
        let relaxed = ScenarioCore::new(
            core.n_agents(),
            core.grand_value(),
            TightenedBounds::from_values(core.n_agents(), &rest),
        );
        if relaxed.coalition_min(e.coalition)? < e.bound - lp::TOLERANCE {
            out.push(e.coalition);
        }
    }
    Ok(out)
}

/// A smallest subset of all samples defining the same core, found by
/// enumerating subsets in increasing size (lexicographic within a size).
pub fn brute_force_min_compression(
    spec: &GameSpec,
    samples: &PrivateSamples,
) -> Result<CompressionSet> {
    let total = samples.total();
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            what: "exhaustive compression sample count",
            limit: BRUTE_FORCE_LIMIT,
            actual: total,
        });
    }
    let full_bounds = tighten(spec, samples)?;
    let full = build(spec, full_bounds.clone());
    let flat: Vec<(usize, usize)> = (0..samples.n_agents())
        .flat_map(|a| (0..samples.count(a)).map(move |k| (a, k)))
        .collect();

    // Samples that attain each bound which cannot be relaxed without
    // enlarging the core; a valid subset keeps at least one of each.
    let mut required: Vec<Vec<usize>> = Vec::new();
    if !full.is_empty()? {
        for s in essential_coalitions(&full)? {
            let b = full_bounds.bound(s).expect("essential coalition has a bound");
            let mut attaining = Vec::new();
            for (pos, &(a, k)) in flat.iter().enumerate() {
                if spec.is_allowed(a, s) && spec.value(s, &samples.agent(a)[k])? == b {
                    attaining.push(pos);
                }
            }
            required.push(attaining);
        }
    }

    for size in 0..=total {
        for subset in (0..total).combinations(size) {
            if !required
                .iter()
                .all(|att| att.iter().any(|p| subset.binary_search(p).is_ok()))
            {
                continue;
            }
            let mut selection = vec![Vec::new(); samples.n_agents()];
            for &p in &subset {
                let (a, k) = flat[p];
                selection[a].push(k);
            }
            let rebuilt = rebuild_core(spec, samples, &selection)?;
            if compare(&full, &rebuilt)?.is_valid() {
                return Ok(CompressionSet {
                    options: None,
                    per_agent: selection
                        .into_iter()
                        .map(|v| {
                            v.into_iter()
                                .map(|index| CompressedSample {
                                    index,
                                    recruited_by: Vec::new(),
                                })
                                .collect()
                        })
                        .collect(),
                });
            }
        }
    }
    unreachable!("the full sample set always reproduces its own core")
}
