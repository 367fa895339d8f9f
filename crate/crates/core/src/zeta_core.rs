//! The relaxed core: per-sample slacks absorb whatever the data make
//! infeasible, and the number of positive slacks drives the risk bound.
//!
//! ```text
//! min  Σ_i Σ_k ζ_i^(k)
//! s.t. Σ_i x_i = u_N
//!      Σ_{j∈S} x_j + ζ_i^(k) ≥ u_S(ξ_i^(k))   for every agent i, sample k, S allowed for i
//!      ζ ≥ 0
//! ```
//!
//! Ties among optimal solutions are broken by minimizing `x_1`, then `x_2`, …

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{enumerate_subcoalitions, Coalition, GameSpec};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::sampling::PrivateSamples;
use crate::scenario_core::TightenedBounds;

/// Slacks above this count as positive.
pub const TAU_POS: f64 = 1e-7;

/// How slacks are attached to the rationality constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackForm {
    /// One slack per agent and sample, shared by that sample's coalitions.
    #[default]
    PerSample,
    /// One slack per agent, shared by all of its samples. Carries no
    /// certificate.
    PerAgent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZetaSolution {
    pub form: SlackForm,
    pub x_star: Vec<f64>,
    /// `ζ_i^(k)` recomputed from `x_star` as the smallest feasible slack;
    /// values within the LP tolerance are reported as zero.
    /// Under [`SlackForm::PerAgent`] every entry of agent `i` equals `ζ_i`.
    pub zeta_star: Vec<Vec<f64>>,
    /// `max_k ζ_i^(k)`.
    pub zeta_bar: Vec<f64>,
    /// Number of slacks above `tau_pos`.
    pub s_star: Vec<usize>,
    pub tau_pos: f64,
    /// Counts with threshold `tau_pos / 10`.
    pub s_star_fine: Vec<usize>,
    /// `Σ_i Σ_k ζ_i^(k)` (or `Σ_i ζ_i` for the per-agent form).
    pub objective: f64,
    pub lp_objective: f64,
    pub max_residual: f64,
}

fn required_slack(spec: &GameSpec, agent: usize, xi: &[f64], x: &[f64]) -> Result<f64> {
    let mut z = 0.0f64;
    for &s in spec.allowed(agent) {
        z = z.max(spec.value(s, xi)? - s.total(x));
    }
    Ok(if z <= lp::TOLERANCE { 0.0 } else { z })
}

/// Solves the slack-minimizing program with the lexicographic tie-break.
pub fn solve_zeta_program(
    spec: &GameSpec,
    samples: &PrivateSamples,
    form: SlackForm,
) -> Result<ZetaSolution> {
    if samples.n_agents() != spec.n_agents() {
        return Err(Error::InvalidArgument("sample and game agent counts differ".into()));
    }
    let n = spec.n_agents();
    let counts = samples.counts();
    let slack_offsets: Vec<usize> = match form {
        SlackForm::PerSample => counts
            .iter()
            .scan(n, |acc, &k| {
                let start = *acc;
                *acc += k;
                Some(start)
            })
            .collect(),
        SlackForm::PerAgent => (0..n).map(|i| n + i).collect(),
    };
    let n_vars = match form {
        SlackForm::PerSample => n + samples.total(),
        SlackForm::PerAgent => 2 * n,
    };

    let mut lp = LinearProgram::new(n_vars);
    for v in n..n_vars {
        lp.set_lower(v, 0.0);
    }
    let mut eff = vec![0.0; n_vars];
    eff[..n].fill(1.0);
    lp.add_eq(eff, spec.grand_value());
    for i in 0..n {
        for (k, xi) in samples.agent(i).iter().enumerate() {
            let slack = match form {
                SlackForm::PerSample => slack_offsets[i] + k,
                SlackForm::PerAgent => slack_offsets[i],
            };
            for &s in spec.allowed(i) {
                let mut row = vec![0.0; n_vars];
                for j in s.members() {
                    row[j] = 1.0;
                }
                row[slack] = 1.0;
                lp.add_ge(row, spec.value(s, xi)?);
            }
        }
    }

    let mut objectives = Vec::with_capacity(n + 1);
    let mut total = vec![0.0; n_vars];
    total[n..].fill(1.0);
    objectives.push(total);
    for i in 0..n - 1 {
        let mut c = vec![0.0; n_vars];
        c[i] = 1.0;
        objectives.push(c);
    }
    let out = lp::solve_lexicographic(&lp, &objectives)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus("infeasible slack program")),
        LpStatus::Unbounded => return Err(Error::LpStatus("unbounded tie-break")),
    }
    let x_star = out.solution[..n].to_vec();

    let mut zeta_star = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = samples
            .agent(i)
            .iter()
            .map(|xi| required_slack(spec, i, xi, &x_star))
            .collect::<Result<Vec<f64>>>()?;
        if form == SlackForm::PerAgent {
            let m = z.iter().copied().fold(0.0, f64::max);
            z.fill(m);
        }
        zeta_star.push(z);
    }
    let zeta_bar: Vec<f64> = zeta_star
        .iter()
        .map(|z| z.iter().copied().fold(0.0, f64::max))
        .collect();
    let objective = match form {
        SlackForm::PerSample => zeta_star.iter().flatten().sum(),
        SlackForm::PerAgent => zeta_bar.iter().sum(),
    };
    let mut sol = ZetaSolution {
        form,
        x_star,
        zeta_star,
        zeta_bar,
        s_star: Vec::new(),
        tau_pos: TAU_POS,
        s_star_fine: Vec::new(),
        objective,
        lp_objective: out.stage_objectives[0],
        max_residual: out.max_residual,
    };
    sol.s_star = complexity_counts(&sol, TAU_POS);
    sol.s_star_fine = complexity_counts(&sol, TAU_POS / 10.0);
    Ok(sol)
}

/// `|{k : ζ_i^(k) > tau}|` per agent.
pub fn complexity_counts(sol: &ZetaSolution, tau: f64) -> Vec<usize> {
    sol.zeta_star
        .iter()
        .map(|z| z.iter().filter(|&&v| v > tau).count())
        .collect()
}

/// Membership in the core whose agent-wise bounds are lowered by `ζ̄_i`:
/// `Σ_{j∈S} x_j ≥ max_{i∈S} (max_k u_S(ξ_i^(k)) − ζ̄_i)`.
pub fn zeta_membership(
    spec: &GameSpec,
    bounds: &TightenedBounds,
    zeta_bar: &[f64],
    x: &[f64],
    tol: f64,
) -> bool {
    let n = spec.n_agents();
    if x.len() != n || zeta_bar.len() != n {
        return false;
    }
    if (x.iter().sum::<f64>() - spec.grand_value()).abs() > tol {
        return false;
    }
    enumerate_subcoalitions(spec).into_iter().all(|s: Coalition| {
        let required = s
            .members()
            .filter_map(|i| {
                bounds
                    .agent_bounds(i)
                    .iter()
                    .find(|b| b.coalition == s)
                    .map(|b| b.value - zeta_bar[i])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        s.total(x) >= required - tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CoalitionValue, ValueModel};
    use crate::scenario_core::tighten;

    fn constant_game(u1: f64, u2: f64, grand: f64) -> GameSpec {
        let model = ValueModel::new()
            .with(Coalition::singleton(0), CoalitionValue::affine(u1, vec![0.0]))
            .with(Coalition::singleton(1), CoalitionValue::affine(u2, vec![0.0]));
        GameSpec::new(2, grand, 1, model, None).unwrap()
    }

    fn one_each() -> PrivateSamples {
        PrivateSamples::from_vectors(vec![vec![vec![0.0]], vec![vec![0.0]]], None).unwrap()
    }

    #[test]
    fn two_agent_example() {
        let spec = constant_game(3.0, 3.0, 4.0);
        let sol = solve_zeta_program(&spec, &one_each(), SlackForm::PerSample).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
        assert!((sol.x_star[0] - 1.0).abs() < 1e-12 && (sol.x_star[1] - 3.0).abs() < 1e-12);
        assert!((sol.zeta_star[0][0] - 2.0).abs() < 1e-12);
        assert_eq!(sol.zeta_star[1][0], 0.0);
        assert_eq!(sol.s_star, vec![1, 0]);
        assert_eq!(sol.zeta_bar, vec![sol.zeta_star[0][0], 0.0]);
    }

    #[test]
    fn nonempty_core_needs_no_slack() {
        let spec = constant_game(5.0, 3.0, 10.0);
        let sol = solve_zeta_program(&spec, &one_each(), SlackForm::PerSample).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.s_star, vec![0, 0]);
        assert!((sol.x_star[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn per_agent_form() {
        let spec = constant_game(3.0, 3.0, 4.0);
        let sol = solve_zeta_program(&spec, &one_each(), SlackForm::PerAgent).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_straddle() {
        let spec = constant_game(3.0, 3.0, 4.0);
        let mut sol = solve_zeta_program(&spec, &one_each(), SlackForm::PerSample).unwrap();
        sol.zeta_star = vec![vec![5e-8], vec![0.0]];
        assert_eq!(complexity_counts(&sol, TAU_POS), vec![0, 0]);
        assert_eq!(complexity_counts(&sol, TAU_POS / 10.0), vec![1, 0]);
    }

    #[test]
    fn membership_with_relaxation() {
        let spec = constant_game(3.0, 3.0, 4.0);
        let bounds = tighten(&spec, &one_each()).unwrap();
        assert!(!zeta_membership(&spec, &bounds, &[0.0, 0.0], &[1.0, 3.0], 1e-9));
        assert!(zeta_membership(&spec, &bounds, &[2.0, 0.0], &[1.0, 3.0], 1e-9));
        assert!(zeta_membership(&spec, &bounds, &[1e6, 1e6], &[-50.0, 54.0], 1e-9));
        assert!(!zeta_membership(&spec, &bounds, &[1e6, 1e6], &[-50.0, 53.0], 1e-9));
    }
}
