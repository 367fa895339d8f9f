//! Random affine games for experiments and randomized checks.

use rand::Rng;

use crate::error::Result;
use crate::game::{default_allowed, Coalition, CoalitionValue, GameSpec, ValueModel};

/// Parameters of [`random_affine_game`]. Coalition `S` gets
/// `u_S(ξ) = c_S + a_S·ξ` with `c_S ~ U[0, constant_scale[|S|−1]]` and
/// every entry of `a_S ~ U[−slope_scale, slope_scale]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomGame {
    pub n_agents: usize,
    pub dim: usize,
    pub constant_scale: Vec<f64>,
    pub slope_scale: f64,
    pub grand_value: (f64, f64),
    /// Probability of dropping a non-singleton coalition from an agent's
    /// allowed list (kept symmetric across members).
    pub restrict: f64,
}

impl RandomGame {
    pub fn new(n_agents: usize, dim: usize) -> Self {
        RandomGame {
            n_agents,
            dim,
            constant_scale: (1..n_agents).map(|m| m as f64).collect(),
            slope_scale: 1.0,
            grand_value: (n_agents as f64, 2.0 * n_agents as f64),
            restrict: 0.0,
        }
    }
}

pub fn random_affine_game<R: Rng + ?Sized>(rng: &mut R, p: &RandomGame) -> Result<GameSpec> {
    let n = p.n_agents;
    let mut model = ValueModel::new();
    for mask in 1..(1u64 << n) - 1 {
        let s = Coalition::from_mask(mask)?;
        let scale = p.constant_scale[s.len() - 1];
        let constant = if scale > 0.0 { rng.random_range(0.0..scale) } else { 0.0 };
        let slope = (0..p.dim)
            .map(|_| {
                if p.slope_scale > 0.0 {
                    rng.random_range(-p.slope_scale..p.slope_scale)
                } else {
                    0.0
                }
            })
            .collect();
        model.insert(s, CoalitionValue::affine(constant, slope));
    }
    let grand = if p.grand_value.1 > p.grand_value.0 {
        rng.random_range(p.grand_value.0..p.grand_value.1)
    } else {
        p.grand_value.0
    };
    let allowed = if p.restrict > 0.0 {
        let mut allowed = default_allowed(n);
        for mask in 1..(1u64 << n) - 1 {
            let s = Coalition::from_mask(mask)?;
            if s.len() > 1 && rng.random_bool(p.restrict) {
                for i in s.members() {
                    allowed[i].retain(|&c| c != s);
                }
            }
        }
        Some(allowed)
    } else {
        None
    };
    GameSpec::new(n, grand, p.dim, model, allowed)
}
