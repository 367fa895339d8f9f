//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use coalisure::game::{enumerate_subcoalitions, Coalition, GameSpec};
use coalisure::instances::{random_affine_game, RandomGame};
use coalisure::sampling::{draw_private, Distribution, DistributionSpec, PrivateSamples};
use coalisure::scenario_core::{ScenarioCore, TightenedBounds};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_box(dim: usize) -> Distribution {
    Distribution::new(DistributionSpec::uniform(vec![0.0; dim], vec![1.0; dim])).unwrap()
}

/// A random affine game with its private samples.
pub fn random_instance(
    rng: &mut impl Rng,
    params: &RandomGame,
    counts: &[usize],
) -> (GameSpec, PrivateSamples) {
    let spec = random_affine_game(rng, params).unwrap();
    let samples = draw_private(&unit_box(params.dim), counts, rng.random()).unwrap();
    (spec, samples)
}

/// `b_S` by a plain double loop over agents and samples.
pub fn brute_force_bounds(spec: &GameSpec, samples: &PrivateSamples) -> Vec<(Coalition, f64)> {
    enumerate_subcoalitions(spec)
        .into_iter()
        .map(|s| {
            let mut best = f64::NEG_INFINITY;
            for i in 0..spec.n_agents() {
                if !s.contains(i) || !spec.is_allowed(i, s) {
                    continue;
                }
                for xi in samples.agent(i) {
                    best = best.max(spec.value(s, xi).unwrap());
                }
            }
            (s, best)
        })
        .collect()
}

pub fn core_from(n: usize, grand: f64, bounds: &[(Coalition, f64)]) -> ScenarioCore {
    ScenarioCore::new(n, grand, TightenedBounds::from_values(n, bounds))
}

/// Nonemptiness by exhaustive search over a lattice of step `step`. With
/// bounds and `u_N` on a lattice of `2 * step` every vertex of an `N ≤ 3`
/// core lies on the search lattice, so the answer is exact. Needs a
/// singleton bound for every agent.
pub fn grid_nonempty(core: &ScenarioCore, step: f64) -> bool {
    let n = core.n_agents();
    assert!(n == 2 || n == 3);
    let lo: Vec<f64> = (0..n)
        .map(|i| core.bounds().bound(Coalition::singleton(i)).unwrap())
        .collect();
    let u = core.grand_value();
    let steps = |from: f64, to: f64| -> Vec<f64> {
        if to < from - 1e-12 {
            return Vec::new();
        }
        let m = ((to - from) / step).round() as i64;
        (0..=m).map(|j| from + j as f64 * step).collect()
    };
    let others: f64 = lo.iter().sum();
    for a in steps(lo[0], u - (others - lo[0])) {
        if n == 2 {
            if core.contains(&[a, u - a], 1e-9) {
                return true;
            }
            continue;
        }
        for b in steps(lo[1], u - a - lo[2]) {
            if core.contains(&[a, b, u - a - b], 1e-9) {
                return true;
            }
        }
    }
    false
}

/// Vertices of an `N = 3` core by clipping a large triangle in the plane
/// `x_3 = u − x_1 − x_2` with every half-plane.
pub fn polygon_vertices(core: &ScenarioCore) -> Vec<Vec<f64>> {
    assert_eq!(core.n_agents(), 3);
    let u = core.grand_value();
    let big = 1e6;
    let mut poly: Vec<(f64, f64)> = vec![(-big, -big), (3.0 * big, -big), (-big, 3.0 * big)];
    for e in core.bounds().entries() {
        // x(S) = α a + β b + γ with (a, b) = (x_1, x_2)
        let s = e.coalition;
        let c3 = if s.contains(2) { 1.0 } else { 0.0 };
        let alpha = if s.contains(0) { 1.0 } else { 0.0 } - c3;
        let beta = if s.contains(1) { 1.0 } else { 0.0 } - c3;
        let gamma = c3 * u;
        let g = |p: (f64, f64)| alpha * p.0 + beta * p.1 + gamma - e.bound;
        let mut next = Vec::new();
        for idx in 0..poly.len() {
            let p = poly[idx];
            let q = poly[(idx + 1) % poly.len()];
            let (gp, gq) = (g(p), g(q));
            if gp >= 0.0 {
                next.push(p);
            }
            if (gp >= 0.0) != (gq >= 0.0) {
                let t = gp / (gp - gq);
                next.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
        poly = next;
        if poly.is_empty() {
            return Vec::new();
        }
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for p in poly {
        if !pts.iter().any(|q| (p.0 - q.0).abs() <= 1e-7 && (p.1 - q.1).abs() <= 1e-7) {
            pts.push(p);
        }
    }
    // drop points lying in the middle of an edge
    loop {
        let m = pts.len();
        if m < 3 {
            break;
        }
        let pos = (0..m).position(|i| {
            let a = pts[(i + m - 1) % m];
            let b = pts[i];
            let c = pts[(i + 1) % m];
            ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs() <= 1e-9
        });
        match pos {
            Some(i) => {
                pts.remove(i);
            }
            None => break,
        }
    }
    pts.into_iter().map(|(a, b)| vec![a, b, u - a - b]).collect()
}

pub fn vertex_min(vertices: &[Vec<f64>], s: Coalition) -> f64 {
    vertices
        .iter()
        .map(|v| s.total(v))
        .fold(f64::INFINITY, f64::min)
}

/// Row rank from the singular values.
pub fn svd_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    m.svd(false, false).rank(1e-9)
}

/// Maximum of `Σ_i tables[i][s_i]` over all assignments with `Σ s_i ≤ budget`,
/// summing in agent order.
pub fn brute_budget(tables: &[Vec<f64>], budget: usize) -> f64 {
    let ranges = tables.iter().map(|t| 0..t.len()).multi_cartesian_product();
    let mut best = f64::NEG_INFINITY;
    for a in ranges {
        if a.iter().sum::<usize>() > budget {
            continue;
        }
        let mut v = 0.0;
        for (t, &s) in tables.iter().zip(&a) {
            v += t[s];
        }
        best = best.max(v);
    }
    if tables.is_empty() {
        0.0
    } else {
        best
    }
}

/// Total slack needed by an efficient allocation `x`.
pub fn slack_objective(spec: &GameSpec, samples: &PrivateSamples, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..spec.n_agents() {
        for xi in samples.agent(i) {
            let mut z = 0.0f64;
            for &s in spec.allowed(i) {
                z = z.max(spec.value(s, xi).unwrap() - s.total(x));
            }
            total += z;
        }
    }
    total
}

/// Minimum total slack by evaluating the piecewise-linear objective at every
/// point where `N − 1` breakpoint hyperplanes meet on the efficiency plane.
/// Breakpoints are `x(S) = u_S(ξ)` and, within one sample, ties
/// `x(S) − x(T) = u_S(ξ) − u_T(ξ)`.
pub fn zeta_vertex_min(spec: &GameSpec, samples: &PrivateSamples) -> f64 {
    let n = spec.n_agents();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for xi in samples.agent(i) {
            let rows: Vec<(Vec<f64>, f64)> = spec
                .allowed(i)
                .iter()
                .map(|&s| (s.indicator(n), spec.value(s, xi).unwrap()))
                .collect();
            for (a, b) in rows.iter().tuple_combinations() {
                let diff = a.0.iter().zip(&b.0).map(|(p, q)| p - q).collect();
                planes.push((diff, a.1 - b.1));
            }
            planes.extend(rows);
        }
    }
    let mut best = f64::INFINITY;
    for combo in (0..planes.len()).combinations(n - 1) {
        let m = DMatrix::<f64>::from_fn(n, n, |r, c| {
            if r == 0 {
                1.0
            } else {
                planes[combo[r - 1]].0[c]
            }
        });
        let rhs = DVector::from_fn(n, |r, _| {
            if r == 0 {
                spec.grand_value()
            } else {
                planes[combo[r - 1]].1
            }
        });
        let lu = m.lu();
        if lu.determinant().abs() < 1e-9 {
            continue;
        }
        let x: Vec<f64> = lu.solve(&rhs).unwrap().iter().copied().collect();
        best = best.min(slack_objective(spec, samples, &x));
    }
    best
}

/// `min c·x` over `{A x ≥ b, 0 ≤ x ≤ cap}` by enumerating every basic point.
pub fn lp_vertex_min(a: &[Vec<f64>], b: &[f64], c: &[f64], cap: f64) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), 0.0));
        e[j] = -1.0;
        rows.push((e, -cap));
    }
    let feasible = |x: &[f64]| {
        rows.iter().all(|(r, rhs)| {
            r.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() >= rhs - 1e-9
        })
    };
    let mut best: Option<f64> = None;
    for combo in (0..rows.len()).combinations(n) {
        let m = DMatrix::<f64>::from_fn(n, n, |r, col| rows[combo[r]].0[col]);
        let rhs = DVector::from_fn(n, |r, _| rows[combo[r]].1);
        let lu = m.lu();
        if lu.determinant().abs() < 1e-12 {
            continue;
        }
        let x: Vec<f64> = lu.solve(&rhs).unwrap().iter().copied().collect();
        if feasible(&x) {
            let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// Small instances for exhaustive compression checks: `N ≤ 3`, `K_i ≤ 6`,
/// at most `max_total` samples, two-dimensional uncertainty with slopes in
/// `[−0.5, 0.5]`, singleton constants in `[0, 0.5]`, pair constants in
/// `[0, 3]` and `u_N` in `[3, 6]`.
pub fn compression_instance(rng: &mut impl Rng, max_total: usize) -> (GameSpec, PrivateSamples) {
    let n = rng.random_range(2..=3);
    let mut params = RandomGame::new(n, 2);
    params.constant_scale = vec![0.5, 3.0];
    params.slope_scale = 0.5;
    params.grand_value = (3.0, 6.0);
    let counts = loop {
        let c: Vec<usize> = (0..n).map(|_| rng.random_range(1..=6)).collect();
        if c.iter().sum::<usize>() <= max_total {
            break c;
        }
    };
    random_instance(rng, &params, &counts)
}
