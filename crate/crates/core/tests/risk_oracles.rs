mod common;

use coalisure::game::m_paper;
use coalisure::instances::RandomGame;
use coalisure::risk::*;
use proptest::prelude::*;
use rand::Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct ClosedFormCase {
    k: usize,
    beta: String,
    n: usize,
    s: usize,
    epsilon: String,
}

#[derive(Deserialize)]
struct TailCase {
    k: usize,
    epsilon: String,
    rho: usize,
    printed: String,
    conventional: String,
}

#[derive(Deserialize)]
struct Oracle {
    closed_form: Vec<ClosedFormCase>,
    support_rank: Vec<TailCase>,
}

fn oracle() -> Oracle {
    let text = include_str!("fixtures/closed_form_oracle.json");
    serde_json::from_str(text).unwrap()
}

#[test]
fn closed_form_matches_high_precision_values() {
    let o = oracle();
    assert!(o.closed_form.len() > 5000);
    let mut worst = 0.0f64;
    for c in &o.closed_form {
        let beta: f64 = c.beta.parse().unwrap();
        let expected: f64 = c.epsilon.parse().unwrap();
        let got = epsilon_closed_form(c.k, beta, c.n, c.s).unwrap();
        worst = worst.max((got - expected).abs());
    }
    assert!(worst <= 1e-10, "worst deviation {worst:e}");
}

#[test]
fn closed_form_example_value() {
    let e = epsilon_closed_form(100, 0.1, 3, 0).unwrap();
    assert!((e - 0.036_217).abs() < 5e-7);
}

#[test]
fn support_rank_tail_matches_high_precision_values() {
    for c in oracle().support_rank {
        let eps: f64 = c.epsilon.parse().unwrap();
        let b = beta_from_support_rank(c.k, eps, c.rho).unwrap();
        let printed: f64 = c.printed.parse().unwrap();
        let conventional: f64 = c.conventional.parse().unwrap();
        assert!((b.printed - printed).abs() <= 1e-12, "{} {} {}", c.k, eps, c.rho);
        assert!((b.conventional - conventional).abs() <= 1e-12);
    }
    let b = beta_from_support_rank(10, 0.1, 2).unwrap();
    assert!((b.printed - 0.581_130_733_5).abs() < 1e-10);
}

#[test]
fn implicit_tables_plug_back() {
    for k in 2..=500 {
        for beta in [0.01, 0.1] {
            let t = epsilon_implicit(k, beta).unwrap();
            assert_eq!(t.len(), k + 1);
            let r = (implicit_sum(&t) - beta).abs();
            assert!(r <= 1e-9, "K={k} beta={beta} residual {r:e}");
        }
    }
    // two samples: the single term is C(2,1)(1 − ε) = β
    assert!((epsilon_implicit(2, 0.1).unwrap()[1] - 0.95).abs() < 1e-15);
}

#[test]
fn core_bound_is_sum_of_lookups() {
    let split = BetaSplit::new(0.1, SplitStrategy::Equal, &[50, 50]).unwrap();
    let c = a_posteriori_core_bound(&split, &[3, 5], &[50, 50]).unwrap();
    let t = epsilon_implicit(50, 0.05).unwrap();
    // independent evaluation of the equal-share formula
    let direct = |k: usize| {
        let c = (1..=k).fold(1.0f64, |acc, j| acc * (50 - k + j) as f64 / j as f64);
        1.0 - (0.05 / (49.0 * c)).powf(1.0 / (50 - k) as f64)
    };
    assert!((t[3] - direct(3)).abs() < 1e-12 && (t[5] - direct(5)).abs() < 1e-12);
    assert_eq!(c.epsilon_sum, t[3] + t[5]);
    assert_eq!(c.agents.len(), 2);
}

#[test]
fn allocation_bound_three_agents() {
    let split = BetaSplit::new(0.03, SplitStrategy::Equal, &[40, 40, 40]).unwrap();
    let c = a_posteriori_allocation_bound(&split, &[1, 0, 2], &[40, 40, 40]).unwrap();
    let term = |binom: f64, s: usize| 1.0 - (0.01 / (4.0 * binom)).powf(1.0 / (40 - s) as f64);
    let expected = term(40.0, 1) + term(1.0, 0) + term(780.0, 2);
    assert!((c.epsilon - expected).abs() < 1e-12);
}

#[test]
fn support_rank_one_agent_full_rank() {
    let c = a_priori_allocation_bound(&[0.05], &[20], &[20]).unwrap();
    assert!((c.beta - (1.0 - 0.95f64.powi(20))).abs() < 1e-12);
    let sym = a_priori_allocation_bound(&[0.01, 0.01], &[20, 20], &[3, 3]).unwrap();
    let one = a_priori_allocation_bound(&[0.01], &[20], &[3]).unwrap();
    assert!((sym.beta - 2.0 * one.beta).abs() <= 1e-14 * sym.beta, "{} {}", sym.beta, one.beta);
    let tiny = a_priori_allocation_bound(&[1e-9], &[20], &[3]).unwrap();
    assert!(tiny.beta < 1e-6);
}

#[test]
fn budget_dp_matches_enumeration() {
    let mut rng = common::rng(5);
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let k: Vec<usize> = (0..n).map(|_| rng.random_range(1..=6)).collect();
        let beta = rng.random_range(0.01..0.5);
        let split = BetaSplit::new(beta, SplitStrategy::Equal, &k).unwrap();
        for budget in 0..=7 {
            let core = a_priori_core_bound(&split, &k, budget).unwrap();
            let tables: Vec<Vec<f64>> = (0..n)
                .map(|i| epsilon_implicit(k[i], split.per_agent[i]).unwrap())
                .collect();
            let brute = common::brute_budget(&tables, budget);
            assert_eq!(core.epsilon_sum, brute);
            assert_eq!(core.epsilon, brute.min(1.0));
            let used: usize = core.agents.iter().map(|a| a.complexity.unwrap()).sum();
            assert!(used <= budget);

            let cor = a_priori_allocation_bound_corollary(&split, &k, budget).unwrap();
            let tables: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..=k[i])
                        .map(|s| epsilon_closed_form(k[i], split.per_agent[i], n, s).unwrap())
                        .collect()
                })
                .collect();
            assert_eq!(cor.epsilon_sum, common::brute_budget(&tables, budget));
        }
    }
}

#[test]
fn a_priori_budget_edge_cases() {
    let split = BetaSplit::new(0.1, SplitStrategy::Equal, &[9]).unwrap();
    let t = epsilon_implicit(9, 0.1).unwrap();
    assert_eq!(a_priori_core_bound(&split, &[9], 4).unwrap().epsilon, t[4]);
    assert_eq!(a_priori_core_bound(&split, &[9], 0).unwrap().epsilon, t[0]);
    assert_eq!(a_priori_core_bound(&split, &[9], 99).unwrap().epsilon, 1.0);
    let one = BetaSplit::new(0.1, SplitStrategy::Equal, &[7]).unwrap();
    assert_eq!(
        a_priori_allocation_bound_corollary(&one, &[7], 1).unwrap().epsilon,
        epsilon_closed_form(7, 0.1, 1, 1).unwrap()
    );
    assert_eq!(m_paper(3), 7);
}

#[test]
fn support_rank_matches_singular_values() {
    let mut rng = common::rng(17);
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let mut params = RandomGame::new(n, 1);
        params.restrict = rng.random_range(0.0..0.9);
        let spec = coalisure::instances::random_affine_game(&mut rng, &params).unwrap();
        for i in 0..n {
            let rows: Vec<Vec<f64>> = spec.allowed(i).iter().map(|s| s.indicator(n)).collect();
            assert_eq!(support_rank(&spec, i), common::svd_rank(&rows));
        }
    }
}

/// `(A, B)` by plain summation of every term; no overflow for `K ≤ 150`.
fn direct_parts(k: usize, beta: f64, m: usize, s: usize, t: f64) -> (f64, f64) {
    let choose = |n: usize, r: usize| (1..=r).fold(1.0f64, |acc, i| acc * (n - r + i) as f64 / i as f64);
    let a = choose(k, s) * t.powi((k - s) as i32);
    let mut b = 0.0;
    for j in s..k {
        b += beta / (2.0 * m as f64) * choose(j, s) * t.powi((j - s) as i32);
    }
    for j in k + 1..=4 * k {
        b += beta / (6.0 * k as f64) * choose(j, s) * t.powi((j - s) as i32);
    }
    (a, b)
}

#[test]
fn polynomial_parts_match_direct_summation() {
    for k in [1, 2, 7, 40, 150] {
        for s in [0, 1, k / 2, k] {
            let poly = RiskPolynomial::new(k, 0.05, 3, s, CampiScale::Agents).unwrap();
            for t in [1e-4, 0.01, 0.3, 0.77, 0.95, 0.999, 1.0] {
                let (la, lb) = poly.log_parts(t);
                let (a, b) = direct_parts(k, 0.05, 3, s, t);
                if !a.is_normal() || !b.is_normal() {
                    continue;
                }
                assert!((la - a.ln()).abs() <= 1e-12 * la.abs().max(1.0), "{k} {s} {t}");
                assert!((lb - b.ln()).abs() <= 1e-12 * lb.abs().max(1.0), "{k} {s} {t}");
            }
        }
    }
    assert_eq!(RiskPolynomial::new(5, 0.1, 2, 5, CampiScale::Agents).unwrap().value(0.0), 1.0);
}

fn check_root(k: usize, beta: f64, n: usize, s: usize, scale: CampiScale) -> Option<f64> {
    let poly = RiskPolynomial::new(k, beta, n, s, scale).unwrap();
    match poly.solve() {
        Ok(r) => {
            if s == k {
                assert_eq!(r.epsilon, 1.0);
                return Some(1.0);
            }
            assert!(r.residual.abs() <= ROOT_RESIDUAL, "K={k} s={s} residual {:e}", r.residual);
            assert!(r.width <= ROOT_WIDTH);
            // nothing positive below the root on a grid finer than the solver's
            let m = 2 * SCAN_PER_K * k;
            for j in 1..m {
                let t = j as f64 / m as f64;
                if t >= r.t {
                    break;
                }
                assert!(poly.relative_value(t) < 0.0, "sign change before root at {t}");
            }
            Some(r.epsilon)
        }
        Err(coalisure::Error::NoRoot { .. }) => {
            let m = 2 * SCAN_PER_K * k;
            assert!((1..=m).all(|j| poly.relative_value(j as f64 / m as f64) < 0.0));
            None
        }
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn polynomial_roots_small_grid() {
    for k in [1, 2, 3, 5, 8, 13, 30] {
        for beta in [0.01, 0.1] {
            for s in 0..=k {
                check_root(k, beta, 3, s, CampiScale::Agents);
                check_root(k, beta, 3, s, CampiScale::Samples);
            }
        }
    }
}

#[test]
fn polynomial_epsilon_nondecreasing_in_complexity() {
    for (k, beta) in [(20, 0.05), (50, 0.2 / 3.0), (40, 0.01)] {
        let eps: Vec<Option<f64>> = (0..=k).map(|s| check_root(k, beta, 3, s, CampiScale::Agents)).collect();
        let found: Vec<f64> = eps.into_iter().flatten().collect();
        assert!(found.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn zeta_certificate_examples() {
    let split = BetaSplit::new(0.1, SplitStrategy::Equal, &[10, 10]).unwrap();
    let c = zeta_certificate(&split, &[10, 10], &[10, 10], CampiScale::Agents, true).unwrap();
    assert_eq!(c.epsilon, 1.0);
    let one = BetaSplit::new(0.05, SplitStrategy::Equal, &[30]).unwrap();
    let c = zeta_certificate(&one, &[0], &[30], CampiScale::Agents, true).unwrap();
    let r = solve_campi_polynomial(30, 0.05, 1, 0).unwrap();
    assert_eq!(c.epsilon, r.epsilon);
    let warn = zeta_certificate(&one, &[0], &[30], CampiScale::Agents, false).unwrap();
    assert_eq!(warn.warnings.len(), 1);
}

proptest! {
    #[test]
    fn implicit_nondecreasing(k in 1usize..300, beta in 0.001f64..0.999) {
        let t = epsilon_implicit(k, beta).unwrap();
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(t.iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn closed_form_nondecreasing(k in 1usize..300, beta in 0.001f64..0.999, n in 1usize..10) {
        let v: Vec<f64> = (0..=k).map(|s| epsilon_closed_form(k, beta, n, s).unwrap()).collect();
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(v.iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn tail_nondecreasing_in_rank(k in 1usize..200, eps in 0.0001f64..0.9999) {
        let mut prev = 0.0;
        for rho in 1..=k.min(20) {
            let b = beta_from_support_rank(k, eps, rho).unwrap();
            prop_assert!(b.printed >= prev);
            prev = b.printed;
        }
    }

    #[test]
    fn dp_assignment_attains_value(
        k in proptest::collection::vec(1usize..8, 1..4),
        beta in 0.01f64..0.5,
        budget in 0usize..10,
    ) {
        let split = BetaSplit::new(beta, SplitStrategy::Equal, &k).unwrap();
        let c = a_priori_core_bound(&split, &k, budget).unwrap();
        let mut v = 0.0;
        for (i, a) in c.agents.iter().enumerate() {
            v += epsilon_implicit(k[i], split.per_agent[i]).unwrap()[a.complexity.unwrap()];
        }
        prop_assert_eq!(v, c.epsilon_sum);
    }
}
