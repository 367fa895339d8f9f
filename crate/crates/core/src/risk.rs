//! Risk bounds: the ε functions behind the a posteriori and a priori
//! certificates, the support-rank tail, budgeted maximization, and the root
//! of the risk polynomial used for the relaxed core.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::game::GameSpec;

/// Pivot tolerance for the support-rank elimination.
pub const RANK_TOL: f64 = 1e-10;
/// Relative residual accepted at a polynomial root.
pub const ROOT_RESIDUAL: f64 = 1e-10;
/// Bracket width accepted at a polynomial root.
pub const ROOT_WIDTH: f64 = 1e-12;
/// Scan points per unit of `K` when bracketing a root.
pub const SCAN_PER_K: usize = 64;

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_binomial(n as u64, k as u64)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {beta}")))
    }
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// `1 - exp(log_one_minus / exponent)` clipped to `[0, 1]`.
fn one_minus_root(ln_value: f64, exponent: usize) -> f64 {
    (-(ln_value / exponent as f64).exp_m1()).clamp(0.0, 1.0)
}

/// Per-agent table `ε(k)`, `k = 0..=K`, for the a posteriori core bound.
///
/// `ε(K) = 1`; below that each term of the defining sum receives the equal
/// share `β/(K−1)`, so `C(K,k)(1−ε(k))^(K−k) = β/(K−1)`. With `K = 1` the
/// sum is empty and the share is taken as `β`.
pub fn epsilon_implicit(k_i: usize, beta_i: f64) -> Result<Vec<f64>> {
    if k_i == 0 {
        return Err(Error::InvalidArgument("K_i must be at least 1".into()));
    }
    check_beta(beta_i)?;
    let share = beta_i.ln() - (k_i.saturating_sub(1).max(1) as f64).ln();
    let mut table: Vec<f64> = (0..k_i)
        .map(|k| one_minus_root(share - ln_choose(k_i, k), k_i - k))
        .collect();
    table.push(1.0);
    Ok(table)
}

/// `Σ_{k=1}^{K−1} C(K,k)(1−ε(k))^(K−k)` for a table from [`epsilon_implicit`].
pub fn implicit_sum(table: &[f64]) -> f64 {
    let k_i = table.len() - 1;
    (1..k_i)
        .map(|k| (ln_choose(k_i, k) + (k_i - k) as f64 * (-table[k]).ln_1p()).exp())
        .sum()
}

/// Closed-form `ε_i(s) = 1 − (β_i / ((N+1)·C(K,s)))^(1/(K−s))`, with
/// `ε_i(K) = 1`.
pub fn epsilon_closed_form(k_i: usize, beta_i: f64, n_agents: usize, s: usize) -> Result<f64> {
    check_beta(beta_i)?;
    if n_agents == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if s > k_i {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds K = {k_i}")));
    }
    if s == k_i {
        return Ok(1.0);
    }
    let ln_value = beta_i.ln() - ((n_agents + 1) as f64).ln() - ln_choose(k_i, s);
    Ok(one_minus_root(ln_value, k_i - s))
}

/// Row rank by Gaussian elimination with partial pivoting.
pub fn matrix_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n_cols {
        if rank == m.len() {
            break;
        }
        let (pivot, best) = (rank..m.len())
            .map(|r| (r, m[r][col].abs()))
            .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        m.swap(rank, pivot);
        let p = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[col] / p[col];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&p).skip(col) {
                    *a -= f * b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Support rank of agent `agent`'s rationality constraints: the row rank of
/// the indicator vectors of its allowed coalitions.
pub fn support_rank(spec: &GameSpec, agent: usize) -> usize {
    let rows: Vec<Vec<f64>> = spec
        .allowed(agent)
        .iter()
        .map(|s| s.indicator(spec.n_agents()))
        .collect();
    matrix_rank(&rows, RANK_TOL)
}

fn binomial_pmf_ln(k_i: usize, eps: f64, j: usize) -> f64 {
    ln_choose(k_i, j) + j as f64 * eps.ln() + (k_i - j) as f64 * (-eps).ln_1p()
}

/// Confidence parameter for a support rank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportRankBeta {
    /// `Σ_{j=1}^{ρ} C(K,j) ε^j (1−ε)^(K−j)`.
    pub printed: f64,
    /// `Σ_{j=0}^{ρ−1} C(K,j) ε^j (1−ε)^(K−j)`.
    pub conventional: f64,
}

pub fn beta_from_support_rank(k_i: usize, eps_i: f64, rho_i: usize) -> Result<SupportRankBeta> {
    check_unit_open("epsilon", eps_i)?;
    if rho_i == 0 || rho_i > k_i {
        return Err(Error::InvalidArgument(format!(
            "support rank {rho_i} must lie in 1..={k_i}"
        )));
    }
    let term = |j| binomial_pmf_ln(k_i, eps_i, j).exp();
    Ok(SupportRankBeta {
        printed: (1..=rho_i).map(term).sum::<f64>().min(1.0),
        conventional: (0..rho_i).map(term).sum::<f64>().min(1.0),
    })
}

/// Maximum of `Σ_i table_i[s_i]` over integer `s_i ≤ K_i` with
/// `Σ_i s_i ≤ budget`, and a maximizer. Sums are formed in agent order, so
/// the value matches a direct evaluation of the returned assignment.
pub fn budget_max(tables: &[Vec<f64>], budget: usize) -> (f64, Vec<usize>) {
    let n = tables.len();
    // best[i][b]: best sum over agents < i using at most b units
    let mut best = vec![vec![0.0f64; budget + 1]];
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(n);
    for table in tables {
        let prev = best.last().unwrap();
        let mut row = vec![f64::NEG_INFINITY; budget + 1];
        let mut pick = vec![0usize; budget + 1];
        for b in 0..=budget {
            for s in 0..=b.min(table.len() - 1) {
                let v = prev[b - s] + table[s];
                if v > row[b] {
                    row[b] = v;
                    pick[b] = s;
                }
            }
        }
        best.push(row);
        choice.push(pick);
    }
    let value = best[n][budget];
    let mut assignment = vec![0; n];
    let mut b = budget;
    for i in (0..n).rev() {
        assignment[i] = choice[i][b];
        b -= assignment[i];
    }
    (value, assignment)
}

/// How the total confidence budget is shared among agents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    #[default]
    Equal,
    Proportional,
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaSplit {
    pub beta: f64,
    pub per_agent: Vec<f64>,
    pub strategy: SplitStrategy,
}

impl BetaSplit {
    /// `β_i = β/N`, `β_i ∝ K_i`, or explicit values summing to `β`.
    pub fn new(beta: f64, strategy: SplitStrategy, samples_per_agent: &[usize]) -> Result<Self> {
        check_beta(beta)?;
        let n = samples_per_agent.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty agent list".into()));
        }
        let per_agent = match &strategy {
            SplitStrategy::Equal => vec![beta / n as f64; n],
            SplitStrategy::Proportional => {
                let total: usize = samples_per_agent.iter().sum();
                if total == 0 {
                    return Err(Error::InvalidArgument("proportional split needs samples".into()));
                }
                samples_per_agent
                    .iter()
                    .map(|&k| beta * k as f64 / total as f64)
                    .collect()
            }
            SplitStrategy::Explicit(values) => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: values.len(),
                    });
                }
                values.clone()
            }
        };
        for &b in &per_agent {
            check_beta(b)?;
        }
        let sum: f64 = per_agent.iter().sum();
        if (sum - beta).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "per-agent betas sum to {sum}, expected {beta}"
            )));
        }
        Ok(BetaSplit {
            beta,
            per_agent,
            strategy,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }
}

/// Certificate families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Corollary,
    Thm5,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Thm1,
        Method::Thm2,
        Method::Thm3,
        Method::Thm4,
        Method::Corollary,
        Method::Thm5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Thm1 => "thm1",
            Method::Thm2 => "thm2",
            Method::Thm3 => "thm3",
            Method::Thm4 => "thm4",
            Method::Corollary => "corollary",
            Method::Thm5 => "thm5",
        }
    }

    /// Whether the bound concerns the whole core rather than one allocation.
    pub fn is_core_bound(self) -> bool {
        matches!(self, Method::Thm1 | Method::Thm2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentRisk {
    pub agent: usize,
    pub samples: usize,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_conventional: Option<f64>,
}

/// A statement "with confidence at least `1 − β`, violation ≤ `ε`".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskCertificate {
    pub method: Method,
    pub epsilon: f64,
    pub beta: f64,
    /// Per-agent sum before clipping at 1.
    pub epsilon_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    pub agents: Vec<AgentRisk>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RiskCertificate {
    fn from_terms(method: Method, beta: f64, agents: Vec<AgentRisk>) -> Self {
        let epsilon_sum: f64 = agents.iter().map(|a| a.epsilon).sum();
        RiskCertificate {
            method,
            epsilon: epsilon_sum.min(1.0),
            beta,
            epsilon_sum,
            budget: None,
            agents,
            seed: None,
            warnings: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn confidence(&self) -> f64 {
        1.0 - self.beta
    }

    pub fn samples_per_agent(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.samples).collect()
    }
}

fn check_lengths(split: &BetaSplit, k: &[usize], s: Option<&[usize]>) -> Result<()> {
    if k.len() != split.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: split.n_agents(),
            found: k.len(),
        });
    }
    if let Some(s) = s {
        if s.len() != k.len() {
            return Err(Error::DimensionMismatch {
                expected: k.len(),
                found: s.len(),
            });
        }
        if let Some(i) = (0..s.len()).find(|&i| s[i] > k[i]) {
            return Err(Error::InvalidArgument(format!(
                "agent {}: s = {} exceeds K = {}",
                i + 1,
                s[i],
                k[i]
            )));
        }
    }
    Ok(())
}

fn agent_terms(
    split: &BetaSplit,
    k: &[usize],
    s: &[usize],
    eps: impl Fn(usize) -> Result<f64>,
) -> Result<Vec<AgentRisk>> {
    (0..k.len())
        .map(|i| {
            Ok(AgentRisk {
                agent: i + 1,
                samples: k[i],
                beta: split.per_agent[i],
                epsilon: eps(i)?,
                complexity: Some(s[i]),
                support_rank: None,
                beta_conventional: None,
            })
        })
        .collect()
}

/// Violation bound for the whole scenario core from the compression sizes.
pub fn a_posteriori_core_bound(split: &BetaSplit, s: &[usize], k: &[usize]) -> Result<RiskCertificate> {
    check_lengths(split, k, Some(s))?;
    let agents = agent_terms(split, k, s, |i| {
        Ok(epsilon_implicit(k[i], split.per_agent[i])?[s[i]])
    })?;
    Ok(RiskCertificate::from_terms(Method::Thm1, split.beta, agents))
}

fn budget_certificate(
    method: Method,
    split: &BetaSplit,
    k: &[usize],
    budget: usize,
    tables: Vec<Vec<f64>>,
) -> RiskCertificate {
    let (_, assignment) = budget_max(&tables, budget);
    let agents = (0..k.len())
        .map(|i| AgentRisk {
            agent: i + 1,
            samples: k[i],
            beta: split.per_agent[i],
            epsilon: tables[i][assignment[i]],
            complexity: Some(assignment[i]),
            support_rank: None,
            beta_conventional: None,
        })
        .collect();
    let mut cert = RiskCertificate::from_terms(method, split.beta, agents);
    cert.budget = Some(budget);
    cert
}

/// Sample-independent core bound: the worst case of the a posteriori bound
/// over all compression sizes with total at most `budget`.
pub fn a_priori_core_bound(split: &BetaSplit, k: &[usize], budget: usize) -> Result<RiskCertificate> {
    check_lengths(split, k, None)?;
    let tables = (0..k.len())
        .map(|i| epsilon_implicit(k[i], split.per_agent[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(budget_certificate(Method::Thm2, split, k, budget, tables))
}

/// Confidence for a given per-agent violation split and support ranks.
pub fn a_priori_allocation_bound(
    eps_split: &[f64],
    k: &[usize],
    rho: &[usize],
) -> Result<RiskCertificate> {
    if eps_split.len() != k.len() || rho.len() != k.len() {
        return Err(Error::DimensionMismatch {
            expected: k.len(),
            found: eps_split.len().min(rho.len()),
        });
    }
    let agents = (0..k.len())
        .map(|i| {
            let b = beta_from_support_rank(k[i], eps_split[i], rho[i])?;
            Ok(AgentRisk {
                agent: i + 1,
                samples: k[i],
                beta: b.printed,
                epsilon: eps_split[i],
                complexity: None,
                support_rank: Some(rho[i]),
                beta_conventional: Some(b.conventional),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let beta = agents.iter().map(|a| a.beta).sum::<f64>().clamp(0.0, 1.0);
    Ok(RiskCertificate::from_terms(Method::Thm3, beta, agents))
}

/// Violation bound for the selected allocation from the compression sizes.
pub fn a_posteriori_allocation_bound(
    split: &BetaSplit,
    s: &[usize],
    k: &[usize],
) -> Result<RiskCertificate> {
    check_lengths(split, k, Some(s))?;
    let n = k.len();
    let agents = agent_terms(split, k, s, |i| {
        epsilon_closed_form(k[i], split.per_agent[i], n, s[i])
    })?;
    Ok(RiskCertificate::from_terms(Method::Thm4, split.beta, agents))
}

/// Sample-independent allocation bound with total complexity at most `budget`.
pub fn a_priori_allocation_bound_corollary(
    split: &BetaSplit,
    k: &[usize],
    budget: usize,
) -> Result<RiskCertificate> {
    check_lengths(split, k, None)?;
    let n = k.len();
    let tables = (0..n)
        .map(|i| {
            (0..=k[i])
                .map(|s| epsilon_closed_form(k[i], split.per_agent[i], n, s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(budget_certificate(Method::Corollary, split, k, budget, tables))
}

/// Which count scales the first negative sum of the risk polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampiScale {
    /// `β_i / (2N)` with `N` the number of agents.
    #[default]
    Agents,
    /// `β_i / (2K_i)`.
    Samples,
}

/// Terms below this fraction of the largest one are dropped; they decrease
/// away from the peak, so the dropped mass stays below `4K · 1e-20`.
const TERM_CUTOFF: f64 = 1e-20;

/// `Σ_m exp(ln_coef[m]) t^(power + m)` for one run of consecutive powers.
/// The log-terms are concave in `m`, so the sum is taken outward from the
/// largest term using the exact coefficient ratios.
#[derive(Clone, Debug)]
struct TermBlock {
    power: f64,
    ln_coef: Vec<f64>,
    // coef[m + 1] / coef[m]
    ratio: Vec<f64>,
}

impl TermBlock {
    /// Terms `scale · C(j, s) t^(j−s)` for `j` in `from..to`.
    fn new(ln_scale: f64, s: usize, from: usize, to: usize) -> Option<Self> {
        if from >= to {
            return None;
        }
        Some(TermBlock {
            power: (from - s) as f64,
            ln_coef: (from..to).map(|j| ln_scale + ln_choose(j, s)).collect(),
            ratio: (from + 1..to).map(|j| j as f64 / (j - s) as f64).collect(),
        })
    }

    fn ln_sum(&self, t: f64, lt: f64) -> f64 {
        let log_term = |m: usize| self.ln_coef[m] + (self.power + m as f64) * lt;
        let mut peak = 0;
        let mut top = log_term(0);
        for m in 1..self.ln_coef.len() {
            let v = log_term(m);
            if v <= top {
                break;
            }
            peak = m;
            top = v;
        }
        let mut total = 1.0;
        let mut term = 1.0;
        for &r in &self.ratio[peak..] {
            term *= r * t;
            total += term;
            if term < TERM_CUTOFF {
                break;
            }
        }
        term = 1.0;
        for &r in self.ratio[..peak].iter().rev() {
            term /= r * t;
            total += term;
            if term < TERM_CUTOFF {
                break;
            }
        }
        top + total.ln()
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// The polynomial
/// `h(t) = C(K,s) t^(K−s) − (β/2M) Σ_{j=s}^{K−1} C(j,s) t^(j−s)
///         − (β/6K) Σ_{j=K+1}^{4K} C(j,s) t^(j−s)`
/// evaluated in log space.
#[derive(Clone, Debug)]
pub struct RiskPolynomial {
    k: usize,
    s: usize,
    beta: f64,
    scale_count: usize,
    ln_lead: f64,
    below: Option<TermBlock>,
    above: TermBlock,
}

impl RiskPolynomial {
    pub fn new(k_i: usize, beta_i: f64, n_agents: usize, s: usize, scale: CampiScale) -> Result<Self> {
        check_beta(beta_i)?;
        if s > k_i {
            return Err(Error::InvalidArgument(format!("s = {s} exceeds K = {k_i}")));
        }
        if n_agents == 0 || k_i == 0 {
            return Err(Error::InvalidArgument("N and K must be at least 1".into()));
        }
        let scale_count = match scale {
            CampiScale::Agents => n_agents,
            CampiScale::Samples => k_i,
        };
        let ln_first = beta_i.ln() - (2.0 * scale_count as f64).ln();
        let ln_second = beta_i.ln() - (6.0 * k_i as f64).ln();
        Ok(RiskPolynomial {
            k: k_i,
            s,
            beta: beta_i,
            scale_count,
            ln_lead: ln_choose(k_i, s),
            below: TermBlock::new(ln_first, s, s, k_i),
            above: TermBlock::new(ln_second, s, k_i + 1, 4 * k_i + 1)
                .expect("the upper sum is never empty"),
        })
    }

    /// `(ln A, ln B)` with `h = A − B` split into its positive and negative
    /// parts, for `t > 0`.
    pub fn log_parts(&self, t: f64) -> (f64, f64) {
        let lt = t.ln();
        let pos = self.ln_lead + (self.k - self.s) as f64 * lt;
        let upper = self.above.ln_sum(t, lt);
        let neg = match &self.below {
            Some(b) => ln_add(b.ln_sum(t, lt), upper),
            None => upper,
        };
        (pos, neg)
    }

    /// `(A − B)/(A + B)`, the residual of `h` relative to its scale.
    pub fn relative_value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return -1.0;
        }
        let (a, b) = self.log_parts(t);
        ((a - b) / 2.0).tanh()
    }

    /// `h(t)` in plain floating point; may overflow for large `K`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            // only the constant term survives
            return match &self.below {
                Some(b) => -b.ln_coef[0].exp(),
                None => self.ln_lead.exp(),
            };
        }
        let (a, b) = self.log_parts(t);
        a.exp() - b.exp()
    }

    /// Smallest root in `(0, 1]`.
    pub fn solve(&self) -> Result<PolynomialRoot> {
        if self.s == self.k {
            return Ok(PolynomialRoot {
                t: 0.0,
                epsilon: 1.0,
                residual: 0.0,
                width: 0.0,
            });
        }
        let points = SCAN_PER_K * self.k;
        let step = 1.0 / points as f64;
        let mut lo = 0.0;
        let mut hi = None;
        let mut max_log_ratio = f64::NEG_INFINITY;
        for m in 1..=points {
            let t = if m == points { 1.0 } else { m as f64 * step };
            let (a, b) = self.log_parts(t);
            max_log_ratio = max_log_ratio.max(a - b);
            if a >= b {
                hi = Some(t);
                break;
            }
            lo = t;
        }
        let Some(mut hi) = hi else {
            return Err(Error::NoRoot {
                k: self.k,
                s: self.s,
                beta: self.beta,
                n: self.scale_count,
                points,
                max_log_ratio,
            });
        };
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= ROOT_WIDTH && self.relative_value(lo).abs() <= ROOT_RESIDUAL {
                break;
            }
            if self.relative_value(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let residual = self.relative_value(lo);
        Ok(PolynomialRoot {
            t: lo,
            epsilon: (1.0 - lo).clamp(0.0, 1.0),
            residual,
            width: hi - lo,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolynomialRoot {
    /// Lower end of the final bracket; `h(t) ≤ 0` there.
    pub t: f64,
    pub epsilon: f64,
    /// Relative residual `(A − B)/(A + B)` at `t`.
    pub residual: f64,
    pub width: f64,
}

/// `(t, ε̄ = 1 − t)` for the agent-count scaling.
pub fn solve_campi_polynomial(
    k_i: usize,
    beta_i: f64,
    n_agents: usize,
    s: usize,
) -> Result<PolynomialRoot> {
    RiskPolynomial::new(k_i, beta_i, n_agents, s, CampiScale::Agents)?.solve()
}

/// Violation bound for the slack-minimizing allocation from the number of
/// positive slacks per agent.
pub fn zeta_certificate(
    split: &BetaSplit,
    s_star: &[usize],
    k: &[usize],
    scale: CampiScale,
    continuous: bool,
) -> Result<RiskCertificate> {
    check_lengths(split, k, Some(s_star))?;
    let n = k.len();
    let agents = agent_terms(split, k, s_star, |i| {
        Ok(RiskPolynomial::new(k[i], split.per_agent[i], n, s_star[i], scale)?
            .solve()?
            .epsilon)
    })?;
    let mut cert = RiskCertificate::from_terms(Method::Thm5, split.beta, agents);
    if !continuous {
        cert.warnings
            .push("uncertainty law is not continuous; the bound assumes it is".into());
    }
    if scale == CampiScale::Samples {
        cert.warnings
            .push("risk polynomial scaled by sample count instead of agent count".into());
    }
    Ok(cert)
}
