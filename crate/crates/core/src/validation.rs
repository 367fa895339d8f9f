//! Monte Carlo estimates of instability probabilities and coverage
//! experiments for every certificate family.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::compression::{compress_all, CompressionOptions};
use crate::error::{Error, Result};
use crate::game::{enumerate_subcoalitions, m_paper, Coalition, GameSpec};
use crate::risk::{
    a_posteriori_allocation_bound, a_posteriori_core_bound, a_priori_allocation_bound,
    a_priori_allocation_bound_corollary, a_priori_core_bound, support_rank, zeta_certificate,
    BetaSplit, CampiScale, Method, RiskCertificate, SplitStrategy,
};
use crate::sampling::{derive_seed, draw_fresh, draw_private, Distribution, PrivateSamples};
use crate::scenario_core::ScenarioCore;
use crate::zeta_core::{solve_zeta_program, SlackForm};

/// Two-sided level of the reported binomial intervals.
pub const CONFIDENCE: f64 = 0.99;
/// Excess below which a coalition is not counted as blocking; absorbs the
/// rounding of LP-computed allocations and core minima.
pub const VIOLATION_TOL: f64 = crate::lp::TOLERANCE;
/// Label mixed into per-trial seeds.
pub const TRIAL_TAG: u64 = 0x7472_6961_6c73;

/// Exact binomial interval for `successes` out of `n`.
pub fn clopper_pearson(successes: usize, n: usize, confidence: f64) -> (f64, f64) {
    assert!(successes <= n && n > 0, "invalid binomial counts");
    let alpha = 1.0 - confidence;
    let (x, n) = (successes as f64, n as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes as f64 == n {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViolationEstimate {
    pub p_hat: f64,
    pub violations: usize,
    pub n_samples: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl ViolationEstimate {
    pub fn from_counts(violations: usize, n_samples: usize, seed: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(violations, n_samples, CONFIDENCE);
        ViolationEstimate {
            p_hat: violations as f64 / n_samples as f64,
            violations,
            n_samples,
            ci_low: ci_low.min(violations as f64 / n_samples as f64),
            ci_high: ci_high.max(violations as f64 / n_samples as f64),
            seed,
        }
    }
}

/// Number of realizations under which some enforced coalition gets less than
/// its value at `x` by more than [`VIOLATION_TOL`].
pub fn allocation_violations(spec: &GameSpec, x: &[f64], fresh: &[Vec<f64>]) -> Result<usize> {
    let coalitions: Vec<(Coalition, f64)> = enumerate_subcoalitions(spec)
        .into_iter()
        .map(|s| (s, s.total(x)))
        .collect();
    count_exceeding(spec, &coalitions, fresh)
}

fn count_exceeding(
    spec: &GameSpec,
    thresholds: &[(Coalition, f64)],
    fresh: &[Vec<f64>],
) -> Result<usize> {
    fresh
        .par_iter()
        .map(|xi| -> Result<usize> {
            for &(s, level) in thresholds {
                if spec.value(s, xi)? - level > VIOLATION_TOL {
                    return Ok(1);
                }
            }
            Ok(0)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `min_{x∈C} Σ_{i∈S} x_i` for every enforced coalition.
pub fn coalition_minima(spec: &GameSpec, core: &ScenarioCore) -> Result<Vec<(Coalition, f64)>> {
    if core.is_empty()? {
        return Err(Error::EmptyCore);
    }
    enumerate_subcoalitions(spec)
        .into_iter()
        .map(|s| Ok((s, core.coalition_min(s)?)))
        .collect()
}

/// Number of realizations under which some allocation of the core is
/// unstable, i.e. `u_S(ξ) > min_{x∈C} x(S)` for some `S`.
pub fn core_violations(
    spec: &GameSpec,
    minima: &[(Coalition, f64)],
    fresh: &[Vec<f64>],
) -> Result<usize> {
    count_exceeding(spec, minima, fresh)
}

pub fn estimate_allocation_instability(
    spec: &GameSpec,
    x: &[f64],
    dist: &Distribution,
    n: usize,
    seed: u64,
) -> Result<ViolationEstimate> {
    check_dims(spec, dist, Some(x))?;
    let fresh = draw_fresh(dist, n, seed)?;
    Ok(ViolationEstimate::from_counts(
        allocation_violations(spec, x, &fresh)?,
        n,
        seed,
    ))
}

pub fn estimate_core_instability(
    spec: &GameSpec,
    core: &ScenarioCore,
    dist: &Distribution,
    n: usize,
    seed: u64,
) -> Result<ViolationEstimate> {
    check_dims(spec, dist, None)?;
    let minima = coalition_minima(spec, core)?;
    let fresh = draw_fresh(dist, n, seed)?;
    Ok(ViolationEstimate::from_counts(
        core_violations(spec, &minima, &fresh)?,
        n,
        seed,
    ))
}

fn check_dims(spec: &GameSpec, dist: &Distribution, x: Option<&[f64]>) -> Result<()> {
    if dist.dim() != spec.uncertainty_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.uncertainty_dim(),
            found: dist.dim(),
        });
    }
    if let Some(x) = x {
        if x.len() != spec.n_agents() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_agents(),
                found: x.len(),
            });
        }
    }
    Ok(())
}

/// Settings shared by all trials of a coverage experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageConfig {
    pub method: Method,
    pub trials: usize,
    pub samples_per_agent: Vec<usize>,
    pub beta: f64,
    pub split: SplitStrategy,
    pub fresh: usize,
    pub seed: u64,
    pub compression: CompressionOptions,
    /// Total violation level split equally among agents; used by `thm3`.
    pub epsilon: Option<f64>,
    pub campi_scale: CampiScale,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Confidence parameter of this trial's certificate.
    pub beta: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exceeded: bool,
    pub complexity: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub method: Method,
    pub beta: f64,
    pub n_trials: usize,
    pub completed: usize,
    pub exceedances: usize,
    pub frequency: f64,
    /// `β + 3 √(β(1−β)/T)`.
    pub tolerance: f64,
    pub fresh_samples: usize,
    pub allocation_rule: &'static str,
    pub trials: Vec<TrialOutcome>,
}

impl CoverageReport {
    pub fn within_tolerance(&self) -> bool {
        self.frequency <= self.tolerance
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial", "seed", "epsilon", "beta", "p_hat", "ci_low", "ci_high", "exceeded",
            "complexity", "error",
        ])?;
        for t in &self.trials {
            let complexity = t
                .complexity
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                t.trial.to_string(),
                t.seed.to_string(),
                t.epsilon.to_string(),
                t.beta.to_string(),
                t.p_hat.to_string(),
                t.ci_low.to_string(),
                t.ci_high.to_string(),
                t.exceeded.to_string(),
                complexity,
                t.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// What a certificate speaks about.
pub enum Subject {
    Core(ScenarioCore),
    Allocation(Vec<f64>),
}

/// Builds the certified object and its certificate for one multi-sample.
pub fn certify(
    spec: &GameSpec,
    dist: &Distribution,
    samples: &PrivateSamples,
    config: &CoverageConfig,
) -> Result<(Subject, RiskCertificate)> {
    let k = samples.counts();
    let n = spec.n_agents();
    let split = BetaSplit::new(config.beta, config.split.clone(), &k)?;
    let core = || ScenarioCore::from_samples(spec, samples);
    let cert = match config.method {
        Method::Thm1 => {
            let s = compress_all(spec, samples, config.compression)?.cardinalities();
            (Subject::Core(core()?), a_posteriori_core_bound(&split, &s, &k)?)
        }
        Method::Thm2 => (
            Subject::Core(core()?),
            a_priori_core_bound(&split, &k, m_paper(n))?,
        ),
        Method::Thm3 => {
            let eps = config
                .epsilon
                .ok_or_else(|| Error::InvalidArgument("thm3 needs an epsilon".into()))?;
            let eps_split = vec![eps / n as f64; n];
            let rho: Vec<usize> = (0..n).map(|i| support_rank(spec, i).min(k[i])).collect();
            let x = core()?.lexicographic_allocation()?;
            (Subject::Allocation(x), a_priori_allocation_bound(&eps_split, &k, &rho)?)
        }
        Method::Thm4 => {
            let s = compress_all(spec, samples, config.compression)?.cardinalities();
            let x = core()?.lexicographic_allocation()?;
            (Subject::Allocation(x), a_posteriori_allocation_bound(&split, &s, &k)?)
        }
        Method::Corollary => {
            let x = core()?.lexicographic_allocation()?;
            (
                Subject::Allocation(x),
                a_priori_allocation_bound_corollary(&split, &k, n)?,
            )
        }
        Method::Thm5 => {
            let sol = solve_zeta_program(spec, samples, SlackForm::PerSample)?;
            let cert = zeta_certificate(
                &split,
                &sol.s_star,
                &k,
                config.campi_scale,
                dist.is_continuous(),
            )?;
            (Subject::Allocation(sol.x_star), cert)
        }
    };
    Ok((cert.0, cert.1.with_seed(samples.master_seed())))
}

fn run_trial(
    spec: &GameSpec,
    dist: &Distribution,
    config: &CoverageConfig,
    trial: usize,
) -> TrialOutcome {
    let seed = derive_seed(config.seed, TRIAL_TAG, trial as u64);
    let attempt = || -> Result<TrialOutcome> {
        let samples = draw_private(dist, &config.samples_per_agent, seed)?;
        let (subject, cert) = certify(spec, dist, &samples, config)?;
        let fresh = draw_fresh(dist, config.fresh, seed)?;
        let violations = match &subject {
            Subject::Core(core) => core_violations(spec, &coalition_minima(spec, core)?, &fresh)?,
            Subject::Allocation(x) => allocation_violations(spec, x, &fresh)?,
        };
        let est = ViolationEstimate::from_counts(violations, config.fresh, seed);
        Ok(TrialOutcome {
            trial,
            seed,
            epsilon: cert.epsilon,
            beta: cert.beta,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            exceeded: est.ci_low > cert.epsilon,
            complexity: cert
                .agents
                .iter()
                .filter_map(|a| a.complexity.or(a.support_rank))
                .collect(),
            error: None,
        })
    };
    attempt().unwrap_or_else(|e| TrialOutcome {
        trial,
        seed,
        epsilon: f64::NAN,
        beta: f64::NAN,
        p_hat: f64::NAN,
        ci_low: f64::NAN,
        ci_high: f64::NAN,
        exceeded: false,
        complexity: Vec::new(),
        error: Some(e.to_string()),
    })
}

/// Repeats sampling, certification and fresh-sample estimation `trials`
/// times and counts how often the certified level is exceeded.
pub fn coverage_experiment(
    spec: &GameSpec,
    dist: &Distribution,
    config: &CoverageConfig,
) -> Result<CoverageReport> {
    if config.trials == 0 || config.fresh == 0 {
        return Err(Error::InvalidArgument("trials and fresh counts must be positive".into()));
    }
    if config.samples_per_agent.len() != spec.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_agents(),
            found: config.samples_per_agent.len(),
        });
    }
    check_dims(spec, dist, None)?;
    let trials: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, dist, config, t))
        .collect();
    let completed = trials.iter().filter(|t| t.error.is_none()).count();
    let exceedances = trials.iter().filter(|t| t.exceeded).count();
    // the family-wide confidence parameter; for thm3 it comes from the
    // certificates themselves
    let beta = match config.method {
        Method::Thm3 => trials
            .iter()
            .find(|t| t.error.is_none())
            .map_or(f64::NAN, |t| t.beta),
        _ => config.beta,
    };
    let t = config.trials as f64;
    Ok(CoverageReport {
        method: config.method,
        beta,
        n_trials: config.trials,
        completed,
        exceedances,
        frequency: exceedances as f64 / t,
        tolerance: beta + 3.0 * (beta * (1.0 - beta) / t).sqrt(),
        fresh_samples: config.fresh,
        allocation_rule: "lexicographic minimum over the core",
        trials,
    })
}
