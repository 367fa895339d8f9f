use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use coalisure::compression::{check_validity, compress_all, CompressedSample, CompressionOptions, Validity};
use coalisure::game::{m_paper, Coalition};
use coalisure::risk::{
    a_posteriori_allocation_bound, a_posteriori_core_bound, a_priori_allocation_bound,
    a_priori_allocation_bound_corollary, a_priori_core_bound, support_rank, zeta_certificate,
    BetaSplit, Method, RiskCertificate,
};
use coalisure::sampling::draw_private;
use coalisure::scenario_core::{tighten, SampleRef, ScenarioCore, VERTEX_AGENT_LIMIT};
use coalisure::validation::{coverage_experiment, CoverageConfig, CoverageReport};
use coalisure::zeta_core::{solve_zeta_program, SlackForm, ZetaSolution};
use coalisure::PrivateSamples;
use serde::Serialize;

use crate::config::{Settings, SCHEMA_VERSION};

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn out_path(s: &Settings, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&s.output_dir)
        .with_context(|| format!("creating {}", s.output_dir.display()))?;
    Ok(s.output_dir.join(name))
}

fn write_json<T: Serialize>(s: &Settings, name: &str, body: &T) -> Result<PathBuf> {
    let path = out_path(s, name)?;
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    serde_json::to_writer_pretty(
        &mut w,
        &Versioned {
            schema_version: SCHEMA_VERSION,
            body,
        },
    )?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

pub fn generate(s: &Settings) -> Result<PrivateSamples> {
    let samples = draw_private(&s.distribution, &s.samples_per_agent, s.seed)?;
    let path = out_path(s, "samples.csv")?;
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    samples.write_csv(&mut w)?;
    w.flush()?;
    println!("samples: {} draws for {} agents -> {}", samples.total(), samples.n_agents(), path.display());
    Ok(samples)
}

pub fn load_samples(s: &Settings) -> Result<PrivateSamples> {
    let file = File::open(&s.samples_path)
        .with_context(|| format!("opening samples {}", s.samples_path.display()))?;
    let samples = PrivateSamples::read_csv(BufReader::new(file), Some(s.seed))?;
    if samples.n_agents() != s.game.n_agents() {
        bail!(
            "samples hold {} agents, the game has {}",
            samples.n_agents(),
            s.game.n_agents()
        );
    }
    if samples.dim() != s.game.uncertainty_dim() {
        bail!(
            "samples have dimension {}, the game expects {}",
            samples.dim(),
            s.game.uncertainty_dim()
        );
    }
    Ok(samples)
}

#[derive(Serialize)]
struct ConstraintReport {
    coalition: Coalition,
    mask: u64,
    bound: f64,
    witness: Option<SampleRef>,
}

#[derive(Serialize)]
struct CoreReport {
    n_agents: usize,
    grand_value: f64,
    samples_per_agent: Vec<usize>,
    seed: Option<u64>,
    empty: bool,
    constraints: Vec<ConstraintReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<Vec<f64>>>,
    lexicographic_allocation: Option<Vec<f64>>,
}

pub fn core(s: &Settings, samples: &PrivateSamples) -> Result<()> {
    let bounds = tighten(&s.game, samples)?;
    let core = coalisure::scenario_core::build(&s.game, bounds);
    let empty = core.is_empty()?;
    let vertices = if s.game.n_agents() <= VERTEX_AGENT_LIMIT {
        Some(core.vertices()?)
    } else {
        None
    };
    let lexicographic_allocation = if empty {
        None
    } else {
        core.lexicographic_allocation().ok()
    };
    let report = CoreReport {
        n_agents: core.n_agents(),
        grand_value: core.grand_value(),
        samples_per_agent: samples.counts(),
        seed: samples.master_seed(),
        empty,
        constraints: core
            .bounds()
            .entries()
            .iter()
            .map(|e| ConstraintReport {
                coalition: e.coalition,
                mask: e.coalition.mask(),
                bound: e.bound,
                witness: e.witness,
            })
            .collect(),
        vertices,
        lexicographic_allocation,
    };
    let path = write_json(s, "core.json", &report)?;
    println!(
        "core: {} constraints, {} -> {}",
        report.constraints.len(),
        if empty { "empty" } else { "nonempty" },
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AgentCompressionReport<'a> {
    agent: usize,
    cardinality: usize,
    samples: &'a [CompressedSample],
}

#[derive(Serialize)]
struct CompressionReport<'a> {
    options: CompressionOptions,
    total: usize,
    agents: Vec<AgentCompressionReport<'a>>,
    validity: Validity,
    valid: bool,
}

pub fn compress(s: &Settings, samples: &PrivateSamples) -> Result<()> {
    let set = compress_all(&s.game, samples, s.compression)?;
    let validity = check_validity(&s.game, samples, &set)?;
    let report = CompressionReport {
        options: s.compression,
        total: set.total(),
        agents: set
            .per_agent
            .iter()
            .enumerate()
            .map(|(i, v)| AgentCompressionReport {
                agent: i + 1,
                cardinality: v.len(),
                samples: v,
            })
            .collect(),
        valid: validity.is_valid(),
        validity,
    };
    let path = write_json(s, "compression.json", &report)?;
    println!(
        "compression: sizes {:?}, valid {} -> {}",
        set.cardinalities(),
        report.valid,
        path.display()
    );
    Ok(())
}

fn needs_samples(m: Method) -> bool {
    matches!(m, Method::Thm1 | Method::Thm4 | Method::Thm5)
}

fn certify_one(
    s: &Settings,
    method: Method,
    samples: Option<&PrivateSamples>,
) -> Result<RiskCertificate> {
    let n = s.game.n_agents();
    let k = samples.map_or_else(|| s.samples_per_agent.clone(), |x| x.counts());
    let split = BetaSplit::new(s.beta, s.split.clone(), &k)?;
    let need = || samples.context("this method needs private samples");
    let cert = match method {
        Method::Thm1 => {
            let sizes = compress_all(&s.game, need()?, s.compression)?.cardinalities();
            a_posteriori_core_bound(&split, &sizes, &k)?
        }
        Method::Thm2 => a_priori_core_bound(&split, &k, m_paper(n))?,
        Method::Thm3 => {
            let eps = s.epsilon.context("thm3 needs an epsilon")?;
            let rho: Vec<usize> = (0..n).map(|i| support_rank(&s.game, i).min(k[i])).collect();
            a_priori_allocation_bound(&vec![eps / n as f64; n], &k, &rho)?
        }
        Method::Thm4 => {
            let sizes = compress_all(&s.game, need()?, s.compression)?.cardinalities();
            a_posteriori_allocation_bound(&split, &sizes, &k)?
        }
        Method::Corollary => a_priori_allocation_bound_corollary(&split, &k, n)?,
        Method::Thm5 => {
            let sol = solve_zeta_program(&s.game, need()?, SlackForm::PerSample)?;
            zeta_certificate(
                &split,
                &sol.s_star,
                &k,
                s.campi_scale,
                s.distribution.is_continuous(),
            )?
        }
    };
    Ok(cert.with_seed(samples.and_then(|x| x.master_seed())))
}

#[derive(Serialize)]
struct Failure {
    method: Method,
    error: String,
}

#[derive(Serialize)]
struct CertificateReport {
    beta: f64,
    split: BetaSplit,
    certificates: Vec<RiskCertificate>,
    failures: Vec<Failure>,
}

pub fn certify(s: &Settings, samples: Option<&PrivateSamples>) -> Result<()> {
    let loaded;
    let samples = match samples {
        Some(x) => Ok(x),
        None if s.methods.iter().any(|&m| needs_samples(m)) => match load_samples(s) {
            Ok(x) => {
                loaded = x;
                Ok(&loaded)
            }
            Err(e) => Err(e.to_string()),
        },
        None => Err("not loaded".to_string()),
    };
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for &m in &s.methods {
        let result = match (&samples, needs_samples(m)) {
            (Err(e), true) => Err(anyhow::anyhow!("{e}")),
            (Ok(x), true) => certify_one(s, m, Some(x)),
            (_, false) => certify_one(s, m, None),
        };
        match result {
            Ok(c) => {
                println!("certificate {m}: epsilon {} at confidence {}", c.epsilon, c.confidence());
                certificates.push(c);
            }
            Err(e) => {
                eprintln!("certificate {m} failed: {e:#}");
                failures.push(Failure {
                    method: m,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    let k = match &samples {
        Ok(x) if s.methods.iter().any(|&m| needs_samples(m)) => x.counts(),
        _ => s.samples_per_agent.clone(),
    };
    let report = CertificateReport {
        beta: s.beta,
        split: BetaSplit::new(s.beta, s.split.clone(), &k)?,
        certificates,
        failures,
    };
    let path = write_json(s, "certificates.json", &report)?;
    println!("certificates -> {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct ZetaReport {
    empty_core: bool,
    solution: ZetaSolution,
    certificate: Option<RiskCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_error: Option<String>,
}

pub fn zeta(s: &Settings, samples: &PrivateSamples) -> Result<()> {
    let solution = solve_zeta_program(&s.game, samples, s.slack_form)?;
    let empty_core = ScenarioCore::from_samples(&s.game, samples)?.is_empty()?;
    let (certificate, certificate_error) = match s.slack_form {
        SlackForm::PerSample => {
            let k = samples.counts();
            let result = BetaSplit::new(s.beta, s.split.clone(), &k).and_then(|split| {
                zeta_certificate(
                    &split,
                    &solution.s_star,
                    &k,
                    s.campi_scale,
                    s.distribution.is_continuous(),
                )
            });
            match result {
                Ok(c) => (Some(c.with_seed(samples.master_seed())), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
        SlackForm::PerAgent => (None, Some("per-agent slacks carry no certificate".into())),
    };
    let report = ZetaReport {
        empty_core,
        solution,
        certificate,
        certificate_error,
    };
    let path = write_json(s, "zeta.json", &report)?;
    println!(
        "zeta: objective {}, positive slacks {:?} -> {}",
        report.solution.objective,
        report.solution.s_star,
        path.display()
    );
    Ok(())
}

pub fn validate(s: &Settings) -> Result<Vec<CoverageReport>> {
    let mut reports = Vec::new();
    for &method in &s.methods {
        let cfg = CoverageConfig {
            method,
            trials: s.validation.trials,
            samples_per_agent: s.samples_per_agent.clone(),
            beta: s.beta,
            split: s.split.clone(),
            fresh: s.validation.fresh,
            seed: s.seed,
            compression: s.compression,
            epsilon: s.epsilon,
            campi_scale: s.campi_scale,
        };
        let report = coverage_experiment(&s.game, &s.distribution, &cfg)?;
        let json = write_json(s, &format!("coverage_{method}.json"), &report)?;
        let csv_path = out_path(s, &format!("coverage_{method}.csv"))?;
        let mut w = BufWriter::new(File::create(&csv_path)?);
        report.write_csv(&mut w)?;
        w.flush()?;
        println!(
            "coverage {method}: {}/{} exceedances (frequency {:.4}, tolerance {:.4}), {} failed -> {}",
            report.exceedances,
            report.n_trials,
            report.frequency,
            report.tolerance,
            report.n_trials - report.completed,
            json.display()
        );
        reports.push(report);
    }
    Ok(reports)
}

pub fn run_all(s: &Settings) -> Result<()> {
    let samples = generate(s)?;
    core(s, &samples)?;
    compress(s, &samples)?;
    certify(s, Some(&samples))?;
    zeta(s, &samples)?;
    validate(s)?;
    Ok(())
}
