//! Seeded private multi-samples and fresh validation draws.
//!
//! Every agent draws from its own ChaCha stream keyed by the master seed and
//! the agent index, so one agent's samples never depend on how many samples
//! any other agent draws or on the order in which agents are generated.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stream id reserved for fresh validation samples.
pub const FRESH_STREAM: u64 = 1 << 63;

/// Serializable distribution description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    /// Finitely supported law; atoms break non-degeneracy of violation events.
    Discrete {
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: DistributionSpec,
}

impl DistributionSpec {
    pub fn uniform(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        DistributionSpec::UniformBox { lo, hi }
    }

    pub fn point(at: Vec<f64>) -> Self {
        DistributionSpec::UniformBox {
            lo: at.clone(),
            hi: at,
        }
    }
}

/// A validated distribution ready for sampling.
#[derive(Clone, Debug)]
pub struct Distribution {
    spec: DistributionSpec,
    sampler: Sampler,
}

#[derive(Clone, Debug)]
enum Sampler {
    Uniform {
        lo: Vec<f64>,
        width: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        factor: DMatrix<f64>,
        singular: bool,
    },
    Mixture {
        cumulative: Vec<f64>,
        parts: Vec<Sampler>,
        dim: usize,
    },
    Discrete {
        cumulative: Vec<f64>,
        atoms: Vec<Vec<f64>>,
    },
}

impl Distribution {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        let sampler = Sampler::build(&spec)?;
        Ok(Distribution { spec, sampler })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    /// False for laws with atoms (discrete parts, degenerate box sides or
    /// singular covariances), under which ties `Σ_S x = u_S(ξ)` may carry mass.
    pub fn is_continuous(&self) -> bool {
        self.sampler.is_continuous()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sampler.sample(rng)
    }
}

fn check_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidDistribution("no components".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidDistribution("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let mut acc = 0.0;
    Ok(weights
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect())
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|c| u < *c)
        .unwrap_or(cumulative.len() - 1)
}

impl Sampler {
    fn build(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::InvalidDistribution(
                        "box bounds must be nonempty and of equal length".into(),
                    ));
                }
                if lo.iter().chain(hi).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDistribution("non-finite box bound".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidDistribution("box requires lo <= hi".into()));
                }
                Ok(Sampler::Uniform {
                    lo: lo.clone(),
                    width: hi.iter().zip(lo).map(|(h, l)| h - l).collect(),
                })
            }
            DistributionSpec::Gaussian { mean, cov } => {
                let d = mean.len();
                if d == 0 || cov.len() != d || cov.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidDistribution(
                        "covariance must be a d x d matrix matching the mean".into(),
                    ));
                }
                if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDistribution("non-finite gaussian parameter".into()));
                }
                let m = DMatrix::from_fn(d, d, |r, c| cov[r][c]);
                let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
                if (&m - m.transpose()).amax() > 1e-12 * scale {
                    return Err(Error::InvalidDistribution("covariance is not symmetric".into()));
                }
                let eig = SymmetricEigen::new(m);
                if eig.eigenvalues.iter().any(|l| *l < -1e-10 * scale) {
                    return Err(Error::InvalidDistribution(
                        "covariance is not positive semidefinite".into(),
                    ));
                }
                let singular = eig.eigenvalues.iter().any(|l| *l <= 1e-12 * scale);
                let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
                Ok(Sampler::Gaussian {
                    mean: mean.clone(),
                    factor,
                    singular,
                })
            }
            DistributionSpec::Mixture { components } => {
                let weights: Vec<f64> = components.iter().map(|c| c.weight).collect();
                let cumulative = check_weights(&weights)?;
                let parts = components
                    .iter()
                    .map(|c| Sampler::build(&c.dist))
                    .collect::<Result<Vec<_>>>()?;
                let dim = parts[0].dim();
                if parts.iter().any(|p| p.dim() != dim) {
                    return Err(Error::InvalidDistribution(
                        "mixture components differ in dimension".into(),
                    ));
                }
                Ok(Sampler::Mixture {
                    cumulative,
                    parts,
                    dim,
                })
            }
            DistributionSpec::Discrete { atoms, weights } => {
                if atoms.len() != weights.len() {
                    return Err(Error::InvalidDistribution(
                        "one weight per atom required".into(),
                    ));
                }
                let cumulative = check_weights(weights)?;
                let dim = atoms[0].len();
                if dim == 0 || atoms.iter().any(|a| a.len() != dim) {
                    return Err(Error::InvalidDistribution("atoms differ in dimension".into()));
                }
                Ok(Sampler::Discrete {
                    cumulative,
                    atoms: atoms.clone(),
                })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Sampler::Uniform { lo, .. } => lo.len(),
            Sampler::Gaussian { mean, .. } => mean.len(),
            Sampler::Mixture { dim, .. } => *dim,
            Sampler::Discrete { atoms, .. } => atoms[0].len(),
        }
    }

    fn is_continuous(&self) -> bool {
        match self {
            Sampler::Uniform { width, .. } => width.iter().all(|w| *w > 0.0),
            Sampler::Gaussian { singular, .. } => !singular,
            Sampler::Mixture { parts, .. } => parts.iter().all(Sampler::is_continuous),
            Sampler::Discrete { .. } => false,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Sampler::Uniform { lo, width } => lo
                .iter()
                .zip(width)
                .map(|(l, w)| l + w * rng.random::<f64>())
                .collect(),
            Sampler::Gaussian { mean, factor, .. } => {
                let z: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
                mean.iter()
                    .enumerate()
                    .map(|(r, m)| m + (0..z.len()).map(|c| factor[(r, c)] * z[c]).sum::<f64>())
                    .collect()
            }
            Sampler::Mixture {
                cumulative, parts, ..
            } => {
                let k = pick(cumulative, rng.random::<f64>());
                parts[k].sample(rng)
            }
            Sampler::Discrete { cumulative, atoms } => {
                atoms[pick(cumulative, rng.random::<f64>())].clone()
            }
        }
    }
}

/// Mixes `(master, label, index)` into a 64-bit seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, label: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ label) ^ index)
}

/// RNG for one stream of a master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Per-agent multi-samples `ξ_i = (ξ_i^(1), …, ξ_i^(K_i))`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivateSamples {
    master_seed: Option<u64>,
    per_agent: Vec<Vec<Vec<f64>>>,
}

impl PrivateSamples {
    /// Wraps externally supplied samples. Every agent needs at least one
    /// sample and all vectors must share one dimension.
    pub fn from_vectors(per_agent: Vec<Vec<Vec<f64>>>, master_seed: Option<u64>) -> Result<Self> {
        if per_agent.is_empty() {
            return Err(Error::InvalidArgument("no agents".into()));
        }
        let dim = per_agent
            .iter()
            .flatten()
            .next()
            .map(Vec::len)
            .unwrap_or(0);
        for (i, list) in per_agent.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "agent {} holds no samples",
                    i + 1
                )));
            }
            if list.iter().any(|xi| xi.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: list.iter().find(|xi| xi.len() != dim).unwrap().len(),
                });
            }
        }
        Ok(PrivateSamples {
            master_seed,
            per_agent,
        })
    }

    pub fn master_seed(&self) -> Option<u64> {
        self.master_seed
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn dim(&self) -> usize {
        self.per_agent[0][0].len()
    }

    pub fn agent(&self, agent: usize) -> &[Vec<f64>] {
        &self.per_agent[agent]
    }

    pub fn count(&self, agent: usize) -> usize {
        self.per_agent[agent].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.per_agent.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.per_agent.iter().map(Vec::len).sum()
    }

    /// Stream id each agent's samples were drawn from.
    pub fn stream_id(agent: usize) -> u64 {
        agent as u64
    }

    /// Keeps only the listed sample indices of each agent. Agents may end up
    /// with no samples.
    pub fn restrict(&self, selection: &[Vec<usize>]) -> Vec<Vec<Vec<f64>>> {
        self.per_agent
            .iter()
            .zip(selection)
            .map(|(all, keep)| keep.iter().map(|&k| all[k].clone()).collect())
            .collect()
    }

    /// Adds one sample to an agent's list.
    pub fn push(&mut self, agent: usize, xi: Vec<f64>) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: xi.len(),
            });
        }
        self.per_agent[agent].push(xi);
        Ok(())
    }

    /// Writes one row per sample: `agent_id, sample_index, xi_1..xi_d`
    /// (1-based ids). Floats use the shortest round-trip representation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["agent_id".to_string(), "sample_index".to_string()];
        header.extend((1..=self.dim()).map(|c| format!("xi_{c}")));
        writer.write_record(&header)?;
        for (agent, list) in self.per_agent.iter().enumerate() {
            for (k, xi) in list.iter().enumerate() {
                let mut row = vec![(agent + 1).to_string(), (k + 1).to_string()];
                row.extend(xi.iter().map(|v| v.to_string()));
                writer.write_record(&row)?;
            }
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the layout produced by [`PrivateSamples::write_csv`]. Rows of an
    /// agent must appear with consecutive sample indices starting at 1.
    pub fn read_csv<R: Read>(input: R, master_seed: Option<u64>) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let dim = reader.headers()?.len().saturating_sub(2);
        if dim == 0 {
            return Err(Error::SampleFormat("no xi columns".into()));
        }
        let mut per_agent: Vec<Vec<Vec<f64>>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse_index = |field: usize| -> Result<usize> {
                record[field]
                    .trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|v| *v >= 1)
                    .ok_or_else(|| {
                        Error::SampleFormat(format!("row {}: bad index {:?}", line + 2, &record[field]))
                    })
            };
            let agent = parse_index(0)? - 1;
            let k = parse_index(1)? - 1;
            let xi = (2..record.len())
                .map(|c| {
                    record[c].trim().parse::<f64>().map_err(|_| {
                        Error::SampleFormat(format!("row {}: bad value {:?}", line + 2, &record[c]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if per_agent.len() <= agent {
                per_agent.resize(agent + 1, Vec::new());
            }
            if per_agent[agent].len() != k {
                return Err(Error::SampleFormat(format!(
                    "row {}: agent {} sample {} out of order",
                    line + 2,
                    agent + 1,
                    k + 1
                )));
            }
            per_agent[agent].push(xi);
        }
        PrivateSamples::from_vectors(per_agent, master_seed)
    }
}

/// Draws `counts[i]` i.i.d. samples for every agent `i`.
pub fn draw_private(dist: &Distribution, counts: &[usize], master_seed: u64) -> Result<PrivateSamples> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("no agents".into()));
    }
    if let Some(i) = counts.iter().position(|k| *k == 0) {
        return Err(Error::InvalidArgument(format!(
            "agent {} must draw at least one sample",
            i + 1
        )));
    }
    let per_agent = counts
        .par_iter()
        .enumerate()
        .map(|(agent, &k)| {
            let mut rng = stream_rng(master_seed, PrivateSamples::stream_id(agent));
            (0..k).map(|_| dist.sample(&mut rng)).collect()
        })
        .collect();
    PrivateSamples::from_vectors(per_agent, Some(master_seed))
}

/// Draws `n` fresh samples from a stream disjoint from every agent stream.
pub fn draw_fresh(dist: &Distribution, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("fresh sample count must be positive".into()));
    }
    let mut rng = stream_rng(seed, FRESH_STREAM);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(d: usize) -> Distribution {
        Distribution::new(DistributionSpec::uniform(vec![0.0; d], vec![1.0; d])).unwrap()
    }

    #[test]
    fn private_draws_are_reproducible() {
        let dist = unit_box(1);
        let a = draw_private(&dist, &[3, 2], 7).unwrap();
        let b = draw_private(&dist, &[3, 2], 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 5);
        assert_eq!(a.counts(), vec![3, 2]);
        let c = draw_private(&dist, &[3, 2], 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn point_mass_samples_are_exact() {
        let dist = Distribution::new(DistributionSpec::point(vec![0.25, -3.0])).unwrap();
        let s = draw_private(&dist, &[1, 1], 1).unwrap();
        for i in 0..2 {
            assert_eq!(s.agent(i)[0], vec![0.25, -3.0]);
        }
        assert!(!dist.is_continuous());
        assert_eq!(draw_fresh(&dist, 1, 3).unwrap(), vec![vec![0.25, -3.0]]);
    }

    #[test]
    fn gaussian_means_within_four_sigma() {
        let mean = vec![1.5, -2.0];
        let cov = vec![vec![4.0, 1.0], vec![1.0, 1.0]];
        let dist = Distribution::new(DistributionSpec::Gaussian {
            mean: mean.clone(),
            cov: cov.clone(),
        })
        .unwrap();
        assert!(dist.is_continuous());
        let k = 10_000;
        let s = draw_private(&dist, &[k, k], 11).unwrap();
        for agent in 0..2 {
            for c in 0..2 {
                let avg: f64 = s.agent(agent).iter().map(|xi| xi[c]).sum::<f64>() / k as f64;
                let sigma = cov[c][c].sqrt();
                assert!(
                    (avg - mean[c]).abs() < 4.0 * sigma / (k as f64).sqrt(),
                    "agent {agent} component {c}: mean {avg}"
                );
            }
        }
    }

    #[test]
    fn fresh_uniform_passes_ks_check() {
        let n = 100_000;
        let mut v: Vec<f64> = draw_fresh(&unit_box(1), n, 5)
            .unwrap()
            .into_iter()
            .map(|x| x[0])
            .collect();
        v.sort_by(f64::total_cmp);
        let d = v
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn fresh_requires_positive_count() {
        assert!(draw_fresh(&unit_box(1), 0, 1).is_err());
        assert!(draw_private(&unit_box(1), &[1, 0], 1).is_err());
    }

    #[test]
    fn fresh_stream_differs_from_agent_streams() {
        let dist = unit_box(2);
        let fresh = draw_fresh(&dist, 4, 9).unwrap();
        let private = draw_private(&dist, &[4, 4], 9).unwrap();
        assert_ne!(fresh.as_slice(), private.agent(0));
        assert_ne!(fresh.as_slice(), private.agent(1));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Distribution::new(DistributionSpec::uniform(vec![1.0], vec![0.0])).is_err());
        assert!(Distribution::new(DistributionSpec::Gaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        })
        .is_err());
        assert!(Distribution::new(DistributionSpec::Mixture {
            components: vec![MixtureComponent {
                weight: 0.5,
                dist: DistributionSpec::uniform(vec![0.0], vec![1.0]),
            }],
        })
        .is_err());
    }

    #[test]
    fn mixture_and_discrete_sample_in_support() {
        let dist = Distribution::new(DistributionSpec::Mixture {
            components: vec![
                MixtureComponent {
                    weight: 0.3,
                    dist: DistributionSpec::uniform(vec![0.0], vec![1.0]),
                },
                MixtureComponent {
                    weight: 0.7,
                    dist: DistributionSpec::uniform(vec![10.0], vec![11.0]),
                },
            ],
        })
        .unwrap();
        let xs = draw_fresh(&dist, 2000, 2).unwrap();
        let high = xs.iter().filter(|x| x[0] >= 10.0).count();
        assert!(xs.iter().all(|x| (0.0..1.0).contains(&x[0]) || (10.0..11.0).contains(&x[0])));
        assert!((high as f64 / 2000.0 - 0.7).abs() < 0.05);

        let dist = Distribution::new(DistributionSpec::Discrete {
            atoms: vec![vec![1.0], vec![2.0]],
            weights: vec![0.5, 0.5],
        })
        .unwrap();
        assert!(!dist.is_continuous());
        assert!(draw_fresh(&dist, 50, 1)
            .unwrap()
            .iter()
            .all(|x| x[0] == 1.0 || x[0] == 2.0));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        for (seed, counts) in [(1u64, vec![3usize, 2]), (2, vec![1, 1, 1]), (3, vec![5, 7])] {
            let dist = Distribution::new(DistributionSpec::Gaussian {
                mean: vec![0.0, 1e-7],
                cov: vec![vec![1e6, 0.0], vec![0.0, 1e-12]],
            })
            .unwrap();
            let s = draw_private(&dist, &counts, seed).unwrap();
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back = PrivateSamples::read_csv(buf.as_slice(), Some(seed)).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "agent_id,sample_index,xi_1\n1,1,0.5\n1,3,0.2\n";
        assert!(PrivateSamples::read_csv(text.as_bytes(), None).is_err());
    }

    proptest::proptest! {
        #[test]
        fn agent_streams_are_independent_of_other_counts(
            seed in proptest::prelude::any::<u64>(),
            k0 in 1usize..20,
            k1 in 1usize..20,
            k1_alt in 1usize..20,
        ) {
            let dist = unit_box(2);
            let a = draw_private(&dist, &[k0, k1], seed).unwrap();
            let b = draw_private(&dist, &[k0, k1_alt], seed).unwrap();
            proptest::prop_assert_eq!(a.agent(0), b.agent(0));
        }
    }
}
