//! Run configuration: a single JSON document mirroring the engine's
//! `RunConfig` fields. Unknown keys are rejected so typos in experiment
//! sweeps fail loudly.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use efbv_core::engine::{AlgoChoice, HInit, RunConfig};
use efbv_core::problems::{parse_libsvm, partition, synth_dataset, LtildeConvention};
use efbv_core::tuning::{Algorithm, Mode};
use efbv_core::{CompressorSpec, Dataset, DenseVector, Dependence, Family, ProblemSpec, Prox};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Compressor family, e.g. "comp:1,10", "topk:3", "randk:2",
    /// "mix:1,2", "nice:4", "identity", "scaled:0.25:randk:2".
    pub compressor: String,
    #[serde(default = "default_dependence")]
    pub dependence: String,
    /// "ef-bv" | "ef21" | "diana" | "explicit" (needs lambda and nu).
    pub algorithm: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// "pl" | "kl" | "nonconvex".
    pub mode: String,
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_h_init")]
    pub h_init: String,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default = "default_bits")]
    pub bits_per_coord: u32,
    pub problem: ProblemConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub workers: usize,
    #[serde(default = "default_overlap")]
    pub overlap: u8,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub l1_weight: f64,
    #[serde(default)]
    pub nonconvex_weight: f64,
    #[serde(default)]
    pub data_seed: u64,
    /// Use the sum-of-squares aggregate smoothness constant instead of the
    /// root-mean-square default.
    #[serde(default)]
    pub appendix_l: bool,
}

fn default_dependence() -> String {
    "independent".into()
}
fn default_h_init() -> String {
    "zeros".into()
}
fn default_cadence() -> u64 {
    10
}
fn default_bits() -> u32 {
    64
}
fn default_overlap() -> u8 {
    1
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("opening config {path:?}"))?;
        let config: ConfigFile = serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("parsing config {path:?}"))?;
        Ok(config)
    }

    pub fn mode(&self) -> Result<Mode> {
        parse_mode(&self.mode)
    }

    pub fn algorithm_choice(&self) -> Result<AlgoChoice> {
        match self.algorithm.as_str() {
            "explicit" => match (self.lambda, self.nu) {
                (Some(lambda), Some(nu)) => Ok(AlgoChoice::Explicit { lambda, nu }),
                _ => bail!("algorithm \"explicit\" requires both lambda and nu"),
            },
            name => Ok(AlgoChoice::Named(parse_algorithm(name)?)),
        }
    }

    /// Assemble the engine configuration for ambient dimension `d`.
    pub fn to_run_config(&self, d: usize, seed: u64) -> Result<RunConfig> {
        let family = parse_family(&self.compressor)?;
        let dependence = match self.dependence.as_str() {
            "independent" => Dependence::Independent,
            "joint-nice" => Dependence::JointNice,
            other => bail!("unknown dependence {other:?}"),
        };
        let h_init = match self.h_init.as_str() {
            "zeros" => HInit::Zeros,
            "local-gradient" => HInit::LocalGradient,
            other => bail!("unknown h_init {other:?}"),
        };
        Ok(RunConfig {
            compressor: CompressorSpec::new(d, family),
            dependence,
            algorithm: self.algorithm_choice()?,
            gamma: self.gamma,
            constants: None,
            mode: self.mode()?,
            rounds: self.rounds,
            seed,
            h_init,
            x0: self.x0.clone().map(DenseVector::from_vec),
            cadence: self.cadence,
            bits_per_coord: self.bits_per_coord,
            l_convention: if self.problem.appendix_l {
                LtildeConvention::SumSquare
            } else {
                LtildeConvention::MeanSquare
            },
        })
    }

    /// Shard the dataset and attach the configured regularization.
    pub fn build_problem(&self, data: Dataset) -> Result<ProblemSpec> {
        let shards = partition(
            &data,
            self.problem.workers,
            self.problem.overlap,
            self.problem.data_seed,
        )?;
        let prox = if self.problem.l1_weight > 0.0 {
            Prox::L1 {
                weight: self.problem.l1_weight,
            }
        } else {
            Prox::None
        };
        Ok(ProblemSpec {
            data,
            shards,
            l2: self.problem.mu,
            nonconvex: self.problem.nonconvex_weight,
            prox,
            mu: self.problem.mu,
        })
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "pl" => Ok(Mode::Pl),
        "kl" => Ok(Mode::Kl),
        "nonconvex" => Ok(Mode::Nonconvex),
        other => bail!("unknown mode {other:?} (expected pl, kl, or nonconvex)"),
    }
}

pub fn parse_algorithm(s: &str) -> Result<Algorithm> {
    match s {
        "ef-bv" | "efbv" => Ok(Algorithm::EfBv),
        "ef21" => Ok(Algorithm::Ef21),
        "diana" => Ok(Algorithm::Diana),
        other => bail!("unknown algorithm {other:?} (expected ef-bv, ef21, or diana)"),
    }
}

pub fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::EfBv => "ef-bv",
        Algorithm::Ef21 => "ef21",
        Algorithm::Diana => "diana",
    }
}

/// Parse a compressor family string such as "comp:1,56" or
/// "scaled:0.25:randk:2".
pub fn parse_family(s: &str) -> Result<Family> {
    let s = s.trim();
    if s == "identity" {
        return Ok(Family::Identity);
    }
    if let Some(rest) = s.strip_prefix("scaled:") {
        let (lambda_str, inner_str) = rest
            .split_once(':')
            .context("scaled:<lambda>:<inner family>")?;
        let lambda: f64 = lambda_str.parse().context("scaling factor")?;
        return Ok(Family::Scaled {
            inner: Box::new(parse_family(inner_str)?),
            lambda,
        });
    }
    let (name, args) = s
        .split_once(':')
        .with_context(|| format!("malformed compressor {s:?}"))?;
    let ints: Vec<usize> = args
        .split(',')
        .map(|a| a.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("compressor arguments in {s:?}"))?;
    match (name, ints.as_slice()) {
        ("randk", [k]) => Ok(Family::RandK { k: *k }),
        ("topk", [k]) => Ok(Family::TopK { k: *k }),
        ("mix", [k, k_extra]) => Ok(Family::Mix {
            k: *k,
            k_extra: *k_extra,
        }),
        ("comp", [k, k_top]) => Ok(Family::Comp {
            k: *k,
            k_top: *k_top,
        }),
        ("nice", [m]) => Ok(Family::NiceSampling { m: *m }),
        _ => bail!("unknown compressor {s:?}"),
    }
}

pub fn family_name(family: &Family) -> String {
    match family {
        Family::Identity => "identity".into(),
        Family::RandK { k } => format!("randk:{k}"),
        Family::TopK { k } => format!("topk:{k}"),
        Family::Mix { k, k_extra } => format!("mix:{k},{k_extra}"),
        Family::Comp { k, k_top } => format!("comp:{k},{k_top}"),
        Family::NiceSampling { m } => format!("nice:{m}"),
        Family::Scaled { inner, lambda } => format!("scaled:{lambda}:{}", family_name(inner)),
    }
}

/// Where the rows come from.
#[derive(Clone, Debug)]
pub enum DataSource {
    File { path: PathBuf, dim: Option<usize> },
    Synthetic { d: usize, rows: usize, sep: f64 },
}

impl DataSource {
    /// Build a source from the mutually exclusive `--dataset`/`--synthetic`
    /// flags.
    pub fn from_flags(
        dataset: Option<PathBuf>,
        dim: Option<usize>,
        synthetic: Option<String>,
        data_seed: u64,
    ) -> Result<(Self, u64)> {
        match (dataset, synthetic) {
            (Some(path), None) => Ok((DataSource::File { path, dim }, data_seed)),
            (None, Some(spec)) => {
                let parts: Vec<&str> = spec.split(',').collect();
                if parts.len() != 3 {
                    bail!("--synthetic expects d,N,separation (e.g. 20,200,0.5)");
                }
                Ok((
                    DataSource::Synthetic {
                        d: parts[0].trim().parse().context("synthetic d")?,
                        rows: parts[1].trim().parse().context("synthetic N")?,
                        sep: parts[2].trim().parse().context("synthetic separation")?,
                    },
                    data_seed,
                ))
            }
            (None, None) => bail!("provide --dataset PATH or --synthetic d,N,sep"),
            (Some(_), Some(_)) => bail!("--dataset and --synthetic are mutually exclusive"),
        }
    }

    pub fn load(&self, data_seed: u64) -> Result<Dataset> {
        match self {
            DataSource::File { path, dim } => {
                let file = File::open(path).with_context(|| format!("opening dataset {path:?}"))?;
                Ok(parse_libsvm(BufReader::new(file), *dim)?)
            }
            DataSource::Synthetic { d, rows, sep } => {
                Ok(synth_dataset(data_seed, *d, *rows, *sep)?)
            }
        }
    }
}
