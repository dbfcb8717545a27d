//! The four subcommands: `tune`, `run`, `certify`, `table10`.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use efbv_core::certifier::{
    builtin_catalog, estimate_class_params, estimate_omega_av, reference_solution,
    REFERENCE_MAX_ITER, REFERENCE_TOL,
};
use efbv_core::engine::{self, AlgoChoice};
use efbv_core::problems::{smoothness, LtildeConvention};
use efbv_core::tuning::{self, Algorithm, Mode, SmoothnessProfile};
use efbv_core::{ClassParams, CompressorSpec, Dependence, Family};

use crate::config::{
    algorithm_name, family_name, parse_algorithm, parse_family, parse_mode, ConfigFile, DataSource,
};
use crate::report::{
    fmt17, summarize, trace_lines, tune_csv_line, tune_table, write_trace_csv, TuneRow,
    TUNE_CSV_HEADER,
};

/// The four reference dataset shapes used by `table10`: name, dimension.
pub const BUILTIN_SHAPES: [(&str, usize); 4] = [
    ("mushrooms", 112),
    ("phishing", 68),
    ("a9a", 123),
    ("w8a", 300),
];

fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>> {
    s.split(',').map(|a| parse_algorithm(a.trim())).collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().context("seed list"))
        .collect()
}

/// Derive one tuning-report row per algorithm. Without a smoothness profile
/// every row except `gamma` is still available (the derived constants are
/// data-free).
pub fn tune_rows(
    params: &ClassParams,
    algorithms: &[Algorithm],
    mode: Mode,
    profile: Option<&SmoothnessProfile>,
) -> Result<Vec<TuneRow>> {
    let placeholder = SmoothnessProfile {
        l_list: vec![1.0],
        l_tilde: 1.0,
        l: 1.0,
        mu: 1.0,
    };
    algorithms
        .iter()
        .map(|&algorithm| {
            let t = tuning::tune(params, profile.unwrap_or(&placeholder), algorithm, mode)?;
            Ok(TuneRow {
                algorithm,
                eta: params.eta,
                omega: params.omega,
                omega_av: params.omega_av,
                lambda: t.lambda,
                nu: t.nu,
                r: t.r,
                r_av: t.r_av,
                sqrt_ratio: t.sqrt_rav_over_r(),
                s_star: t.s,
                gamma: profile.map(|_| t.gamma),
            })
        })
        .collect()
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Ambient dimension (data-free mode; taken from the dataset otherwise).
    #[arg(long)]
    pub d: Option<usize>,
    /// Worker count.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Compressor family, e.g. comp:1,56.
    #[arg(long)]
    pub compressor: String,
    /// Comma-separated algorithms to report.
    #[arg(long, default_value = "ef-bv,ef21")]
    pub algorithms: String,
    #[arg(long, default_value = "pl")]
    pub mode: String,
    /// Gradient-domination constant (used for the rate; the step-size row
    /// needs a dataset).
    #[arg(long, default_value_t = 0.1)]
    pub mu: f64,
    /// LibSVM dataset path; enables the gamma row.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dimension override for the dataset parser.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Synthetic dataset spec d,N,separation; enables the gamma row.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Overlap factor for the partition (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub overlap: u8,
    /// Output directory for the CSV report.
    #[arg(long, env = "EFBV_OUT_DIR")]
    pub out: Option<PathBuf>,
}

pub fn cmd_tune(args: &TuneArgs) -> Result<()> {
    let algorithms = parse_algorithms(&args.algorithms)?;
    let mode = parse_mode(&args.mode)?;
    let family = parse_family(&args.compressor)?;

    let has_data = args.dataset.is_some() || args.synthetic.is_some();
    let (d, profile) = if has_data {
        let (source, data_seed) = DataSource::from_flags(
            args.dataset.clone(),
            args.dim,
            args.synthetic.clone(),
            args.data_seed.unwrap_or(0),
        )?;
        let data = source.load(data_seed)?;
        let d = data.dim();
        let shards = efbv_core::problems::partition(&data, args.n, args.overlap, data_seed)?;
        let problem = efbv_core::ProblemSpec::convex(data, shards, args.mu);
        let profile = smoothness(&problem, LtildeConvention::MeanSquare)?;
        (d, Some(profile))
    } else {
        let d = args
            .d
            .context("provide --d for a data-free report, or a dataset")?;
        (d, None)
    };

    let spec = CompressorSpec::new(d, family);
    let params = spec.theoretical_params(args.n, Dependence::Independent)?;
    let rows = tune_rows(&params, &algorithms, mode, profile.as_ref())?;

    println!(
        "compressor {} at d = {d}, n = {}",
        family_name(&spec.family),
        args.n
    );
    print!("{}", tune_table(&rows));
    if profile.is_none() {
        println!("note: gamma needs smoothness constants; provide --dataset or --synthetic");
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut csv = String::from(TUNE_CSV_HEADER);
        csv.push('\n');
        for row in &rows {
            csv.push_str(&tune_csv_line(row));
            csv.push('\n');
        }
        let path = dir.join("tune.csv");
        fs::write(&path, csv)?;
        println!("wrote {path:?}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for trace CSVs.
    #[arg(long, env = "EFBV_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated master seeds; defaults to the config's seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Run several algorithms side by side, overriding the config's.
    #[arg(long)]
    pub algorithms: Option<String>,
    /// LibSVM dataset path.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dimension override for the dataset parser.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Synthetic dataset spec d,N,separation.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Wire bits per transmitted coordinate.
    #[arg(long)]
    pub bits_per_coord: Option<u32>,
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = ConfigFile::load(&args.config)?;
    let out = args
        .out
        .clone()
        .context("provide --out DIR (or set EFBV_OUT_DIR)")?;
    fs::create_dir_all(&out)?;

    let (source, data_seed) = DataSource::from_flags(
        args.dataset.clone(),
        args.dim,
        args.synthetic.clone(),
        config.problem.data_seed,
    )?;
    let data = source.load(data_seed)?;
    let d = data.dim();
    let problem = config.build_problem(data)?;

    let mode = config.mode()?;
    let reference_iters = if mode == Mode::Nonconvex {
        (10 * config.rounds).max(10_000)
    } else {
        REFERENCE_MAX_ITER
    };
    let reference = reference_solution(&problem, REFERENCE_TOL, reference_iters)?;
    if !reference.converged && mode != Mode::Nonconvex {
        eprintln!(
            "warning: reference solve hit the iteration cap ({} iterations)",
            reference.iterations
        );
    }

    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![config.seed],
    };
    if seeds.is_empty() {
        bail!("seed list is empty");
    }
    let algo_override = args.algorithms.as_deref().map(parse_algorithms).transpose()?;

    let mut failures = Vec::new();
    let run_plans: Vec<(String, AlgoChoice)> = match algo_override {
        Some(list) => list
            .into_iter()
            .map(|a| (algorithm_name(a).to_string(), AlgoChoice::Named(a)))
            .collect(),
        None => vec![(config.algorithm.clone(), config.algorithm_choice()?)],
    };

    for (algo_name, choice) in &run_plans {
        let mut traces = Vec::new();
        for &seed in &seeds {
            let mut run_config = config.to_run_config(d, seed)?;
            run_config.algorithm = *choice;
            if let Some(bits) = args.bits_per_coord {
                run_config.bits_per_coord = bits;
            }
            let output = engine::run(&run_config, &problem, &reference)?;
            if let Some(warning) = &output.warning {
                eprintln!("warning: {warning}");
            }
            let path = out.join(format!("{algo_name}_seed{seed}.csv"));
            write_trace_csv(&path, &output.records)?;
            let last = output.records.last().expect("at least the initial record");
            println!(
                "{algo_name} seed {seed}: t = {}, f_gap = {}, bits/node = {}, gamma = {}{}",
                last.t,
                fmt17(last.f_gap),
                fmt17(last.bits_per_node),
                fmt17(output.tune.gamma),
                output
                    .failure
                    .as_deref()
                    .map(|f| format!(" [DIVERGED: {f}]"))
                    .unwrap_or_default()
            );
            if let Some(failure) = output.failure {
                failures.push(format!("{algo_name} seed {seed}: {failure}"));
            }
            traces.push(output.records);
        }
        let summary = summarize(&traces);
        let path = out.join(format!("summary_{algo_name}.csv"));
        fs::write(&path, trace_lines(&summary))?;
    }

    if !failures.is_empty() {
        bail!("{} run(s) diverged: {}", failures.len(), failures.join("; "));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Ambient dimension of the certification catalog.
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    /// Worker count for the averaged-variance checks.
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    /// Gaussian probes on top of the fixed adversarial shapes.
    #[arg(long, default_value_t = 5)]
    pub probes: usize,
    /// Monte Carlo draws per probe.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for the CSV report.
    #[arg(long, env = "EFBV_OUT_DIR")]
    pub out: Option<PathBuf>,
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<()> {
    let catalog = builtin_catalog(args.d, args.workers);
    let mut csv = String::from(
        "compressor,eta,omega,omega_av,eta_hat,omega_hat,omega_av_hat,violation,verdict\n",
    );
    let mut all_pass = true;

    println!(
        "certifying {} compressors at d = {}, n = {}, {} samples",
        catalog.len(),
        args.d,
        args.workers,
        args.samples
    );
    for (name, spec) in &catalog {
        let claimed = spec.theoretical_params(args.workers, Dependence::Independent)?;
        let report = estimate_class_params(spec, args.workers, args.probes, args.samples, args.seed)?;
        let specs = vec![spec.clone(); args.workers];
        let av = estimate_omega_av(&specs, args.probes.min(3), args.samples, args.seed)?;
        let pass = report.pass && av.pass;
        all_pass &= pass;
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{name:<18} eta {:<9.3e} <= {:<9.3e}  omega {:<9.3e} <= {:<9.3e}  omega_av {:<9.3e} <= {:<9.3e}  {verdict}",
            report.eta_hat, claimed.eta, report.omega_hat, claimed.omega, av.omega_av_hat, claimed.omega_av
        );
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{verdict}\n",
            fmt17(claimed.eta),
            fmt17(claimed.omega),
            fmt17(claimed.omega_av),
            fmt17(report.eta_hat),
            fmt17(report.omega_hat),
            fmt17(av.omega_av_hat),
            fmt17(report.max_violation.max(av.max_violation)),
        ));
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let path = dir.join("certify.csv");
        fs::write(&path, csv)?;
        println!("wrote {path:?}");
    }
    if !all_pass {
        bail!("certification FAILED for at least one compressor");
    }
    println!("all claims certified");
    Ok(())
}

#[derive(Args, Debug)]
pub struct Table10Args {
    /// Output directory for the CSV report.
    #[arg(long, env = "EFBV_OUT_DIR")]
    pub out: Option<PathBuf>,
}

/// One configuration of the built-in parameter table.
pub struct Table10Entry {
    pub dataset: String,
    pub d: usize,
    pub k: usize,
    pub rows: Vec<TuneRow>,
}

/// Compute the built-in parameter table: the four reference dataset shapes
/// at n = 1000 with comp-(k, floor(d/2)) for k in {1, 2}.
pub fn table10_rows() -> Result<Vec<Table10Entry>> {
    let mut out = Vec::new();
    for (name, d) in BUILTIN_SHAPES {
        for k in [1usize, 2] {
            let k_top = d / 2;
            let spec = CompressorSpec::new(d, Family::Comp { k, k_top });
            let params = spec.theoretical_params(1000, Dependence::Independent)?;
            let rows = tune_rows(
                &params,
                &[Algorithm::EfBv, Algorithm::Ef21],
                Mode::Pl,
                None,
            )?;
            out.push(Table10Entry {
                dataset: name.to_string(),
                d,
                k,
                rows,
            });
        }
    }
    Ok(out)
}

pub fn cmd_table10(args: &Table10Args) -> Result<()> {
    let mut csv = format!("dataset,d,k,k_top,{TUNE_CSV_HEADER}\n");
    for entry in table10_rows()? {
        let (name, d, k) = (&entry.dataset, entry.d, entry.k);
        println!("== {name}: d = {d}, comp-({k},{}), n = 1000", d / 2);
        print!("{}", tune_table(&entry.rows));
        println!("(gamma needs the dataset's smoothness constants; see `tune --dataset`)");
        println!();
        for row in &entry.rows {
            csv.push_str(&format!("{name},{d},{k},{},{}\n", d / 2, tune_csv_line(row)));
        }
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let path = dir.join("table10.csv");
        fs::write(&path, csv)?;
        println!("wrote {path:?}");
    }
    Ok(())
}
