//! The synchronous round loop.
//!
//! Each round, every worker compresses the difference between its fresh local
//! gradient and its control variate, the server averages the messages, both
//! sides advance the control variates by `lambda` times the update, the
//! server forms the gradient estimate with `nu`, and the model takes a
//! proximal step. EF21 is this loop at `nu = lambda` and DIANA at `nu = 1`;
//! there is no separate code path for them.
//!
//! Randomness is drawn from counter-based streams keyed by
//! `(master seed, worker, round)`, so a trace is a pure function of the
//! configuration and two configurations with equal constants produce
//! bitwise-identical traces.

use crate::certifier::Reference;
use crate::compressors::{
    CompressEnv, CompressorSpec, Dependence, Family, NiceSubset, DEFAULT_BITS_PER_COORD,
};
use crate::error::{Error, Result};
use crate::problems::{smoothness, LtildeConvention, ProblemSpec, Prox};
use crate::rng::DetRng;
use crate::tuning::{self, Algorithm, Mode, TuneResult};
use crate::vector::DenseVector;

/// Iterates whose norm exceeds this are treated as divergence.
const DIVERGENCE_NORM: f64 = 1e12;

/// Which configuration of the round loop to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgoChoice {
    Named(Algorithm),
    /// User-chosen scalings; the tuner recomputes all derived constants and
    /// rejects the pair if the residual factor reaches 1.
    Explicit { lambda: f64, nu: f64 },
}

/// Control-variate initialization policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HInit {
    #[default]
    Zeros,
    /// `h_i^0 = grad f_i(x^0)`: the round-0 residuals are exactly zero.
    LocalGradient,
}

/// Full description of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub compressor: CompressorSpec,
    pub dependence: Dependence,
    pub algorithm: AlgoChoice,
    /// Step-size override; clamped to the theorem bound with a warning.
    pub gamma: Option<f64>,
    /// Verbatim constants override, bypassing the tuner. Used when two runs
    /// must share every derived constant exactly.
    pub constants: Option<TuneResult>,
    pub mode: Mode,
    pub rounds: u64,
    pub seed: u64,
    pub h_init: HInit,
    /// Initial model; zeros when absent.
    pub x0: Option<DenseVector>,
    /// Full metrics are recorded every `cadence` rounds (and always at the
    /// first and last round).
    pub cadence: u64,
    pub bits_per_coord: u32,
    pub l_convention: LtildeConvention,
}

impl RunConfig {
    pub fn new(compressor: CompressorSpec, algorithm: AlgoChoice, mode: Mode, rounds: u64, seed: u64) -> Self {
        RunConfig {
            compressor,
            dependence: Dependence::Independent,
            algorithm,
            gamma: None,
            constants: None,
            mode,
            rounds,
            seed,
            h_init: HInit::Zeros,
            x0: None,
            cadence: 10,
            bits_per_coord: DEFAULT_BITS_PER_COORD,
            l_convention: LtildeConvention::MeanSquare,
        }
    }
}

/// Server-visible state of a run.
#[derive(Clone, Debug)]
pub struct EngineState {
    pub x: DenseVector,
    /// Per-worker control variates `h_i`.
    pub h_workers: Vec<DenseVector>,
    /// Server aggregate `h`, maintained incrementally.
    pub h_server: DenseVector,
    /// Last gradient estimate `g` formed by the server.
    pub g_last: DenseVector,
    pub t: u64,
    /// Cumulative wire bits across all workers.
    pub bits_total: u64,
    /// Running sum of `||grad f(x^t)||^2` over all completed rounds.
    pub grad_sq_sum: f64,
}

/// Metrics recorded at one instrumented round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    /// Cumulative wire bits sent per node (total divided by `n`).
    pub bits_per_node: f64,
    /// `f(x^t) + R(x^t) - f* - R*`.
    pub f_gap: f64,
    /// `||grad f(x^t)||^2`.
    pub grad_norm_sq: f64,
    /// Mode-appropriate Lyapunov value.
    pub lyapunov: f64,
    /// `(1/n) sum_i ||grad f_i(x^t) - h_i^t||^2`.
    pub control_residual: f64,
}

/// Result of a completed (or diverged) run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<RoundRecord>,
    pub tune: TuneResult,
    pub warning: Option<String>,
    pub state: EngineState,
    /// Set when the run was cut short by the divergence guard; the records
    /// collected so far are retained.
    pub failure: Option<String>,
}

/// Derive the constants a config asks for: named algorithm, explicit
/// scalings, or a verbatim override; then apply any step-size override.
pub fn resolve_constants(
    config: &RunConfig,
    n: usize,
    profile: &tuning::SmoothnessProfile,
) -> Result<(TuneResult, Option<String>)> {
    if let Some(constants) = config.constants {
        return Ok((constants, None));
    }
    let params = config.compressor.theoretical_params(n, config.dependence)?;
    let tune = match config.algorithm {
        AlgoChoice::Named(algorithm) => tuning::tune(&params, profile, algorithm, config.mode)?,
        AlgoChoice::Explicit { lambda, nu } => {
            tuning::tune_explicit(&params, profile, lambda, nu, config.mode)?
        }
    };
    match config.gamma {
        Some(gamma) => tuning::with_gamma_override(&tune, profile, gamma),
        None => Ok((tune, None)),
    }
}

/// Build the initial state from the configured policies.
pub fn init(config: &RunConfig, problem: &ProblemSpec) -> Result<EngineState> {
    let d = problem.dim();
    let n = problem.worker_count();
    let x = match &config.x0 {
        Some(x0) => {
            if x0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x0.len(),
                });
            }
            x0.clone()
        }
        None => DenseVector::zeros(d),
    };
    let h_workers: Vec<DenseVector> = match config.h_init {
        HInit::Zeros => vec![DenseVector::zeros(d); n],
        HInit::LocalGradient => (0..n)
            .map(|i| problem.local_gradient(i, &x))
            .collect::<Result<_>>()?,
    };
    let mut h_server = DenseVector::zeros(d);
    for h in &h_workers {
        h_server.add_scaled(h, 1.0);
    }
    h_server.scale(1.0 / n as f64);
    Ok(EngineState {
        x,
        h_workers,
        h_server,
        g_last: DenseVector::zeros(d),
        t: 0,
        bits_total: 0,
        grad_sq_sum: 0.0,
    })
}

/// Execute one round. Per-worker gradient and compression are pure given the
/// round streams; the server reduction runs in fixed worker order so the
/// result does not depend on scheduling.
pub fn step(
    state: &mut EngineState,
    config: &RunConfig,
    problem: &ProblemSpec,
    tune: &TuneResult,
) -> Result<()> {
    let n = problem.worker_count();
    let d = problem.dim();
    let inv_n = 1.0 / n as f64;

    let nice = match nice_m(&config.compressor.family) {
        Some(m) => {
            let mut shared = DetRng::round_shared(config.seed, state.t);
            Some(NiceSubset::draw(n, m, &mut shared))
        }
        None => None,
    };

    let mut d_mean = DenseVector::zeros(d);
    let mut grad_mean = DenseVector::zeros(d);
    let mut round_bits = 0u64;

    for i in 0..n {
        let grad = problem.local_gradient(i, &state.x)?;
        grad_mean.add_scaled(&grad, 1.0);
        let residual = grad.sub(&state.h_workers[i]);
        let mut rng = DetRng::worker_round(config.seed, i, state.t);
        let mut env = CompressEnv::solo(&mut rng).with_bits_per_coord(config.bits_per_coord);
        if let Some(ref subset) = nice {
            env = env.with_nice(subset, i);
        }
        let msg = config.compressor.compress(&residual, &mut env)?;
        msg.add_into(&mut state.h_workers[i], tune.lambda);
        msg.add_into(&mut d_mean, 1.0);
        round_bits += msg.wire_bits();
    }
    d_mean.scale(inv_n);
    grad_mean.scale(inv_n);

    // Server: g^{t+1} from the old aggregate, then advance the aggregate.
    let mut g = DenseVector::zeros(d);
    for j in 0..d {
        g[j] = state.h_server[j] + tune.nu * d_mean[j];
        state.h_server[j] += tune.lambda * d_mean[j];
    }

    let mut v = state.x.clone();
    v.add_scaled(&g, -tune.gamma);
    let next = problem.prox.apply(tune.gamma, &v)?;
    if !next.all_finite() || next.norm() > DIVERGENCE_NORM {
        return Err(Error::Divergence {
            round: state.t,
            gamma: tune.gamma,
            detail: "iterate left the admissible region".into(),
        });
    }

    state.grad_sq_sum += grad_mean.norm_sq();
    state.x = next;
    state.g_last = g;
    state.t += 1;
    state.bits_total += round_bits;
    Ok(())
}

/// Mode-appropriate Lyapunov value at the current state. With exact
/// aggregation (`theta = +inf`) the control-variate correction is absent.
pub fn lyapunov(
    state: &EngineState,
    problem: &ProblemSpec,
    tune: &TuneResult,
    reference: Option<&Reference>,
) -> Result<f64> {
    let reference = reference.ok_or_else(|| {
        Error::MissingReference("the Lyapunov value needs the optimal objective value".into())
    })?;
    let gap = match tune.mode {
        Mode::Pl | Mode::Nonconvex => problem.value(&state.x) - reference.f_star,
        Mode::Kl => problem.composite_value(&state.x) - reference.f_star - reference.r_star,
    };
    Ok(gap + correction_coeff(tune) * control_residual(state, problem)?)
}

fn correction_coeff(tune: &TuneResult) -> f64 {
    if tune.theta.is_infinite() {
        0.0
    } else {
        tune.gamma / (2.0 * tune.theta)
    }
}

fn control_residual(state: &EngineState, problem: &ProblemSpec) -> Result<f64> {
    let n = problem.worker_count();
    let mut total = 0.0;
    for i in 0..n {
        let grad = problem.local_gradient(i, &state.x)?;
        total += grad.dist_sq(&state.h_workers[i]);
    }
    Ok(total / n as f64)
}

/// Full metrics at the current state (one extra gradient pass per worker).
pub fn metrics(
    state: &EngineState,
    problem: &ProblemSpec,
    tune: &TuneResult,
    reference: &Reference,
) -> Result<RoundRecord> {
    let n = problem.worker_count();
    let f_gap =
        problem.composite_value(&state.x) - reference.f_star - reference.r_star;
    let grad_norm_sq = problem.gradient(&state.x)?.norm_sq();
    let control = control_residual(state, problem)?;
    let gap_for_lyapunov = match tune.mode {
        Mode::Pl | Mode::Nonconvex => problem.value(&state.x) - reference.f_star,
        Mode::Kl => f_gap,
    };
    Ok(RoundRecord {
        t: state.t,
        bits_per_node: state.bits_total as f64 / n as f64,
        f_gap,
        grad_norm_sq,
        lyapunov: gap_for_lyapunov + correction_coeff(tune) * control,
        control_residual: control,
    })
}

/// Drive the loop for `rounds` rounds, recording metrics at round 0, every
/// `cadence` rounds, and at the final round. The trace is deterministic given
/// the seed; divergence keeps the partial trace and sets `failure`.
pub fn run(config: &RunConfig, problem: &ProblemSpec, reference: &Reference) -> Result<RunOutput> {
    let n = problem.worker_count();
    if config.compressor.dim != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: config.compressor.dim,
        });
    }
    if config.cadence == 0 {
        return Err(Error::Config("metric cadence must be at least 1".into()));
    }
    if !matches!(problem.prox, Prox::None) && config.mode != Mode::Kl {
        return Err(Error::Config(
            "a composite regularizer requires the composite (KL) mode".into(),
        ));
    }
    config.compressor.validate(n)?;
    let profile = smoothness(problem, config.l_convention)?;
    let (tune, warning) = resolve_constants(config, n, &profile)?;
    run_with_constants(config, problem, reference, tune, warning)
}

/// As [`run`], with the constants already resolved.
pub fn run_with_constants(
    config: &RunConfig,
    problem: &ProblemSpec,
    reference: &Reference,
    tune: TuneResult,
    warning: Option<String>,
) -> Result<RunOutput> {
    let mut state = init(config, problem)?;
    let mut records = vec![metrics(&state, problem, &tune, reference)?];
    let mut failure = None;

    for _ in 0..config.rounds {
        if let Err(err) = step(&mut state, config, problem, &tune) {
            match err {
                Error::Divergence { .. } => {
                    failure = Some(err.to_string());
                    break;
                }
                other => return Err(other),
            }
        }
        if state.t % config.cadence == 0 || state.t == config.rounds {
            let record = metrics(&state, problem, &tune, reference)?;
            if !record.f_gap.is_finite() || record.f_gap > DIVERGENCE_NORM {
                failure = Some(
                    Error::Divergence {
                        round: state.t,
                        gamma: tune.gamma,
                        detail: "objective gap exploded".into(),
                    }
                    .to_string(),
                );
                records.push(record);
                break;
            }
            records.push(record);
        }
    }

    Ok(RunOutput {
        records,
        tune,
        warning,
        state,
        failure,
    })
}

fn nice_m(family: &Family) -> Option<usize> {
    match family {
        Family::NiceSampling { m } => Some(*m),
        Family::Scaled { inner, .. } => nice_m(inner),
        _ => None,
    }
}
