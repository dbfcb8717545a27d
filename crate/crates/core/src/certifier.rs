//! Independent oracles for the closed-form compressor parameters and for
//! reference solutions.
//!
//! Three kinds of evidence are produced here:
//!
//! * [`enumerate_exact`] walks the full outcome space of a randomized
//!   compressor at small dimension and returns exact moments. It reimplements
//!   the operator definitions directly from the index subsets, sharing no
//!   code with the sampling path it is used to check.
//! * [`estimate_class_params`] and [`estimate_omega_av`] are Monte Carlo
//!   estimators of the relative bias, variance, and average variance, with
//!   batch-mean standard errors. A claim passes when the estimate does not
//!   exceed it by more than four standard errors.
//! * [`reference_solution`] runs deterministic proximal gradient descent to
//!   high accuracy to obtain `(x*, f*, R*)`, or a best-seen objective value
//!   in the nonconvex case.

use crate::compressors::{ClassParams, CompressEnv, CompressorSpec, Family, NiceSubset};
use crate::error::{Error, Result};
use crate::problems::{smoothness, LtildeConvention, ProblemSpec};
use crate::rng::{domain, DetRng};
use crate::vector::DenseVector;

/// Largest outcome space [`enumerate_exact`] is willing to walk.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Floating-point allowance added on top of the statistical tolerance, so
/// that deterministic compressors sitting exactly on their bound pass.
const FP_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// Exact moments of `C(x)` computed by weighted enumeration of the outcome
/// space.
#[derive(Clone, Debug)]
pub struct ExactMoments {
    pub mean: DenseVector,
    /// `E ||C(x) - E C(x)||^2`
    pub variance: f64,
    /// `||E C(x) - x||^2`
    pub sq_bias: f64,
    /// `E ||C(x) - x||^2`
    pub mse: f64,
    pub outcomes: u64,
}

/// Enumerate every equally likely index subset of the compressor and return
/// exact mean and centered second moment. `n` matters only for nice sampling.
pub fn enumerate_exact(spec: &CompressorSpec, n: usize, x: &DenseVector) -> Result<ExactMoments> {
    spec.validate(n)?;
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: x.len(),
        });
    }
    let count = outcome_count(&spec.family, spec.dim)?;

    // Pass 1: mean and E||C - x||^2.
    let mut mean = DenseVector::zeros(spec.dim);
    let mut mse = 0.0;
    for_each_outcome(&spec.family, spec.dim, n, x, &mut |w, outcome| {
        mean.add_scaled(outcome, w);
        mse += w * outcome.dist_sq(x);
    })?;

    // Pass 2: centered second moment about the exact mean.
    let mut variance = 0.0;
    for_each_outcome(&spec.family, spec.dim, n, x, &mut |w, outcome| {
        variance += w * outcome.dist_sq(&mean);
    })?;

    Ok(ExactMoments {
        sq_bias: mean.dist_sq(x),
        mean,
        variance,
        mse,
        outcomes: count,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

fn outcome_count(family: &Family, d: usize) -> Result<u64> {
    let raw: u128 = match *family {
        Family::Identity | Family::TopK { .. } => 1,
        Family::RandK { k } => binomial(d, k),
        Family::Mix { k, k_extra } => binomial(d - k, k_extra),
        Family::Comp { k, k_top } => binomial(k_top, k),
        Family::NiceSampling { .. } => 2,
        Family::Scaled { ref inner, .. } => return outcome_count(inner, d),
    };
    if raw > ENUMERATION_LIMIT as u128 {
        return Err(Error::TooManyOutcomes {
            outcomes: raw,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(raw as u64)
}

/// Largest-magnitude index selection with the same lower-index tie rule the
/// operators use, reimplemented locally so the oracle shares no code with
/// the sampling path.
fn top_set(x: &DenseVector, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then_with(|| a.cmp(&b)));
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    top
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next lexicographic k-subset of 0..n.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn for_each_outcome(
    family: &Family,
    d: usize,
    n: usize,
    x: &DenseVector,
    visit: &mut dyn FnMut(f64, &DenseVector),
) -> Result<()> {
    match *family {
        Family::Identity => {
            visit(1.0, x);
        }
        Family::RandK { k } => {
            let count = binomial(d, k) as f64;
            let w = 1.0 / count;
            let scale = d as f64 / k as f64;
            let mut buf = DenseVector::zeros(d);
            for_each_subset(d, k, &mut |subset| {
                for v in buf.as_mut_slice() {
                    *v = 0.0;
                }
                for &i in subset {
                    buf[i] = scale * x[i];
                }
                visit(w, &buf);
            });
        }
        Family::TopK { k } => {
            let mut buf = DenseVector::zeros(d);
            for i in top_set(x, k) {
                buf[i] = x[i];
            }
            visit(1.0, &buf);
        }
        Family::Mix { k, k_extra } => {
            let top = top_set(x, k);
            let rest: Vec<usize> = (0..d).filter(|i| !top.contains(i)).collect();
            let w = 1.0 / binomial(rest.len(), k_extra) as f64;
            let mut buf = DenseVector::zeros(d);
            for_each_subset(rest.len(), k_extra, &mut |subset| {
                for v in buf.as_mut_slice() {
                    *v = 0.0;
                }
                for &i in &top {
                    buf[i] = x[i];
                }
                for &p in subset {
                    buf[rest[p]] = x[rest[p]];
                }
                visit(w, &buf);
            });
        }
        Family::Comp { k, k_top } => {
            let top = top_set(x, k_top);
            let w = 1.0 / binomial(k_top, k) as f64;
            let scale = k_top as f64 / k as f64;
            let mut buf = DenseVector::zeros(d);
            for_each_subset(k_top, k, &mut |subset| {
                for v in buf.as_mut_slice() {
                    *v = 0.0;
                }
                for &p in subset {
                    buf[top[p]] = scale * x[top[p]];
                }
                visit(w, &buf);
            });
        }
        Family::NiceSampling { m } => {
            // Marginal law of one worker under the shared subset: included
            // with probability m/n.
            let p_in = m as f64 / n as f64;
            let mut buf = x.clone();
            buf.scale(n as f64 / m as f64);
            visit(p_in, &buf);
            visit(1.0 - p_in, &DenseVector::zeros(d));
        }
        Family::Scaled { ref inner, lambda } => {
            let mut scaled = DenseVector::zeros(d);
            for_each_outcome(inner, d, n, x, &mut |w, outcome| {
                scaled
                    .as_mut_slice()
                    .iter_mut()
                    .zip(outcome.iter())
                    .for_each(|(s, &v)| *s = lambda * v);
                visit(w, &scaled);
            })?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation
// ---------------------------------------------------------------------------

/// Anything whose bias/variance can be certified by sampling. The production
/// implementation is [`MarginalSampler`]; tests plug in deliberately broken
/// operators as negative controls.
pub trait StochasticOperator {
    fn dim(&self) -> usize;
    fn sample(&self, x: &DenseVector, rng: &mut DetRng) -> Result<DenseVector>;
}

/// Samples one worker's compressor; for nice sampling it plays the driver and
/// draws a fresh participation subset per call, which realizes the correct
/// marginal law.
pub struct MarginalSampler<'a> {
    pub spec: &'a CompressorSpec,
    pub n: usize,
}

impl StochasticOperator for MarginalSampler<'_> {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn sample(&self, x: &DenseVector, rng: &mut DetRng) -> Result<DenseVector> {
        if uses_nice(&self.spec.family) {
            let m = nice_m(&self.spec.family).unwrap();
            let nice = NiceSubset::draw(self.n, m, rng);
            let mut env = CompressEnv::solo(rng).with_nice(&nice, 0);
            Ok(self.spec.compress(x, &mut env)?.densify())
        } else {
            Ok(self.spec.compress(x, &mut CompressEnv::solo(rng))?.densify())
        }
    }
}

fn uses_nice(family: &Family) -> bool {
    match family {
        Family::NiceSampling { .. } => true,
        Family::Scaled { inner, .. } => uses_nice(inner),
        _ => false,
    }
}

fn nice_m(family: &Family) -> Option<usize> {
    match family {
        Family::NiceSampling { m } => Some(*m),
        Family::Scaled { inner, .. } => nice_m(inner),
        _ => None,
    }
}

/// Result of a Monte Carlo certification of one compressor.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    /// Worst-case empirical relative bias over the probes.
    pub eta_hat: f64,
    /// Worst-case empirical relative variance over the probes.
    pub omega_hat: f64,
    /// Filled in by the averaged-variance estimator when run.
    pub omega_av_hat: Option<f64>,
    pub samples: usize,
    pub probe_count: usize,
    /// Worst signed slack `estimate - claim - 4*SE` over probes and both
    /// certified quantities (bias is compared on the squared scale);
    /// `<= 0` up to floating-point slack means the claim holds.
    pub max_violation: f64,
    pub pass: bool,
}

/// Probe inputs: known extremal shapes first (one-hot, uniform magnitude,
/// geometric decay) so the bounds are exercised near equality, then random
/// Gaussian probes.
fn probe_vectors(d: usize, gaussian_probes: usize, seed: u64) -> Vec<DenseVector> {
    let mut probes = Vec::with_capacity(gaussian_probes + 3);
    let mut one_hot = DenseVector::zeros(d);
    one_hot[0] = 1.0;
    probes.push(one_hot);
    probes.push(DenseVector::from_vec(
        (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
    ));
    probes.push(DenseVector::from_vec(
        (0..d).map(|i| 0.7f64.powi(i as i32)).collect(),
    ));
    let mut rng = DetRng::from_key(&[seed, domain::CERT_PROBE]);
    for _ in 0..gaussian_probes {
        probes.push(DenseVector::from_vec(
            (0..d).map(|_| rng.next_normal()).collect(),
        ));
    }
    probes
}

struct BatchMoments {
    mean: DenseVector,
    m2: f64,
    count: usize,
}

impl BatchMoments {
    fn new(d: usize) -> Self {
        BatchMoments {
            mean: DenseVector::zeros(d),
            m2: 0.0,
            count: 0,
        }
    }

    /// Welford update with a vector mean and a scalar total second moment.
    fn push(&mut self, sample: &DenseVector) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        let mut cross = 0.0;
        for (m, &v) in self.mean.as_mut_slice().iter_mut().zip(sample.iter()) {
            let delta = v - *m;
            *m += delta * inv;
            cross += delta * (v - *m);
        }
        self.m2 += cross;
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Unbiased estimate of the squared bias `||E C - x||^2`, correcting the
    /// sampling noise of the batch mean. Can be slightly negative.
    fn sq_bias(&self, x: &DenseVector) -> f64 {
        self.mean.dist_sq(x) - self.variance() / self.count as f64
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Certify a claimed `(eta, omega)` for an arbitrary stochastic operator.
pub fn estimate_operator<O: StochasticOperator>(
    op: &O,
    claimed: &ClassParams,
    gaussian_probes: usize,
    samples: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if samples < 100 {
        return Err(Error::Config(format!("need at least 100 samples, got {samples}")));
    }
    let d = op.dim();
    let probes = probe_vectors(d, gaussian_probes, seed);
    let batches = 20usize.min(samples / 50).max(2);
    let batch_size = samples / batches;

    let mut eta_hat: f64 = 0.0;
    let mut omega_hat: f64 = 0.0;
    let mut max_violation = f64::NEG_INFINITY;

    for (p_idx, x) in probes.iter().enumerate() {
        let norm_sq = x.norm_sq();
        if norm_sq == 0.0 {
            continue; // zero probes carry no information about relative bounds
        }
        let mut sq_bias_batches = Vec::with_capacity(batches);
        let mut var_batches = Vec::with_capacity(batches);
        for b in 0..batches {
            let mut acc = BatchMoments::new(d);
            let mut rng =
                DetRng::from_key(&[seed, domain::CERT_SAMPLE, p_idx as u64, b as u64]);
            for _ in 0..batch_size {
                let sample = op.sample(x, &mut rng)?;
                acc.push(&sample);
            }
            sq_bias_batches.push(acc.sq_bias(x) / norm_sq);
            var_batches.push(acc.variance() / norm_sq);
        }
        let (bias_sq, bias_se) = mean_and_se(&sq_bias_batches);
        let (var, var_se) = mean_and_se(&var_batches);

        eta_hat = eta_hat.max(bias_sq.max(0.0).sqrt());
        omega_hat = omega_hat.max(var);
        let eta_sq_claim = claimed.eta * claimed.eta;
        max_violation = max_violation
            .max(bias_sq - eta_sq_claim - 4.0 * bias_se)
            .max(var - claimed.omega - 4.0 * var_se);
    }

    let tol = FP_SLACK * (1.0 + claimed.omega.max(1.0));
    Ok(EstimateReport {
        eta_hat,
        omega_hat,
        omega_av_hat: None,
        samples: batch_size * batches,
        probe_count: probes.len(),
        max_violation,
        pass: max_violation <= tol,
    })
}

/// Certify the closed-form `(eta, omega)` of a compressor spec by sampling
/// its own compression path.
pub fn estimate_class_params(
    spec: &CompressorSpec,
    n: usize,
    gaussian_probes: usize,
    samples: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let claimed = spec.theoretical_params(n, crate::compressors::Dependence::Independent)?;
    let sampler = MarginalSampler { spec, n };
    estimate_operator(&sampler, &claimed, gaussian_probes, samples, seed)
}

/// Result of estimating the average relative variance of `n` compressors.
#[derive(Clone, Debug)]
pub struct OmegaAvEstimate {
    /// Worst-case empirical ratio over probe tuples.
    pub omega_av_hat: f64,
    /// Standard error of the worst probe's estimate.
    pub se: f64,
    pub claimed: f64,
    pub samples: usize,
    pub probe_count: usize,
    pub max_violation: f64,
    pub pass: bool,
}

/// Estimate the constant bounding
/// `E || (1/n) sum_i (C_i(x_i) - E C_i(x_i)) ||^2 <= (omega_av / n) sum_i ||x_i||^2`
/// over probe tuples. Per-worker expectations come from exhaustive
/// enumeration, so the estimator is single-pass and unbiased. Nice-sampling
/// workers share one subset per draw; all other families draw independently.
pub fn estimate_omega_av(
    specs: &[CompressorSpec],
    gaussian_probes: usize,
    samples: usize,
    seed: u64,
) -> Result<OmegaAvEstimate> {
    let n = specs.len();
    if n == 0 {
        return Err(Error::Config("need at least one compressor".into()));
    }
    let d = specs[0].dim;
    if specs.iter().any(|s| s.dim != d) {
        return Err(Error::Config("all compressors must share one dimension".into()));
    }
    for spec in specs {
        spec.validate(n)?;
    }
    let joint = uses_nice(&specs[0].family);
    if specs.iter().any(|s| uses_nice(&s.family) != joint) {
        return Err(Error::Config(
            "cannot mix nice sampling with other families in one round".into(),
        ));
    }
    let claimed = specs[0]
        .theoretical_params(n, crate::compressors::Dependence::Independent)?
        .omega_av;

    // Probe tuples: a shared uniform-magnitude vector (the extremal input for
    // the independent case), then Gaussian tuples.
    let mut tuples: Vec<Vec<DenseVector>> = Vec::new();
    let uniform = DenseVector::from_vec(
        (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
    );
    tuples.push(vec![uniform; n]);
    let mut rng = DetRng::from_key(&[seed, domain::CERT_PROBE, 1]);
    for _ in 0..gaussian_probes {
        tuples.push(
            (0..n)
                .map(|_| DenseVector::from_vec((0..d).map(|_| rng.next_normal()).collect()))
                .collect(),
        );
    }

    let batches = 20usize.min(samples / 50).max(2);
    let batch_size = samples / batches;

    let mut worst = f64::NEG_INFINITY;
    let mut worst_se = 0.0;
    let mut max_violation = f64::NEG_INFINITY;

    for (t_idx, tuple) in tuples.iter().enumerate() {
        let denom: f64 = tuple.iter().map(|x| x.norm_sq()).sum::<f64>() / n as f64;
        if denom == 0.0 {
            continue;
        }
        let means: Vec<DenseVector> = specs
            .iter()
            .zip(tuple.iter())
            .map(|(spec, x)| enumerate_exact(spec, n, x).map(|m| m.mean))
            .collect::<Result<_>>()?;

        let mut batch_means = Vec::with_capacity(batches);
        for b in 0..batches {
            let mut sum_q = 0.0;
            for s in 0..batch_size {
                let draw = (b * batch_size + s) as u64;
                let mut y = DenseVector::zeros(d);
                let nice = if joint {
                    let m = nice_m(&specs[0].family).unwrap();
                    let mut shared =
                        DetRng::from_key(&[seed, domain::NICE_ROUND, t_idx as u64, draw]);
                    Some(NiceSubset::draw(n, m, &mut shared))
                } else {
                    None
                };
                for (i, (spec, x)) in specs.iter().zip(tuple.iter()).enumerate() {
                    let mut rng = DetRng::from_key(&[
                        seed,
                        domain::CERT_SAMPLE,
                        t_idx as u64,
                        draw,
                        i as u64,
                    ]);
                    let mut env = CompressEnv::solo(&mut rng);
                    if let Some(ref subset) = nice {
                        env = env.with_nice(subset, i);
                    }
                    let msg = spec.compress(x, &mut env)?;
                    msg.add_into(&mut y, 1.0 / n as f64);
                    y.add_scaled(&means[i], -1.0 / n as f64);
                }
                sum_q += y.norm_sq();
            }
            batch_means.push(sum_q / batch_size as f64 / denom);
        }
        let (ratio, se) = mean_and_se(&batch_means);
        if ratio > worst {
            worst = ratio;
            worst_se = se;
        }
        max_violation = max_violation.max(ratio - claimed - 4.0 * se);
    }

    let tol = FP_SLACK * (1.0 + claimed.max(1.0));
    Ok(OmegaAvEstimate {
        omega_av_hat: worst,
        se: worst_se,
        claimed,
        samples: batch_size * batches,
        probe_count: tuples.len(),
        max_violation,
        pass: max_violation <= tol,
    })
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

/// A high-accuracy solution of a problem: minimizer, optimal smooth value,
/// and optimal composite value. In nonconvex mode `f_star` is the smallest
/// objective value seen along a long plain gradient run.
#[derive(Clone, Debug)]
pub struct Reference {
    pub x_star: DenseVector,
    pub f_star: f64,
    pub r_star: f64,
    pub iterations: u64,
    pub converged: bool,
}

pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: u64 = 1_000_000;

/// Deterministic proximal gradient descent with step `1/L` until the
/// prox-gradient mapping norm `||x_{t+1} - x_t|| / gamma` falls below `tol`.
pub fn reference_solution(problem: &ProblemSpec, tol: f64, max_iter: u64) -> Result<Reference> {
    let profile = smoothness(problem, LtildeConvention::MeanSquare)?;
    let gamma = 1.0 / profile.l;
    let track_min = problem.nonconvex != 0.0;

    let mut x = DenseVector::zeros(problem.dim());
    let mut best_f = problem.value(&x);
    let mut best_x = x.clone();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let g = problem.gradient(&x)?;
        let mut v = x.clone();
        v.add_scaled(&g, -gamma);
        let next = problem.prox.apply(gamma, &v)?;
        let mapping = next.dist_sq(&x).sqrt() / gamma;
        x = next;
        iterations += 1;
        if track_min {
            let f = problem.value(&x);
            if f < best_f {
                best_f = f;
                best_x = x.clone();
            }
        }
        if mapping <= tol {
            converged = true;
            break;
        }
    }

    let (x_star, f_star) = if track_min {
        (best_x, best_f)
    } else {
        let f = problem.value(&x);
        (x, f)
    };
    let r_star = problem.prox.value(&x_star);
    Ok(Reference {
        x_star,
        f_star,
        r_star,
        iterations,
        converged,
    })
}

/// The built-in certification catalog: one spec per family at dimension `d`,
/// exercising scaling, mixtures, compositions, and joint participation.
pub fn builtin_catalog(d: usize, n: usize) -> Vec<(String, CompressorSpec)> {
    let quarter = (d / 4).max(1);
    let half = (d / 2).max(1);
    let m = (n / 4).max(1);
    vec![
        ("identity".into(), CompressorSpec::new(d, Family::Identity)),
        ("rand-1".into(), CompressorSpec::new(d, Family::RandK { k: 1 })),
        (
            format!("rand-{quarter}"),
            CompressorSpec::new(d, Family::RandK { k: quarter }),
        ),
        ("top-1".into(), CompressorSpec::new(d, Family::TopK { k: 1 })),
        (
            format!("top-{quarter}"),
            CompressorSpec::new(d, Family::TopK { k: quarter }),
        ),
        (
            format!("mix-({quarter},{quarter})"),
            CompressorSpec::new(
                d,
                Family::Mix {
                    k: quarter,
                    k_extra: quarter,
                },
            ),
        ),
        (
            format!("comp-(1,{half})"),
            CompressorSpec::new(d, Family::Comp { k: 1, k_top: half }),
        ),
        (
            format!("comp-({quarter},{half})"),
            CompressorSpec::new(
                d,
                Family::Comp {
                    k: quarter,
                    k_top: half,
                },
            ),
        ),
        (
            format!("nice-{m}"),
            CompressorSpec::new(d, Family::NiceSampling { m }),
        ),
        (
            "scaled-rand-1".into(),
            CompressorSpec::new(
                d,
                Family::Scaled {
                    inner: Box::new(Family::RandK { k: 1 }),
                    lambda: 1.0 / d as f64,
                },
            ),
        ),
    ]
}
