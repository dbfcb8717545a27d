//! Compression operators and their closed-form class parameters.
//!
//! A compressor maps `x in R^d` to a cheaper-to-transmit surrogate. Each
//! family has closed-form class parameters `(eta, omega, omega_av)`: the
//! relative bias `||E C(x) - x|| <= eta ||x||`, the relative variance
//! `E ||C(x) - E C(x)||^2 <= omega ||x||^2`, and the average relative
//! variance after server-side averaging over `n` workers.
//!
//! Randomized families draw from an externally supplied [`DetRng`] stream so
//! that draws are a pure function of `(master seed, worker, round)`.
//! Deterministic families (top-k) consume no randomness.

use crate::error::{Error, Result};
use crate::rng::DetRng;
use crate::vector::DenseVector;

/// Wire size of one transmitted coordinate (index + value), in bits.
pub const DEFAULT_BITS_PER_COORD: u32 = 64;

/// How the `n` per-worker compressors are coupled when computing `omega_av`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dependence {
    /// Mutually independent draws: `omega_av = omega / n`.
    Independent,
    /// One shared participation subset per round (nice sampling only).
    JointNice,
}

/// Compressor family plus its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Identity,
    /// Keep `k` uniformly random coordinates, scaled by `d/k`.
    RandK { k: usize },
    /// Keep the `k` largest-magnitude coordinates verbatim.
    TopK { k: usize },
    /// Keep the top `k` verbatim plus `k_extra` uniformly random others
    /// verbatim.
    Mix { k: usize, k_extra: usize },
    /// Among the top `k_top`, keep `k` uniformly random ones scaled by
    /// `k_top/k`.
    Comp { k: usize, k_top: usize },
    /// Round-shared partial participation: output `(n/m) x` when the worker is
    /// in the round's subset, zero otherwise.
    NiceSampling { m: usize },
    /// `lambda` times the inner compressor's output; the scaling is applied by
    /// the receiver, so the wire carries the inner message only.
    Scaled { inner: Box<Family>, lambda: f64 },
}

/// A compressor family together with the ambient dimension it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressorSpec {
    pub dim: usize,
    pub family: Family,
}

/// Class parameters `(eta, omega, omega_av)` of a compressor family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassParams {
    /// Relative bias, in `[0, 1)`.
    pub eta: f64,
    /// Relative variance, `>= 0`.
    pub omega: f64,
    /// Average relative variance after aggregation, in `[0, omega]`.
    pub omega_av: f64,
}

impl ClassParams {
    pub fn new(eta: f64, omega: f64, omega_av: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Config(format!("eta = {eta} must lie in [0, 1)")));
        }
        if omega < 0.0 || omega_av < 0.0 || omega_av > omega + 1e-12 {
            return Err(Error::Config(format!(
                "variances must satisfy 0 <= omega_av <= omega, got omega = {omega}, omega_av = {omega_av}"
            )));
        }
        Ok(ClassParams {
            eta,
            omega,
            omega_av,
        })
    }
}

/// The round-shared participation subset for nice sampling, drawn once per
/// round by the driver and handed to every worker's compressor.
#[derive(Clone, Debug)]
pub struct NiceSubset {
    members: Vec<bool>,
    m: usize,
}

impl NiceSubset {
    /// Draw a uniformly random `m`-subset of the `n` workers from a
    /// round-level stream.
    pub fn draw(n: usize, m: usize, rng: &mut DetRng) -> Self {
        debug_assert!(m >= 1 && m <= n);
        let mut members = vec![false; n];
        for i in rng.subset(n, m) {
            members[i] = true;
        }
        NiceSubset { members, m }
    }

    pub fn contains(&self, worker: usize) -> bool {
        self.members[worker]
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Per-call compression context: the worker's random stream, plus the
/// round-shared state a joint family needs.
pub struct CompressEnv<'a> {
    pub rng: &'a mut DetRng,
    pub nice: Option<&'a NiceSubset>,
    pub worker: usize,
    pub bits_per_coord: u32,
}

impl<'a> CompressEnv<'a> {
    /// Context for a standalone compressor (no round-shared state).
    pub fn solo(rng: &'a mut DetRng) -> Self {
        CompressEnv {
            rng,
            nice: None,
            worker: 0,
            bits_per_coord: DEFAULT_BITS_PER_COORD,
        }
    }

    pub fn with_nice(mut self, nice: &'a NiceSubset, worker: usize) -> Self {
        self.nice = Some(nice);
        self.worker = worker;
        self
    }

    pub fn with_bits_per_coord(mut self, bits: u32) -> Self {
        self.bits_per_coord = bits;
        self
    }
}

/// The compressed payload a worker sends: sparse index-value pairs plus wire
/// accounting. `scale` is a receiver-side multiplier (1 for unscaled
/// families); scaled compressors transmit the inner entries unscaled, so the
/// wire size counts the inner message only.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMessage {
    dim: usize,
    entries: Vec<(u32, f64)>,
    scale: f64,
    wire_bits: u64,
}

impl SparseMessage {
    /// Build a message from entries with strictly increasing indices; entries
    /// with value exactly zero are dropped so a zero input compresses to an
    /// empty message.
    pub fn new(dim: usize, entries: Vec<(u32, f64)>, bits_per_coord: u32) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(i, _)| (i as usize) < dim));
        let entries: Vec<(u32, f64)> = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        let wire_bits = entries.len() as u64 * bits_per_coord as u64;
        SparseMessage {
            dim,
            entries,
            scale: 1.0,
            wire_bits,
        }
    }

    pub fn empty(dim: usize) -> Self {
        SparseMessage {
            dim,
            entries: Vec::new(),
            scale: 1.0,
            wire_bits: 0,
        }
    }

    /// Sparsify a dense vector (keeps nonzero coordinates).
    pub fn from_dense(x: &DenseVector, bits_per_coord: u32) -> Self {
        let entries = x
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        SparseMessage::new(x.len(), entries, bits_per_coord)
    }

    /// Apply a receiver-side scaling factor (composes multiplicatively).
    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn wire_bits(&self) -> u64 {
        self.wire_bits
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Receiver-side reconstruction: the mathematical output of the operator.
    pub fn densify(&self) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim);
        for &(i, v) in &self.entries {
            out[i as usize] = self.scale * v;
        }
        out
    }

    /// `target += coeff * densify()` without materializing the dense vector.
    pub fn add_into(&self, target: &mut DenseVector, coeff: f64) {
        debug_assert_eq!(target.len(), self.dim);
        let c = coeff * self.scale;
        for &(i, v) in &self.entries {
            target[i as usize] += c * v;
        }
    }
}

/// Indices of the `k` largest-magnitude coordinates, preferring lower indices
/// among equal magnitudes, returned sorted by index.
fn top_indices(x: &DenseVector, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].abs()
            .total_cmp(&x[a].abs())
            .then_with(|| a.cmp(&b))
    });
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    top
}

impl CompressorSpec {
    pub fn new(dim: usize, family: Family) -> Self {
        CompressorSpec { dim, family }
    }

    /// Check family bounds against the ambient dimension and worker count.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("ambient dimension must be positive".into()));
        }
        if n == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        validate_family(&self.family, self.dim, n)
    }

    /// Apply the operator to `x`, producing the message that crosses the
    /// simulated wire.
    pub fn compress(&self, x: &DenseVector, env: &mut CompressEnv) -> Result<SparseMessage> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        compress_family(&self.family, self.dim, x, env)
    }

    /// Closed-form class parameters `(eta, omega, omega_av)` for `n` workers.
    pub fn theoretical_params(&self, n: usize, dependence: Dependence) -> Result<ClassParams> {
        self.validate(n)?;
        family_params(&self.family, self.dim, n, dependence)
    }
}

fn validate_family(family: &Family, d: usize, n: usize) -> Result<()> {
    match *family {
        Family::Identity => Ok(()),
        Family::RandK { k } | Family::TopK { k } => {
            if k == 0 || k > d {
                Err(Error::Config(format!("k = {k} must satisfy 1 <= k <= d = {d}")))
            } else {
                Ok(())
            }
        }
        Family::Mix { k, k_extra } => {
            if k == 0 || k_extra == 0 || k + k_extra > d {
                Err(Error::Config(format!(
                    "mix requires k >= 1, k' >= 1, k + k' <= d; got k = {k}, k' = {k_extra}, d = {d}"
                )))
            } else {
                Ok(())
            }
        }
        Family::Comp { k, k_top } => {
            if k == 0 || k > k_top || k_top > d {
                Err(Error::Config(format!(
                    "comp requires 1 <= k <= k' <= d; got k = {k}, k' = {k_top}, d = {d}"
                )))
            } else {
                Ok(())
            }
        }
        Family::NiceSampling { m } => {
            if m == 0 || m > n {
                Err(Error::Config(format!(
                    "nice sampling requires 1 <= m <= n; got m = {m}, n = {n}"
                )))
            } else {
                Ok(())
            }
        }
        Family::Scaled { ref inner, lambda } => {
            if !(lambda > 0.0 && lambda <= 1.0) {
                Err(Error::Config(format!("scaling lambda = {lambda} must lie in (0, 1]")))
            } else {
                validate_family(inner, d, n)
            }
        }
    }
}

fn compress_family(
    family: &Family,
    d: usize,
    x: &DenseVector,
    env: &mut CompressEnv,
) -> Result<SparseMessage> {
    let bpc = env.bits_per_coord;
    match *family {
        Family::Identity => Ok(SparseMessage::from_dense(x, bpc)),
        Family::RandK { k } => {
            let scale = d as f64 / k as f64;
            let entries = env
                .rng
                .subset(d, k)
                .into_iter()
                .map(|i| (i as u32, scale * x[i]))
                .collect();
            Ok(SparseMessage::new(d, entries, bpc))
        }
        Family::TopK { k } => {
            let entries = top_indices(x, k)
                .into_iter()
                .map(|i| (i as u32, x[i]))
                .collect();
            Ok(SparseMessage::new(d, entries, bpc))
        }
        Family::Mix { k, k_extra } => {
            let top = top_indices(x, k);
            let mut rest: Vec<usize> = (0..d).filter(|i| !top.contains(i)).collect();
            let chosen = env.rng.subset(rest.len(), k_extra);
            let mut keep = top;
            keep.extend(chosen.into_iter().map(|p| rest[p]));
            rest.clear();
            keep.sort_unstable();
            let entries = keep.into_iter().map(|i| (i as u32, x[i])).collect();
            Ok(SparseMessage::new(d, entries, bpc))
        }
        Family::Comp { k, k_top } => {
            let top = top_indices(x, k_top);
            let scale = k_top as f64 / k as f64;
            let mut keep: Vec<usize> = env
                .rng
                .subset(k_top, k)
                .into_iter()
                .map(|p| top[p])
                .collect();
            keep.sort_unstable();
            let entries = keep.into_iter().map(|i| (i as u32, scale * x[i])).collect();
            Ok(SparseMessage::new(d, entries, bpc))
        }
        Family::NiceSampling { m } => {
            let nice = env.nice.ok_or_else(|| {
                Error::Config(
                    "nice sampling needs the round-shared subset drawn by the driver".into(),
                )
            })?;
            if nice.m() != m {
                return Err(Error::Config(format!(
                    "round subset has m = {}, compressor expects m = {m}",
                    nice.m()
                )));
            }
            if nice.contains(env.worker) {
                let scale = nice.n() as f64 / m as f64;
                let entries = x
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i as u32, scale * v))
                    .collect();
                Ok(SparseMessage::new(d, entries, bpc))
            } else {
                Ok(SparseMessage::empty(d))
            }
        }
        Family::Scaled { ref inner, lambda } => {
            let msg = compress_family(inner, d, x, env)?;
            Ok(msg.scaled(lambda))
        }
    }
}

fn family_params(family: &Family, d: usize, n: usize, dependence: Dependence) -> Result<ClassParams> {
    let df = d as f64;
    match *family {
        Family::Identity => ClassParams::new(0.0, 0.0, 0.0),
        Family::RandK { k } => {
            let omega = df / k as f64 - 1.0;
            ClassParams::new(0.0, omega, average_variance(omega, n, dependence)?)
        }
        Family::TopK { k } => {
            let eta = (1.0 - k as f64 / df).sqrt();
            ClassParams::new(eta, 0.0, 0.0)
        }
        Family::Mix { k, k_extra } => {
            let (kf, ef) = (k as f64, k_extra as f64);
            let eta = (df - kf - ef) / ((df - kf) * df).sqrt();
            let omega = ef * (df - kf - ef) / ((df - kf) * df);
            ClassParams::new(eta, omega, average_variance(omega, n, dependence)?)
        }
        Family::Comp { k, k_top } => {
            let eta = ((df - k_top as f64) / df).sqrt();
            let omega = (k_top as f64 - k as f64) / k as f64;
            ClassParams::new(eta, omega, average_variance(omega, n, dependence)?)
        }
        Family::NiceSampling { m } => {
            // Inherently joint: the shared subset couples the workers no
            // matter what dependence the caller declared.
            let (nf, mf) = (n as f64, m as f64);
            let omega = (nf - mf) / mf;
            let omega_av = if n == m {
                0.0
            } else {
                (nf - mf) / (mf * (nf - 1.0))
            };
            ClassParams::new(0.0, omega, omega_av)
        }
        Family::Scaled { ref inner, lambda } => {
            let p = family_params(inner, d, n, dependence)?;
            scale_params(&p, lambda)
        }
    }
}

fn average_variance(omega: f64, n: usize, dependence: Dependence) -> Result<f64> {
    match dependence {
        Dependence::Independent => Ok(omega / n as f64),
        Dependence::JointNice => Err(Error::Config(
            "joint dependence is only defined for nice sampling".into(),
        )),
    }
}

/// Class parameters of `lambda * C` given those of `C`:
/// `eta' = lambda * eta + 1 - lambda`, `omega' = lambda^2 * omega`, and the
/// same quadratic shrinkage for `omega_av`.
pub fn scale_params(p: &ClassParams, lambda: f64) -> Result<ClassParams> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(format!(
            "scaling lambda = {lambda} must lie in (0, 1]"
        )));
    }
    ClassParams::new(
        lambda * p.eta + 1.0 - lambda,
        lambda * lambda * p.omega,
        lambda * lambda * p.omega_av,
    )
}

/// The scaling that minimizes the residual factor
/// `P(lambda) = (1 - lambda + lambda*eta)^2 + lambda^2 * omega` over `(0, 1]`:
/// `min((1 - eta) / ((1 - eta)^2 + omega), 1)`.
pub fn lambda_star(eta: f64, omega: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&eta));
    debug_assert!(omega >= 0.0);
    let a = 1.0 - eta;
    (a / (a * a + omega)).min(1.0)
}

/// Contraction factor `alpha = 1 - eta^2 - omega` when the compressor is
/// contractive (`eta^2 + omega < 1`), `None` otherwise.
pub fn contraction_alpha(p: &ClassParams) -> Option<f64> {
    let total = p.eta * p.eta + p.omega;
    if total < 1.0 {
        Some(1.0 - total)
    } else {
        None
    }
}
