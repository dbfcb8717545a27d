//! Objective functions, datasets, partitioning, and proximity operators.
//!
//! The objective is regularized logistic regression split across `n` workers:
//! worker `i` owns a shard of the rows and its local function is the mean
//! log-loss over the shard plus an optional strong-convexity term
//! `l2/2 ||x||^2` and an optional nonconvex ratio penalty
//! `nc * sum_j x_j^2 / (1 + x_j^2)`. A composite term `R` (none or L1) is
//! handled by the proximal step, not by the gradients.

mod libsvm;

pub use libsvm::{parse_libsvm, write_libsvm};

use crate::error::{Error, Result};
use crate::rng::{domain, DetRng};
use crate::tuning::SmoothnessProfile;
use crate::vector::DenseVector;

/// Dense feature matrix with binary labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n_rows x dim
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config("dataset must contain at least one row".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Config(format!(
                "feature buffer has {} values, expected {} rows x {} features",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::Config("labels must be -1 or +1".into()));
        }
        Ok(Dataset {
            features,
            labels,
            dim,
        })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.dim..(j + 1) * self.dim]
    }

    pub fn label(&self, j: usize) -> f64 {
        self.labels[j]
    }
}

/// The rows owned by one worker, as indices into the parent dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Shard {
    pub owner: usize,
    pub rows: Vec<usize>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Composite regularizer handled by the proximal step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prox {
    None,
    L1 { weight: f64 },
}

impl Prox {
    /// `prox_{gamma R}(v)`: identity for `R = 0`, coordinatewise soft
    /// threshold at `gamma * weight` for L1.
    pub fn apply(&self, gamma: f64, v: &DenseVector) -> Result<DenseVector> {
        if gamma <= 0.0 {
            return Err(Error::Config(format!("prox step gamma = {gamma} must be positive")));
        }
        match *self {
            Prox::None => Ok(v.clone()),
            Prox::L1 { weight } => {
                let t = gamma * weight;
                Ok(DenseVector::from_vec(
                    v.iter()
                        .map(|&c| {
                            if c > t {
                                c - t
                            } else if c < -t {
                                c + t
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                ))
            }
        }
    }

    /// `R(x)`.
    pub fn value(&self, x: &DenseVector) -> f64 {
        match *self {
            Prox::None => 0.0,
            Prox::L1 { weight } => weight * x.l1_norm(),
        }
    }
}

/// A distributed problem: dataset, shards, smooth-part regularization, the
/// composite term, and the gradient-domination constant handed to tuning.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub data: Dataset,
    pub shards: Vec<Shard>,
    /// Strong-convexity weight folded into every local function.
    pub l2: f64,
    /// Weight of the nonconvex ratio penalty (smooth, nonconvex runs only).
    pub nonconvex: f64,
    /// Composite term handled by the proximal step.
    pub prox: Prox,
    /// Gradient-domination constant used by tuning; for the convex runs this
    /// equals the strong-convexity weight.
    pub mu: f64,
}

impl ProblemSpec {
    /// Strongly convex problem: `l2 = mu`, no composite term.
    pub fn convex(data: Dataset, shards: Vec<Shard>, mu: f64) -> Self {
        ProblemSpec {
            data,
            shards,
            l2: mu,
            nonconvex: 0.0,
            prox: Prox::None,
            mu,
        }
    }

    /// Strongly convex problem with an L1 composite term.
    pub fn with_l1(data: Dataset, shards: Vec<Shard>, mu: f64, weight: f64) -> Self {
        ProblemSpec {
            prox: Prox::L1 { weight },
            ..ProblemSpec::convex(data, shards, mu)
        }
    }

    /// Nonconvex problem: plain log-loss plus the ratio penalty, `R = 0`.
    pub fn nonconvex(data: Dataset, shards: Vec<Shard>, weight: f64) -> Self {
        ProblemSpec {
            data,
            shards,
            l2: 0.0,
            nonconvex: weight,
            prox: Prox::None,
            mu: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn worker_count(&self) -> usize {
        self.shards.len()
    }

    /// Local objective value `f_i(x)`.
    pub fn local_value(&self, worker: usize, x: &DenseVector) -> f64 {
        let shard = &self.shards[worker];
        let mut loss = 0.0;
        for &j in &shard.rows {
            let z = self.data.label(j) * dot_row(self.data.row(j), x);
            loss += softplus(-z);
        }
        loss / shard.len() as f64 + 0.5 * self.l2 * x.norm_sq() + self.ratio_penalty(x)
    }

    /// Local gradient `grad f_i(x)`.
    pub fn local_gradient(&self, worker: usize, x: &DenseVector) -> Result<DenseVector> {
        let shard = &self.shards[worker];
        if shard.is_empty() {
            return Err(Error::Config(format!("worker {worker} owns an empty shard")));
        }
        let inv = 1.0 / shard.len() as f64;
        let mut g = DenseVector::zeros(self.dim());
        for &j in &shard.rows {
            let b = self.data.label(j);
            let z = b * dot_row(self.data.row(j), x);
            // d/dz log(1 + e^{-z}) = -sigma(-z)
            let coeff = -b * sigmoid(-z) * inv;
            for (gi, &a) in g.as_mut_slice().iter_mut().zip(self.data.row(j)) {
                *gi += coeff * a;
            }
        }
        if self.l2 != 0.0 {
            g.add_scaled(x, self.l2);
        }
        if self.nonconvex != 0.0 {
            for (gi, &c) in g.as_mut_slice().iter_mut().zip(x.iter()) {
                let denom = 1.0 + c * c;
                *gi += self.nonconvex * 2.0 * c / (denom * denom);
            }
        }
        if !g.all_finite() {
            return Err(Error::NotFinite(format!("gradient of worker {worker}")));
        }
        Ok(g)
    }

    /// Average objective `f(x) = (1/n) sum_i f_i(x)`.
    pub fn value(&self, x: &DenseVector) -> f64 {
        let n = self.worker_count() as f64;
        (0..self.worker_count())
            .map(|i| self.local_value(i, x))
            .sum::<f64>()
            / n
    }

    /// Full objective `f(x) + R(x)`.
    pub fn composite_value(&self, x: &DenseVector) -> f64 {
        self.value(x) + self.prox.value(x)
    }

    /// Average gradient `grad f(x) = (1/n) sum_i grad f_i(x)`.
    pub fn gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        let mut g = DenseVector::zeros(self.dim());
        for i in 0..self.worker_count() {
            let gi = self.local_gradient(i, x)?;
            g.add_scaled(&gi, 1.0);
        }
        g.scale(1.0 / self.worker_count() as f64);
        Ok(g)
    }

    fn ratio_penalty(&self, x: &DenseVector) -> f64 {
        if self.nonconvex == 0.0 {
            return 0.0;
        }
        self.nonconvex
            * x.iter()
                .map(|&c| c * c / (1.0 + c * c))
                .sum::<f64>()
    }
}

/// How the aggregate constant `L~` is formed from the per-worker `L_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LtildeConvention {
    /// Root mean square `sqrt((1/n) sum L_i^2)` (default).
    #[default]
    MeanSquare,
    /// Plain root of the sum `sqrt(sum L_i^2)`.
    SumSquare,
}

/// Per-worker smoothness constants:
/// `L_i = l2 + (1/(4 N_i)) sum_j ||a_j||^2`, plus `2 * nc` when the ratio
/// penalty is present (its second derivative is bounded by 2 per coordinate).
pub fn smoothness(problem: &ProblemSpec, convention: LtildeConvention) -> Result<SmoothnessProfile> {
    let mut l_list = Vec::with_capacity(problem.worker_count());
    for shard in &problem.shards {
        if shard.is_empty() {
            return Err(Error::Config(format!("worker {} owns an empty shard", shard.owner)));
        }
        let sum_sq: f64 = shard
            .rows
            .iter()
            .map(|&j| problem.data.row(j).iter().map(|a| a * a).sum::<f64>())
            .sum();
        let mut li = problem.l2 + sum_sq / (4.0 * shard.len() as f64);
        if problem.nonconvex != 0.0 {
            li += 2.0 * problem.nonconvex;
        }
        l_list.push(li);
    }
    let n = l_list.len() as f64;
    let sum_sq: f64 = l_list.iter().map(|l| l * l).sum();
    let l_tilde = match convention {
        LtildeConvention::MeanSquare => (sum_sq / n).sqrt(),
        LtildeConvention::SumSquare => sum_sq.sqrt(),
    };
    Ok(SmoothnessProfile {
        l_list,
        l_tilde,
        l: l_tilde,
        mu: problem.mu,
    })
}

/// Split the dataset into `n` shards after a seeded shuffle. Rows are grouped
/// into `n` contiguous blocks of `floor(N/n)`; leftover rows go to the last
/// worker. With `overlap = 1` worker `i` gets block `i`; with `overlap = 2`
/// it gets blocks `i` and `(i+1) mod n` (leftovers still only once).
pub fn partition(data: &Dataset, n: usize, overlap: u8, seed: u64) -> Result<Vec<Shard>> {
    let rows = data.rows();
    if n == 0 || n > rows {
        return Err(Error::Config(format!(
            "worker count n = {n} must satisfy 1 <= n <= N = {rows}"
        )));
    }
    if overlap != 1 && overlap != 2 {
        return Err(Error::Config(format!("overlap = {overlap} must be 1 or 2")));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = DetRng::from_key(&[seed, domain::PARTITION]);
    for i in (1..rows).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        order.swap(i, j);
    }
    let block = rows / n;
    let blocks: Vec<&[usize]> = (0..n).map(|i| &order[i * block..(i + 1) * block]).collect();
    let leftovers = &order[n * block..];

    let mut shards = Vec::with_capacity(n);
    for i in 0..n {
        let mut shard_rows: Vec<usize> = blocks[i].to_vec();
        if overlap == 2 {
            shard_rows.extend_from_slice(blocks[(i + 1) % n]);
        }
        if i == n - 1 {
            shard_rows.extend_from_slice(leftovers);
        }
        shards.push(Shard {
            owner: i,
            rows: shard_rows,
        });
    }
    Ok(shards)
}

/// Deterministic synthetic dataset: labels are fair signs and features are
/// unit-variance Gaussians whose mean is shifted by `separation` in the label
/// direction.
pub fn synth_dataset(seed: u64, d: usize, rows: usize, separation: f64) -> Result<Dataset> {
    if d == 0 || rows < 2 {
        return Err(Error::Config(format!(
            "synthetic dataset needs d >= 1 and N >= 2, got d = {d}, N = {rows}"
        )));
    }
    let mut rng = DetRng::from_key(&[seed, domain::SYNTH]);
    let mut features = Vec::with_capacity(rows * d);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let b = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        labels.push(b);
        for _ in 0..d {
            features.push(b * separation + rng.next_normal());
        }
    }
    Dataset::new(features, labels, d)
}

#[inline]
fn dot_row(row: &[f64], x: &DenseVector) -> f64 {
    row.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

/// `log(1 + e^u)` without overflow.
#[inline]
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-u})` without overflow.
#[inline]
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}
