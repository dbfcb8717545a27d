//! Counter-based deterministic random streams.
//!
//! Every random draw in the crate comes from a [`DetRng`] stream keyed by a
//! list of 64-bit components, typically `(master seed, domain, worker,
//! round)`. A stream is a SplitMix64 counter sequence: the state advances by a
//! fixed odd constant and each output is a strong 64-bit mix of the state, so
//! streams can be created at any `(worker, round)` coordinate without
//! generating the draws in between. Output is identical across platforms.
//!
//! Two different configurations that share a master seed see identical draws
//! at the same `(worker, round)` coordinate. The bitwise-equality tests
//! between algorithm specializations rely on this.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key domains, so that streams drawn for different purposes never collide.
pub mod domain {
    pub const WORKER: u64 = 0x01;
    pub const NICE_ROUND: u64 = 0x02;
    pub const PARTITION: u64 = 0x03;
    pub const SYNTH: u64 = 0x04;
    pub const CERT_PROBE: u64 = 0x05;
    pub const CERT_SAMPLE: u64 = 0x06;
}

/// Deterministic counter-based random stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetRng {
    state: u64,
}

impl DetRng {
    /// Derive a stream from key components. The key is folded through the
    /// mixing function so nearby keys give unrelated streams.
    pub fn from_key(parts: &[u64]) -> Self {
        let mut state: u64 = 0x243F_6A88_85A3_08D3; // arbitrary nonzero start
        for &p in parts {
            state = mix64(state.wrapping_add(GOLDEN) ^ p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        }
        DetRng { state }
    }

    /// Stream for worker `worker` at round `round` under `master_seed`.
    pub fn worker_round(master_seed: u64, worker: usize, round: u64) -> Self {
        Self::from_key(&[master_seed, domain::WORKER, worker as u64, round])
    }

    /// Round-level stream shared by all workers (joint sampling draws).
    pub fn round_shared(master_seed: u64, round: u64) -> Self {
        Self::from_key(&[master_seed, domain::NICE_ROUND, round])
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` via the widening-multiply map.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Standard normal draw (Box-Muller, cosine branch).
    pub fn next_normal(&mut self) -> f64 {
        // Shift into (0, 1] so the log never sees zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniformly random `k`-subset of `0..n`, returned sorted.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut picked = pool[..k].to_vec();
        picked.sort_unstable();
        picked
    }
}
