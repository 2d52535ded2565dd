//! State-vector QAOA simulator specialized for diagonal cost Hamiltonians.
//!
//! The working objects are a 2^N complex amplitude array and one 2^N real
//! array holding the classical cost of every basis state (built once per
//! model and reused across every layer and optimizer evaluation). Layers are
//! `exp(−iγ·H_C)`, a pointwise phase, and `exp(−iβ·ΣX_i)`, a product of
//! independent single-qubit rotations. Everything is an ideal noiseless
//! simulation; sampling is the only stochastic step and is seeded.
//!
//! Bit convention (fixed globally, see [`crate::ising`]): basis index `z`
//! maps qubits little-endian, bit 0 of `z` is qubit 0, and σ = +1 ↔ bit 0.
//!
//! Reductions (norm, expectation) use a fixed block decomposition summed in
//! block order, so results are bit-identical no matter how many threads run.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{energies_equal, IsingModel, SpectrumSummary, SpinConfiguration};

/// Default qubit ceiling (4 GiB of complex amplitudes). Configurable at the
/// call sites that build diagonals.
pub const DEFAULT_QUBIT_LIMIT: usize = 28;

/// Below this qubit count kernels skip the thread pool; the arrays are too
/// small for parallelism to pay for itself.
const PARALLEL_THRESHOLD_QUBITS: usize = 13;

const SUM_BLOCK: usize = 1 << 16;

/// Fixed-block sum: per-block partials (computed serially within a block,
/// possibly in parallel across blocks) folded in block order.
fn blocked_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_blocks = len.div_ceil(SUM_BLOCK);
    let block_sum = |b: usize| {
        let lo = b * SUM_BLOCK;
        let hi = ((b + 1) * SUM_BLOCK).min(len);
        let mut s = 0.0;
        for idx in lo..hi {
            s += term(idx);
        }
        s
    };
    let partials: Vec<f64> = if n_blocks > 1 {
        (0..n_blocks).into_par_iter().map(block_sum).collect()
    } else {
        (0..n_blocks).map(block_sum).collect()
    };
    partials.into_iter().sum()
}

/// Decode a basis index into spins (bit i = 0 ↦ σ_i = +1).
pub fn decode(z: u64, n: usize) -> SpinConfiguration {
    SpinConfiguration::from_basis_index(z, n)
}

/// 2^N complex amplitudes.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl StateVector {
    /// Uniform superposition |+⟩^⊗N.
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self {
            amplitudes: vec![amp; dim],
            n_qubits,
        }
    }

    /// Computational basis state |z⟩.
    pub fn basis_state(n_qubits: usize, z: u64) -> Self {
        let dim = 1usize << n_qubits;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[z as usize] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            n_qubits,
        }
    }

    /// Wrap an explicit amplitude vector (length must be a power of two).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Σ|amplitude|², via the deterministic blocked reduction.
    pub fn norm_sqr_sum(&self) -> f64 {
        let amps = &self.amplitudes;
        blocked_sum(amps.len(), |z| amps[z].norm_sqr())
    }

    /// Multiply every amplitude by `exp(−i·gamma·diag[z])`.
    pub fn apply_cost_phase(&mut self, diag: &CostDiagonal, gamma: f64) -> Result<()> {
        if diag.values.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                actual: diag.values.len(),
            });
        }
        let phase = |amp: &mut Complex64, d: &f64| {
            *amp *= Complex64::from_polar(1.0, -gamma * d);
        };
        if self.n_qubits >= PARALLEL_THRESHOLD_QUBITS {
            self.amplitudes
                .par_iter_mut()
                .zip(diag.values.par_iter())
                .for_each(|(a, d)| phase(a, d));
        } else {
            self.amplitudes
                .iter_mut()
                .zip(diag.values.iter())
                .for_each(|(a, d)| phase(a, d));
        }
        Ok(())
    }

    /// Apply `exp(−i·beta·X)` to every qubit:
    /// `(a, b) ↦ (cos β·a − i sin β·b, −i sin β·a + cos β·b)` over every
    /// amplitude pair differing in one bit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let c = beta.cos();
        let s = beta.sin();
        let parallel = self.n_qubits >= PARALLEL_THRESHOLD_QUBITS;
        for q in 0..self.n_qubits {
            let stride = 1usize << q;
            let rotate = |chunk: &mut [Complex64]| {
                let (lo, hi) = chunk.split_at_mut(stride);
                for k in 0..stride {
                    let a = lo[k];
                    let b = hi[k];
                    lo[k] = Complex64::new(c * a.re + s * b.im, c * a.im - s * b.re);
                    hi[k] = Complex64::new(s * a.im + c * b.re, c * b.im - s * a.re);
                }
            };
            if parallel {
                self.amplitudes.par_chunks_mut(2 * stride).for_each(rotate);
            } else {
                self.amplitudes.chunks_mut(2 * stride).for_each(rotate);
            }
        }
    }
}

/// Precomputed classical cost `C(σ(z))` for every basis index (the model
/// offset is omitted; the cost Hamiltonian drops its constant term).
#[derive(Debug, Clone)]
pub struct CostDiagonal {
    values: Vec<f64>,
    n_qubits: usize,
}

impl CostDiagonal {
    /// Evaluate the diagonal for `model`, refusing models above
    /// `qubit_limit` with the byte cost spelled out.
    pub fn build(model: &IsingModel, qubit_limit: usize) -> Result<Self> {
        let n = model.n_sites();
        if n > qubit_limit {
            let state_bytes = (1u128 << n) * 16;
            let diag_bytes = (1u128 << n) * 8;
            return Err(Error::ResourceLimit(format!(
                "{n} qubits exceed the limit of {qubit_limit}: the state vector needs \
                 {state_bytes} bytes and the cost diagonal {diag_bytes} bytes"
            )));
        }
        let dim = 1usize << n;
        let terms = model.term_masks();
        let eval = |z: usize| -> f64 {
            let z = z as u64;
            let mut e = 0.0;
            for &(mask, v) in &terms {
                let parity = ((z & mask).count_ones() & 1) as f64;
                e += v * (1.0 - 2.0 * parity);
            }
            e
        };
        let values: Vec<f64> = if n >= PARALLEL_THRESHOLD_QUBITS {
            (0..dim).into_par_iter().map(eval).collect()
        } else {
            (0..dim).map(eval).collect()
        };
        Ok(Self {
            values,
            n_qubits: n,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Depth-p rotation angles (γ⃗, β⃗).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    gamma: Vec<f64>,
    beta: Vec<f64>,
}

/// Schedule wire format: `{ "p", "gamma", "beta" }`.
#[derive(Serialize, Deserialize)]
struct RawSchedule {
    p: usize,
    gamma: Vec<f64>,
    beta: Vec<f64>,
}

impl AngleSchedule {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != beta.len() {
            return Err(Error::InvalidArgument(format!(
                "schedule needs equal-length gamma/beta with p >= 1, got {} and {}",
                gamma.len(),
                beta.len()
            )));
        }
        if gamma.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(Self { gamma, beta })
    }

    pub fn depth(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Flat `[γ_1..γ_p, β_1..β_p]` view used by the optimizers.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.gamma.clone();
        flat.extend_from_slice(&self.beta);
        flat
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() < 2 || !flat.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "flat angle vector has odd length {}",
                flat.len()
            )));
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawSchedule = serde_json::from_str(s)?;
        if raw.gamma.len() != raw.p || raw.beta.len() != raw.p {
            return Err(Error::Format(format!(
                "schedule claims p={} but carries {} gamma / {} beta entries",
                raw.p,
                raw.gamma.len(),
                raw.beta.len()
            )));
        }
        Self::new(raw.gamma, raw.beta)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawSchedule {
            p: self.depth(),
            gamma: self.gamma.clone(),
            beta: self.beta.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("schedule serialization cannot fail")
    }
}

/// Prepare |+⟩^⊗N, then alternate cost-phase and mixer layers in schedule
/// order.
pub fn run_circuit(diag: &CostDiagonal, schedule: &AngleSchedule) -> Result<StateVector> {
    let mut state = StateVector::uniform(diag.n_qubits);
    for l in 0..schedule.depth() {
        state.apply_cost_phase(diag, schedule.gamma[l])?;
        state.apply_mixer(schedule.beta[l]);
    }
    Ok(state)
}

/// Exact ⟨H_C⟩ = Σ_z |amp_z|²·diag_z (no sampling noise).
pub fn expectation(state: &StateVector, diag: &CostDiagonal) -> Result<f64> {
    if diag.values.len() != state.amplitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: state.amplitudes.len(),
            actual: diag.values.len(),
        });
    }
    let amps = &state.amplitudes;
    let vals = &diag.values;
    Ok(blocked_sum(amps.len(), |z| amps[z].norm_sqr() * vals[z]))
}

/// Sampled measurement outcomes as (basis index, count), sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    counts: Vec<(u64, u64)>,
    shots: u64,
    n_qubits: usize,
}

impl Histogram {
    pub fn counts(&self) -> &[(u64, u64)] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn from_outcomes(outcomes: impl Iterator<Item = u64>, shots: u64, n_qubits: usize) -> Self {
        let mut map = std::collections::HashMap::new();
        for z in outcomes {
            *map.entry(z).or_insert(0u64) += 1;
        }
        let mut counts: Vec<(u64, u64)> = map.into_iter().collect();
        counts.sort_unstable_by_key(|&(z, _)| z);
        Self {
            counts,
            shots,
            n_qubits,
        }
    }
}

/// Draw `shots` basis indices with probability |amplitude|² by inverse-CDF
/// binary search; deterministic for a fixed seed.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<Histogram> {
    if shots < 1 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut cdf = Vec::with_capacity(state.dim());
    let mut acc = 0.0f64;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let last = state.dim() - 1;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let outcomes = (0..shots).map(|_| {
        let u: f64 = rng.gen::<f64>() * acc;
        cdf.partition_point(|&c| c <= u).min(last) as u64
    });
    Ok(Histogram::from_outcomes(outcomes, shots, state.n_qubits))
}

/// Uniformly random bitstrings, the random-sampling baseline.
pub fn sample_uniform(n_qubits: usize, shots: u64, seed: u64) -> Result<Histogram> {
    if shots < 1 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let dim = 1u64 << n_qubits;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let outcomes = (0..shots).map(|_| rng.gen_range(0..dim));
    Ok(Histogram::from_outcomes(outcomes, shots, n_qubits))
}

/// Fraction of shots whose configuration energy equals the exact minimum
/// (relative tolerance 1e−9); all degenerate minimizers count.
pub fn success_rate(hist: &Histogram, model: &IsingModel, spectrum: &SpectrumSummary) -> Result<f64> {
    let mut hit = 0u64;
    for &(z, count) in &hist.counts {
        let e = model.energy(&decode(z, model.n_sites()))?;
        if energies_equal(e, spectrum.min_energy) {
            hit += count;
        }
    }
    Ok(hit as f64 / hist.shots as f64)
}

/// Write the histogram as CSV: `basis_index,bitstring,energy,count,frequency`
/// sorted by energy ascending (ties by basis index). The energy column holds
/// `diag[z] + offset − energy_reference`; pass the exact minimum as the
/// reference to emit relative energies.
pub fn write_histogram_csv<W: std::io::Write>(
    w: &mut W,
    hist: &Histogram,
    diag: &CostDiagonal,
    offset: f64,
    energy_reference: f64,
) -> Result<()> {
    if hist.n_qubits != diag.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: diag.n_qubits,
            actual: hist.n_qubits,
        });
    }
    let mut rows: Vec<(u64, f64, u64)> = hist
        .counts
        .iter()
        .map(|&(z, c)| (z, diag.values[z as usize] + offset - energy_reference, c))
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    writeln!(w, "basis_index,bitstring,energy,count,frequency")?;
    for (z, e, c) in rows {
        let bits: String = (0..hist.n_qubits)
            .map(|q| if (z >> q) & 1 == 0 { '0' } else { '1' })
            .collect();
        let freq = c as f64 / hist.shots as f64;
        writeln!(w, "{z},{bits},{e},{c},{freq}")?;
    }
    Ok(())
}
