//! Real-coefficient Ising models over ±1 spins.
//!
//! A model is `offset + Σ_i fields[i]·σ_i + Σ_{i<j} J_ij·σ_i·σ_j` with all
//! coefficients arbitrary finite doubles (no integer quantization anywhere).
//! Couplings are stored as a sparse `(i, j, value)` list with `i < j`.
//!
//! Spin/bit convention, fixed globally: basis index `z` maps to spins
//! little-endian, `σ_i = +1` when bit `i` of `z` is 0 and `−1` when it is 1.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling for exhaustive enumeration (2^28 configurations).
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 28;

/// Relative tolerance for deciding two configuration energies are the same
/// spectral level. An absolute floor of [`ENERGY_EQ_ABS`] covers minima at
/// exactly zero.
pub const ENERGY_EQ_REL: f64 = 1e-9;
/// Absolute floor companion to [`ENERGY_EQ_REL`].
pub const ENERGY_EQ_ABS: f64 = 1e-12;

/// True when `a` and `b` should be treated as the same energy level.
pub fn energies_equal(a: f64, b: f64) -> bool {
    if !a.is_finite() || !b.is_finite() {
        return a == b;
    }
    let diff = (a - b).abs();
    diff <= ENERGY_EQ_ABS || diff <= ENERGY_EQ_REL * a.abs().max(b.abs())
}

/// A ±1 spin assignment for every site of a model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    /// Build from an explicit spin vector; every entry must be +1 or −1.
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidArgument(format!(
                "spin value {bad} is not +1 or -1"
            )));
        }
        Ok(Self { spins })
    }

    /// Decode basis index `z` into spins: bit `i` of `z` = 0 ↦ σ_i = +1.
    pub fn from_basis_index(z: u64, n: usize) -> Self {
        debug_assert!(n <= 64 && (n == 64 || z < (1u64 << n)));
        let spins = (0..n)
            .map(|i| if (z >> i) & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    /// Inverse of [`from_basis_index`](Self::from_basis_index).
    pub fn basis_index(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .fold(0u64, |z, (i, &s)| if s < 0 { z | (1 << i) } else { z })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Globally flipped copy (σ → −σ).
    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }
}

/// Which couplings a random instance carries.
#[derive(Debug, Clone)]
pub enum Connectivity {
    /// All `n(n−1)/2` pairs.
    Full,
    /// Only the listed `(i, j)` pairs (`i < j`, unique).
    PairList(Vec<(usize, usize)>),
}

/// Sparse real-coefficient Ising model; the optimization target.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n_sites: usize,
    offset: f64,
    fields: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

/// On-disk instance schema: `{ "n", "offset", "fields", "couplings" }`.
#[derive(Serialize, Deserialize)]
struct RawInstance {
    n: usize,
    offset: f64,
    fields: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

impl IsingModel {
    /// Validating constructor. Couplings must satisfy `i < j < n`, be unique,
    /// and all coefficients must be finite.
    pub fn new(
        n_sites: usize,
        offset: f64,
        fields: Vec<f64>,
        couplings: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("model needs at least one site".into()));
        }
        // basis indices are u64 bit patterns
        if n_sites > 64 {
            return Err(Error::InvalidArgument(format!(
                "{n_sites} sites exceed the 64-site representation limit"
            )));
        }
        if fields.len() != n_sites {
            return Err(Error::DimensionMismatch {
                expected: n_sites,
                actual: fields.len(),
            });
        }
        if !offset.is_finite() || fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidArgument(
                "offset and field coefficients must be finite".into(),
            ));
        }
        let mut seen = std::collections::HashSet::with_capacity(couplings.len());
        for &(i, j, v) in &couplings {
            if i >= j || j >= n_sites {
                return Err(Error::InvalidArgument(format!(
                    "coupling pair ({i}, {j}) violates 0 <= i < j < {n_sites}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coupling ({i}, {j}) has non-finite value"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate coupling pair ({i}, {j})"
                )));
            }
        }
        Ok(Self {
            n_sites,
            offset,
            fields,
            couplings,
        })
    }

    /// Fully random model with coefficients uniform in `[−scale, +scale]`,
    /// deterministic for a fixed seed. Fields are drawn first (site order),
    /// then couplings in lexicographic `(i, j)` order.
    pub fn random(n: usize, coefficient_scale: f64, seed: u64, connectivity: Connectivity) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let scale_ok = coefficient_scale.is_finite() && coefficient_scale > 0.0;
        if !scale_ok {
            return Err(Error::InvalidArgument(
                "coefficient_scale must be a positive finite value".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| rng.gen_range(-coefficient_scale..=coefficient_scale);
        let fields: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let pairs: Vec<(usize, usize)> = match connectivity {
            Connectivity::Full => (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect(),
            Connectivity::PairList(list) => list,
        };
        let couplings = pairs
            .into_iter()
            .map(|(i, j)| (i, j, draw(&mut rng)))
            .collect();
        Self::new(n, 0.0, fields, couplings)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    /// Copy with the constant offset replaced.
    pub fn with_offset(&self, offset: f64) -> Self {
        Self {
            offset,
            ..self.clone()
        }
    }

    /// Largest |coefficient| over all fields and couplings (offset excluded).
    pub fn max_abs_coefficient(&self) -> f64 {
        let f = self.fields.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.couplings.iter().fold(f, |m, &(_, _, v)| m.max(v.abs()))
    }

    /// Configuration energy `A + Σ B_i σ_i + Σ_{i<j} C_ij σ_i σ_j` in eV.
    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                actual: config.len(),
            });
        }
        let s = config.spins();
        let mut e = self.offset;
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * f64::from(s[i]);
        }
        for &(i, j, v) in &self.couplings {
            e += v * f64::from(s[i]) * f64::from(s[j]);
        }
        Ok(e)
    }

    /// Terms packed as `(bit mask, value)`; the energy of basis index `z` is
    /// `offset + Σ value·(1 − 2·parity(z & mask))`.
    pub(crate) fn term_masks(&self) -> Vec<(u64, f64)> {
        let mut terms = Vec::with_capacity(self.fields.len() + self.couplings.len());
        for (i, &h) in self.fields.iter().enumerate() {
            if h != 0.0 {
                terms.push((1u64 << i, h));
            }
        }
        for &(i, j, v) in &self.couplings {
            if v != 0.0 {
                terms.push(((1u64 << i) | (1u64 << j), v));
            }
        }
        terms
    }

    /// Exhaustively enumerate all 2^N configurations and return the exact
    /// spectrum floor. `limit` caps N; use [`DEFAULT_EXHAUSTIVE_LIMIT`]
    /// unless configured otherwise.
    pub fn exhaustive_ground_states(&self, limit: usize) -> Result<SpectrumSummary> {
        let n = self.n_sites;
        if n > limit {
            return Err(Error::ResourceLimit(format!(
                "exhaustive search over {n} sites exceeds the limit of {limit} \
                 (2^{limit} configurations)"
            )));
        }
        let dim: u64 = 1 << n;
        let terms = self.term_masks();
        let offset = self.offset;
        let eval = |z: u64| -> f64 {
            let mut e = offset;
            for &(mask, v) in &terms {
                let parity = ((z & mask).count_ones() & 1) as f64;
                e += v * (1.0 - 2.0 * parity);
            }
            e
        };

        // Disjoint ranges scanned in parallel; the merge below is independent
        // of how the ranges were cut, so results are deterministic.
        let chunk: u64 = 1 << n.min(16);
        let n_chunks = dim.div_ceil(chunk);
        struct Partial {
            min: f64,
            candidates: Vec<(u64, f64)>,
            next: Option<f64>,
        }
        let partials: Vec<Partial> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = ((c + 1) * chunk).min(dim);
                let mut min = f64::INFINITY;
                let mut candidates: Vec<(u64, f64)> = Vec::new();
                let mut next: Option<f64> = None;
                for z in lo..hi {
                    let e = eval(z);
                    if e < min {
                        min = e;
                        // Displaced near-minimum entries become next-level
                        // candidates.
                        let mut kept = Vec::with_capacity(candidates.len() + 1);
                        for (cz, ce) in candidates.drain(..) {
                            if energies_equal(ce, min) {
                                kept.push((cz, ce));
                            } else if next.is_none_or(|nx| ce < nx) {
                                next = Some(ce);
                            }
                        }
                        candidates = kept;
                        candidates.push((z, e));
                    } else if energies_equal(e, min) {
                        candidates.push((z, e));
                    } else if next.is_none_or(|nx| e < nx) {
                        next = Some(e);
                    }
                }
                Partial { min, candidates, next }
            })
            .collect();

        let min_energy = partials.iter().fold(f64::INFINITY, |m, p| m.min(p.min));
        let mut ground: Vec<u64> = Vec::new();
        let mut next: Option<f64> = None;
        let consider_next = |e: f64, next: &mut Option<f64>| {
            if !energies_equal(e, min_energy) && next.is_none_or(|nx| e < nx) {
                *next = Some(e);
            }
        };
        for p in &partials {
            for &(z, e) in &p.candidates {
                if energies_equal(e, min_energy) {
                    ground.push(z);
                } else {
                    consider_next(e, &mut next);
                }
            }
            if let Some(e) = p.next {
                consider_next(e, &mut next);
            }
        }
        ground.sort_unstable();
        Ok(SpectrumSummary {
            min_energy,
            ground_states: ground
                .into_iter()
                .map(|z| SpinConfiguration::from_basis_index(z, n))
                .collect(),
            next_energy: next,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(s)?;
        Self::new(raw.n, raw.offset, raw.fields, raw.couplings)
    }

    pub fn from_json_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawInstance {
            n: self.n_sites,
            offset: self.offset,
            fields: self.fields.clone(),
            couplings: self.couplings.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialization cannot fail")
    }
}

/// Exact spectrum floor from exhaustive search.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    /// Exact minimum energy (eV).
    pub min_energy: f64,
    /// Every configuration at the minimum level, sorted by basis index.
    pub ground_states: Vec<SpinConfiguration>,
    /// Second-lowest distinct level, absent for a one-level spectrum.
    pub next_energy: Option<f64>,
}

impl SpectrumSummary {
    /// Number of degenerate minimizers.
    pub fn degeneracy(&self) -> usize {
        self.ground_states.len()
    }
}
