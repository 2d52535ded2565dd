//! Periodic supercells and compilation of per-distance pair coefficients
//! into an [`IsingModel`].
//!
//! Geometry lives in a cubic base cell (edge `lattice_constant`, fractional
//! basis sites) replicated by integer multipliers into an orthorhombic
//! supercell with periodic boundary conditions. Pair clusters are counted
//! over *all* periodic images within the cutoff, not minimum-image only: at
//! the cutoffs of interest the sphere extends past half the cell edge, and
//! the per-supercell coupling is the sum over image contributions. Clusters
//! joining a site to one of its own images are constants (σ² = 1) and are
//! folded into the model offset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;

/// Tolerance (Å) for matching a table distance to a realized pair distance.
pub const DISTANCE_MATCH_TOL: f64 = 1e-3;
/// Realized distances are grouped and reported at this precision (Å).
pub const DISTANCE_REPORT_PRECISION: f64 = 1e-6;
/// Hard cap on periodic image shells scanned per axis.
pub const MAX_IMAGE_SHELLS: i64 = 6;

/// Cubic cell with fractional basis sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCell {
    lattice_constant: f64,
    basis_sites: Vec<[f64; 3]>,
}

impl BaseCell {
    pub fn new(lattice_constant: f64, basis_sites: Vec<[f64; 3]>) -> Result<Self> {
        let constant_ok = lattice_constant.is_finite() && lattice_constant > 0.0;
        if !constant_ok {
            return Err(Error::InvalidArgument(
                "lattice constant must be a positive finite length".into(),
            ));
        }
        if basis_sites.is_empty() {
            return Err(Error::InvalidArgument("base cell needs basis sites".into()));
        }
        for site in &basis_sites {
            if site.iter().any(|c| !(0.0..1.0).contains(c)) {
                return Err(Error::InvalidArgument(format!(
                    "fractional coordinate {site:?} outside [0, 1)"
                )));
            }
        }
        Ok(Self {
            lattice_constant,
            basis_sites,
        })
    }

    /// Conventional fcc cell: four basis sites at (0,0,0), (0,½,½),
    /// (½,0,½), (½,½,0).
    pub fn fcc(lattice_constant: f64) -> Self {
        Self {
            lattice_constant,
            basis_sites: vec![
                [0.0, 0.0, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
                [0.5, 0.5, 0.0],
            ],
        }
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn basis_sites(&self) -> &[[f64; 3]] {
        &self.basis_sites
    }
}

/// Base cell replicated by positive integer multipliers along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SupercellSpec {
    pub base: BaseCell,
    pub multipliers: [usize; 3],
}

impl SupercellSpec {
    pub fn new(base: BaseCell, multipliers: [usize; 3]) -> Result<Self> {
        if multipliers.contains(&0) {
            return Err(Error::InvalidArgument(
                "supercell multipliers must be >= 1".into(),
            ));
        }
        Ok(Self { base, multipliers })
    }

    /// Total sites: basis count × n_a × n_b × n_c.
    pub fn n_sites(&self) -> usize {
        self.base.basis_sites.len() * self.multipliers.iter().product::<usize>()
    }

    /// Supercell edge lengths (Å) along the three axes.
    pub fn edge_lengths(&self) -> [f64; 3] {
        let a = self.base.lattice_constant;
        [
            a * self.multipliers[0] as f64,
            a * self.multipliers[1] as f64,
            a * self.multipliers[2] as f64,
        ]
    }
}

/// Cartesian site positions (Å). Site order is cell-major (cells iterate
/// `(ia, ib, ic)` with `ic` fastest) with the basis index innermost, so
/// `index = basis + n_basis·(ic + n_c·(ib + n_b·ia))`.
pub fn build_supercell(spec: &SupercellSpec) -> Vec<[f64; 3]> {
    let a = spec.base.lattice_constant;
    let [na, nb, nc] = spec.multipliers;
    let mut sites = Vec::with_capacity(spec.n_sites());
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                for frac in &spec.base.basis_sites {
                    sites.push([
                        a * (ia as f64 + frac[0]),
                        a * (ib as f64 + frac[1]),
                        a * (ic as f64 + frac[2]),
                    ]);
                }
            }
        }
    }
    sites
}

/// One `(i, j)` site pair at one realized distance, with the number of
/// periodic images contributing at that distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRelation {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub multiplicity: usize,
}

/// A site paired with one of its own periodic images. Each unordered
/// image cluster {T, −T} is counted once.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfRelation {
    pub site: usize,
    pub distance: f64,
    pub multiplicity: usize,
}

/// Output of [`enumerate_pairs`].
#[derive(Debug, Clone, Default)]
pub struct PairEnumeration {
    pub pairs: Vec<PairRelation>,
    pub self_pairs: Vec<SelfRelation>,
}

impl PairEnumeration {
    /// Neighbor-relation count per site (each pair contributes to both
    /// endpoints; a self cluster contributes two image neighbors).
    pub fn relations_per_site(&self, n_sites: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n_sites];
        for p in &self.pairs {
            counts[p.i] += p.multiplicity;
            counts[p.j] += p.multiplicity;
        }
        for s in &self.self_pairs {
            counts[s.site] += 2 * s.multiplicity;
        }
        counts
    }

    /// Σ multiplicity over distinct-site pairs.
    pub fn total_weighted_pairs(&self) -> usize {
        self.pairs.iter().map(|p| p.multiplicity).sum()
    }
}

fn distance_key(d: f64) -> i64 {
    (d / DISTANCE_REPORT_PRECISION).round() as i64
}

/// Enumerate every unordered pair cluster within `cutoff` (Å), counting all
/// periodic images. Distances are grouped at 1e−6 Å.
pub fn enumerate_pairs(spec: &SupercellSpec, cutoff: f64) -> Result<PairEnumeration> {
    let cutoff_ok = cutoff.is_finite() && cutoff > 0.0;
    if !cutoff_ok {
        return Err(Error::InvalidArgument(
            "cutoff must be a positive finite length".into(),
        ));
    }
    let edges = spec.edge_lengths();
    let mut shells = [0i64; 3];
    for k in 0..3 {
        shells[k] = (cutoff / edges[k]).floor() as i64 + 1;
        if shells[k] > MAX_IMAGE_SHELLS {
            return Err(Error::ResourceLimit(format!(
                "cutoff {cutoff} Å needs {} image shells along axis {k} \
                 (supercell edge {} Å); the bound is {MAX_IMAGE_SHELLS}",
                shells[k], edges[k]
            )));
        }
    }
    let sites = build_supercell(spec);
    let n = sites.len();
    let reach = cutoff + DISTANCE_REPORT_PRECISION;

    let mut out = PairEnumeration::default();
    for i in 0..n {
        for j in i..n {
            // distance-key -> image count
            let mut groups: BTreeMap<i64, usize> = BTreeMap::new();
            let base = [
                sites[j][0] - sites[i][0],
                sites[j][1] - sites[i][1],
                sites[j][2] - sites[i][2],
            ];
            for ta in -shells[0]..=shells[0] {
                for tb in -shells[1]..=shells[1] {
                    for tc in -shells[2]..=shells[2] {
                        if i == j && ta == 0 && tb == 0 && tc == 0 {
                            continue;
                        }
                        let dx = base[0] + ta as f64 * edges[0];
                        let dy = base[1] + tb as f64 * edges[1];
                        let dz = base[2] + tc as f64 * edges[2];
                        let d = (dx * dx + dy * dy + dz * dz).sqrt();
                        if d <= reach {
                            *groups.entry(distance_key(d)).or_insert(0) += 1;
                        }
                    }
                }
            }
            for (key, count) in groups {
                let distance = key as f64 * DISTANCE_REPORT_PRECISION;
                if i == j {
                    // images come in ±T pairs describing the same cluster
                    debug_assert!(count.is_multiple_of(2));
                    out.self_pairs.push(SelfRelation {
                        site: i,
                        distance,
                        multiplicity: count / 2,
                    });
                } else {
                    out.pairs.push(PairRelation {
                        i,
                        j,
                        distance,
                        multiplicity: count,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Per-distance pair coefficients plus the uniform point term and constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCoefficientTable {
    /// `(distance Å, coefficient eV)` entries; distances unique within
    /// [`DISTANCE_MATCH_TOL`] and at most `cutoff`.
    pub entries: Vec<(f64, f64)>,
    pub cutoff: f64,
    /// Uniform field coefficient B applied to every site (eV).
    pub field_coefficient: f64,
    /// Constant A (eV).
    pub offset: f64,
}

impl PairCoefficientTable {
    fn validate(&self) -> Result<()> {
        for (idx, &(d, v)) in self.entries.iter().enumerate() {
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "table distance {d} must be a positive finite length"
                )));
            }
            if d > self.cutoff + DISTANCE_MATCH_TOL {
                return Err(Error::InvalidArgument(format!(
                    "table distance {d} Å exceeds the cutoff {} Å",
                    self.cutoff
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient at distance {d} is not finite"
                )));
            }
            for &(d2, _) in &self.entries[..idx] {
                if (d - d2).abs() <= DISTANCE_MATCH_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "table distances {d2} and {d} coincide within {DISTANCE_MATCH_TOL} Å"
                    )));
                }
            }
        }
        if !self.field_coefficient.is_finite() || !self.offset.is_finite() {
            return Err(Error::InvalidArgument(
                "field coefficient and offset must be finite".into(),
            ));
        }
        Ok(())
    }

    fn coefficient_for(&self, distance: f64) -> f64 {
        self.entries
            .iter()
            .find(|&&(d, _)| (d - distance).abs() <= DISTANCE_MATCH_TOL)
            .map_or(0.0, |&(_, v)| v)
    }
}

/// Compile a supercell plus coefficient table into an Ising model:
/// `J_ij = Σ_images coeff(d)·multiplicity`, `B_i = field_coefficient`,
/// `A = offset + Σ self-image clusters coeff(d)·multiplicity`.
/// Realized distances with no table entry contribute zero.
pub fn assemble_ising(spec: &SupercellSpec, table: &PairCoefficientTable) -> Result<IsingModel> {
    table.validate()?;
    let enumeration = enumerate_pairs(spec, table.cutoff)?;
    let n = spec.n_sites();

    let mut j_acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for p in &enumeration.pairs {
        let c = table.coefficient_for(p.distance);
        if c != 0.0 {
            *j_acc.entry((p.i, p.j)).or_insert(0.0) += c * p.multiplicity as f64;
        }
    }
    let couplings: Vec<(usize, usize, f64)> = j_acc
        .into_iter()
        .filter(|&(_, v)| v != 0.0)
        .map(|((i, j), v)| (i, j, v))
        .collect();

    let mut offset = table.offset;
    for s in &enumeration.self_pairs {
        offset += table.coefficient_for(s.distance) * s.multiplicity as f64;
    }

    IsingModel::new(n, offset, vec![table.field_coefficient; n], couplings)
}

/// On-disk lattice spec: fcc geometry plus the coefficient table.
/// Compiles to the instance format via [`LatticeInstanceSpec::assemble`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeInstanceSpec {
    pub lattice_constant: f64,
    pub multipliers: [usize; 3],
    pub cutoff: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub field: f64,
    pub pair_coefficients: Vec<(f64, f64)>,
}

impl LatticeInstanceSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn supercell(&self) -> Result<SupercellSpec> {
        let constant_ok = self.lattice_constant.is_finite() && self.lattice_constant > 0.0;
        if !constant_ok {
            return Err(Error::InvalidArgument(
                "lattice constant must be a positive finite length".into(),
            ));
        }
        SupercellSpec::new(BaseCell::fcc(self.lattice_constant), self.multipliers)
    }

    pub fn table(&self) -> PairCoefficientTable {
        PairCoefficientTable {
            entries: self.pair_coefficients.clone(),
            cutoff: self.cutoff,
            field_coefficient: self.field,
            offset: self.offset,
        }
    }

    pub fn assemble(&self) -> Result<IsingModel> {
        assemble_ising(&self.supercell()?, &self.table())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::SpinConfiguration;

    fn fcc_spec(mult: [usize; 3]) -> SupercellSpec {
        SupercellSpec::new(BaseCell::fcc(3.8), mult).unwrap()
    }

    // Independent image-counting oracle: fixed ±3-shell scan, per-site
    // neighbor counts only.
    fn oracle_relations(spec: &SupercellSpec, cutoff: f64) -> Vec<usize> {
        let sites = build_supercell(spec);
        let edges = spec.edge_lengths();
        let mut counts = vec![0usize; sites.len()];
        for (i, ri) in sites.iter().enumerate() {
            for rj in &sites {
                for ta in -3i64..=3 {
                    for tb in -3i64..=3 {
                        for tc in -3i64..=3 {
                            let dx = rj[0] + ta as f64 * edges[0] - ri[0];
                            let dy = rj[1] + tb as f64 * edges[1] - ri[1];
                            let dz = rj[2] + tc as f64 * edges[2] - ri[2];
                            let d2 = dx * dx + dy * dy + dz * dz;
                            if d2 > 1e-12 && d2.sqrt() <= cutoff + 1e-6 {
                                counts[i] += 1;
                            }
                        }
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn unit_cell_positions() {
        let sites = build_supercell(&fcc_spec([1, 1, 1]));
        assert_eq!(sites.len(), 4);
        let want = [
            [0.0, 0.0, 0.0],
            [0.0, 1.9, 1.9],
            [1.9, 0.0, 1.9],
            [1.9, 1.9, 0.0],
        ];
        for (got, want) in sites.iter().zip(want.iter()) {
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn supercell_site_counts() {
        assert_eq!(build_supercell(&fcc_spec([2, 2, 2])).len(), 32);
        assert_eq!(build_supercell(&fcc_spec([1, 2, 3])).len(), 24);
        assert_eq!(build_supercell(&fcc_spec([1, 1, 3])).len(), 12);
        assert_eq!(build_supercell(&fcc_spec([1, 2, 2])).len(), 16);
    }

    #[test]
    fn nearest_neighbors_2x2x2() {
        let spec = fcc_spec([2, 2, 2]);
        let e = enumerate_pairs(&spec, 2.7).unwrap();
        let per_site = e.relations_per_site(32);
        assert!(per_site.iter().all(|&c| c == 12), "{per_site:?}");
        assert_eq!(e.total_weighted_pairs(), 192);
        assert!(e.self_pairs.is_empty());
        assert_eq!(per_site, oracle_relations(&spec, 2.7));
    }

    #[test]
    fn nearest_neighbors_1x1x1_through_images() {
        let spec = fcc_spec([1, 1, 1]);
        let e = enumerate_pairs(&spec, 2.7).unwrap();
        let per_site = e.relations_per_site(4);
        assert!(per_site.iter().all(|&c| c == 12), "{per_site:?}");
        assert_eq!(per_site, oracle_relations(&spec, 2.7));
        // every distinct pair realized through 4 images of the partner
        assert!(e.pairs.iter().all(|p| p.multiplicity == 4));
        assert_eq!(e.total_weighted_pairs(), 24);
    }

    #[test]
    fn per_site_count_independent_of_multipliers() {
        for mult in [[1, 1, 3], [1, 2, 2], [1, 2, 3]] {
            let spec = fcc_spec(mult);
            let e = enumerate_pairs(&spec, 2.7).unwrap();
            let per_site = e.relations_per_site(spec.n_sites());
            assert!(per_site.iter().all(|&c| c == 12), "{mult:?}: {per_site:?}");
            assert_eq!(per_site, oracle_relations(&spec, 2.7));
        }
    }

    #[test]
    fn below_nearest_neighbor_distance_is_empty() {
        let e = enumerate_pairs(&fcc_spec([2, 2, 2]), 2.5).unwrap();
        assert!(e.pairs.is_empty());
        assert!(e.self_pairs.is_empty());
    }

    #[test]
    fn full_cutoff_matches_oracle() {
        let spec = fcc_spec([1, 1, 3]);
        let e = enumerate_pairs(&spec, 7.6).unwrap();
        let per_site = e.relations_per_site(spec.n_sites());
        assert_eq!(per_site, oracle_relations(&spec, 7.6));
    }

    #[test]
    fn oversized_cutoff_hits_shell_bound() {
        let err = enumerate_pairs(&fcc_spec([1, 1, 1]), 3.8 * 7.0).unwrap_err();
        assert!(err.to_string().contains("shells"), "{err}");
    }

    #[test]
    fn assemble_single_entry_table() {
        let spec = fcc_spec([2, 2, 2]);
        let c = 0.37;
        let table = PairCoefficientTable {
            entries: vec![(2.687, c)],
            cutoff: 2.7,
            field_coefficient: 0.0,
            offset: 0.0,
        };
        let model = assemble_ising(&spec, &table).unwrap();
        let e = enumerate_pairs(&spec, 2.7).unwrap();
        assert_eq!(model.couplings().len(), e.pairs.len());
        for (coupling, pair) in model.couplings().iter().zip(e.pairs.iter()) {
            assert_eq!((coupling.0, coupling.1), (pair.i, pair.j));
            assert!((coupling.2 - c * pair.multiplicity as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_field_model_ground_state() {
        let spec = fcc_spec([1, 1, 1]);
        let table = PairCoefficientTable {
            entries: vec![],
            cutoff: 2.0,
            field_coefficient: 0.3,
            offset: 0.0,
        };
        let model = assemble_ising(&spec, &table).unwrap();
        assert!(model.couplings().is_empty());
        let s = model.exhaustive_ground_states(12).unwrap();
        assert_eq!(s.ground_states.len(), 1);
        assert_eq!(s.ground_states[0].spins(), &[-1, -1, -1, -1]);
        assert!((s.min_energy - (-1.2)).abs() < 1e-12);
    }

    #[test]
    fn offset_only_table() {
        let table = PairCoefficientTable {
            entries: vec![],
            cutoff: 2.0,
            field_coefficient: 0.0,
            offset: 4.25,
        };
        let model = assemble_ising(&fcc_spec([1, 1, 1]), &table).unwrap();
        assert_eq!(model.offset(), 4.25);
        assert!(model.couplings().is_empty());
        let any = SpinConfiguration::from_basis_index(9, 4);
        assert_eq!(model.energy(&any).unwrap(), 4.25);
    }

    #[test]
    fn self_image_clusters_fold_into_offset() {
        // 1x1x1 with cutoff above the cell edge: each site sees its own
        // images at distance a.
        let spec = fcc_spec([1, 1, 1]);
        let c2 = -0.11;
        let table = PairCoefficientTable {
            entries: vec![(3.8, c2)],
            cutoff: 3.9,
            field_coefficient: 0.0,
            offset: 1.0,
        };
        let e = enumerate_pairs(&spec, 3.9).unwrap();
        let self_mult: usize = e
            .self_pairs
            .iter()
            .filter(|s| (s.distance - 3.8).abs() < 1e-3)
            .map(|s| s.multiplicity)
            .sum();
        // 6 axis images per site, counted once per {T, -T} cluster
        assert_eq!(self_mult, 4 * 3);
        let model = assemble_ising(&spec, &table).unwrap();
        assert!((model.offset() - (1.0 + c2 * self_mult as f64)).abs() < 1e-12);
    }

    #[test]
    fn translation_invariance_of_row_strength() {
        let spec = fcc_spec([1, 2, 3]);
        let table = PairCoefficientTable {
            entries: vec![(2.687, 0.05), (3.8, -0.02), (4.653, 0.007)],
            cutoff: 4.7,
            field_coefficient: 0.01,
            offset: 0.0,
        };
        let model = assemble_ising(&spec, &table).unwrap();
        let n = model.n_sites();
        let mut row = vec![0.0f64; n];
        for &(i, j, v) in model.couplings() {
            row[i] += v.abs();
            row[j] += v.abs();
        }
        for &r in &row {
            assert!((r - row[0]).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn compilation_is_linear_in_the_table() {
        let spec = fcc_spec([1, 1, 3]);
        let base = PairCoefficientTable {
            entries: vec![(2.687, 0.05), (3.8, -0.02)],
            cutoff: 4.0,
            field_coefficient: 0.01,
            offset: 0.5,
        };
        let lambda = 3.5;
        let scaled = PairCoefficientTable {
            entries: base.entries.iter().map(|&(d, v)| (d, lambda * v)).collect(),
            cutoff: base.cutoff,
            field_coefficient: lambda * base.field_coefficient,
            offset: base.offset,
        };
        let m1 = assemble_ising(&spec, &base).unwrap();
        let m2 = assemble_ising(&spec, &scaled).unwrap();
        for (a, b) in m1.fields().iter().zip(m2.fields()) {
            assert!((b - lambda * a).abs() < 1e-12);
        }
        for (&(i1, j1, v1), &(i2, j2, v2)) in m1.couplings().iter().zip(m2.couplings()) {
            assert_eq!((i1, j1), (i2, j2));
            assert!((v2 - lambda * v1).abs() < 1e-9);
        }
        // non-offset part of A scales
        assert!(((m2.offset() - base.offset) - lambda * (m1.offset() - base.offset)).abs() < 1e-9);
        let s1 = m1.exhaustive_ground_states(12).unwrap();
        let s2 = m2.exhaustive_ground_states(12).unwrap();
        let g1: Vec<u64> = s1.ground_states.iter().map(|g| g.basis_index()).collect();
        let g2: Vec<u64> = s2.ground_states.iter().map(|g| g.basis_index()).collect();
        assert_eq!(g1, g2);
    }

    #[test]
    fn table_distance_beyond_cutoff_rejected() {
        let table = PairCoefficientTable {
            entries: vec![(5.0, 0.1)],
            cutoff: 2.7,
            field_coefficient: 0.0,
            offset: 0.0,
        };
        assert!(assemble_ising(&fcc_spec([1, 1, 1]), &table).is_err());
    }

    #[test]
    fn lattice_spec_json() {
        let json = r#"{
            "lattice_constant": 3.8,
            "multipliers": [2, 2, 2],
            "cutoff": 2.7,
            "offset": 0.0,
            "field": 0.01,
            "pair_coefficients": [[2.687, 0.05]]
        }"#;
        let spec = LatticeInstanceSpec::from_json_str(json).unwrap();
        let model = spec.assemble().unwrap();
        assert_eq!(model.n_sites(), 32);
        assert_eq!(model.couplings().len(), 192);
    }
}
