//! `generate` and `solve-exact`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crystal_qaoa::seed::derive_seed;
use crystal_qaoa::{Connectivity, IsingModel, LatticeInstanceSpec, SpectrumSummary};

use crate::config::load_model;
use crate::experiment::atomic_write;

/// Compile a lattice spec, or draw a fully connected random model, into an
/// instance file.
pub fn cmd_generate(
    lattice: Option<&Path>,
    random_n: Option<usize>,
    scale: f64,
    seed: u64,
    output: &Path,
) -> Result<()> {
    let model = match (lattice, random_n) {
        (Some(path), None) => {
            let spec = LatticeInstanceSpec::from_json_file(path)
                .with_context(|| format!("parsing lattice spec {}", path.display()))?;
            spec.assemble()
                .with_context(|| format!("compiling lattice spec {}", path.display()))?
        }
        (None, Some(n)) => {
            IsingModel::random(n, scale, derive_seed(seed, "generate"), Connectivity::Full)
                .context("drawing random instance")?
        }
        _ => bail!("pass exactly one of --lattice <spec.json> or --random-n <N>"),
    };

    atomic_write(output, model.to_json_string().as_bytes())?;

    let n = model.n_sites();
    let field_terms = model.fields().iter().filter(|h| **h != 0.0).count();
    let coupling_terms = model.couplings().len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &h in model.fields() {
        lo = lo.min(h);
        hi = hi.max(h);
    }
    for &(_, _, v) in model.couplings() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    println!(
        "wrote {}: n={n}, field terms={field_terms}, coupling terms={coupling_terms}, \
         coefficients in [{lo}, {hi}], offset={}",
        output.display(),
        model.offset()
    );
    if coupling_terms == 0 {
        eprintln!("warning: instance has zero coupling terms (cutoff below the nearest-neighbor distance?)");
    }
    Ok(())
}

/// Spectrum floor as written by `solve-exact`. At most 1024 ground
/// configurations are listed; `degeneracy` always carries the full count.
#[derive(Serialize)]
struct SpectrumJson<'a> {
    min_energy: f64,
    degeneracy: usize,
    truncated: bool,
    ground_states: Vec<&'a [i8]>,
    next_energy: Option<f64>,
}

const MAX_LISTED_GROUND_STATES: usize = 1024;

fn spectrum_json(spectrum: &SpectrumSummary) -> String {
    let listed = spectrum.ground_states.len().min(MAX_LISTED_GROUND_STATES);
    let json = SpectrumJson {
        min_energy: spectrum.min_energy,
        degeneracy: spectrum.degeneracy(),
        truncated: spectrum.ground_states.len() > listed,
        ground_states: spectrum.ground_states[..listed]
            .iter()
            .map(|g| g.spins())
            .collect(),
        next_energy: spectrum.next_energy,
    };
    serde_json::to_string_pretty(&json).expect("spectrum serialization cannot fail")
}

/// Exhaustively solve an instance and write its spectrum floor as JSON.
pub fn cmd_solve_exact(
    instance: &Path,
    output: Option<&PathBuf>,
    max_qubits: usize,
) -> Result<()> {
    let model = load_model(instance)?;
    let spectrum = model
        .exhaustive_ground_states(max_qubits)
        .with_context(|| format!("solving {}", instance.display()))?;
    let json = spectrum_json(&spectrum);
    match output {
        Some(path) => {
            atomic_write(path, json.as_bytes())?;
            println!(
                "wrote {}: min_energy={}, degeneracy={}, next_energy={}",
                path.display(),
                spectrum.min_energy,
                spectrum.degeneracy(),
                spectrum
                    .next_energy
                    .map_or("none".to_string(), |e| e.to_string())
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crystal_qaoa::SpinConfiguration;

    #[test]
    fn spectrum_json_shape() {
        let spectrum = SpectrumSummary {
            min_energy: -1.0,
            ground_states: vec![
                SpinConfiguration::from_basis_index(1, 2),
                SpinConfiguration::from_basis_index(2, 2),
            ],
            next_energy: Some(1.0),
        };
        let text = spectrum_json(&spectrum);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["degeneracy"], 2);
        assert_eq!(v["truncated"], false);
        assert_eq!(v["ground_states"][0][0], -1);
        assert_eq!(v["next_energy"], 1.0);
    }
}
