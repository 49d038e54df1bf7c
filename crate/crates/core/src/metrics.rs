//! Agreement between an inverted profile and the classical reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::SlownessVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `|v_solved − v_ref| / v_ref` per layer.
    pub per_layer_rel_error: Vec<f64>,
    pub max_rel_error: f64,
    /// Pearson form on velocities, `Σ (v_solved − v_ref)² / v_ref`.
    pub chi_squared: f64,
    pub iterations_compared: usize,
}

pub fn compare(solved: &SlownessVector, reference: &SlownessVector) -> Result<ComparisonReport> {
    if solved.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            what: "compared slowness vectors",
            expected: reference.len(),
            actual: solved.len(),
        });
    }
    if let Some(i) = reference.as_slice().iter().position(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::OutOfRange(format!("reference slowness {i} is zero or non-finite")));
    }
    let mut per_layer = Vec::with_capacity(solved.len());
    let mut chi_squared = 0.0;
    for (vs, vr) in solved.velocities().iter().zip(reference.velocities()) {
        let diff = vs - vr;
        per_layer.push(diff.abs() / vr.abs());
        chi_squared += diff * diff / vr;
    }
    let max_rel_error = per_layer.iter().copied().fold(0.0, f64::max);
    Ok(ComparisonReport {
        per_layer_rel_error: per_layer,
        max_rel_error,
        chi_squared,
        iterations_compared: 1,
    })
}

/// Row of the comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub layer: usize,
    pub depth_m: f64,
    pub v_classical: f64,
    pub v_quantum: f64,
    pub rel_error: f64,
}

/// Writes `layer,depth_m,v_classical,v_quantum,rel_error`; layers are 1-based.
pub fn write_comparison_csv<W: std::io::Write>(
    writer: W,
    depths: &[f64],
    solved: &SlownessVector,
    reference: &SlownessVector,
    report: &ComparisonReport,
) -> Result<()> {
    let n = report.per_layer_rel_error.len();
    if depths.len() != n || solved.len() != n || reference.len() != n {
        return Err(Error::DimensionMismatch {
            what: "comparison CSV columns",
            expected: n,
            actual: depths.len().min(solved.len()).min(reference.len()),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let vq = solved.velocities();
    let vc = reference.velocities();
    for j in 0..n {
        wtr.serialize(ComparisonRow {
            layer: j + 1,
            depth_m: depths[j],
            v_classical: vc[j],
            v_quantum: vq[j],
            rel_error: report.per_layer_rel_error[j],
        })?;
    }
    wtr.flush()?;
    Ok(())
}
