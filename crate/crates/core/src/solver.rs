//! Recursive box-shrinking inversion.
//!
//! Each iteration encodes the current box as a QUBO, takes the best sample,
//! maps it back to a slowness estimate `s`, and then either stops (when
//! `‖s − s₀‖² ≤ ε`) or re-centers the box on `s` with half the width. The
//! box is never enlarged or shifted to keep the true solution inside; if
//! the initial box excludes it, later iterates cannot recover it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::{boxed_rhs, recover_slowness, BoxTransform, LinearSystem, SlownessVector};
use crate::qubo::{build_qubo, expand_matrix, BitLayout, QuboProblem};
use crate::samplers::{
    solve_annealed, solve_exact, solve_gauged, split_seed, AnnealSchedule, SampleSet, DEFAULT_BETA_FACTORS,
    DEFAULT_READS, DEFAULT_SWEEPS,
};

/// Annealing parameters that are re-scaled to every iteration's QUBO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTemplate {
    pub reads: usize,
    pub sweeps: usize,
    /// Beta range in units of `1/⟨|Q|⟩`.
    pub beta_factors: (f64, f64),
    pub seed: u64,
}

impl Default for ScheduleTemplate {
    fn default() -> Self {
        Self {
            reads: DEFAULT_READS,
            sweeps: DEFAULT_SWEEPS,
            beta_factors: DEFAULT_BETA_FACTORS,
            seed: 0,
        }
    }
}

impl ScheduleTemplate {
    /// Concrete schedule for iteration `iteration` (seeded independently per iteration).
    pub fn resolve(&self, p: &QuboProblem, iteration: usize) -> Result<AnnealSchedule> {
        AnnealSchedule::scaled_to(
            p,
            self.reads,
            self.sweeps,
            self.beta_factors,
            split_seed(self.seed, iteration as u64),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerChoice {
    Exact,
    Annealed { schedule: ScheduleTemplate },
    Gauged { schedule: ScheduleTemplate, num_gauges: usize },
}

impl SamplerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerChoice::Exact => "exact",
            SamplerChoice::Annealed { .. } => "annealed",
            SamplerChoice::Gauged { .. } => "gauged",
        }
    }

    pub fn sample(&self, p: &QuboProblem, iteration: usize) -> Result<SampleSet> {
        match self {
            SamplerChoice::Exact => solve_exact(p),
            SamplerChoice::Annealed { schedule } => solve_annealed(p, &schedule.resolve(p, iteration)?),
            SamplerChoice::Gauged { schedule, num_gauges } => {
                solve_gauged(p, &schedule.resolve(p, iteration)?, *num_gauges)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once `‖s − s₀‖² ≤ tolerance`. Zero disables the check, so all
    /// `max_iterations` run even when an iterate lands on the box center.
    pub tolerance: f64,
    pub bits_per_var: usize,
    pub initial_box: BoxTransform,
    pub sampler: SamplerChoice,
}

impl SolverConfig {
    /// 20 iterations, `ε = 0`, three bits per variable.
    pub fn new(initial_box: BoxTransform, sampler: SamplerChoice) -> Self {
        Self {
            max_iterations: 20,
            tolerance: 0.0,
            bits_per_var: 3,
            initial_box,
            sampler,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        if self.bits_per_var == 0 {
            return Err(Error::InvalidConfig("bits_per_var must be at least 1".into()));
        }
        if self.initial_box.dim() != dim {
            return Err(Error::DimensionMismatch {
                what: "initial box dimension",
                expected: dim,
                actual: self.initial_box.dim(),
            });
        }
        if let SamplerChoice::Gauged { num_gauges: 0, .. } = self.sampler {
            return Err(Error::InvalidConfig("num_gauges must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub half_width: f64,
    pub center: Vec<f64>,
    pub slowness: Vec<f64>,
    /// `‖M s − t‖₂`.
    pub residual: f64,
    /// `‖s − s₀‖²`.
    pub update_norm_sq: f64,
    /// Best QUBO energy, offset included.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub final_slowness: SlownessVector,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub num_binary_vars: usize,
    pub bits_per_var: usize,
}

/// Iteration-0 QUBO for `system` over `bx`.
pub fn encode_box(system: &LinearSystem, bx: &BoxTransform, bits_per_var: usize) -> Result<QuboProblem> {
    let layout = BitLayout::new(system.dim(), bits_per_var)?;
    let b = boxed_rhs(system, bx)?;
    let a = expand_matrix(system.matrix(), &layout)?;
    build_qubo(&a, &b, &layout)
}

pub fn invert(system: &LinearSystem, config: &SolverConfig) -> Result<InversionResult> {
    let m = system.dim();
    config.validate(m)?;
    let layout = BitLayout::new(m, config.bits_per_var)?;
    let a = expand_matrix(system.matrix(), &layout)?;

    let mut bx = config.initial_box.clone();
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut termination = Termination::MaxIterations;
    let mut current: Option<SlownessVector> = None;

    for iteration in 1..=config.max_iterations {
        let b = boxed_rhs(system, &bx)?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration,
                what: format!("boxed right-hand side (L = {})", bx.half_width()),
            });
        }
        let qubo = build_qubo(&a, &b, &layout)?;
        let samples = config.sampler.sample(&qubo, iteration)?;
        let best = samples.best().ok_or_else(|| Error::NonFinite {
            iteration,
            what: "sampler returned no records".into(),
        })?;
        let x = layout.decode(&best.assignment)?;
        let s = recover_slowness(&bx, &x)?;
        if !s.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                iteration,
                what: "slowness estimate".into(),
            });
        }
        let update_norm_sq: f64 = s
            .as_slice()
            .iter()
            .zip(bx.center())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        trace.push(IterationRecord {
            iteration,
            half_width: bx.half_width(),
            center: bx.center().to_vec(),
            slowness: s.as_slice().to_vec(),
            residual: system.residual_norm(&s),
            update_norm_sq,
            energy: best.energy,
        });
        if config.tolerance > 0.0 && update_norm_sq <= config.tolerance {
            termination = Termination::Tolerance;
            current = Some(s);
            break;
        }
        if iteration < config.max_iterations {
            bx = bx.recentered(&s)?;
        }
        current = Some(s);
    }

    Ok(InversionResult {
        final_slowness: current.expect("at least one iteration runs"),
        trace,
        termination,
        num_binary_vars: layout.total_bits(),
        bits_per_var: config.bits_per_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::build_system;
    use crate::model::{Layer, LayeredModel};
    use crate::oracle::forward_substitution;
    use nalgebra::{DMatrix, DVector};

    fn scalar_system() -> LinearSystem {
        LinearSystem::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 2.0)).unwrap()
    }

    #[test]
    fn centered_solution_stops_immediately() {
        let mut cfg = SolverConfig::new(BoxTransform::new(vec![1.0], 0.5).unwrap(), SamplerChoice::Exact);
        cfg.tolerance = 1e-12;
        let r = invert(&scalar_system(), &cfg).unwrap();
        assert_eq!(r.final_slowness.as_slice(), &[1.0]);
        assert!(r.trace.len() <= 5);
        assert_eq!(r.termination, Termination::Tolerance);
        assert!(r.trace.last().unwrap().update_norm_sq <= 1e-12);
    }

    #[test]
    fn three_layers_match_forward_substitution() {
        let layers = vec![
            Layer::new(1000.0, 1000.0).unwrap(),
            Layer::new(1000.0, 1500.0).unwrap(),
            Layer::new(1000.0, 2000.0).unwrap(),
        ];
        let model = LayeredModel::new(layers, vec![0.0; 3]).unwrap();
        let sys = build_system(&model);
        let bx = BoxTransform::new(vec![7.5e-4; 3], 5e-4).unwrap();
        let r = invert(&sys, &SolverConfig::new(bx, SamplerChoice::Exact)).unwrap();
        assert_eq!(r.trace.len(), 20);
        assert_eq!(r.termination, Termination::MaxIterations);
        let oracle = forward_substitution(&sys).unwrap();
        let err = r
            .final_slowness
            .velocities()
            .iter()
            .zip(oracle.velocities())
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn half_width_halves_and_iterates_stay_in_box() {
        let model = LayeredModel::new(
            vec![Layer::new(500.0, 1480.0).unwrap(), Layer::new(700.0, 1510.0).unwrap()],
            vec![50.0, 80.0],
        )
        .unwrap();
        let sys = build_system(&model);
        let bx = BoxTransform::from_mean_speed(1500.0, 2).unwrap();
        let r = invert(&sys, &SolverConfig::new(bx.clone(), SamplerChoice::Exact)).unwrap();
        for (k, rec) in r.trace.iter().enumerate() {
            assert_eq!(rec.half_width, bx.half_width() * 2f64.powi(-(k as i32)));
            for (s, c) in rec.slowness.iter().zip(&rec.center) {
                assert!(*s >= c - rec.half_width && *s < c + rec.half_width);
            }
        }
    }

    #[test]
    fn config_validation() {
        let bx = BoxTransform::new(vec![1.0], 0.5).unwrap();
        let mut cfg = SolverConfig::new(bx.clone(), SamplerChoice::Exact);
        cfg.max_iterations = 0;
        assert!(invert(&scalar_system(), &cfg).is_err());
        let mut cfg = SolverConfig::new(bx.clone(), SamplerChoice::Exact);
        cfg.bits_per_var = 0;
        assert!(invert(&scalar_system(), &cfg).is_err());
        let mut cfg = SolverConfig::new(bx, SamplerChoice::Exact);
        cfg.tolerance = -1.0;
        assert!(invert(&scalar_system(), &cfg).is_err());
        let cfg = SolverConfig::new(BoxTransform::new(vec![1.0, 1.0], 0.5).unwrap(), SamplerChoice::Exact);
        assert!(invert(&scalar_system(), &cfg).is_err());
        let cfg = SolverConfig::new(
            BoxTransform::new(vec![1.0], 0.5).unwrap(),
            SamplerChoice::Gauged { schedule: ScheduleTemplate::default(), num_gauges: 0 },
        );
        assert!(invert(&scalar_system(), &cfg).is_err());
    }

    #[test]
    fn exact_sampler_guard_propagates() {
        let model = LayeredModel::new(vec![Layer::new(100.0, 1500.0).unwrap(); 9], vec![0.0; 9]).unwrap();
        let sys = build_system(&model);
        let cfg = SolverConfig::new(BoxTransform::from_mean_speed(1500.0, 9).unwrap(), SamplerChoice::Exact);
        assert!(matches!(invert(&sys, &cfg), Err(Error::TooLarge { n: 27, .. })));
    }

    #[test]
    fn encode_box_matches_pipeline() {
        let p = encode_box(&scalar_system(), &BoxTransform::new(vec![1.0], 0.5).unwrap(), 1).unwrap();
        // A = [[2]], b = [2]: Q = 4 − 8 = −4, C = 4.
        assert_eq!(p.matrix()[(0, 0)], -4.0);
        assert_eq!(p.offset(), 4.0);
    }
}
