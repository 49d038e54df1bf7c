//! Browser bindings: forward travel times, a full inversion trace, and the
//! gauge-transform spectrum check. Every export returns a JSON string.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use seisqubo::model::uniform_boundaries;
use seisqubo::qubo::bits_to_spins;
use seisqubo::{
    apply_gauge, build_system, compare, condition_bound, forward_substitution, invert, model_from_profile,
    travel_times, BoxTransform, GaugeVector, IsingProblem, LayeredModel, SamplerChoice, ScheduleTemplate,
    SolverConfig, SoundSpeedProfile, SpacingPolicy,
};

pub const MAX_GAUGE_SPINS: usize = 12;

#[derive(Debug, Serialize)]
pub struct ForwardView {
    pub depths_m: Vec<f64>,
    pub velocity_mps: Vec<f64>,
    pub path_m: Vec<f64>,
    pub time_s: Vec<f64>,
    pub kappa_inf: f64,
}

#[derive(Debug, Serialize)]
pub struct IterationView {
    pub iteration: usize,
    pub half_width: f64,
    pub residual: f64,
    pub max_rel_error: f64,
    pub velocity_mps: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct InversionView {
    pub depths_m: Vec<f64>,
    pub reference_mps: Vec<f64>,
    pub num_binary_vars: usize,
    pub iterations: Vec<IterationView>,
    pub max_rel_error: f64,
}

#[derive(Debug, Serialize)]
pub struct GaugeView {
    pub gauge: Vec<i8>,
    pub spectrum: Vec<f64>,
    pub gauged_spectrum: Vec<f64>,
    pub identical: bool,
    pub restored: bool,
}

fn synthetic_model(layers: usize, theta0_deg: f64, max_depth: f64) -> seisqubo::Result<(SoundSpeedProfile, LayeredModel)> {
    if !(0.0..90.0).contains(&theta0_deg) {
        return Err(seisqubo::Error::OutOfRange(format!(
            "incident angle must lie in [0, 90) degrees, got {theta0_deg}"
        )));
    }
    let profile = SoundSpeedProfile::synthetic(max_depth, 10.0)?;
    let model = model_from_profile(
        &profile,
        &uniform_boundaries(max_depth, layers),
        &SpacingPolicy::IncidentAngle(theta0_deg.to_radians()),
    )?;
    Ok((profile, model))
}

pub fn forward_view(layers: usize, theta0_deg: f64, max_depth: f64) -> seisqubo::Result<ForwardView> {
    let (_, model) = synthetic_model(layers, theta0_deg, max_depth)?;
    Ok(ForwardView {
        depths_m: model.bottom_depths(),
        velocity_mps: model.velocities(),
        path_m: model.path_lengths(),
        time_s: travel_times(&model).into_inner(),
        kappa_inf: condition_bound(&model, 0.0)?.kappa_inf,
    })
}

pub fn inversion_view(
    layers: usize,
    theta0_deg: f64,
    max_depth: f64,
    bits: usize,
    iterations: usize,
    sampler: &str,
    seed: u64,
) -> seisqubo::Result<InversionView> {
    let (profile, model) = synthetic_model(layers, theta0_deg, max_depth)?;
    let sys = build_system(&model);
    let schedule = ScheduleTemplate { seed, ..Default::default() };
    let choice = match sampler {
        "exact" => SamplerChoice::Exact,
        "annealed" => SamplerChoice::Annealed { schedule },
        "gauged" => SamplerChoice::Gauged { schedule, num_gauges: 10 },
        other => return Err(seisqubo::Error::InvalidConfig(format!("unknown sampler {other:?}"))),
    };
    let mut config = SolverConfig::new(BoxTransform::from_mean_speed(profile.mean_speed(), model.len())?, choice);
    config.bits_per_var = bits;
    config.max_iterations = iterations;
    let result = invert(&sys, &config)?;
    let reference = forward_substitution(&sys)?;
    let mut views = Vec::with_capacity(result.trace.len());
    for rec in &result.trace {
        let s = seisqubo::SlownessVector::new(rec.slowness.clone());
        views.push(IterationView {
            iteration: rec.iteration,
            half_width: rec.half_width,
            residual: rec.residual,
            max_rel_error: compare(&s, &reference)?.max_rel_error,
            velocity_mps: s.velocities(),
        });
    }
    Ok(InversionView {
        depths_m: model.bottom_depths(),
        reference_mps: reference.velocities(),
        num_binary_vars: result.num_binary_vars,
        max_rel_error: compare(&result.final_slowness, &reference)?.max_rel_error,
        iterations: views,
    })
}

pub fn gauge_view(n: usize, seed: u64) -> seisqubo::Result<GaugeView> {
    if n == 0 || n > MAX_GAUGE_SPINS {
        return Err(seisqubo::Error::TooLarge { n, limit: MAX_GAUGE_SPINS });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let couplings = DMatrix::from_fn(n, n, |i, j| if j > i { rng.gen_range(-1.0..1.0) } else { 0.0 });
    let ising = IsingProblem::new(fields, couplings, 0.0)?;
    let g = GaugeVector::random(n, &mut rng);
    let gauged = apply_gauge(&ising, &g)?;
    let spectrum = |p: &IsingProblem| {
        let mut e: Vec<f64> = (0u32..1 << n)
            .map(|k| {
                let bits: Vec<u8> = (0..n).map(|i| ((k >> i) & 1) as u8).collect();
                p.energy(&bits_to_spins(&bits))
            })
            .collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let before = spectrum(&ising);
    let after = spectrum(&gauged);
    Ok(GaugeView {
        identical: before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()),
        restored: apply_gauge(&gauged, &g)? == ising,
        gauge: g.signs().to_vec(),
        spectrum: before,
        gauged_spectrum: after,
    })
}

fn to_json<T: Serialize>(r: seisqubo::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&format!("{}: {e}", e.kind())))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Travel times for `layers` equal layers of the synthetic profile.
#[wasm_bindgen]
pub fn forward(layers: usize, theta0_deg: f64, max_depth: f64) -> Result<String, JsError> {
    to_json(forward_view(layers, theta0_deg, max_depth))
}

/// Full inversion with per-iteration velocity profiles.
#[wasm_bindgen]
pub fn inversion(
    layers: usize,
    theta0_deg: f64,
    max_depth: f64,
    bits: usize,
    iterations: usize,
    sampler: &str,
    seed: u32,
) -> Result<String, JsError> {
    to_json(inversion_view(layers, theta0_deg, max_depth, bits, iterations, sampler, u64::from(seed)))
}

/// Energy spectrum of a random Ising problem before and after a random gauge.
#[wasm_bindgen]
pub fn gauge_spectrum(n: usize, seed: u32) -> Result<String, JsError> {
    to_json(gauge_view(n, u64::from(seed)))
}
