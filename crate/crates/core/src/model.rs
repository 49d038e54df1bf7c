//! Layered medium geometry and the forward travel-time problem.
//!
//! A model is a stack of horizontal layers, each with a thickness `h_j`, a
//! sound speed `v_j` and a source spacing `Δ_j`. The ray crossing layer `j`
//! is inclined by `θ_j = arctan(Δ_j / h_j)` and travels `h_j / cos θ_j`
//! in each direction. All quantities are SI: meters, meters/second, seconds.

use std::f64::consts::FRAC_PI_2;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::SlownessVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    thickness: f64,
    velocity: f64,
}

impl Layer {
    pub fn new(thickness: f64, velocity: f64) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "layer thickness must be positive, got {thickness}"
            )));
        }
        if !(velocity > 0.0 && velocity.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "layer velocity must be positive, got {velocity}"
            )));
        }
        Ok(Self {
            thickness,
            velocity,
        })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }
}

/// Inclination of the ray inside `layer` for a source spacing `spacing`.
pub fn ray_angle(layer: &Layer, spacing: f64) -> Result<f64> {
    angle_for(layer.thickness, spacing)
}

fn angle_for(thickness: f64, spacing: f64) -> Result<f64> {
    if !(thickness > 0.0) {
        return Err(Error::InvalidModel(format!(
            "thickness must be positive, got {thickness}"
        )));
    }
    if !(spacing >= 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "source spacing must be non-negative, got {spacing}"
        )));
    }
    Ok((spacing / thickness).atan())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredModel {
    layers: Vec<Layer>,
    spacing: Vec<f64>,
}

impl LayeredModel {
    pub fn new(layers: Vec<Layer>, spacing: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        if spacing.len() != layers.len() {
            return Err(Error::DimensionMismatch {
                what: "source spacing per layer",
                expected: layers.len(),
                actual: spacing.len(),
            });
        }
        for (layer, &delta) in layers.iter().zip(&spacing) {
            let theta = ray_angle(layer, delta)?;
            // arctan of a huge ratio rounds to π/2, where cos θ degenerates.
            if theta >= FRAC_PI_2 || theta.cos() <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "ray angle {theta} is not below π/2"
                )));
            }
        }
        Ok(Self { layers, spacing })
    }

    /// Model in which every layer shares the incident angle `theta0`
    /// (radians), i.e. `Δ_j = h_j tan θ₀`.
    pub fn with_incident_angle(layers: Vec<Layer>, theta0: f64) -> Result<Self> {
        if !(0.0..FRAC_PI_2).contains(&theta0) {
            return Err(Error::OutOfRange(format!(
                "incident angle must lie in [0, π/2), got {theta0} rad"
            )));
        }
        let spacing = layers.iter().map(|l| l.thickness * theta0.tan()).collect();
        Self::new(layers, spacing)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.layers
            .iter()
            .zip(&self.spacing)
            .map(|(l, &d)| (d / l.thickness).atan())
            .collect()
    }

    /// One-way ray length `h_j / cos θ_j` through each layer.
    pub fn path_lengths(&self) -> Vec<f64> {
        self.layers
            .iter()
            .zip(self.angles())
            .map(|(l, theta)| l.thickness / theta.cos())
            .collect()
    }

    /// Depth of the bottom interface of each layer.
    pub fn bottom_depths(&self) -> Vec<f64> {
        self.layers
            .iter()
            .scan(0.0, |depth, l| {
                *depth += l.thickness;
                Some(*depth)
            })
            .collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.velocity).collect()
    }

    /// True slowness `1 / v_j` of the model.
    pub fn slowness(&self) -> SlownessVector {
        SlownessVector::new(self.layers.iter().map(|l| 1.0 / l.velocity).collect())
    }

    /// Same geometry with the velocities replaced.
    pub fn with_velocities(&self, velocities: &[f64]) -> Result<Self> {
        if velocities.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                what: "velocities",
                expected: self.layers.len(),
                actual: velocities.len(),
            });
        }
        let layers = self
            .layers
            .iter()
            .zip(velocities)
            .map(|(l, &v)| Layer::new(l.thickness, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, self.spacing.clone())
    }
}

/// Two-way travel times, one per reflecting interface, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TravelTimes(Vec<f64>);

impl TravelTimes {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidModel("empty travel-time vector".into()));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidModel(format!(
                "travel times must be positive, got {t}"
            )));
        }
        Ok(Self(times))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `t_i = 2 Σ_{j≤i} (h_j / cos θ_j) / v_j`.
pub fn travel_times(model: &LayeredModel) -> TravelTimes {
    let times = model
        .path_lengths()
        .iter()
        .zip(&model.layers)
        .scan(0.0, |acc, (d, l)| {
            *acc += d / l.velocity;
            Some(2.0 * *acc)
        })
        .collect();
    TravelTimes(times)
}

/// Depth-sampled sound speed, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundSpeedProfile {
    samples: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ProfileRow {
    depth_m: f64,
    speed_mps: f64,
}

impl SoundSpeedProfile {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidProfile("profile has no samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProfile(format!(
                    "depths must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(d, v)) = samples
            .iter()
            .find(|(d, v)| !(d.is_finite() && *v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidProfile(format!(
                "invalid sample depth={d} speed={v}"
            )));
        }
        Ok(Self { samples })
    }

    /// Smooth ocean-like stand-in: `v(z) = 1500 − 40·exp(−z/700) + 0.016·z`,
    /// sampled every `step` meters over `[0, max_depth]`.
    pub fn synthetic(max_depth: f64, step: f64) -> Result<Self> {
        if !(max_depth > 0.0 && step > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "synthetic profile needs positive depth and step (got {max_depth}, {step})"
            )));
        }
        let count = (max_depth / step).ceil() as usize;
        let samples = (0..=count)
            .map(|k| {
                let z = (k as f64 * step).min(max_depth);
                (z, synthetic_speed(z))
            })
            .collect::<Vec<_>>();
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        for s in samples {
            if dedup.last().is_none_or(|last| s.0 > last.0) {
                dedup.push(s);
            }
        }
        Self::new(dedup)
    }

    /// Reads the `depth_m,speed_mps` CSV format.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "depth_m" || &headers[1] != "speed_mps" {
            return Err(Error::InvalidProfile(format!(
                "expected header `depth_m,speed_mps`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: ProfileRow = row?;
            samples.push((row.depth_m, row.speed_mps));
        }
        Self::new(samples)
    }

    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for &(depth_m, speed_mps) in &self.samples {
            wtr.serialize(ProfileRow { depth_m, speed_mps })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn depth_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Arithmetic mean of the sampled speeds.
    pub fn mean_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.1).sum::<f64>() / self.samples.len() as f64
    }

    pub fn speed_at(&self, depth: f64) -> Option<f64> {
        let (lo, hi) = self.depth_range();
        if !(depth >= lo && depth <= hi) {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.0 <= depth);
        if idx == 0 {
            return Some(self.samples[0].1);
        }
        if idx == self.samples.len() {
            return Some(self.samples[idx - 1].1);
        }
        let (z0, v0) = self.samples[idx - 1];
        let (z1, v1) = self.samples[idx];
        Some(v0 + (v1 - v0) * (depth - z0) / (z1 - z0))
    }
}

pub fn synthetic_speed(depth: f64) -> f64 {
    1500.0 - 40.0 * (-depth / 700.0).exp() + 0.016 * depth
}

/// How source spacings are assigned when building a model from a profile.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacingPolicy {
    /// Common incident angle θ₀ in radians; `Δ_j = h_j tan θ₀`.
    IncidentAngle(f64),
    /// One spacing per layer, meters.
    Explicit(Vec<f64>),
}

/// Splits the profile at `boundaries` (bottom depth of each layer, first
/// layer starting at depth 0) and assigns each layer the profile speed at
/// its mid-depth.
pub fn model_from_profile(
    profile: &SoundSpeedProfile,
    boundaries: &[f64],
    spacing: &SpacingPolicy,
) -> Result<LayeredModel> {
    if boundaries.is_empty() {
        return Err(Error::InvalidModel("need at least one layer boundary".into()));
    }
    let (lo, hi) = profile.depth_range();
    let mut top = 0.0;
    let mut layers = Vec::with_capacity(boundaries.len());
    for &bottom in boundaries {
        if !(bottom > top) {
            return Err(Error::InvalidModel(format!(
                "boundaries must be strictly increasing from 0 (got {bottom} after {top})"
            )));
        }
        if bottom > hi || top < lo {
            return Err(Error::OutOfRange(format!(
                "layer [{top}, {bottom}] lies outside the profile range [{lo}, {hi}]"
            )));
        }
        let mid = 0.5 * (top + bottom);
        let v = profile.speed_at(mid).ok_or_else(|| {
            Error::OutOfRange(format!("mid-depth {mid} outside profile range [{lo}, {hi}]"))
        })?;
        layers.push(Layer::new(bottom - top, v)?);
        top = bottom;
    }
    match spacing {
        SpacingPolicy::IncidentAngle(theta0) => LayeredModel::with_incident_angle(layers, *theta0),
        SpacingPolicy::Explicit(deltas) => LayeredModel::new(layers, deltas.clone()),
    }
}

/// `count` equally thick layers covering `[0, max_depth]`.
pub fn uniform_boundaries(max_depth: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| max_depth * k as f64 / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn angle_examples() {
        let l = Layer::new(1500.0, 1500.0).unwrap();
        assert_eq!(ray_angle(&l, 0.0).unwrap(), 0.0);
        let l = Layer::new(1000.0, 1500.0).unwrap();
        assert!((ray_angle(&l, 1000.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        // arctan(2) to 16 digits.
        assert!((ray_angle(&l, 2000.0).unwrap() - 1.107_148_717_794_090_4).abs() < 1e-15);
    }

    #[test]
    fn layer_rejects_bad_values() {
        assert!(Layer::new(0.0, 1500.0).is_err());
        assert!(Layer::new(-1.0, 1500.0).is_err());
        assert!(Layer::new(10.0, 0.0).is_err());
        assert!(Layer::new(f64::NAN, 1.0).is_err());
        assert!(angle_for(0.0, 1.0).is_err());
        assert!(angle_for(1.0, -1.0).is_err());
    }

    #[test]
    fn model_invariants() {
        let l = Layer::new(1.0, 1.0).unwrap();
        assert!(LayeredModel::new(vec![], vec![]).is_err());
        assert!(LayeredModel::new(vec![l], vec![]).is_err());
        assert!(LayeredModel::new(vec![l], vec![-1.0]).is_err());
        assert!(LayeredModel::with_incident_angle(vec![l], PI / 2.0).is_err());
        assert!(LayeredModel::with_incident_angle(vec![l], -0.1).is_err());
    }

    #[test]
    fn travel_time_examples() {
        let m = LayeredModel::new(vec![Layer::new(1500.0, 1500.0).unwrap()], vec![0.0]).unwrap();
        assert_eq!(travel_times(&m).as_slice(), &[2.0]);

        let m = LayeredModel::new(
            vec![
                Layer::new(1000.0, 1000.0).unwrap(),
                Layer::new(1000.0, 2000.0).unwrap(),
            ],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert_eq!(travel_times(&m).as_slice(), &[2.0, 3.0]);

        let m = LayeredModel::new(vec![Layer::new(1000.0, 1000.0).unwrap()], vec![1000.0]).unwrap();
        let t = travel_times(&m).as_slice()[0];
        assert!(rel(t, 2.828_427_124_746_190_1) < 1e-15);
    }

    #[test]
    fn incident_angle_factor() {
        // 1 / cos(80°) = 5.758770483143634...
        let m = LayeredModel::with_incident_angle(
            vec![Layer::new(100.0, 1500.0).unwrap()],
            80f64.to_radians(),
        )
        .unwrap();
        assert!(rel(m.path_lengths()[0], 575.877_048_314_363_4) < 1e-12);
    }

    #[test]
    fn profile_examples() {
        let p = SoundSpeedProfile::new(vec![(0.0, 1500.0), (2000.0, 1500.0)]).unwrap();
        let m = model_from_profile(&p, &[1000.0], &SpacingPolicy::IncidentAngle(0.0)).unwrap();
        assert_eq!(m.layers(), &[Layer::new(1000.0, 1500.0).unwrap()]);

        let m = model_from_profile(&p, &[500.0, 1500.0], &SpacingPolicy::IncidentAngle(0.0)).unwrap();
        assert_eq!(m.layers()[0].thickness(), 500.0);
        assert_eq!(m.layers()[1].thickness(), 1000.0);
        assert_eq!(m.velocities(), vec![1500.0, 1500.0]);

        let p = SoundSpeedProfile::new(vec![(0.0, 1480.0), (1000.0, 1520.0)]).unwrap();
        let m = model_from_profile(&p, &[1000.0], &SpacingPolicy::IncidentAngle(0.0)).unwrap();
        assert_eq!(m.velocities(), vec![1500.0]);
    }

    #[test]
    fn profile_errors() {
        let p = SoundSpeedProfile::new(vec![(0.0, 1500.0), (2000.0, 1500.0)]).unwrap();
        let theta = SpacingPolicy::IncidentAngle(0.0);
        assert!(model_from_profile(&p, &[], &theta).is_err());
        assert!(model_from_profile(&p, &[2500.0], &theta).is_err());
        assert!(model_from_profile(&p, &[1000.0, 900.0], &theta).is_err());
        assert!(model_from_profile(&p, &[0.0], &theta).is_err());
        let p = SoundSpeedProfile::new(vec![(100.0, 1500.0), (2000.0, 1500.0)]).unwrap();
        assert!(model_from_profile(&p, &[1000.0], &theta).is_err());
        assert!(SoundSpeedProfile::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(SoundSpeedProfile::new(vec![(0.0, -1.0)]).is_err());
        assert!(SoundSpeedProfile::new(vec![]).is_err());
    }

    #[test]
    fn profile_csv_roundtrip() {
        let text = "depth_m,speed_mps\n0,1480.5\n1000, 1520\n";
        let p = SoundSpeedProfile::from_csv(text.as_bytes()).unwrap();
        assert_eq!(p.samples(), &[(0.0, 1480.5), (1000.0, 1520.0)]);
        let mut out = Vec::new();
        p.to_csv(&mut out).unwrap();
        assert_eq!(SoundSpeedProfile::from_csv(out.as_slice()).unwrap(), p);

        assert!(SoundSpeedProfile::from_csv("depth,speed\n0,1\n".as_bytes()).is_err());
        assert!(SoundSpeedProfile::from_csv("depth_m,speed_mps\n0,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn synthetic_profile_shape() {
        let p = SoundSpeedProfile::synthetic(5000.0, 10.0).unwrap();
        assert_eq!(p.samples().len(), 501);
        assert_eq!(p.depth_range(), (0.0, 5000.0));
        assert_eq!(p.speed_at(0.0).unwrap(), 1460.0);
        assert!(rel(p.speed_at(5000.0).unwrap(), synthetic_speed(5000.0)) < 1e-15);
    }

    #[test]
    fn bottom_depths_accumulate() {
        let b = uniform_boundaries(300.0, 3);
        assert_eq!(b, vec![100.0, 200.0, 300.0]);
        let p = SoundSpeedProfile::synthetic(300.0, 10.0).unwrap();
        let m = model_from_profile(&p, &b, &SpacingPolicy::IncidentAngle(0.0)).unwrap();
        assert_eq!(m.bottom_depths(), b);
    }
}
