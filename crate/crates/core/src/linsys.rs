//! The lower-triangular travel-time system `M s = t` and the affine box
//! `s = s₀ + L (x − 1)` that maps the unknowns onto `[0, 2)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{travel_times, LayeredModel, TravelTimes};

/// Slowness `1 / v` per layer, seconds per meter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlownessVector(Vec<f64>);

impl SlownessVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
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

    pub fn is_physical(&self) -> bool {
        self.0.iter().all(|s| *s > 0.0 && s.is_finite())
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.0.iter().map(|s| 1.0 / s).collect()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl LinearSystem {
    /// Validates that `matrix` is square, lower triangular and has a strictly
    /// positive diagonal.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m {
            return Err(Error::DimensionMismatch {
                what: "square system matrix columns",
                expected: m,
                actual: matrix.ncols(),
            });
        }
        if rhs.len() != m {
            return Err(Error::DimensionMismatch {
                what: "right-hand side length",
                expected: m,
                actual: rhs.len(),
            });
        }
        for i in 0..m {
            if !(matrix[(i, i)] > 0.0) {
                return Err(Error::Singular {
                    index: i,
                    value: matrix[(i, i)],
                });
            }
            for j in i + 1..m {
                if matrix[(i, j)] != 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "matrix is not lower triangular at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { matrix, rhs })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Same matrix, new right-hand side.
    pub fn with_rhs(&self, rhs: &TravelTimes) -> Result<Self> {
        Self::new(self.matrix.clone(), DVector::from_column_slice(rhs.as_slice()))
    }

    /// Euclidean residual `‖M s − t‖₂`.
    pub fn residual_norm(&self, s: &SlownessVector) -> f64 {
        (&self.matrix * s.to_dvector() - &self.rhs).norm()
    }
}

/// `M_{ij} = 2 h_j / cos θ_j` for `j ≤ i`, right-hand side from the forward model.
pub fn build_system(model: &LayeredModel) -> LinearSystem {
    let m = model.len();
    let d = model.path_lengths();
    let matrix = DMatrix::from_fn(m, m, |i, j| if j <= i { 2.0 * d[j] } else { 0.0 });
    let rhs = DVector::from_vec(travel_times(model).into_inner());
    LinearSystem { matrix, rhs }
}

/// Matrix of `model` paired with externally supplied travel times.
pub fn build_system_with_times(model: &LayeredModel, times: &TravelTimes) -> Result<LinearSystem> {
    if times.len() != model.len() {
        return Err(Error::DimensionMismatch {
            what: "travel times per layer",
            expected: model.len(),
            actual: times.len(),
        });
    }
    build_system(model).with_rhs(times)
}

/// Box of half-width `L` around `s₀`. With R-bit encoding the reachable
/// slownesses are `[s₀ − L, s₀ + L (1 − 2^{1−R})]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxTransform {
    center: Vec<f64>,
    half_width: f64,
}

impl BoxTransform {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidBox("center has non-finite entries".into()));
        }
        Ok(Self { center, half_width })
    }

    /// `s₀ = (1/v̄)·1`, `L = s₀ / 2`.
    pub fn from_mean_speed(mean_speed: f64, dim: usize) -> Result<Self> {
        if !(mean_speed > 0.0) {
            return Err(Error::InvalidBox(format!(
                "mean speed must be positive, got {mean_speed}"
            )));
        }
        let s0 = 1.0 / mean_speed;
        Self::new(vec![s0; dim], 0.5 * s0)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Componentwise `(lower, upper)` limits reachable with `bits` bits.
    pub fn bounds(&self, bits: usize) -> (Vec<f64>, Vec<f64>) {
        let top = 1.0 - 2f64.powi(1 - bits as i32);
        let lo = self.center.iter().map(|c| c - self.half_width).collect();
        let hi = self.center.iter().map(|c| c + self.half_width * top).collect();
        (lo, hi)
    }

    /// Next box after a refinement step: centered on `s`, half as wide.
    pub fn recentered(&self, s: &SlownessVector) -> Result<Self> {
        Self::new(s.as_slice().to_vec(), self.half_width / 2.0)
    }

    /// Box coordinate `x = (s − s₀)/L + 1` of a slowness vector.
    pub fn coordinates(&self, s: &SlownessVector) -> Vec<f64> {
        s.as_slice()
            .iter()
            .zip(&self.center)
            .map(|(s, c)| (s - c) / self.half_width + 1.0)
            .collect()
    }
}

/// `b = (t + L·M·1 − M·s₀) / L`, the right-hand side seen by the box
/// coordinates `x`.
pub fn boxed_rhs(system: &LinearSystem, bx: &BoxTransform) -> Result<DVector<f64>> {
    let m = system.dim();
    if bx.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "box center length",
            expected: m,
            actual: bx.dim(),
        });
    }
    if !(bx.half_width > 0.0) {
        return Err(Error::InvalidBox(format!(
            "half-width must be positive, got {}",
            bx.half_width
        )));
    }
    let l = bx.half_width;
    let ones = DVector::from_element(m, 1.0);
    let s0 = DVector::from_column_slice(&bx.center);
    let b = (&system.rhs + &system.matrix * ones * l - &system.matrix * s0) / l;
    Ok(b)
}

/// `s = s₀ + L (x − 1)`.
pub fn recover_slowness(bx: &BoxTransform, x: &[f64]) -> Result<SlownessVector> {
    if x.len() != bx.dim() {
        return Err(Error::DimensionMismatch {
            what: "box coordinates",
            expected: bx.dim(),
            actual: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && **v < 2.0)) {
        return Err(Error::OutOfRange(format!(
            "box coordinate {v} outside [0, 2)"
        )));
    }
    Ok(SlownessVector(
        bx.center
            .iter()
            .zip(x)
            .map(|(c, xi)| c + bx.half_width * (xi - 1.0))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layer;

    fn two_layer() -> LayeredModel {
        LayeredModel::new(
            vec![
                Layer::new(1000.0, 1000.0).unwrap(),
                Layer::new(1000.0, 2000.0).unwrap(),
            ],
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn system_examples() {
        let sys = build_system(&two_layer());
        assert_eq!(sys.matrix(), &DMatrix::from_row_slice(2, 2, &[2000.0, 0.0, 2000.0, 2000.0]));
        assert_eq!(sys.rhs().as_slice(), &[2.0, 3.0]);

        let m = LayeredModel::new(vec![Layer::new(1000.0, 1500.0).unwrap()], vec![1000.0]).unwrap();
        let sys = build_system(&m);
        assert!((sys.matrix()[(0, 0)] - 2_828.427_124_746_19).abs() < 1e-9);

        let layers = vec![Layer::new(250.0, 1500.0).unwrap(); 4];
        let sys = build_system(&LayeredModel::new(layers, vec![0.0; 4]).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                let expect = if j <= i { 500.0 } else { 0.0 };
                assert_eq!(sys.matrix()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn system_validation() {
        let upper = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(LinearSystem::new(upper, DVector::from_element(2, 1.0)).is_err());
        let zero_diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            LinearSystem::new(zero_diag, DVector::from_element(2, 1.0)),
            Err(Error::Singular { index: 1, .. })
        ));
        let ok = DMatrix::identity(2, 2);
        assert!(LinearSystem::new(ok.clone(), DVector::from_element(3, 1.0)).is_err());
        assert!(LinearSystem::new(DMatrix::identity(2, 3), DVector::from_element(2, 1.0)).is_err());
    }

    #[test]
    fn boxed_rhs_examples() {
        let sys = LinearSystem::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 2.0)).unwrap();
        let bx = BoxTransform::new(vec![1.0], 0.5).unwrap();
        let b = boxed_rhs(&sys, &bx).unwrap();
        assert_eq!(b.as_slice(), &[2.0]);
        assert_eq!(recover_slowness(&bx, &[1.0]).unwrap().as_slice(), &[1.0]);

        // s₀ solving the system exactly gives b = M·1 for any L.
        let sys = build_system(&two_layer());
        for l in [1e-5, 2.5e-4, 3.0] {
            let bx = BoxTransform::new(vec![1e-3, 5e-4], l).unwrap();
            let b = boxed_rhs(&sys, &bx).unwrap();
            assert!((b[0] - 2000.0).abs() < 1e-9 && (b[1] - 4000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn boxed_rhs_worked_values() {
        // b = (t + L·M·1 − M·s₀)/L evaluated by hand:
        //   M·1 = [2000, 4000], M·s₀ = [2, 4], L = 2.5e-4
        //   b₁ = (2 + 0.5 − 2)/2.5e-4 = 2000, b₂ = (3 + 1 − 4)/2.5e-4 = 0.
        let sys = build_system(&two_layer());
        let bx = BoxTransform::new(vec![1e-3, 1e-3], 2.5e-4).unwrap();
        let b = boxed_rhs(&sys, &bx).unwrap();
        assert!((b[0] - 2000.0).abs() < 1e-9);
        assert!(b[1].abs() < 1e-9);
        // x = (s* − s₀)/L + 1 = [1, −1] then satisfies M x = b.
        let x = DVector::from_vec(bx.coordinates(&SlownessVector::new(vec![1e-3, 5e-4])));
        assert!((sys.matrix() * x - b).norm() < 1e-9);
    }

    #[test]
    fn box_errors() {
        assert!(BoxTransform::new(vec![1.0], 0.0).is_err());
        assert!(BoxTransform::new(vec![1.0], -1.0).is_err());
        assert!(BoxTransform::new(vec![f64::NAN], 1.0).is_err());
        let bx = BoxTransform::new(vec![1.0], 1.0).unwrap();
        assert!(recover_slowness(&bx, &[2.0]).is_err());
        assert!(recover_slowness(&bx, &[-0.1]).is_err());
        assert!(recover_slowness(&bx, &[1.0, 1.0]).is_err());
        let sys = build_system(&two_layer());
        assert!(boxed_rhs(&sys, &bx).is_err());
    }

    #[test]
    fn recover_examples() {
        let bx = BoxTransform::new(vec![1e-3], 1e-4).unwrap();
        assert_eq!(recover_slowness(&bx, &[1.0]).unwrap().as_slice(), &[1e-3]);
        assert_eq!(recover_slowness(&bx, &[0.0]).unwrap().as_slice(), &[1e-3 - 1e-4]);
        let s = recover_slowness(&bx, &[1.75]).unwrap().as_slice()[0];
        assert!((s - 1.075e-3).abs() < 1e-18);
    }

    #[test]
    fn box_bounds_and_defaults() {
        let bx = BoxTransform::from_mean_speed(1500.0, 2).unwrap();
        assert_eq!(bx.half_width(), 0.5 / 1500.0);
        let (lo, hi) = bx.bounds(3);
        assert!((lo[0] - 0.5 / 1500.0).abs() < 1e-18);
        assert!((hi[1] - 1.375 / 1500.0).abs() < 1e-18);
        let next = bx.recentered(&SlownessVector::new(vec![1.0, 2.0])).unwrap();
        assert_eq!(next.half_width(), bx.half_width() / 2.0);
        assert!(BoxTransform::from_mean_speed(0.0, 1).is_err());
    }

    #[test]
    fn system_reproduces_times() {
        let m = two_layer();
        let sys = build_system(&m);
        let t = sys.matrix() * m.slowness().to_dvector();
        assert_eq!(t.as_slice(), sys.rhs().as_slice());
        assert!(sys.residual_norm(&m.slowness()) < 1e-15);
    }
}
