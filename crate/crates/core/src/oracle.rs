//! Classical reference solve and conditioning estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::{LinearSystem, SlownessVector};
use crate::model::LayeredModel;

/// `s_i = (t_i − Σ_{j<i} M_ij s_j) / M_ii`.
pub fn forward_substitution(system: &LinearSystem) -> Result<SlownessVector> {
    let m = system.matrix();
    let t = system.rhs();
    let n = system.dim();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let d = m[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular { index: i, value: d });
        }
        let acc: f64 = (0..i).map(|j| m[(i, j)] * s[j]).sum();
        s.push((t[i] - acc) / d);
    }
    Ok(SlownessVector::new(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    /// Lower bound `max_j d_j / min_j d_j` on κ∞, with `d_j = h_j / cos θ_j`.
    pub kappa_inf: f64,
    pub rhs_rel_error: f64,
    pub solution_rel_error_bound: f64,
}

pub fn condition_bound(model: &LayeredModel, rhs_rel_error: f64) -> Result<ConditioningReport> {
    if !(rhs_rel_error >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "relative error must be non-negative, got {rhs_rel_error}"
        )));
    }
    let d = model.path_lengths();
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa_inf = max / min;
    Ok(ConditioningReport {
        kappa_inf,
        rhs_rel_error,
        solution_rel_error_bound: kappa_inf * rhs_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::build_system;
    use crate::model::Layer;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_step_example() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 2.0, 2.0]),
            DVector::from_vec(vec![2.0, 3.0]),
        )
        .unwrap();
        assert_eq!(forward_substitution(&sys).unwrap().as_slice(), &[1.0, 0.5]);
    }

    #[test]
    fn recovers_model_slowness() {
        let layers = [(120.0, 1490.0), (300.0, 1505.5), (80.0, 1530.0), (410.0, 1544.0)]
            .iter()
            .map(|&(h, v)| Layer::new(h, v).unwrap())
            .collect();
        let m = LayeredModel::new(layers, vec![10.0, 200.0, 0.0, 35.0]).unwrap();
        let s = forward_substitution(&build_system(&m)).unwrap();
        for (got, want) in s.as_slice().iter().zip(m.slowness().as_slice()) {
            assert!(((got - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn random_unit_lower_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let n = 46;
        let m = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => rng.gen_range(-1.0..1.0) / n as f64,
            std::cmp::Ordering::Less => 0.0,
        });
        let t = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let sys = LinearSystem::new(m.clone(), t.clone()).unwrap();
        let s = forward_substitution(&sys).unwrap().to_dvector();
        let resid = (&m * &s - &t).amax();
        assert!(resid <= 1e-9 * t.amax());
        // Independent route through nalgebra's triangular solver.
        let reference = m.solve_lower_triangular(&t).unwrap();
        assert!((s - reference).amax() <= 1e-9 * t.amax());
    }

    #[test]
    fn condition_examples() {
        let uniform = LayeredModel::new(vec![Layer::new(100.0, 1500.0).unwrap(); 5], vec![0.0; 5]).unwrap();
        let r = condition_bound(&uniform, 1e-3).unwrap();
        assert_eq!(r.kappa_inf, 1.0);
        assert_eq!(r.solution_rel_error_bound, 1e-3);

        let two = LayeredModel::new(
            vec![Layer::new(2000.0, 1500.0).unwrap(), Layer::new(1000.0, 1500.0).unwrap()],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert_eq!(condition_bound(&two, 0.0).unwrap().kappa_inf, 2.0);
        assert!(condition_bound(&two, -1.0).is_err());
    }
}
