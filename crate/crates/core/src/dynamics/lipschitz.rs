use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ClosedLoopSystem, DynamicsError, StateBox};
use crate::fmt::{dist, norm};

/// Safety factor applied to the largest observed difference quotient.
pub const LIPSCHITZ_INFLATION: f64 = 1.1;

/// Sampled estimate of the Lipschitz constant of `f_cl` on `region`.
///
/// Half the pairs are independent uniform draws; the other half are perturbation
/// pairs at distance `1e-4 × diameter`, which probe the local Jacobian norm. The
/// result is `1.1 ×` the largest quotient seen. It is an estimate, not a bound.
pub fn estimate_lipschitz(
    system: &ClosedLoopSystem,
    region: &StateBox,
    num_pairs: usize,
    seed: u64,
) -> Result<f64, DynamicsError> {
    if num_pairs < 1000 {
        return Err(DynamicsError::InvalidArgument(format!(
            "need at least 1000 pairs, got {num_pairs}"
        )));
    }
    region.validate()?;
    if region.dim() != system.dim() {
        return Err(DynamicsError::Dimension {
            expected: system.dim(),
            got: region.dim(),
        });
    }
    if !region.has_volume() {
        return Err(DynamicsError::InvalidBox("region has zero volume".into()));
    }
    let n = region.dim();
    let step = 1e-4 * region.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|i| region.lower[i] + rng.random::<f64>() * region.width(i))
            .collect()
    };
    let (mut fx, mut fz) = (vec![0.0; n], vec![0.0; n]);
    let mut best = 0.0f64;
    for i in 0..num_pairs {
        let x = uniform(&mut rng);
        let z = if i % 2 == 0 {
            uniform(&mut rng)
        } else {
            let dir: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let len = norm(&dir).max(1e-300);
            let mut z: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| xi + step * di / len)
                .collect();
            region.clamp(&mut z);
            z
        };
        let gap = dist(&x, &z);
        if gap == 0.0 {
            continue;
        }
        system.eval_into(&x, &mut fx);
        system.eval_into(&z, &mut fz);
        best = best.max(dist(&fx, &fz) / gap);
    }
    Ok(LIPSCHITZ_INFLATION * best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> StateBox {
        StateBox::new(vec![-1.0; 2], vec![1.0; 2]).unwrap()
    }

    #[test]
    fn contraction_rate_one() {
        let sys = ClosedLoopSystem::new("decay", unit_box(), |x, o| {
            o[0] = -x[0];
            o[1] = -x[1];
        })
        .unwrap();
        let l = estimate_lipschitz(&sys, &unit_box(), 20_000, 1).unwrap();
        assert!((1.0..=1.15).contains(&l), "{l}");
    }

    #[test]
    fn constant_field_has_zero_constant() {
        let sys =
            ClosedLoopSystem::new("const", unit_box(), |_, o| o.copy_from_slice(&[0.3, -1.0]))
                .unwrap();
        assert_eq!(estimate_lipschitz(&sys, &unit_box(), 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn anisotropic_linear_field() {
        let sys = ClosedLoopSystem::new("aniso", unit_box(), |x, o| {
            o[0] = -2.0 * x[0];
            o[1] = -3.0 * x[1];
        })
        .unwrap();
        let l = estimate_lipschitz(&sys, &unit_box(), 20_000, 2).unwrap();
        assert!((3.0..=3.35).contains(&l), "{l}");
    }

    #[test]
    fn degenerate_region_rejected() {
        let sys = ClosedLoopSystem::new("z", unit_box(), |_, o| o.fill(0.0)).unwrap();
        let flat = StateBox::new(vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            estimate_lipschitz(&sys, &flat, 1000, 0),
            Err(DynamicsError::InvalidBox(_))
        ));
        assert!(matches!(
            estimate_lipschitz(&sys, &unit_box(), 10, 0),
            Err(DynamicsError::InvalidArgument(_))
        ));
    }
}
