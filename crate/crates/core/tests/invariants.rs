//! Property tests for the arithmetic substrate: the step-size recurrence,
//! Euclidean projections, and noise-model norm guarantees.

use noisy_stm_core::geometry::FeasibleSet;
use noisy_stm_core::oracles::{AbsoluteMode, NoiseModel, RelativeMode, RngStream};
use noisy_stm_core::sequences::{
    growth_factor, next_alpha, partial_sum_bound, recurrence_residual, weight_sequence,
};
use noisy_stm_core::vector::Vector;
use proptest::prelude::*;

fn vector_strategy(dim: usize, bound: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-bound..bound, dim)
        .prop_map(|data| Vector::new(data).expect("finite by construction"))
}

proptest! {
    #[test]
    fn alpha_recurrence_is_exact(
        l in 1e-3f64..1e6,
        theta in 0f64..0.5,
        a_prev in 1e-8f64..1e8,
    ) {
        let mu_tau = theta * l;
        let alpha = next_alpha(l, mu_tau, a_prev).unwrap();
        prop_assert!(alpha > 0.0);
        let residual = recurrence_residual(l, mu_tau, a_prev, alpha);
        prop_assert!(
            residual <= 1e-10 * l * alpha * alpha,
            "residual {residual} vs {l} {mu_tau} {a_prev} -> {alpha}"
        );
    }

    #[test]
    fn ball_projection_idempotent_and_nonexpansive(
        p in vector_strategy(4, 10.0),
        q in vector_strategy(4, 10.0),
        center in vector_strategy(4, 2.0),
        radius in 0.1f64..3.0,
    ) {
        let set = FeasibleSet::Ball { center, radius };
        let pp = set.project(&p);
        prop_assert!(set.contains(&pp, 1e-12));
        prop_assert!(pp.dist(&set.project(&pp)) <= 1e-12);
        let pq = set.project(&q);
        prop_assert!(pp.dist(&pq) <= p.dist(&q) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn box_projection_idempotent_and_nonexpansive(
        p in vector_strategy(3, 10.0),
        q in vector_strategy(3, 10.0),
        lo in vector_strategy(3, 1.0),
        width in prop::collection::vec(0f64..2.0, 3),
    ) {
        let hi = Vector::from_fn(3, |i| lo[i] + width[i]);
        let set = FeasibleSet::Box { lower: lo, upper: hi };
        set.validate(3).unwrap();
        let pp = set.project(&p);
        prop_assert!(set.contains(&pp, 1e-12));
        prop_assert!(pp.dist(&set.project(&pp)) == 0.0);
        let pq = set.project(&q);
        prop_assert!(pp.dist(&pq) <= p.dist(&q) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn absolute_sphere_noise_has_norm_delta(
        grad in vector_strategy(5, 3.0),
        delta in 0f64..0.5,
        seed in any::<u64>(),
    ) {
        let model = NoiseModel::Absolute { delta, mode: AbsoluteMode::SphereUniform };
        let mut rng = RngStream::new(seed);
        let (noisy, reported) = model.perturb(&grad, &mut rng);
        let realized = noisy.dist(&grad);
        prop_assert!((realized - delta).abs() <= 1e-12 * delta.max(1.0));
        prop_assert!((reported - realized).abs() <= 1e-12 * delta.max(1.0));
    }

    #[test]
    fn relative_noise_scales_with_gradient(
        grad in vector_strategy(5, 3.0),
        alpha in 0f64..0.99,
        seed in any::<u64>(),
    ) {
        let model = NoiseModel::Relative { alpha, mode: RelativeMode::SphereUniform };
        let mut rng = RngStream::new(seed);
        let (noisy, reported) = model.perturb(&grad, &mut rng);
        let cap = alpha * grad.norm();
        prop_assert!(noisy.dist(&grad) <= cap * (1.0 + 1e-12));
        prop_assert!(reported <= cap * (1.0 + 1e-12));

        let shrink = NoiseModel::Relative { alpha, mode: RelativeMode::Shrink };
        let (shrunk, rep) = shrink.perturb(&grad, &mut rng);
        prop_assert!((shrunk.dist(&grad) - cap).abs() <= 1e-12 * cap.max(1.0));
        prop_assert!((rep - cap).abs() <= 1e-12 * cap.max(1.0));
    }

    #[test]
    fn weight_sequence_growth_claims(
        l in 0.5f64..10.0,
        theta in 0f64..0.5,
    ) {
        let mu_tau = theta * l;
        let weights = weight_sequence(l, mu_tau, 300).unwrap();
        let factor = growth_factor(l, mu_tau).unwrap();
        let mut sum = 0.0;
        for (k, (_, a)) in weights.iter().enumerate() {
            sum += a;
            if factor.degenerate {
                let floor = (k as f64 + 1.0) * (k as f64 + 1.0) / (4.0 * l);
                prop_assert!(*a >= floor * (1.0 - 1e-9), "A_{k} = {a} below {floor}");
            } else {
                let floor = factor.lambda.powi(k as i32) / l;
                prop_assert!(*a >= floor * (1.0 - 1e-9), "A_{k} = {a} below {floor}");
            }
            let ratio = sum / a;
            let bound = partial_sum_bound(l, mu_tau, k).unwrap();
            prop_assert!(ratio <= bound * (1.0 + 1e-9), "ratio {ratio} above {bound} at {k}");
        }
    }
}
