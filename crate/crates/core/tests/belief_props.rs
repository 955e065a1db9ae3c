mod common;

use approx::assert_abs_diff_eq;
use prstl::belief::{BeliefError, BeliefGrid, GaussianBlob, GridGeometry, TargetModel};
use prstl::world::{detection_likelihood, AgentState, SensorModel};
use proptest::prelude::*;

fn geometry(w: usize, h: usize) -> GridGeometry {
    GridGeometry::new(w, h, 2.0, [0.0, 0.0]).unwrap()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
}

#[test]
fn two_cell_posteriors_match_hand_arithmetic() {
    let g = GridGeometry::new(2, 1, 1.0, [0.0, 0.0]).unwrap();
    let prior = BeliefGrid::from_weights(g, vec![0.5, 0.5]).unwrap();
    let hit = prior.bayes_update(&[0.8, 0.4], true).unwrap();
    assert_abs_diff_eq!(hit.mass[0], 0.4 / 0.6, epsilon = 1e-15);
    assert_abs_diff_eq!(hit.mass[1], 0.2 / 0.6, epsilon = 1e-15);
    let miss = prior.bayes_update(&[0.8, 0.4], false).unwrap();
    assert_abs_diff_eq!(miss.mass[0], 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(miss.mass[1], 0.75, epsilon = 1e-15);
}

#[test]
fn impossible_detection_is_degenerate_and_resets() {
    let g = geometry(4, 4);
    let prior = BeliefGrid::point_mass(g, 0);
    let mut field = vec![0.5; 16];
    field[0] = 0.0;
    assert!(matches!(
        prior.bayes_update(&field, true),
        Err(BeliefError::DegeneratePosterior)
    ));
    assert_eq!(prior.update_or_reset(&field, true), BeliefGrid::uniform(g));
}

#[test]
fn gaussian_prior_peaks_at_its_mean() {
    let g = geometry(20, 20);
    let blob = GaussianBlob {
        mean: [11.0, 25.0],
        covariance: [[9.0, 0.0], [0.0, 9.0]],
        weight: 1.0,
    };
    let b = BeliefGrid::from_gaussian_mixture(g, &[blob]).unwrap();
    let peak = (0..g.cells())
        .max_by(|&a, &c| b.mass[a].total_cmp(&b.mass[c]))
        .unwrap();
    assert_eq!(Some(peak), g.locate([11.0, 25.0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_likelihood_leaves_belief_unchanged(
        w in weights(36), c in 0.01..0.99f64, z in any::<bool>()
    ) {
        let b = BeliefGrid::from_weights(geometry(6, 6), w).unwrap();
        let post = b.bayes_update(&vec![c; 36], z).unwrap();
        for (p, q) in post.mass.iter().zip(&b.mass) {
            prop_assert!((p - q).abs() <= 1e-15);
        }
    }

    #[test]
    fn posterior_is_prior_times_likelihood_normalized(
        w in weights(25), l in prop::collection::vec(0.0..=1.0f64, 25), z in any::<bool>()
    ) {
        let b = BeliefGrid::from_weights(geometry(5, 5), w).unwrap();
        let lik: Vec<f64> = l.iter().map(|v| if z { *v } else { 1.0 - v }).collect();
        let raw: Vec<f64> = b.mass.iter().zip(&lik).map(|(m, v)| m * v).collect();
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-12);
        let post = b.bayes_update(&l, z).unwrap();
        for (p, r) in post.mass.iter().zip(&raw) {
            prop_assert!((p - r / total).abs() <= 1e-12);
        }
        prop_assert!((post.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn prediction_matches_direct_diffusion(
        w in weights(48), speed in 0.0..7.0f64, steps in 0usize..4
    ) {
        let g = geometry(8, 6);
        let b = BeliefGrid::from_weights(g, w).unwrap();
        let predicted = b.predict(&TargetModel { max_speed: speed }, steps);
        let radius = if steps == 0 { 0.0 } else { speed * steps as f64 / g.cell_size };
        let expected = common::ref_predict(&b.mass, 8, 6, radius);
        for (p, e) in predicted.mass.iter().zip(&expected) {
            prop_assert!((p - e).abs() <= 1e-12, "{p} vs {e}");
        }
        prop_assert!((predicted.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn expected_detection_is_mass_weighted_likelihood(
        w in weights(100), x in 0.0..20.0f64, y in 0.0..20.0f64, heading in -3.2..3.2f64
    ) {
        let g = geometry(10, 10);
        let b = BeliefGrid::from_weights(g, w).unwrap();
        let sensor = SensorModel::new(8.0, 0.6, 0.9, 40.0).unwrap();
        let agent = AgentState::new(x, y, heading);
        let direct: f64 = (0..g.cells())
            .map(|c| b.mass[c] * detection_likelihood(&agent, g.center(c), &sensor))
            .sum();
        prop_assert!((b.expected_detection(&agent, &sensor) - direct).abs() <= 1e-12);
        let field = b.likelihood_field(&agent, &sensor);
        for (c, &v) in field.iter().enumerate() {
            prop_assert_eq!(v, detection_likelihood(&agent, g.center(c), &sensor));
        }
    }

    #[test]
    fn observing_a_detection_equals_likelihood_weighted_posterior(
        w in weights(16), x in 0.0..8.0f64, y in 0.0..8.0f64
    ) {
        // A detection posterior is the prior reweighted by the field; a miss
        // is the prior reweighted by its complement. Both stay normalized.
        let g = geometry(4, 4);
        let b = BeliefGrid::from_weights(g, w).unwrap();
        let sensor = SensorModel::new(6.0, 1.2, 0.9, 30.0).unwrap();
        let field = b.likelihood_field(&AgentState::new(x, y, 0.0), &sensor);
        for z in [true, false] {
            let post = b.update_or_reset(&field, z);
            prop_assert!((post.total() - 1.0).abs() <= 1e-9);
            prop_assert!(post.mass.iter().all(|m| *m >= 0.0));
        }
    }
}
