mod common;

use common::{check_gradients, GradProblem};
use devnet::deviation::{deviation, deviation_loss, loss_gradient_wrt_score, LossConfig};
use devnet::optimizer::{regularized_gradient, rmsprop_step, OptimizerConfig, RmsState};
use devnet::{Architecture, Label, Parameters, ReferenceStats};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn full_loss_gradient_matches_central_differences(seed in any::<u64>()) {
        let report = check_gradients(&GradProblem::random(seed));
        prop_assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn score_gradient_matches_finite_differences(
        score in -20.0..20.0f64,
        mu_r in -1.0..1.0f64,
        sigma_r in 0.2..3.0f64,
        anomaly in any::<bool>(),
    ) {
        let r = ReferenceStats { mu_r, sigma_r };
        let cfg = LossConfig::default();
        let label = Label::from_bool(anomaly);
        let dev = deviation(score, &r).unwrap();
        let kink = if anomaly { cfg.a } else { 0.0 };
        prop_assume!((dev - kink).abs() > 1e-3);
        let h = 1e-6;
        let f = |s: f64| deviation_loss(deviation(s, &r).unwrap(), label, &cfg);
        let numeric = (f(score + h) - f(score - h)) / (2.0 * h);
        let analytic = loss_gradient_wrt_score(score, label, &r, &cfg).unwrap();
        let scale = analytic.abs().max(numeric.abs()).max(1e-12);
        // The flat hinge region has an exact zero derivative on both sides.
        prop_assert!((analytic - numeric).abs() / scale < 1e-6 || (analytic == 0.0 && numeric == 0.0));
    }

    #[test]
    fn rmsprop_opposes_gradient_and_keeps_accumulators_non_negative(
        grads in proptest::collection::vec(-100.0..100.0f64, 7),
        steps in 1usize..5,
    ) {
        let arch = Architecture::new(2, vec![2], false).unwrap();
        let mut p = Parameters::zeros(&arch).unwrap();
        let mut g = Parameters::zeros(&arch).unwrap();
        for (slot, v) in g.tensors_mut().into_iter().flat_map(|(_, t)| t.iter_mut()).zip(&grads) {
            *slot = *v;
        }
        let cfg = OptimizerConfig::default();
        let mut state = RmsState::new(&p).unwrap();
        for _ in 0..steps {
            let before = p.clone();
            rmsprop_step(&mut p, &g, &mut state, &cfg).unwrap();
            let moved = p.tensors().into_iter().flat_map(|(_, t)| t.to_vec());
            let start = before.tensors().into_iter().flat_map(|(_, t)| t.to_vec());
            for ((after, before), &grad) in moved.zip(start).zip(&grads) {
                let delta = after - before;
                if grad != 0.0 {
                    prop_assert!(delta * grad < 0.0);
                    prop_assert!(delta.abs() <= cfg.lr * grad.abs() / cfg.eps);
                }
            }
            prop_assert!(state
                .accumulators()
                .tensors()
                .iter()
                .all(|(_, t)| t.iter().all(|&s| s >= 0.0)));
        }
    }
}

#[test]
fn lambda_zero_leaves_gradients_unchanged() {
    let problem = GradProblem::random(11);
    let mut g = problem.params.clone();
    let before = g.clone();
    regularized_gradient(&problem.params, &mut g, 0.0).unwrap();
    assert_eq!(g, before);
}

#[test]
fn steady_gradient_steps_approach_learning_rate() {
    let arch = Architecture::new(1, vec![], false).unwrap();
    let mut p = Parameters::zeros(&arch).unwrap();
    let mut g = Parameters::zeros(&arch).unwrap();
    g.output_mut().unwrap()[0] = 250.0;
    let cfg = OptimizerConfig::default();
    let mut state = RmsState::new(&p).unwrap();
    let mut last = 0.0;
    for _ in 0..200 {
        let before = p.output().unwrap()[0];
        rmsprop_step(&mut p, &g, &mut state, &cfg).unwrap();
        last = before - p.output().unwrap()[0];
    }
    assert!((last - cfg.lr).abs() < 1e-9, "{last}");
}
