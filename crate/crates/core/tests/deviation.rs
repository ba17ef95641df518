use devnet::deviation::{deviation, deviation_loss, sample_reference, LossConfig};
use devnet::{seed, Label, PriorConfig, ReferenceStats};
use proptest::prelude::*;

#[test]
fn reference_statistics_over_many_seeds() {
    let prior = PriorConfig::default();
    let bound = 3.0 / (prior.l as f64).sqrt();
    let seeds = 1000;
    let mut inside = 0;
    for s in 0..seeds {
        let r = sample_reference(&prior, &mut seed::rng(s));
        if r.mu_r.abs() < bound {
            inside += 1;
        }
        assert!(
            (0.95..=1.05).contains(&r.sigma_r),
            "seed {s}: {}",
            r.sigma_r
        );
    }
    assert!(inside as f64 >= 0.99 * seeds as f64, "{inside}/{seeds}");
}

#[test]
fn reference_follows_prior_scale() {
    let prior = PriorConfig {
        mu: 10.0,
        sigma: 0.5,
        l: 5000,
    };
    let r = sample_reference(&prior, &mut seed::rng(1));
    assert!((r.mu_r - 10.0).abs() < 0.03);
    assert!((r.sigma_r - 0.5).abs() < 0.03);
}

#[test]
fn degenerate_draws_give_zero_spread() {
    let r = ReferenceStats::from_draws(&[2.5; 10]);
    assert_eq!((r.mu_r, r.sigma_r), (2.5, 0.0));
    assert!(deviation(1.0, &r).is_err());
}

#[test]
fn hand_computed_deviation() {
    let r = ReferenceStats {
        mu_r: 0.5,
        sigma_r: 0.75,
    };
    assert_eq!(deviation(2.0, &r).unwrap(), 2.0);
}

proptest! {
    #[test]
    fn loss_is_non_negative_and_zero_only_at_targets(dev in -50.0..50.0f64, anomaly in any::<bool>()) {
        let cfg = LossConfig::default();
        let label = Label::from_bool(anomaly);
        let l = deviation_loss(dev, label, &cfg);
        prop_assert!(l >= 0.0);
        let zero_expected = if anomaly { dev >= cfg.a } else { dev == 0.0 };
        prop_assert_eq!(l == 0.0, zero_expected);
    }

    #[test]
    fn loss_monotonicity(a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let cfg = LossConfig::default();
        if a.abs() <= b.abs() {
            prop_assert!(deviation_loss(a, Label::Normal, &cfg) <= deviation_loss(b, Label::Normal, &cfg));
        }
        if a <= b {
            prop_assert!(deviation_loss(a, Label::Anomaly, &cfg) >= deviation_loss(b, Label::Anomaly, &cfg));
        }
    }

    #[test]
    fn loss_is_linear_between_kinks(x in -40.0..40.0f64, y in -40.0..40.0f64, t in 0.0..1.0f64) {
        let cfg = LossConfig::default();
        for (label, kink) in [(Label::Normal, 0.0), (Label::Anomaly, cfg.a)] {
            // x and y on the same side of the kink: the loss is affine there.
            if (x - kink) * (y - kink) > 0.0 {
                let m = t * x + (1.0 - t) * y;
                let interp = t * deviation_loss(x, label, &cfg) + (1.0 - t) * deviation_loss(y, label, &cfg);
                prop_assert!((deviation_loss(m, label, &cfg) - interp).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deviation_is_affine_identity(t in -10.0..10.0f64, mu in -3.0..3.0f64, sigma in 0.01..5.0f64) {
        let r = ReferenceStats { mu_r: mu, sigma_r: sigma };
        prop_assert!((deviation(mu + t * sigma, &r).unwrap() - t).abs() < 1e-9);
    }
}
