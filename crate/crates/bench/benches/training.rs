use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use devnet::data::synth_gaussian;
use devnet::deviation::sample_reference;
use devnet::trainer::{batch_loss, sample_minibatch, train_variant, TrainConfig};
use devnet::{seed, DevNetConfig, Parameters, PriorConfig, TrainingSet, Variant};

fn training_set(n: usize, d: usize) -> TrainingSet {
    let data = synth_gaussian(n, 30, d, 2.0, 7).unwrap();
    let unlabeled = data.rows_of(devnet::Label::Normal);
    let known = data.rows_of(devnet::Label::Anomaly);
    TrainingSet::new(unlabeled, known).unwrap()
}

fn minibatch_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_loss");
    for &d in &[100usize, 1000] {
        let ts = training_set(2000, d);
        let arch = Variant::Def.architecture(d).unwrap();
        let params = Parameters::init(&arch, 1).unwrap();
        let cfg = DevNetConfig::default();
        let mut rng = seed::rng(3);
        let (batch, labels) = sample_minibatch(&ts, 512, &mut rng).unwrap();
        let reference = sample_reference(&PriorConfig::default(), &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| {
                batch_loss(
                    &params,
                    batch.view(),
                    &labels,
                    &[reference],
                    &cfg.loss,
                    cfg.optimizer.weight_decay_lambda,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn reference_draw(c: &mut Criterion) {
    let prior = PriorConfig::default();
    let mut rng = seed::rng(0);
    c.bench_function("sample_reference l=5000", |b| {
        b.iter(|| sample_reference(&prior, &mut rng))
    });
}

fn short_training(c: &mut Criterion) {
    let ts = training_set(5000, 10);
    let cfg = DevNetConfig {
        train: TrainConfig {
            n_epochs: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut group = c.benchmark_group("train_2_epochs");
    group.sample_size(10);
    for variant in Variant::ALL {
        let mut run_cfg = cfg;
        run_cfg.train.variant = variant;
        group.bench_function(variant.name(), |b| {
            b.iter(|| train_variant(&ts, &run_cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, minibatch_step, reference_draw, short_training);
criterion_main!(benches);
