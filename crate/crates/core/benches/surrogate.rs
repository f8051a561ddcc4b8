use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pragmatune::corpus;
use pragmatune::evaluator::{mock_evaluate, MockObjective};
use pragmatune::par::Execution;
use pragmatune::space::sample_random;
use pragmatune::surrogate::{fit, Learner, SurrogateOptions, TrainingSet};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn training_set(n: usize) -> (TrainingSet, Vec<Vec<f64>>) {
    let space = corpus::load("mock_syr2k").unwrap().space;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let train = sample_random(&space, &mut rng, n);
    let x = train.iter().map(|c| space.encode(c)).collect();
    let y = train
        .iter()
        .map(|c| mock_evaluate(&space, c, MockObjective::Sphere, 1).objective.unwrap())
        .collect();
    let pool = sample_random(&space, &mut rng, 4096).iter().map(|c| space.encode(c)).collect();
    (TrainingSet::new(x, y).unwrap(), pool)
}

fn bench_fit(c: &mut Criterion) {
    let (data, _) = training_set(200);
    let mut group = c.benchmark_group("fit_200");
    for learner in [Learner::RandomForest, Learner::ExtraTrees] {
        for (name, execution) in MODES {
            let opts = SurrogateOptions { execution, ..SurrogateOptions::default() };
            group.bench_function(BenchmarkId::new(learner.code(), name), |b| {
                b.iter(|| fit(learner, &data, 3, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let (data, pool) = training_set(200);
    let mut group = c.benchmark_group("predict_pool_4096");
    for (name, execution) in MODES {
        let opts = SurrogateOptions { execution, ..SurrogateOptions::default() };
        let model = fit(Learner::RandomForest, &data, 3, &opts).unwrap();
        group.bench_function(BenchmarkId::new("RF", name), |b| b.iter(|| model.predict(&pool).unwrap()));
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_fit, bench_predict
}
criterion_main!(benches);
