use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcl::agent::{Sac, SacConfig};
use pcl::curriculum::{CurriculumConfig, CurriculumEngine, Sampler};
use pcl::env::{DcMotorConfig, EnvConfig, PointMazeConfig};
use pcl::harness::evaluate;
use pcl::mdn::{MdnConfig, MdnHead};
use pcl::par::Execution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn candidate_scoring(c: &mut Criterion) {
    let env = EnvConfig::DcMotor(DcMotorConfig::default())
        .build()
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let agent = Sac::new(SacConfig::default(), 2, 1, 1, &mut rng).unwrap();
    let mdn = MdnHead::new(
        MdnConfig {
            components: 12,
            ..MdnConfig::default()
        },
        2,
        1,
        1,
        &mut rng,
    )
    .unwrap();
    let cfg = CurriculumConfig {
        sampler: Sampler::PclModel,
        num_samples: 1000,
        ..CurriculumConfig::default()
    };
    let mut group = c.benchmark_group("candidate_scoring");
    for (name, exec) in MODES {
        let engine = CurriculumEngine::new(cfg.clone(), env.goal_spec().clone(), None)
            .unwrap()
            .with_execution(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            b.iter(|| {
                black_box(
                    engine
                        .propose_candidates(&[0.0, 0.0], &agent, Some(&mdn), &mut rng)
                        .unwrap(),
                )
            })
        });
    }
    group.finish();
}

fn coverage_evaluation(c: &mut Criterion) {
    let env = EnvConfig::PointMaze(PointMazeConfig {
        map: "builtin:square21".into(),
        ..PointMazeConfig::default()
    })
    .build()
    .unwrap();
    let goals = env.evaluation_goals();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let agent = Sac::new(SacConfig::default(), 4, 2, 2, &mut rng).unwrap();
    let mut group = c.benchmark_group("coverage_evaluation");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(evaluate(&agent, &env, &goals, 4, 0, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, candidate_scoring, coverage_evaluation);
criterion_main!(benches);
