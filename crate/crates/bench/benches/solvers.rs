use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ngnep::amp::amp_solve;
use ngnep::library::{build_instance, builtin, Family, InstanceSpec};
use ngnep::outer::{solve, PenalizedVi};
use ngnep::{Algorithm, OuterConfig, PenaltyMode, PenaltyState, SimpleSet, StopRule};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::hint::black_box;

fn inner_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("amp_penalized_cournot");
    for players in [2usize, 8, 32] {
        let spec = InstanceSpec::random(Family::Cournot, players, 1, 1).unwrap();
        let problem = build_instance(&spec).unwrap();
        let pen = PenaltyState::new(&problem, 16.0, 16.0);
        let vi = PenalizedVi::new(&problem, &pen, PenaltyMode::Quadratic);
        let start = vec![0.0; problem.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(players), &players, |b, _| {
            b.iter(|| amp_solve(&vi, black_box(&start), StopRule::new(500, 0.0)).unwrap())
        });
    }
    group.finish();
}

fn projections(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(3);
    let n = 256;
    let point: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let sets = [
        ("box", SimpleSet::unit_box(n)),
        ("ball", SimpleSet::Ball { center: vec![0.0; n], radius: 1.0 }),
        ("simplex", SimpleSet::Simplex { dim: n, scale: 1.0 }),
    ];
    let mut group = c.benchmark_group("projection_256");
    for (name, set) in &sets {
        group.bench_function(*name, |b| b.iter(|| set.project(black_box(&point)).unwrap()));
    }
    group.finish();
}

fn outer_loops(c: &mut Criterion) {
    let mut group = c.benchmark_group("outer");
    group.sample_size(20);
    for name in ["cournot-active", "transport", "monotone-linear"] {
        let problem = build_instance(&builtin(name).unwrap()).unwrap();
        let config = OuterConfig::for_dimension(problem.dim());
        let start = vec![0.0; problem.dim()];
        for algo in [Algorithm::Ampqp, Algorithm::Ampal] {
            group.bench_function(format!("{algo}/{name}"), |b| {
                b.iter(|| solve(&problem, algo, &config, black_box(&start)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, inner_loop, projections, outer_loops);
criterion_main!(benches);
