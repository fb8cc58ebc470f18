//! Parallel vs forced-serial timings for the two fan-out hot paths: the
//! Monte-Carlo smoothed oracle and a sweep-shaped batch of independent runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use noisy_stm_core::config::{Algorithm, SolverConfig, TauMode};
use noisy_stm_core::exec;
use noisy_stm_core::oracles::{mix_seed, sphere_smoothed_gradient, GradientOracle, RngStream};
use noisy_stm_core::problems::nesterov_degenerate;
use noisy_stm_core::solvers::stm_run;
use noisy_stm_core::vector::Vector;

fn bench_smoothed_oracle(c: &mut Criterion) {
    let problem = nesterov_degenerate(200, 100, 2.0).unwrap();
    let x = Vector::from_fn(200, |i| (i as f64 * 0.37).sin());
    let mut group = c.benchmark_group("sphere_smoothed_gradient_n200_m512");
    for &serial in &[false, true] {
        let label = if serial { "serial" } else { "parallel" };
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            exec::set_force_serial(serial);
            b.iter(|| {
                let mut rng = RngStream::new(42);
                sphere_smoothed_gradient(
                    |p| problem.eval_unchecked(p).0,
                    &x,
                    1e-4,
                    512,
                    &mut rng,
                )
                .unwrap()
            });
        });
        exec::set_force_serial(false);
    }
    group.finish();
}

fn bench_run_batch(c: &mut Criterion) {
    let problem = nesterov_degenerate(100, 50, 2.0).unwrap();
    let mut group = c.benchmark_group("stm_batch_16x200");
    group.sample_size(10);
    for &serial in &[false, true] {
        let label = if serial { "serial" } else { "parallel" };
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            exec::set_force_serial(serial);
            b.iter(|| {
                exec::map_indexed(16, |rep| {
                    let cfg = SolverConfig::for_problem(
                        &problem,
                        Algorithm::Stm,
                        TauMode::Tau1,
                        200,
                        mix_seed(7, 0, rep as u64),
                    );
                    let mut oracle = GradientOracle::exact(cfg.seed);
                    stm_run(&problem, &mut oracle, &cfg).unwrap().final_x
                })
            });
        });
        exec::set_force_serial(false);
    }
    group.finish();
}

criterion_group!(benches, bench_smoothed_oracle, bench_run_batch);
criterion_main!(benches);
