//! Kernel timings on one thread versus the default pool. Build with
//! `--no-default-features` to time the sequential fallback itself.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use micropolar::domain::{advect, laplacian, AdvectionScheme, Grid};
use micropolar::dynamics::{initial_condition, InitialKind, PhysParams, Stepper, Variant};
use micropolar::elliptic::PoissonSolver;

const SIZES: [usize; 2] = [64, 128];

/// A pool of `threads` workers (0 = default size); kernels run inside it.
#[cfg(feature = "parallel")]
struct Pool(rayon::ThreadPool);

#[cfg(feature = "parallel")]
impl Pool {
    fn new(threads: usize) -> Self {
        Pool(rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap())
    }
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.0.install(f)
    }
}

#[cfg(not(feature = "parallel"))]
struct Pool;

#[cfg(not(feature = "parallel"))]
impl Pool {
    fn new(_threads: usize) -> Self {
        Pool
    }
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        f()
    }
}

fn modes() -> Vec<(&'static str, usize)> {
    if micropolar::par::is_parallel() {
        vec![("one_thread", 1), ("pool", 0)]
    } else {
        vec![("sequential", 1)]
    }
}

fn kernels(c: &mut Criterion) {
    for n in SIZES {
        let grid = Grid::unit_square(n).unwrap();
        let params = PhysParams::new(1.0, 0.2, Variant::Standard).unwrap();
        let stepper = Stepper::new(PoissonSolver::new(grid), params, AdvectionScheme::Central2);
        let state = initial_condition(InitialKind::RandomSmooth, stepper.solver(), 7, 0.05).unwrap();
        let dt = stepper.stable_dt(&state, 0.4, 0.05);
        for (label, threads) in modes() {
            let mut group = c.benchmark_group(format!("{label}_{n}"));
            let pool = Pool::new(threads);
            group.bench_function(BenchmarkId::new("laplacian", n), |b| {
                b.iter(|| pool.run(|| laplacian(black_box(state.omega()))))
            });
            group.bench_function(BenchmarkId::new("advect", n), |b| {
                b.iter(|| pool.run(|| advect(black_box(state.u()), black_box(state.w()), AdvectionScheme::Central2).unwrap()))
            });
            group.bench_function(BenchmarkId::new("poisson", n), |b| {
                b.iter(|| pool.run(|| stepper.solver().solve_poisson_dirichlet(black_box(state.omega())).unwrap()))
            });
            group.bench_function(BenchmarkId::new("step", n), |b| {
                b.iter(|| pool.run(|| stepper.step(black_box(&state), dt).unwrap()))
            });
            group.finish();
        }
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kernels
}
criterion_main!(benches);
