//! Grid-evaluation benchmarks for the two execution modes. Every group name
//! carries the active mode, so comparing the modes is two runs of the same
//! suite:
//!
//! ```text
//! cargo bench                          # data-parallel (default features)
//! cargo bench --no-default-features    # sequential fallback
//! ```

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fermi_hj_core::grid::{map_indexed, TimeGrid};
use fermi_hj_core::hj::{reduce, verify_candidate, InteractingClosedForm};
use fermi_hj_core::mechanics::{DeriveConvention, ElSign};
use fermi_hj_core::model::{parse_model, ModelSpec};

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

fn interacting() -> ModelSpec {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/interacting.fhj");
    parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("model")
}

/// Full candidate verification: every equation family on every grid point.
fn bench_verify(c: &mut Criterion) {
    let spec = interacting();
    let reduced = reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
    let env = InteractingClosedForm::fixture(1.0).env();
    let mut group = c.benchmark_group(format!("verify-candidate/{}", mode()));
    for points in [501usize, 2001, 8001] {
        let grid = TimeGrid::new(0.0, 10.0, points).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(points), &grid, |b, &grid| {
            b.iter(|| {
                let outcome = verify_candidate(&spec, &reduced, &env, grid).unwrap();
                black_box(outcome.max_residual)
            })
        });
    }
    group.finish();
}

/// Bare per-point map: evaluate a bound coordinate polynomial on the grid.
fn bench_poly_grid(c: &mut Criterion) {
    let spec = interacting();
    let reduced = reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
    let env = InteractingClosedForm::fixture(1.0).env();
    let binding = reduced.bindings.values().next().unwrap().clone();
    let mut group = c.benchmark_group(format!("poly-grid-eval/{}", mode()));
    for points in [2001usize, 20001] {
        let times = TimeGrid::new(0.0, 10.0, points).unwrap().times();
        group.bench_with_input(BenchmarkId::from_parameter(points), &times, |b, times| {
            b.iter(|| {
                let worst = map_indexed(times.len(), |i| {
                    binding.to_element(&env, times[i]).unwrap().max_abs()
                });
                black_box(worst.into_iter().fold(0.0f64, f64::max))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_verify, bench_poly_grid);
criterion_main!(benches);
