//! Benchmarks for the dense solver kernels and the synthesis pipeline
//! stages at demo-representative sizes.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use regsynth_core::extended::assemble_extended;
use regsynth_core::extension::build_extension_heat1d;
use regsynth_core::internal_model::build_internal_model;
use regsynth_core::matrix::DenseMatrix;
use regsynth_core::mesh_fem::{
    assemble_parabolic_2d, build_rect_mesh, ScalarField, VectorField2,
};
use regsynth_core::models::{discretize, PlantSpec};
use regsynth_core::numlin;
use regsynth_core::signals::{ReferenceSignal, SignalTerm};
use regsynth_core::sim::simulate;
use regsynth_core::synthesis::{assemble_closed_loop, synthesize, SynthesisParams};

fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
    // Deterministic pseudo-random fill; no RNG dependency needed.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    DenseMatrix::from_fn(n, n, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    })
}

fn heat_spec() -> PlantSpec {
    PlantSpec::Heat1dNeumann {
        nu: 1.0,
        alpha: 0.0,
        sensors: vec![ScalarField::IndicatorInterval { a: 0.3, b: 0.7 }],
    }
}

fn heat_reference() -> ReferenceSignal {
    ReferenceSignal::new(
        1,
        vec![
            SignalTerm {
                omega: 0.0,
                a: DenseMatrix::from_rows(&[&[1.0]]),
                b: DenseMatrix::zeros(1, 1),
            },
            SignalTerm {
                omega: 2.0,
                a: DenseMatrix::zeros(1, 1),
                b: DenseMatrix::from_rows(&[&[1.0]]),
            },
        ],
    )
    .unwrap()
}

fn bench_numlin(c: &mut Criterion) {
    let a60 = random_matrix(60, 7);
    c.bench_function("real_schur_60", |b| {
        b.iter_batched(|| a60.clone(), |a| numlin::real_schur(&a).unwrap(), BatchSize::SmallInput)
    });

    let mut stable = random_matrix(40, 11);
    for i in 0..40 {
        stable[(i, i)] -= 41.0;
    }
    let g = random_matrix(40, 13);
    let w = (&g + &g.transpose()).scale(0.5);
    c.bench_function("lyapunov_40", |b| {
        b.iter(|| numlin::lyapunov_solve(&stable, &w).unwrap())
    });

    let a = random_matrix(30, 17);
    let bmat = DenseMatrix::from_fn(30, 2, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
    let q = DenseMatrix::identity(30);
    let r = DenseMatrix::identity(2);
    c.bench_function("care_30", |b| {
        b.iter(|| numlin::care_solve(&a, &bmat, &q, &r).unwrap())
    });
}

fn bench_assembly(c: &mut Criterion) {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 12, 12, [0, 1, 2, 3]).unwrap();
    let alpha = ScalarField::Linear { c0: 0.0, cx: 3.0, cy: 3.0 };
    let beta = VectorField2::zero();
    c.bench_function("assemble_parabolic_12x12", |b| {
        b.iter(|| assemble_parabolic_2d(&mesh, 0.5, &alpha, &beta, &[0, 1, 2, 3]).unwrap())
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let spec = heat_spec();
    let plant = discretize(&spec, 40).unwrap();
    let ext = build_extension_heat1d(1.0).unwrap();
    let sys = assemble_extended(&plant, &ext).unwrap();
    let im = build_internal_model(1, &[(0.0, 1), (2.0, 1)]).unwrap();
    let params = SynthesisParams::default_for(1, 1, 0.5, 0.5, 10);
    let mut group = c.benchmark_group("synthesis");
    group.sample_size(10);
    group.bench_function("heat_synthesize_40", |b| {
        b.iter(|| synthesize(&sys, &im, &params).unwrap())
    });
    group.finish();

    let (ctrl, _) = synthesize(&sys, &im, &params).unwrap();
    let sim_plant = discretize(&spec, 80).unwrap();
    let sim_sys = assemble_extended(&sim_plant, &ext).unwrap();
    let cl = assemble_closed_loop(&sim_sys, &ctrl).unwrap();
    let sig = heat_reference();
    let x0 = vec![0.0; cl.state_dim()];
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("heat_closed_loop_10s", |b| {
        b.iter(|| simulate(&cl, &sig, &x0, 10.0, 0.01).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_numlin, bench_assembly, bench_pipeline);
criterion_main!(benches);
