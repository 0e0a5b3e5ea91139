use criterion::{criterion_group, criterion_main, Criterion};

use nanofiber_qed::atomic::{build_ordered_array, AtomicTransition, CylPosition};
use nanofiber_qed::fiber::{normalize_mode, solve_dispersion, FiberSpec, GuidedMode};
use nanofiber_qed::greens::GreenVariant;
use nanofiber_qed::spectral::{
    assemble_self_energy, compute_spectrum, detuning_grid, enumerate_basis, factorize_resolvent,
    ModelOptions, Truncation,
};
use nanofiber_qed::total_green;

fn silica() -> FiberSpec {
    FiberSpec::new(std::f64::consts::TAU * 200.0 / 780.0, 1.45 * 1.45).unwrap()
}

fn bench_dispersion(c: &mut Criterion) {
    let fiber = silica();
    c.bench_function("solve_dispersion", |b| {
        b.iter(|| solve_dispersion(std::hint::black_box(&fiber), 1.0).unwrap())
    });
}

fn bench_mode_normalization(c: &mut Criterion) {
    let fiber = silica();
    let mode = GuidedMode::solve(fiber, 1.0).unwrap();
    c.bench_function("normalize_mode", |b| {
        b.iter(|| normalize_mode(std::hint::black_box(&mode)).unwrap())
    });
}

fn bench_total_green(c: &mut Criterion) {
    let mode = normalize_mode(&GuidedMode::solve(silica(), 1.0).unwrap()).unwrap();
    let a = mode.fiber().radius();
    let p1 = CylPosition { rho: 1.5 * a, phi: 0.0, z: 0.0 };
    let p2 = CylPosition { rho: 1.5 * a, phi: 0.0, z: 2.9 };
    c.bench_function("total_green", |b| {
        b.iter(|| total_green(&mode, &p1, &p2, 1.0, GreenVariant::Full).unwrap())
    });
}

fn bench_resolvent_point(c: &mut Criterion) {
    let mode = normalize_mode(&GuidedMode::solve(silica(), 1.0).unwrap()).unwrap();
    let a = mode.fiber().radius();
    let transition = AtomicTransition::new(1.5784e-8);
    let array = build_ordered_array(
        transition,
        mode.fiber(),
        5,
        mode.half_guided_wavelength(),
        1.5 * a,
        0.0,
    )
    .unwrap();
    let basis = enumerate_basis(5, Truncation::MaxSpinFlips(1)).unwrap();
    let sigma =
        assemble_self_energy(&basis, &array, &mode, 1.0, 0.0, GreenVariant::Full).unwrap();
    c.bench_function("factorize_resolvent_45", |b| {
        b.iter(|| factorize_resolvent(std::hint::black_box(&sigma), 1e-8).unwrap())
    });
}

fn bench_spectrum(c: &mut Criterion) {
    let mode = normalize_mode(&GuidedMode::solve(silica(), 1.0).unwrap()).unwrap();
    let a = mode.fiber().radius();
    let transition = AtomicTransition::new(1.5784e-8);
    let array = build_ordered_array(
        transition,
        mode.fiber(),
        5,
        mode.half_guided_wavelength(),
        1.5 * a,
        0.0,
    )
    .unwrap();
    let grid = detuning_grid(-10.0, 10.0, 101);
    let options = ModelOptions::default();
    c.bench_function("spectrum_n5_101pts", |b| {
        b.iter(|| compute_spectrum(&array, &mode, &grid, &options).unwrap())
    });
}

criterion_group!(
    benches,
    bench_dispersion,
    bench_mode_normalization,
    bench_total_green,
    bench_resolvent_point,
    bench_spectrum
);
criterion_main!(benches);
