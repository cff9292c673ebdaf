use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lrbose::astlo::{CutoffFunction, MultiscaleSchedule};
use lrbose::couplings::{generate, kappa, GeneratorOptions};
use lrbose::dynamics::{Method, Propagator, PropagatorOptions};
use lrbose::{CouplingKind, FockBasis, HamiltonianSpec, Lattice, QuantumState, Sector};

fn spec(l: &Lattice) -> HamiltonianSpec {
    let j = generate(l, CouplingKind::Hopping, 2.5, 1.0, GeneratorOptions::default()).unwrap();
    let v = generate(l, CouplingKind::Interaction, 2.5, 1.0, GeneratorOptions::default()).unwrap();
    HamiltonianSpec::new(j, Some(v))
}

fn staggered(n: usize) -> Vec<u8> {
    (0..n).map(|i| u8::from(i % 2 == 0)).collect()
}

fn basis_and_hamiltonian(c: &mut Criterion) {
    let mut g = c.benchmark_group("build");
    for n in [8usize, 12] {
        let l = Lattice::chain(n).unwrap();
        let sector = Sector::FixedN(n / 2);
        g.bench_with_input(BenchmarkId::new("basis", n), &n, |b, _| {
            b.iter(|| FockBasis::new(black_box(&l), sector).unwrap())
        });
        let basis = FockBasis::new(&l, sector).unwrap();
        let s = spec(&l);
        g.bench_with_input(BenchmarkId::new("hamiltonian", n), &n, |b, _| {
            b.iter(|| s.build(black_box(&basis)).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let l = Lattice::chain(12).unwrap();
    let basis = FockBasis::new(&l, Sector::FixedN(6)).unwrap();
    let h = spec(&l).build(&basis).unwrap();
    let psi = QuantumState::product_state(&basis, &staggered(12)).unwrap();
    let x = psi.amplitudes().to_vec();
    let mut y = x.clone();
    c.bench_function("matvec/chain12_n6", |b| b.iter(|| h.matvec_into(black_box(&x), &mut y)));
}

fn evolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    for (n, method) in [(8usize, Method::DenseEigen), (8, Method::Krylov), (12, Method::Krylov)] {
        let l = Lattice::chain(n).unwrap();
        let basis = FockBasis::new(&l, Sector::FixedN(n / 2)).unwrap();
        let h = spec(&l).build(&basis).unwrap();
        let opts = PropagatorOptions {
            method,
            ..PropagatorOptions::default()
        };
        let prop = Propagator::new(h, opts).unwrap();
        let psi = QuantumState::product_state(&basis, &staggered(n)).unwrap();
        prop.evolve(&psi, 0.0).unwrap();
        g.bench_function(format!("{method:?}/chain{n}"), |b| {
            b.iter(|| prop.evolve(black_box(&psi), 1.0).unwrap())
        });
    }
    g.finish();
}

fn cutoff(c: &mut Criterion) {
    let l = Lattice::chain(8).unwrap();
    let j = generate(&l, CouplingKind::Hopping, 2.5, 1.0, GeneratorOptions::default()).unwrap();
    let k = kappa(&j).unwrap();
    let sched = MultiscaleSchedule::new(4.0, 2.0, 12.0 * k, k, 2).unwrap();
    c.bench_function("cutoff/build_2000", |b| {
        b.iter(|| CutoffFunction::new(black_box(sched.omega), 2000).unwrap())
    });
}

criterion_group!(benches, basis_and_hamiltonian, matvec, evolve, cutoff);
criterion_main!(benches);
