//! Property tests for structural invariants across modules.

use lrbose::couplings::{decay_constant, generate, kappa, kappa_nu, GeneratorOptions};
use lrbose::dynamics::{Method, Propagator, PropagatorOptions};
use lrbose::fock::number_operator;
use lrbose::probes::{BoundReport, Verdict};
use lrbose::{Complex64, CouplingKind, FockBasis, HamiltonianSpec, Lattice, QuantumState, Sector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice(two_d: bool) -> Lattice {
    if two_d {
        Lattice::grid(&[4, 4]).unwrap()
    } else {
        Lattice::chain(12).unwrap()
    }
}

fn subset(l: &Lattice, bits: u64) -> Vec<usize> {
    let n = l.n_sites();
    let mut v: Vec<usize> = (0..n).filter(|&s| bits >> (s % 64) & 1 == 1).collect();
    if v.is_empty() {
        v.push((bits as usize) % n);
    }
    v
}

fn random_state(basis: &FockBasis, seed: u64) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..basis.dim())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    QuantumState::new(basis, amps).unwrap().normalized().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fatten_is_monotone(two_d in any::<bool>(), bits in any::<u64>(), a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let l = lattice(two_d);
        let x = l.region(subset(&l, bits)).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(x.fatten(lo).unwrap().is_subset(&x.fatten(hi).unwrap()));
    }

    #[test]
    fn region_triangle(two_d in any::<bool>(), bx in any::<u64>(), by in any::<u64>(), bz in any::<u64>()) {
        let l = lattice(two_d);
        let x = l.region(subset(&l, bx)).unwrap();
        let y = l.region(subset(&l, by)).unwrap();
        let z = l.region(subset(&l, bz)).unwrap();
        let lhs = x.distance(&z).unwrap();
        let rhs = x.distance(&y).unwrap() + y.diameter() + y.distance(&z).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn singleton_fatten_is_ball(two_d in any::<bool>(), site in 0usize..12, r in 0.0f64..5.0) {
        let l = lattice(two_d);
        let x = l.region([site]).unwrap();
        prop_assert_eq!(x.fatten(r).unwrap(), l.ball_at_site(site, r).unwrap());
    }

    #[test]
    fn generated_couplings(alpha in 1.5f64..5.0, amp in 0.1f64..3.0, two_d in any::<bool>()) {
        let l = lattice(two_d);
        for kind in [CouplingKind::Hopping, CouplingKind::Interaction] {
            let m = generate(&l, kind, alpha, amp, GeneratorOptions::default()).unwrap();
            let c = decay_constant(&m, alpha).unwrap();
            prop_assert!((c - amp).abs() <= 1e-12 * amp, "decay constant {} vs amplitude {}", c, amp);
            for x in 0..l.n_sites() {
                for y in 0..l.n_sites() {
                    prop_assert_eq!(m.get(x, y), m.get(y, x).conj());
                }
            }
            if kind == CouplingKind::Hopping {
                let k = kappa(&m).unwrap();
                prop_assert!((k - kappa_nu(&m, None, 0).unwrap()).abs() <= 1e-12 * k.max(1.0));
            }
            for nu in 0..3 {
                prop_assert!(kappa_nu(&m, None, nu).unwrap() <= kappa_nu(&m, None, nu + 1).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn fixed_sector_number_is_scalar(sites in 1usize..6, n in 0usize..4) {
        let l = Lattice::chain(sites).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(n)).unwrap();
        let d = number_operator(&b, &l.full()).unwrap().real_diagonal().unwrap();
        prop_assert!(d.iter().all(|&v| v == n as f64));
    }

    #[test]
    fn evolution_is_unitary_and_reversible(sites in 2usize..6, n in 1usize..4, alpha in 1.5f64..4.0, t in -2.0f64..2.0, seed in any::<u64>(), krylov in any::<bool>()) {
        let l = Lattice::chain(sites).unwrap();
        let j = generate(&l, CouplingKind::Hopping, alpha, 1.0, GeneratorOptions::default()).unwrap();
        let v = generate(&l, CouplingKind::Interaction, alpha, 1.0, GeneratorOptions::default()).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(n)).unwrap();
        let h = HamiltonianSpec::new(j, Some(v)).build(&b).unwrap();
        let method = if krylov { Method::Krylov } else { Method::DenseEigen };
        let prop = Propagator::new(h, PropagatorOptions { method, ..Default::default() }).unwrap();
        let psi = random_state(&b, seed);
        let out = prop.evolve(&psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        let back = prop.evolve(&out, -t).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-8);
    }

    #[test]
    fn nested_balls_dominate(r in 0.0f64..4.0, dr in 0.0f64..4.0, p in 1u32..4, t in 0.0f64..1.5, seed in any::<u64>()) {
        let l = Lattice::chain(6).unwrap();
        let j = generate(&l, CouplingKind::Hopping, 2.5, 1.0, GeneratorOptions::default()).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(3)).unwrap();
        let h = HamiltonianSpec::new(j, None).build(&b).unwrap();
        let prop = Propagator::new(h, PropagatorOptions::default()).unwrap();
        let psi = prop.evolve(&random_state(&b, seed), t).unwrap();
        let small = l.ball(&[2.0], r).unwrap().mask();
        let big = l.ball(&[2.0], r + dr).unwrap().mask();
        prop_assert!(psi.region_moment(&small, p) <= psi.region_moment(&big, p) + 1e-12);
    }

    #[test]
    fn verdict_tracks_margin(lhs in prop::collection::vec(0.0f64..1.0, 1..20), slack in -1e-6f64..1e-6, tol in 1e-12f64..1e-7) {
        let rhs: Vec<f64> = lhs.iter().map(|v| v + slack).collect();
        let times = (0..lhs.len()).map(|i| i as f64).collect();
        let r = BoundReport::new("x", times, lhs, rhs, tol);
        let want = if r.margin >= -tol { Verdict::Holds } else { Verdict::Violated };
        prop_assert_eq!(r.verdict, want);
        prop_assert!(r.fitted_constants.is_empty());
    }
}
