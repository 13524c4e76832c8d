use proptest::prelude::*;
use qchan::analysis::power_verdicts;
use qchan::channel::{kraus_from_choi, random_unital, random_unitary, Channel};
use qchan::linalg::{
    c, nullspace, orthonormal_span, partial_transpose, unvec, vec, ComplexMatrix, ComplexSchur, Tolerance,
};
use qchan::separability::{is_ppt, EbStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(r: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, cols, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Random CPTP map from `m` Kraus operators: `K_k = G_k S^{-1/2}` with `S = Σ G_k* G_k`.
fn random_channel(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Channel {
    let gs: Vec<ComplexMatrix> = (0..m).map(|_| random_matrix(d, d, rng)).collect();
    let s = gs.iter().fold(ComplexMatrix::zeros(d, d), |acc, g| acc + g.adjoint() * g);
    let (values, vectors) = qchan::linalg::eigh(&s);
    let inv_sqrt = ComplexMatrix::from_fn(d, d, |i, j| if i == j { c(values[i].powf(-0.5), 0.0) } else { c(0.0, 0.0) });
    let root = &vectors * inv_sqrt * vectors.adjoint();
    Channel::new(gs.iter().map(|g| g * &root).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), dl in 1usize..4, dr in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(dl * dr, dl * dr, &mut rng);
        let once = partial_transpose(&m, dl, dr).unwrap();
        let twice = partial_transpose(&once, dl, dr).unwrap();
        prop_assert!((twice - &m).norm() == 0.0);
        prop_assert!((once.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn vec_roundtrip(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(d, d, &mut rng);
        prop_assert_eq!(unvec(&vec(&m), d).unwrap(), m);
    }

    #[test]
    fn representations_roundtrip(seed in any::<u64>(), d in 1usize..5, m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerance::default();
        let e = random_channel(d, m, &mut rng);
        prop_assert!(e.is_tp(tol));
        let back = kraus_from_choi(&e.choi_of(), tol).unwrap();
        prop_assert!((back.choi() - e.choi()).norm() < 1e-9);
        prop_assert!(back.kraus().len() <= d * d);
        let from_s = Channel::from_superoperator(e.superoperator(), tol).unwrap();
        prop_assert!((from_s.superoperator() - e.superoperator()).norm() < 1e-9);
        let x = random_matrix(d, d, &mut rng);
        let via_s = unvec(&(e.superoperator() * vec(&x)), d).unwrap();
        prop_assert!((via_s - e.apply(&x).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn span_is_orthonormal_and_complete(seed in any::<u64>(), d in 1usize..5, rank in 1usize..4, extra in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<ComplexMatrix> = (0..rank).map(|_| random_matrix(d, d, &mut rng)).collect();
        let mut mats = gens.clone();
        for _ in 0..extra {
            let combo = gens.iter().fold(ComplexMatrix::zeros(d, d), |acc, g| acc + g * c(rng.random::<f64>(), rng.random::<f64>()));
            mats.push(combo);
        }
        let basis = orthonormal_span(&mats, Tolerance::default()).unwrap();
        prop_assert_eq!(basis.len(), rank.min(d * d));
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip: num_complex::Complex64 = a.iter().zip(b.iter()).map(|(p, q)| p.conj() * q).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - c(want, 0.0)).norm() < 1e-10);
            }
        }
        for m in &mats {
            prop_assert!(qchan::linalg::span_residual(&basis, m) < 1e-10 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn nullspace_vectors_are_annihilated(seed in any::<u64>(), r in 1usize..8, n in 1usize..8, rank in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(r, rank, &mut rng) * random_matrix(rank, n, &mut rng);
        let null = nullspace(&a, Tolerance::default());
        prop_assert_eq!(null.len(), n - rank.min(r).min(n));
        for v in &null {
            prop_assert!((&a * v).norm() < 1e-10);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schur_reconstructs_superoperators(seed in any::<u64>(), d in 2usize..5, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_channel(d, m, &mut rng).superoperator().clone();
        let f = ComplexSchur::new(&s);
        prop_assert!((&f.q * &f.t * f.q.adjoint() - &s).norm() < 1e-10 * s.norm());
        prop_assert!((f.q.adjoint() * &f.q - ComplexMatrix::identity(d * d, d * d)).norm() < 1e-10);
    }

    #[test]
    fn ppt_is_invariant_under_unitary_pre_and_post(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerance::default();
        let e = random_unital(d, 2, &mut rng).unwrap();
        let u = Channel::unitary(random_unitary(d, &mut rng), tol).unwrap();
        let v = Channel::unitary(random_unitary(d, &mut rng), tol).unwrap();
        let conj = u.compose(&e).unwrap().compose(&v).unwrap();
        prop_assert!((is_ppt(&e, tol).min_eigenvalue - is_ppt(&conj, tol).min_eigenvalue).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Once a power is entanglement breaking every later power is too, so a
    /// NotEB entry can never follow an EB entry.
    #[test]
    fn eb_is_never_followed_by_not_eb(seed in any::<u64>(), d in 2usize..4, mix in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerance::default();
        let phi = random_unital(d, 2, &mut rng).unwrap();
        let e = qchan::channel::convex_mix(1.0 - mix, &phi, &Channel::omega(d)).unwrap();
        let log = power_verdicts(&e, 8, false, tol).unwrap();
        let first_eb = log.iter().position(|(_, v)| v.status == EbStatus::EB);
        if let Some(k) = first_eb {
            prop_assert!(log[k..].iter().all(|(_, v)| v.status != EbStatus::NotEB));
        }
        for (n, v) in &log {
            prop_assert!(v.validate(&e.power(*n).unwrap(), tol));
        }
    }
}
