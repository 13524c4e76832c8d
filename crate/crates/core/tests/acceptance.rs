//! Acceptance criteria 1–9. Run with
//! `cargo test -p qchan-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};

use qchan::algebra::{
    composed_domain, generated_algebra, md_brute_check, md_chain, minimal_projections, multiplicative_domain,
    StarAlgebra,
};
use qchan::analysis::{
    block_decompose, classify_asymptotic, densify, example51, generate, separability_index, FamilySpec,
    IndexOutcome,
};
use qchan::channel::{
    channel_distance, choi_from_superoperator, kraus_from_choi, matrix_units, random_unital, Channel, ChoiMatrix,
};
use qchan::io::{channel_from_json, channel_to_json};
use qchan::linalg::{c, commutator, ComplexMatrix, Tolerance};
use qchan::separability::{
    eb_exact_small, eb_verdict, gurvits_ball_certificate, is_ppt, random_ppt_unital, stormer_mix_certificate,
    Certificate, EbStatus,
};
use qchan::spectral::{is_primitive, peripheral_projection, spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const EPS: f64 = 1e-8;
const NPT_MARGIN: f64 = 1e-6;
const STRUCTURE_TOL: f64 = 1e-7;
const RECONSTRUCT_EXACT: f64 = 1e-7;
const RECONSTRUCT_SAMPLED: f64 = 1e-6;
const ROUNDTRIP_TOL: f64 = 1e-9;
const CONVERGENCE_TOL: f64 = 1e-6;
const INDEX_CAP: usize = 64;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn tol() -> Tolerance {
    Tolerance::new(EPS).expect("valid tolerance")
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn gaussian(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Schur channel with a random correlation matrix.
fn random_schur(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> Channel {
    let g = ComplexMatrix::from_fn(d, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let b = &g * g.adjoint();
    let scale: Vec<f64> = (0..d).map(|i| 1.0 / b[(i, i)].re.sqrt()).collect();
    let b = ComplexMatrix::from_fn(d, d, |i, j| b[(i, j)] * scale[i] * scale[j]);
    Channel::schur(&b, tol()).expect("correlation matrix is PSD")
}

/// Unital channels with a spread of multiplicative-domain structure:
/// unitary conjugations, Schur channels, their compositions and generic maps.
fn structured_unital(seed: u64) -> Channel {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let d = 2 + (seed as usize % 3);
    match seed % 4 {
        0 => random_unital(d, 1, &mut rng).unwrap(),
        1 => random_schur(d, 2, &mut rng),
        2 => {
            let u = random_unital(d, 1, &mut rng).unwrap();
            let s = random_schur(d, 2, &mut rng);
            u.compose(&s).unwrap()
        }
        _ => random_unital(d, 2, &mut rng).unwrap(),
    }
}

fn sampled_ppt() -> Vec<(u64, Channel)> {
    (0..10u64)
        .map(|seed| {
            let d = 2 + (seed as usize % 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (seed, random_ppt_unital(d, &mut rng).expect("sampler succeeds"))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let e = ok(example51(3))?;
    let ppt = is_ppt(&e, tol());
    ensure!(!ppt.ppt && ppt.min_eigenvalue < -NPT_MARGIN, "PT eigenvalue {}", ppt.min_eigenvalue);
    let md = ok(multiplicative_domain(&e, tol()))?;
    ensure!(md.dim() == 5 && !md.is_abelian(tol()), "M_E dim {} abelian {}", md.dim(), md.is_abelian(tol()));
    let e2 = ok(e.power(2))?;
    let md2 = ok(multiplicative_domain(&e2, tol()))?;
    ensure!(
        md2.equals(&StarAlgebra::diagonal(3), tol()) && md2.is_abelian(tol()),
        "M_E² has dim {}",
        md2.dim()
    );
    let v = ok(eb_verdict(&e2, tol()))?;
    ensure!(
        v.status == EbStatus::EB && matches!(v.certificate, Some(Certificate::AbelianRange { .. })),
        "E² verdict {:?}",
        v.status
    );
    let idx = ok(separability_index(&e, INDEX_CAP, tol()))?;
    ensure!(idx.found() == Some(2), "index {:?}", idx.outcome);
    Ok(format!("min PT eig {:.3e}, dims 5 -> 3, index 2", ppt.min_eigenvalue))
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    for d in [4usize, 5] {
        let e = ok(example51(d))?;
        for n in 1..=d - 2 {
            let v = ok(eb_verdict(&ok(e.power(n))?, tol()))?;
            ensure!(v.status == EbStatus::NotEB, "d={d} n={n}: {:?}", v.status);
        }
        let idx = ok(separability_index(&e, INDEX_CAP, tol()))?;
        ensure!(idx.found() == Some(d - 1), "d={d}: {:?}", idx.outcome);
        notes.push(format!("d={d} index {}", d - 1));
    }
    Ok(notes.join(", "))
}

fn criterion_3() -> Outcome {
    let e = ok(generate(&FamilySpec::SchurLambda { lambda: 0.5 }))?;
    for n in 1..=20 {
        let decided = eb_exact_small(&ok(e.power(n))?, tol());
        ensure!(decided == Some(false), "n={n}: {decided:?}");
    }
    let chain = ok(md_chain(&e, None, tol()))?;
    ensure!(
        chain.kappa == 1 && chain.stabilized.equals(&StarAlgebra::diagonal(2), tol()),
        "kappa {} dims {:?}",
        chain.kappa,
        chain.dims()
    );
    let a = ok(classify_asymptotic(&e, tol()))?;
    ensure!(
        a.asymptotically_eb
            && matches!(a.peripheral_projection_verdict.certificate, Some(Certificate::AbelianRange { .. }))
            && a.peripheral_projection_verdict.validate(&a.peripheral_projection, tol()),
        "classification {:?}",
        a.peripheral_projection_verdict.status
    );
    Ok("powers 1..20 NotEB, kappa 1, P certified".into())
}

fn criterion_4() -> Outcome {
    let mut found = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for (seed, e) in sampled_ppt() {
        let d = e.dim();
        let idx = ok(separability_index(&e, INDEX_CAP, tol()))?;
        let Some(n) = idx.found() else {
            return Err(format!("seed {seed}: {:?}", idx.outcome));
        };
        found.push(n);
        let md = ok(multiplicative_domain(&e, tol()))?;
        let worst = md.max_commutator().map_or(0.0, |(_, _, n)| n);
        ensure!(worst <= STRUCTURE_TOL, "seed {seed}: M_E commutator {worst:e}");
        let ps = ok(minimal_projections(&md, tol()))?;
        let images: Vec<ComplexMatrix> = ps.iter().map(|p| e.apply(p).unwrap()).collect();
        for _ in 0..5 {
            let x = gaussian(d, &mut rng);
            let ex = ok(e.apply(&x))?;
            let mut split = ComplexMatrix::zeros(d, d);
            for ep in &images {
                ensure!(commutator(&ex, ep).norm() <= STRUCTURE_TOL, "seed {seed}: [E(x), E(p)] ≠ 0");
                split += ep * &ex * ep;
            }
            ensure!((split - &ex).norm() <= STRUCTURE_TOL, "seed {seed}: block splitting fails");
        }
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in ps.iter().enumerate() {
                if i == j {
                    continue;
                }
                for u in matrix_units(d) {
                    let leak = ok(e.apply(&(p * &u * q)))?.norm();
                    ensure!(leak <= STRUCTURE_TOL, "seed {seed}: E(p x q) = {leak:e}");
                }
            }
        }
    }
    Ok(format!("indices {found:?}"))
}

fn criterion_5() -> Outcome {
    let e = ok(example51(3))?;
    let dec = ok(block_decompose(&e, tol()))?;
    ensure!(dec.n == 6 && dec.blocks.len() == 3, "n {} blocks {}", dec.n, dec.blocks.len());
    for b in &dec.blocks {
        ensure!(b.dim() == 1 && ok(is_primitive(b, tol()))?, "block of dim {} not primitive", b.dim());
    }
    let dist = ok(channel_distance(&ok(dec.reconstruct())?, &ok(e.power(6))?))?;
    ensure!(dist <= RECONSTRUCT_EXACT, "reconstruction {dist:e}");
    let mut worst = 0.0_f64;
    for (seed, e) in sampled_ppt() {
        let dec = ok(block_decompose(&e, tol()))?;
        let dist = ok(channel_distance(&ok(dec.reconstruct())?, &ok(e.power(dec.n))?))?;
        ensure!(dist <= RECONSTRUCT_SAMPLED, "seed {seed}: reconstruction {dist:e}");
        for b in &dec.blocks {
            ensure!(ok(is_primitive(b, tol()))?, "seed {seed}: block not primitive");
        }
        worst = worst.max(dist);
    }
    Ok(format!("cyclic example n=6 with three 1x1 blocks, sampled worst {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let delta = 0.1;
    let mut found = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let phi = ok(random_unital(3, 3, &mut rng))?;
        let out = ok(densify(&phi, delta, tol()))?;
        let expected = delta / 2.0 * ok(channel_distance(&phi, &Channel::omega(3)))?;
        ensure!((out.distance - expected).abs() <= 1e-12, "seed {seed}: distance {}", out.distance);
        ensure!(out.predicted_n == 28, "seed {seed}: predicted {}", out.predicted_n);
        ensure!(stormer_mix_certificate(&out.mix, 28).is_some(), "seed {seed}: no certificate at 28");
        ensure!(stormer_mix_certificate(&out.mix, 10).is_none(), "seed {seed}: certificate at 10");
        let idx = ok(separability_index(out.mix.channel(), 28, tol()))?;
        match idx.outcome {
            IndexOutcome::Found { n, .. } => found.push(n),
            other => return Err(format!("seed {seed}: {other:?}")),
        }
    }
    Ok(format!("predicted 28, indices {found:?}"))
}

fn criterion_7() -> Outcome {
    let dep = |p: f64| Channel::depolarizing(2, p).unwrap();
    match gurvits_ball_certificate(&dep(0.95), tol()) {
        Some(Certificate::GurvitsBall { distance_sq, radius }) => {
            ensure!((distance_sq - 0.001875).abs() <= 1e-12, "distance² {distance_sq}");
            ensure!((radius - 0.05).abs() <= 1e-15, "radius {radius}");
        }
        other => return Err(format!("p=0.95: {other:?}")),
    }
    ensure!(gurvits_ball_certificate(&dep(0.5), tol()).is_none(), "p=0.5 ball-certified");
    for (p, expected) in [(0.6, false), (0.7, true)] {
        let e = dep(p);
        let oracle = 2.0 * (p / 4.0 - (1.0 - p) / 2.0);
        ensure!((is_ppt(&e, tol()).min_eigenvalue - oracle).abs() <= 1e-12, "p={p}: PT eigenvalue");
        ensure!(eb_exact_small(&e, tol()) == Some(expected), "p={p}");
        let v = ok(eb_verdict(&e, tol()))?;
        let want = if expected { EbStatus::EB } else { EbStatus::NotEB };
        ensure!(v.status == want, "p={p}: verdict {:?}", v.status);
    }
    Ok("ball at p=0.95, exact decision flips between 0.6 and 0.7".into())
}

fn criterion_8() -> Outcome {
    let t = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for seed in 0..50u64 {
        let e = structured_unital(seed);
        let d = e.dim();
        let md = ok(multiplicative_domain(&e, t))?;
        for b in md.basis() {
            ensure!(ok(md_brute_check(&e, b, t))?, "(a) seed {seed}: basis element rejected");
        }
        let inside = md
            .basis()
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b * c(rng.sample(StandardNormal), 0.0));
        ensure!(ok(md_brute_check(&e, &inside, t))?, "(a) seed {seed}: combination rejected");
        let x = gaussian(d, &mut rng);
        ensure!(
            ok(md_brute_check(&e, &x, t))? == md.contains(&x, t),
            "(a) seed {seed}: disagreement on a random element"
        );
    }
    for seed in 0..20u64 {
        let e = structured_unital(100 + seed);
        let chain = ok(md_chain(&e, None, t))?;
        let data = spectrum(&e);
        let peripheral: Vec<ComplexMatrix> = data
            .right_eigenoperators
            .iter()
            .zip(&data.peripheral_mask)
            .filter(|(_, &m)| m)
            .map(|(x, _)| x.clone())
            .collect();
        let generated = ok(generated_algebra(&peripheral, t))?;
        ensure!(
            generated.equals(&chain.stabilized, t),
            "(b) seed {seed}: dims {} vs {}",
            generated.dim(),
            chain.stabilized.dim()
        );
    }
    for seed in 0..20u64 {
        let e = structured_unital(200 + seed);
        let md = ok(multiplicative_domain(&e, t))?;
        let direct = ok(multiplicative_domain(&ok(e.power(2))?, t))?;
        let composed = ok(composed_domain(&e, &md, &md, t))?;
        ensure!(direct.equals(&composed, t), "(c) seed {seed}: {} vs {}", direct.dim(), composed.dim());
    }
    for seed in 0..20u64 {
        let e = structured_unital(300 + seed);
        let d = e.dim();
        let from_choi = ok(kraus_from_choi(&e.choi_of(), t))?;
        ensure!((from_choi.choi() - e.choi()).norm() <= ROUNDTRIP_TOL, "(d) seed {seed}: Choi roundtrip");
        let from_s = ok(Channel::from_superoperator(e.superoperator(), t))?;
        ensure!(
            (from_s.superoperator() - e.superoperator()).norm() <= ROUNDTRIP_TOL,
            "(d) seed {seed}: superoperator roundtrip"
        );
        ensure!(
            (choi_from_superoperator(e.superoperator(), d) - e.choi()).norm() <= ROUNDTRIP_TOL,
            "(d) seed {seed}: superoperator to Choi"
        );
        let normalized = e.choi_of().normalize();
        let back = ok(Channel::from_choi(
            &ChoiMatrix { normalized: true, ..normalized },
            t,
        ))?;
        ensure!((back.choi() - e.choi()).norm() <= ROUNDTRIP_TOL, "(d) seed {seed}: normalized Choi");
        let json = ok(channel_from_json(&channel_to_json(&e)))?;
        ensure!((json.choi() - e.choi()).norm() <= ROUNDTRIP_TOL, "(d) seed {seed}: JSON");
    }
    Ok("50 domain checks, 20 stabilized, 20 composition, 20 roundtrips".into())
}

fn criterion_9() -> Outcome {
    let mut steps = Vec::new();
    let omega = Channel::omega(3);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let d = 2 + (seed as usize % 2);
        let phi = ok(random_unital(d, 2, &mut rng))?;
        let e = ok(densify(&phi, 0.3, tol()))?.mix.channel().clone();
        let omega_d = if d == 3 { omega.clone() } else { Channel::omega(d) };
        ensure!(ok(is_primitive(&e, tol()))?, "seed {seed}: not primitive");
        let s = e.superoperator().clone();
        let mut power_s = s.clone();
        let mut reached = None;
        for n in 1..=200 {
            if n > 1 {
                power_s = &s * &power_s;
            }
            let en = ok(Channel::from_superoperator(&power_s, tol()))?;
            if ok(channel_distance(&en, &omega_d))? < CONVERGENCE_TOL {
                reached = Some(n);
                break;
            }
        }
        let Some(n) = reached else {
            return Err(format!("seed {seed}: no convergence within 200 powers"));
        };
        steps.push(n);
        let p = ok(peripheral_projection(&e, tol()))?;
        let dist = ok(channel_distance(&p, &omega_d))?;
        ensure!(dist < STRUCTURE_TOL, "seed {seed}: projection distance {dist:e}");
    }
    Ok(format!("converged at powers {steps:?}"))
}

#[test]
fn acceptance() {
    println!();
    let criteria: [Criterion; 9] = [
        (1, "cyclic Schur channel on M_3", criterion_1),
        (2, "cyclic Schur channel on M_4 and M_5", criterion_2),
        (3, "qubit Schur channel, lambda = 1/2", criterion_3),
        (4, "random unital PPT channels reach EB", criterion_4),
        (5, "block decomposition", criterion_5),
        (6, "depolarizing mix with delta = 0.1", criterion_6),
        (7, "separable ball and exact qubit decision", criterion_7),
        (8, "cross-validation oracles", criterion_8),
        (9, "primitive channels converge to Omega", criterion_9),
    ];
    let mut failures = Vec::new();
    for (id, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail}"),
            Err(why) => {
                println!("FAIL criterion {id} ({name}): {why}");
                failures.push(id);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
