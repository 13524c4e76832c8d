//! PPT tests and entanglement-breaking verdicts.
//!
//! Verdicts are three-valued. `EB` always carries a [`Certificate`] and
//! `NotEB` a [`Witness`]; both re-validate against the channel from the
//! numbers they embed, without repeating the search that found them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{generated_algebra, md_brute_check, minimal_projections, multiplicative_domain};
use crate::channel::{kraus_from_choi, matrix_units, Channel, ChoiMatrix, DepolarizingMix};
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, eigh, identity, is_psd, min_eigenpair, partial_transpose, ComplexMatrix,
    ComplexVector, Tolerance, ONE,
};

/// Slack on reproduction and membership residuals, which accumulate a few
/// rounding errors per matrix product.
pub(crate) const CHECK_SLACK: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EbStatus {
    EB,
    NotEB,
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolevoPair {
    /// PSD, trace one.
    #[serde(with = "crate::io::cmat")]
    pub r: ComplexMatrix,
    /// PSD.
    #[serde(with = "crate::io::cmat")]
    pub q: ComplexMatrix,
}

/// `x ↦ Σ_j Tr(x R_j) Q_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolevoForm {
    pub pairs: Vec<HolevoPair>,
}

impl HolevoForm {
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = x.nrows();
        let mut out = ComplexMatrix::zeros(d, d);
        for pair in &self.pairs {
            out += &pair.q * (x * &pair.r).trace();
        }
        out
    }

    pub fn validate(&self, e: &Channel, tol: Tolerance) -> bool {
        let d = e.dim();
        let shapes_ok = self
            .pairs
            .iter()
            .all(|p| p.r.shape() == (d, d) && p.q.shape() == (d, d));
        if !shapes_ok || self.pairs.is_empty() {
            return false;
        }
        let positive = self.pairs.iter().all(|p| {
            is_psd(&p.r, tol).unwrap_or(false)
                && is_psd(&p.q, tol).unwrap_or(false)
                && (p.r.trace() - ONE).norm() <= tol.bound(1.0) * CHECK_SLACK
        });
        positive
            && matrix_units(d).all(|u| {
                let want = e.apply_unchecked(&u);
                (self.apply(&u) - &want).norm() <= tol.bound(want.norm()) * CHECK_SLACK
            })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    /// Normalized Choi state inside the separable ball around `I/D`, `D = d²`.
    GurvitsBall { distance_sq: f64, radius: f64 },
    /// Range inside an abelian algebra, with the resulting Holevo form.
    AbelianRange { holevo: HolevoForm },
    /// PPT decides separability on `2⊗2` and `2⊗3`.
    ExactSmallDim {
        d_in: usize,
        d_out: usize,
        min_pt_eigenvalue: f64,
    },
    /// `Eⁿ = (1 − aⁿ)/d · (Tr(x) I + c Φⁿ(x))` with `c = d aⁿ/(1 − aⁿ) ≤ 1`.
    StormerMix { n: usize, a: f64, d: usize, bound: f64 },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::GurvitsBall { .. } => "GurvitsBall",
            Certificate::AbelianRange { .. } => "AbelianRange",
            Certificate::ExactSmallDim { .. } => "ExactSmallDim",
            Certificate::StormerMix { .. } => "StormerMix",
        }
    }

    /// Re-checks the certificate against `e`. `StormerMix` is a closed-form
    /// statement about the mixing weight and is checked as arithmetic only.
    pub fn validate(&self, e: &Channel, tol: Tolerance) -> bool {
        match self {
            Certificate::GurvitsBall { distance_sq, radius } => {
                let d = e.dim();
                let big = (d * d) as f64;
                let Some(recomputed) = ball_distance_sq(e, tol) else {
                    return false;
                };
                (radius - 1.0 / (big * (big + 1.0))).abs() <= f64::EPSILON * 4.0
                    && (recomputed - distance_sq).abs() <= tol.bound(*distance_sq)
                    && recomputed <= *radius
            }
            Certificate::AbelianRange { holevo } => holevo.validate(e, tol),
            Certificate::ExactSmallDim { d_in, d_out, .. } => {
                *d_in == 2
                    && d_in * d_out <= 6
                    && *d_in == e.dim()
                    && *d_out == e.dim()
                    && is_ppt(e, tol).ppt
            }
            Certificate::StormerMix { n, a, d, bound } => {
                let an = a.powi(*n as i32);
                let recomputed = *d as f64 * an / (1.0 - an);
                *n >= 1
                    && (0.5..1.0).contains(a)
                    && *d == e.dim()
                    && (recomputed - bound).abs() <= tol.bound(*bound)
                    && recomputed <= 1.0
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// Negative eigenvalue of the partial transpose of the normalized Choi state.
    Npt {
        eigenvalue: f64,
        eigenvector: Vec<[f64; 2]>,
    },
    /// Two non-commuting elements of the multiplicative domain of a unital map.
    NonAbelianMd {
        i: usize,
        j: usize,
        commutator_norm: f64,
        #[serde(with = "crate::io::cmat")]
        a: ComplexMatrix,
        #[serde(with = "crate::io::cmat")]
        b: ComplexMatrix,
    },
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::Npt { .. } => "NPT",
            Witness::NonAbelianMd { .. } => "NonAbelianMD",
        }
    }

    pub fn validate(&self, e: &Channel, tol: Tolerance) -> bool {
        match self {
            Witness::Npt { eigenvalue, eigenvector } => {
                let d = e.dim();
                if eigenvector.len() != d * d {
                    return false;
                }
                let v = ComplexVector::from_iterator(d * d, eigenvector.iter().map(|p| c(p[0], p[1])));
                let norm_sq = v.norm_squared();
                if norm_sq == 0.0 {
                    return false;
                }
                let Ok(pt) = partial_transpose(&(e.choi() / c(d as f64, 0.0)), d, d) else {
                    return false;
                };
                let rayleigh = (v.adjoint() * &pt * &v)[(0, 0)].re / norm_sq;
                *eigenvalue < -tol.eps
                    && rayleigh < -tol.eps
                    && (rayleigh - eigenvalue).abs() <= tol.bound(eigenvalue.abs()) * CHECK_SLACK
            }
            Witness::NonAbelianMd { commutator_norm, a, b, .. } => {
                let n = commutator(a, b).norm();
                e.is_unital(tol)
                    && md_brute_check(e, a, tol).unwrap_or(false)
                    && md_brute_check(e, b, tol).unwrap_or(false)
                    && n > tol.bound(a.norm() * b.norm()) * CHECK_SLACK
                    && (n - commutator_norm).abs() <= tol.bound(*commutator_norm)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparabilityVerdict {
    pub status: EbStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
}

impl SeparabilityVerdict {
    pub fn eb(certificate: Certificate) -> Self {
        SeparabilityVerdict {
            status: EbStatus::EB,
            certificate: Some(certificate),
            witness: None,
        }
    }

    pub fn not_eb(witness: Witness) -> Self {
        SeparabilityVerdict {
            status: EbStatus::NotEB,
            certificate: None,
            witness: Some(witness),
        }
    }

    pub fn unknown() -> Self {
        SeparabilityVerdict {
            status: EbStatus::Unknown,
            certificate: None,
            witness: None,
        }
    }

    /// Evidence check: EB needs a valid certificate, NotEB a valid witness.
    pub fn validate(&self, e: &Channel, tol: Tolerance) -> bool {
        match self.status {
            EbStatus::EB => self.certificate.as_ref().is_some_and(|c| c.validate(e, tol)),
            EbStatus::NotEB => self.witness.as_ref().is_some_and(|w| w.validate(e, tol)),
            EbStatus::Unknown => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptResult {
    pub ppt: bool,
    /// Smallest eigenvalue of the partial transpose of the unnormalized Choi matrix.
    pub min_eigenvalue: f64,
}

pub fn is_ppt(e: &Channel, tol: Tolerance) -> PptResult {
    let d = e.dim();
    let pt = partial_transpose(e.choi(), d, d).expect("Choi matrix is d²×d²");
    let (values, _) = eigh(&pt);
    let spectral = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    PptResult {
        ppt: values[0] >= -tol.bound(spectral),
        min_eigenvalue: values[0],
    }
}

fn npt_witness(e: &Channel) -> Witness {
    let d = e.dim();
    let pt = partial_transpose(&(e.choi() / c(d as f64, 0.0)), d, d).expect("Choi matrix is d²×d²");
    let (eigenvalue, v) = min_eigenpair(&pt);
    Witness::Npt {
        eigenvalue,
        eigenvector: v.iter().map(|z| [z.re, z.im]).collect(),
    }
}

fn ball_distance_sq(e: &Channel, tol: Tolerance) -> Option<f64> {
    if !e.is_tp(tol) {
        return None;
    }
    let d = e.dim();
    let big = d * d;
    let rho = e.choi() / c(d as f64, 0.0);
    let centered = rho - identity(big) / c(big as f64, 0.0);
    Some(centered.norm_squared())
}

/// Separable-ball test around the maximally mixed state for the normalized
/// Choi state. Needs a trace-preserving channel.
pub fn gurvits_ball_certificate(e: &Channel, tol: Tolerance) -> Option<Certificate> {
    let distance_sq = ball_distance_sq(e, tol)?;
    let big = (e.dim() * e.dim()) as f64;
    let radius = 1.0 / (big * (big + 1.0));
    (distance_sq <= radius).then_some(Certificate::GurvitsBall { distance_sq, radius })
}

/// If the range of `e` generates an abelian algebra with minimal
/// projections `q_j`, then `E(x) = Σ_j Tr(q_j E(x))/Tr(q_j) · q_j`, which is a
/// Holevo form with `R_j ∝ E*(q_j)`.
pub fn abelian_range_certificate(e: &Channel, tol: Tolerance) -> Result<Option<Certificate>> {
    let d = e.dim();
    let images: Vec<ComplexMatrix> = matrix_units(d).map(|u| e.apply_unchecked(&u)).collect();
    let range = generated_algebra(&images, tol)?;
    if !range.is_abelian(tol) {
        return Ok(None);
    }
    let mut pairs = Vec::new();
    for q in minimal_projections(&range, tol)? {
        let pulled = e.apply_adjoint(&q)?;
        let weight = pulled.trace().re;
        if weight <= tol.bound(1.0) {
            continue;
        }
        let rank = q.trace().re;
        pairs.push(HolevoPair {
            r: (&pulled + pulled.adjoint()) * c(0.5 / weight, 0.0),
            q: (&q + q.adjoint()) * c(0.5 * weight / rank, 0.0),
        });
    }
    let holevo = HolevoForm { pairs };
    if !holevo.validate(e, tol) {
        return Err(Error::InternalInvariant(
            "abelian-range Holevo form does not reproduce the channel".into(),
        ));
    }
    Ok(Some(Certificate::AbelianRange { holevo }))
}

/// Exact decision on `2⊗2` and `2⊗3`, where PPT is equivalent to separability.
pub fn eb_exact_small(e: &Channel, tol: Tolerance) -> Option<bool> {
    let (d_in, d_out) = (e.dim(), e.dim());
    (d_in == 2 && d_in * d_out <= 6).then(|| is_ppt(e, tol).ppt)
}

/// Decision cascade: NPT witness, non-abelian multiplicative domain (unital
/// maps only), exact small-dimension decision, abelian range, separable
/// ball. Falls back to `Unknown`.
pub fn eb_verdict(e: &Channel, tol: Tolerance) -> Result<SeparabilityVerdict> {
    let ppt = is_ppt(e, tol);
    if !ppt.ppt {
        return finish(e, tol, SeparabilityVerdict::not_eb(npt_witness(e)));
    }
    if e.is_unital(tol) {
        let md = multiplicative_domain(e, tol)?;
        if !md.is_abelian(tol) {
            let (i, j, commutator_norm) = md.max_commutator().expect("non-abelian algebra has two elements");
            let witness = Witness::NonAbelianMd {
                i,
                j,
                commutator_norm,
                a: md.basis()[i].clone(),
                b: md.basis()[j].clone(),
            };
            return finish(e, tol, SeparabilityVerdict::not_eb(witness));
        }
    }
    match eb_exact_small(e, tol) {
        Some(true) => {
            let cert = Certificate::ExactSmallDim {
                d_in: e.dim(),
                d_out: e.dim(),
                min_pt_eigenvalue: ppt.min_eigenvalue,
            };
            return finish(e, tol, SeparabilityVerdict::eb(cert));
        }
        Some(false) => return finish(e, tol, SeparabilityVerdict::not_eb(npt_witness(e))),
        None => {}
    }
    if let Some(cert) = abelian_range_certificate(e, tol)? {
        return finish(e, tol, SeparabilityVerdict::eb(cert));
    }
    if let Some(cert) = gurvits_ball_certificate(e, tol) {
        return finish(e, tol, SeparabilityVerdict::eb(cert));
    }
    Ok(SeparabilityVerdict::unknown())
}

fn finish(e: &Channel, tol: Tolerance, verdict: SeparabilityVerdict) -> Result<SeparabilityVerdict> {
    if !verdict.validate(e, tol) {
        return Err(Error::InternalInvariant(format!(
            "{:?} verdict failed re-validation",
            verdict.status
        )));
    }
    Ok(verdict)
}

/// Closed-form certificate for the `n`-th power of a depolarizing mix.
pub fn stormer_mix_certificate(mix: &DepolarizingMix, n: usize) -> Option<Certificate> {
    if n == 0 {
        return None;
    }
    let bound = mix.stormer_bound(n);
    (bound <= 1.0).then_some(Certificate::StormerMix {
        n,
        a: mix.a,
        d: mix.dim(),
        bound,
    })
}

/// Random unital PPT channel: Dykstra's alternating projections of a random
/// Choi matrix onto PSD ∩ PPT ∩ {trace preserving and unital}, then mixed
/// with the depolarizing channel at weight 0.05 to move it off the boundary.
pub fn random_ppt_unital<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Channel> {
    const MIX: f64 = 0.05;
    const MAX_SWEEPS: usize = 5000;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let tol = Tolerance::default();
    let n = d * d;
    let g = ComplexMatrix::from_fn(n, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let wishart = &g * g.adjoint();
    let mut x = &wishart * c(d as f64 / wishart.trace().re, 0.0);

    let projections: [fn(&ComplexMatrix, usize) -> ComplexMatrix; 3] =
        [project_psd, project_ppt, project_unital_tp];
    let mut increments = vec![ComplexMatrix::zeros(n, n); 3];
    for _ in 0..MAX_SWEEPS {
        for (proj, inc) in projections.iter().zip(increments.iter_mut()) {
            let y = &x + &*inc;
            let next = proj(&y, d);
            *inc = y - &next;
            x = next;
        }
        let psd_gap = eigh(&x).0[0];
        let pt_gap = eigh(&partial_transpose(&x, d, d)?).0[0];
        if psd_gap.min(pt_gap) > -1e-3 * MIX / d as f64 {
            break;
        }
    }
    let x = project_unital_tp(&x, d);
    let choi = x * c(1.0 - MIX, 0.0) + identity(n) * c(MIX / d as f64, 0.0);
    let pt_ok = is_psd(&partial_transpose(&choi, d, d)?, tol)?;
    if !pt_ok {
        return Err(Error::InternalInvariant(
            "Dykstra projection did not reach the PPT cone".into(),
        ));
    }
    let ch = kraus_from_choi(
        &ChoiMatrix {
            d_in: d,
            d_out: d,
            matrix: choi,
            normalized: false,
        },
        tol,
    )?;
    let flags = ch.verify(tol);
    if flags != (crate::channel::ChannelFlags { cp: Some(true), tp: Some(true), unital: Some(true) }) {
        return Err(Error::InternalInvariant(format!(
            "sampled PPT channel failed verification: {flags:?}"
        )));
    }
    Ok(ch)
}

fn clamp_psd(a: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = eigh(a);
    let n = a.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v > 0.0 {
            let col = vectors.column(k);
            out += col * col.adjoint() * c(v, 0.0);
        }
    }
    out
}

fn project_psd(a: &ComplexMatrix, _d: usize) -> ComplexMatrix {
    clamp_psd(a)
}

fn project_ppt(a: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let pt = partial_transpose(a, d, d).expect("square Choi matrix");
    partial_transpose(&clamp_psd(&pt), d, d).expect("square Choi matrix")
}

/// Orthogonal projection onto `{C : Tr_out C = I, Tr_in C = I}`.
fn project_unital_tp(a: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let n = d * d;
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let mut tr_out = ComplexMatrix::zeros(d, d);
    let mut tr_in = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                tr_out[(i, j)] += sym[(i * d + k, j * d + k)];
                tr_in[(i, j)] += sym[(k * d + i, k * d + j)];
            }
        }
    }
    let id = identity(d);
    let excess_out = tr_out - &id;
    let excess_in = tr_in - &id;
    let t = excess_out.trace();
    let inv_d = c(1.0 / d as f64, 0.0);
    let correction = crate::linalg::kron(&excess_out, &id) * inv_d
        + crate::linalg::kron(&id, &excess_in) * inv_d
        - identity(n) * (t * inv_d * inv_d);
    sym - correction
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{minimal_projections, multiplicative_domain, StarAlgebra};
    use crate::channel::{compose, random_unital};
    use crate::linalg::{from_real_rows, matrix_unit};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn example51() -> Channel {
        let b = from_real_rows(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let w = from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        compose(
            &Channel::unitary(w, tol()).unwrap(),
            &Channel::schur(&b, tol()).unwrap(),
        )
        .unwrap()
    }

    fn schur_lambda(lambda: f64) -> Channel {
        let b = from_real_rows(&[&[1.0, lambda], &[lambda, 1.0]]);
        Channel::schur(&b, tol()).unwrap()
    }

    /// Minimum PT eigenvalue of `(1 − p) Φ⁺ + p I/4`: `p/4 − (1 − p)/2`.
    fn depolarizing_pt_oracle(p: f64) -> f64 {
        p / 4.0 - (1.0 - p) / 2.0
    }

    #[test]
    fn ppt_examples() {
        let r = is_ppt(&Channel::identity(2), tol());
        assert!(!r.ppt);
        assert_relative_eq!(r.min_eigenvalue, -1.0, epsilon = 1e-12);

        let r = is_ppt(&Channel::omega(3), tol());
        assert!(r.ppt);
        assert!(r.min_eigenvalue >= 0.0);

        let r = is_ppt(&example51(), tol());
        assert!(!r.ppt);
        assert!(r.min_eigenvalue < -1e-6);
    }

    #[test]
    fn depolarizing_pt_eigenvalue_matches_oracle() {
        for p in [0.0, 0.2, 0.5, 0.6, 2.0 / 3.0, 0.7, 0.95, 1.0] {
            let e = Channel::depolarizing(2, p).unwrap();
            let r = is_ppt(&e, tol());
            // unnormalized Choi = 2 × normalized state
            assert_relative_eq!(r.min_eigenvalue, 2.0 * depolarizing_pt_oracle(p), epsilon = 1e-12);
        }
    }

    #[test]
    fn gurvits_examples() {
        match gurvits_ball_certificate(&Channel::omega(2), tol()) {
            Some(Certificate::GurvitsBall { distance_sq, radius }) => {
                assert!(distance_sq.abs() < 1e-28);
                assert_relative_eq!(radius, 0.05);
            }
            other => panic!("expected ball certificate, got {other:?}"),
        }
        let e = Channel::depolarizing(2, 0.95).unwrap();
        match gurvits_ball_certificate(&e, tol()) {
            Some(Certificate::GurvitsBall { distance_sq, .. }) => {
                assert_relative_eq!(distance_sq, 0.001875, epsilon = 1e-12)
            }
            other => panic!("expected ball certificate, got {other:?}"),
        }
        let e = Channel::depolarizing(2, 0.5).unwrap();
        assert!(gurvits_ball_certificate(&e, tol()).is_none());
        assert_relative_eq!(ball_distance_sq(&e, tol()).unwrap(), 0.1875, epsilon = 1e-12);
    }

    #[test]
    fn gurvits_monotone_in_depolarizing_weight() {
        let mut certified = false;
        for step in 0..=100 {
            let p = step as f64 / 100.0;
            let now = gurvits_ball_certificate(&Channel::depolarizing(2, p).unwrap(), tol()).is_some();
            assert!(!certified || now, "lost certification at p = {p}");
            certified = now;
        }
        assert!(certified);
    }

    #[test]
    fn abelian_range_examples() {
        let e2 = example51().power(2).unwrap();
        match abelian_range_certificate(&e2, tol()).unwrap() {
            Some(Certificate::AbelianRange { holevo }) => {
                assert_eq!(holevo.pairs.len(), 3);
                for i in 0..3 {
                    let unit = matrix_unit(3, i, i);
                    assert!(holevo.pairs.iter().any(|p| (&p.q - &unit).norm() < 1e-10));
                }
            }
            other => panic!("expected abelian range certificate, got {other:?}"),
        }

        match abelian_range_certificate(&Channel::omega(3), tol()).unwrap() {
            Some(Certificate::AbelianRange { holevo }) => {
                assert_eq!(holevo.pairs.len(), 1);
                let third = identity(3) * c(1.0 / 3.0, 0.0);
                assert!((&holevo.pairs[0].r - &third).norm() < 1e-12);
                assert!((&holevo.pairs[0].q - identity(3)).norm() < 1e-12);
            }
            other => panic!("expected abelian range certificate, got {other:?}"),
        }

        assert!(abelian_range_certificate(&Channel::identity(2), tol()).unwrap().is_none());
    }

    #[test]
    fn exact_small_examples() {
        for n in 1..=5 {
            let e = schur_lambda(0.5).power(n).unwrap();
            assert_eq!(eb_exact_small(&e, tol()), Some(false));
        }
        assert_eq!(eb_exact_small(&Channel::depolarizing(2, 0.7).unwrap(), tol()), Some(true));
        assert_eq!(eb_exact_small(&Channel::depolarizing(2, 0.6).unwrap(), tol()), Some(false));
        assert_eq!(eb_exact_small(&Channel::omega(3), tol()), None);
    }

    #[test]
    fn verdict_examples() {
        let v = eb_verdict(&example51(), tol()).unwrap();
        assert_eq!(v.status, EbStatus::NotEB);
        assert!(matches!(v.witness, Some(Witness::Npt { .. })));

        let v = eb_verdict(&example51().power(2).unwrap(), tol()).unwrap();
        assert_eq!(v.status, EbStatus::EB);
        assert!(matches!(v.certificate, Some(Certificate::AbelianRange { .. })));

        let v = eb_verdict(&Channel::depolarizing(2, 0.7).unwrap(), tol()).unwrap();
        assert_eq!(v.status, EbStatus::EB);
        assert!(matches!(v.certificate, Some(Certificate::ExactSmallDim { .. })));

        // PPT, not in the ball, range is all of M_3: nothing certifies it
        let e = crate::channel::convex_mix(0.2, &Channel::identity(3), &Channel::omega(3)).unwrap();
        assert!(is_ppt(&e, tol()).ppt);
        let v = eb_verdict(&e, tol()).unwrap();
        assert_eq!(v.status, EbStatus::Unknown);
        assert!(v.certificate.is_none() && v.witness.is_none());
    }

    #[test]
    fn witnesses_reject_wrong_channels() {
        let v = eb_verdict(&Channel::identity(2), tol()).unwrap();
        let w = v.witness.unwrap();
        assert!(w.validate(&Channel::identity(2), tol()));
        assert!(!w.validate(&Channel::omega(2), tol()));

        let md = multiplicative_domain(&Channel::identity(2), tol()).unwrap();
        let (i, j, n) = md.max_commutator().unwrap();
        let w = Witness::NonAbelianMd {
            i,
            j,
            commutator_norm: n,
            a: md.basis()[i].clone(),
            b: md.basis()[j].clone(),
        };
        assert!(w.validate(&Channel::identity(2), tol()));
        assert!(!w.validate(&Channel::omega(2), tol()));
    }

    #[test]
    fn certificates_reject_wrong_channels() {
        let cert = abelian_range_certificate(&Channel::omega(2), tol()).unwrap().unwrap();
        assert!(cert.validate(&Channel::omega(2), tol()));
        assert!(!cert.validate(&Channel::identity(2), tol()));
        let ball = gurvits_ball_certificate(&Channel::omega(2), tol()).unwrap();
        assert!(!ball.validate(&Channel::identity(2), tol()));
    }

    #[test]
    fn stormer_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_unital(3, 3, &mut rng).unwrap();
        let mix = DepolarizingMix::new(phi, 0.1).unwrap();
        match stormer_mix_certificate(&mix, 28) {
            Some(Certificate::StormerMix { bound, .. }) => {
                let an = 0.95f64.powi(28);
                assert_relative_eq!(bound, 3.0 * an / (1.0 - an), epsilon = 1e-14);
                assert!((bound - 0.937).abs() < 1e-3);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
        assert!(stormer_mix_certificate(&mix, 10).is_none());
        assert!((mix.stormer_bound(10) - 4.4764).abs() < 1e-3);

        for d in 2..=6 {
            let mix = DepolarizingMix::new(Channel::omega(d), 1.0).unwrap();
            let n = ((d + 1) as f64).log2().ceil() as usize;
            assert!(stormer_mix_certificate(&mix, n).is_some());
        }
    }

    #[test]
    fn unital_tp_projection_is_idempotent_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 3;
        let a = ComplexMatrix::from_fn(9, 9, |_, _| c(rng.random::<f64>(), rng.random::<f64>()));
        let p = project_unital_tp(&a, d);
        let pp = project_unital_tp(&p, d);
        assert!((&p - &pp).norm() < 1e-12);
        let ch = Channel::new(vec![identity(3)]).unwrap();
        // identity's Choi is already feasible
        assert!((project_unital_tp(ch.choi(), d) - ch.choi()).norm() < 1e-12);
    }

    #[test]
    fn ppt_sampler_produces_unital_ppt_channels() {
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 2 + (seed as usize % 2);
            let e = random_ppt_unital(d, &mut rng).unwrap();
            assert!(is_ppt(&e, tol()).ppt);
            assert!(e.is_unital(tol()) && e.is_tp(tol()));
        }
    }

    #[test]
    fn ppt_unital_structure() {
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            let e = random_ppt_unital(3, &mut rng).unwrap();
            let md = multiplicative_domain(&e, tol()).unwrap();
            assert!(md.is_abelian(tol()));
            let ps = minimal_projections(&md, tol()).unwrap();
            for p in &ps {
                let ep = e.apply(p).unwrap();
                for _ in 0..3 {
                    let x = ComplexMatrix::from_fn(3, 3, |_, _| c(rng.random::<f64>(), rng.random::<f64>()));
                    let ex = e.apply(&x).unwrap();
                    assert!((&ep * &ex - &ex * &ep).norm() < 1e-7);
                }
            }
        }
        let _ = StarAlgebra::scalars(2);
    }

    #[test]
    fn verdict_json_is_tagged() {
        let v = eb_verdict(&Channel::omega(2), tol()).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.starts_with("{\"status\":\"EB\",\"certificate\":{\"kind\":"), "{text}");
        let back: SeparabilityVerdict = serde_json::from_str(&text).unwrap();
        assert!(back.validate(&Channel::omega(2), tol()));
    }
}
