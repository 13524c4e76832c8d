//! Index of separability, block decomposition of unital channels with an
//! abelian stabilized multiplicative domain, asymptotic classification and
//! the depolarizing-mix construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{md_chain, minimal_projections, multiplicative_domain};
use crate::channel::{
    channel_distance, matrix_units, random_unital, Channel, ChannelFlags, DepolarizingMix,
};
use crate::error::{Error, Result};
use crate::io::{ChannelFile, ChoiFile};
use crate::linalg::{c, from_real_rows, identity, range_isometry, ComplexMatrix, Tolerance};
use crate::separability::{
    abelian_range_certificate, eb_verdict, is_ppt, random_ppt_unital, stormer_mix_certificate, Certificate,
    EbStatus, PptResult, SeparabilityVerdict, CHECK_SLACK,
};
use crate::spectral::{peripheral_projection, require_unital_tp, SpectrumExport};

pub const DEFAULT_CAP: usize = 64;
pub const REPORT_SCHEMA: &str = "qchan-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerStatus {
    pub n: usize,
    pub status: EbStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum IndexOutcome {
    Found { n: usize, certificate: Certificate },
    UnknownUpTo { cap: usize },
}

/// `Found(n)` is the first power with a certificate. When `Unknown` entries
/// precede it in the log the true index may be smaller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexResult {
    pub outcome: IndexOutcome,
    pub per_power_log: Vec<PowerStatus>,
}

impl IndexResult {
    pub fn found(&self) -> Option<usize> {
        match self.outcome {
            IndexOutcome::Found { n, .. } => Some(n),
            IndexOutcome::UnknownUpTo { .. } => None,
        }
    }
}

/// Verdicts for `E¹, …, E^upto`, optionally stopping at the first EB power.
pub fn power_verdicts(
    e: &Channel,
    upto: usize,
    stop_at_eb: bool,
    tol: Tolerance,
) -> Result<Vec<(usize, SeparabilityVerdict)>> {
    if !e.is_tp(tol) {
        return Err(Error::UnsupportedPrecondition(
            "index search requires a trace-preserving channel".into(),
        ));
    }
    let s = e.superoperator().clone();
    let mut current = e.clone();
    let mut current_s = s.clone();
    let mut out = Vec::with_capacity(upto);
    for n in 1..=upto {
        if n > 1 {
            current_s = &s * &current_s;
            current = Channel::from_superoperator(&current_s, Tolerance::default())?;
        }
        let verdict = eb_verdict(&current, tol)?;
        let eb = verdict.status == EbStatus::EB;
        out.push((n, verdict));
        if eb && stop_at_eb {
            break;
        }
    }
    Ok(out)
}

pub fn separability_index(e: &Channel, cap: usize, tol: Tolerance) -> Result<IndexResult> {
    if cap == 0 {
        return Err(Error::InvalidParameter("cap must be at least 1".into()));
    }
    let verdicts = power_verdicts(e, cap, true, tol)?;
    let per_power_log = verdicts
        .iter()
        .map(|(n, v)| PowerStatus { n: *n, status: v.status })
        .collect();
    let outcome = match verdicts.into_iter().last() {
        Some((n, SeparabilityVerdict { status: EbStatus::EB, certificate: Some(certificate), .. })) => {
            IndexOutcome::Found { n, certificate }
        }
        _ => IndexOutcome::UnknownUpTo { cap },
    };
    Ok(IndexResult { outcome, per_power_log })
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub kappa: usize,
    /// Minimal projections of the stabilized multiplicative domain.
    pub projections: Vec<ComplexMatrix>,
    /// `E^κ(p_i) = p_{σ(i)}`, zero-based.
    pub sigma: Vec<usize>,
    pub m: usize,
    pub n: usize,
    /// `V_i` with `V_i V_i* = p_i`.
    pub isometries: Vec<ComplexMatrix>,
    /// `V_i* Eⁿ(V_i x V_i*) V_i` on `M_{rank p_i}`.
    pub blocks: Vec<Channel>,
    /// Largest `‖Eⁿ(p_i u p_i) − p_i Eⁿ(p_i u p_i) p_i‖_F` over blocks and matrix units.
    pub residual: f64,
    pub ppt: PptResult,
}

impl BlockDecomposition {
    /// `x ↦ Σ_i V_i E_i(V_i* x V_i) V_i*`. Agrees with `Eⁿ` on block-diagonal
    /// input; coherences `p_i x p_j`, `i ≠ j`, are dropped.
    pub fn reconstruct(&self) -> Result<Channel> {
        let mut kraus = Vec::new();
        for (v, block) in self.isometries.iter().zip(&self.blocks) {
            for k in block.kraus() {
                kraus.push(v * k * v.adjoint());
            }
        }
        Channel::new(kraus)
    }

    pub fn export(&self, power: &Channel) -> Result<BlockDecompositionExport> {
        Ok(BlockDecompositionExport {
            kappa: self.kappa,
            projections: self.projections.clone(),
            sigma: self.sigma.clone(),
            m: self.m,
            n: self.n,
            block_dims: self.blocks.iter().map(Channel::dim).collect(),
            isometries: self.isometries.clone(),
            blocks: self.blocks.iter().map(ChannelFile::from_channel).collect(),
            residual: self.residual,
            reconstruction_distance: channel_distance(&self.reconstruct()?, power)?,
            ppt: self.ppt,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDecompositionExport {
    pub kappa: usize,
    #[serde(with = "crate::io::cmat_vec")]
    pub projections: Vec<ComplexMatrix>,
    pub sigma: Vec<usize>,
    pub m: usize,
    pub n: usize,
    pub block_dims: Vec<usize>,
    #[serde(with = "crate::io::cmat_vec")]
    pub isometries: Vec<ComplexMatrix>,
    pub blocks: Vec<ChannelFile>,
    pub residual: f64,
    pub reconstruction_distance: f64,
    pub ppt: PptResult,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Order of a permutation given as an image list.
pub fn permutation_order(sigma: &[usize]) -> usize {
    let mut seen = vec![false; sigma.len()];
    let mut order = 1;
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = sigma[i];
            len += 1;
        }
        order = order / gcd(order, len) * len;
    }
    order
}

/// `Eⁿ = E₁ ⊕ ⋯ ⊕ E_k` on the block-diagonal part, `n = mκ`, with each
/// block a unital channel whose multiplicative domain is trivial.
pub fn block_decompose(e: &Channel, tol: Tolerance) -> Result<BlockDecomposition> {
    require_unital_tp(e, tol, "block_decompose")?;
    let d = e.dim();
    let chain = md_chain(e, None, tol)?;
    if !chain.stabilized.is_abelian(tol) {
        return Err(Error::UnsupportedPrecondition(
            "stabilized multiplicative domain is not abelian".into(),
        ));
    }
    let kappa = chain.kappa;
    let projections = minimal_projections(&chain.stabilized, tol)?;
    let e_kappa = e.power(kappa)?;
    let match_tol = tol.bound((d as f64).sqrt());

    let mut sigma = Vec::with_capacity(projections.len());
    for (i, p) in projections.iter().enumerate() {
        let image = e_kappa.apply(p)?;
        let (j, dist) = projections
            .iter()
            .enumerate()
            .map(|(j, q)| (j, (&image - q).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one projection");
        if dist > match_tol {
            return Err(Error::InternalInvariant(format!(
                "image of projection {i} is {dist:e} away from every minimal projection"
            )));
        }
        sigma.push(j);
    }
    let mut hit = vec![false; sigma.len()];
    for &j in &sigma {
        if std::mem::replace(&mut hit[j], true) {
            return Err(Error::InternalInvariant(format!(
                "projection matching is not a permutation: {sigma:?}"
            )));
        }
    }
    let m = permutation_order(&sigma);
    let n = m * kappa;
    let e_n = e.power(n)?;

    let mut residual = 0.0_f64;
    let mut isometries = Vec::with_capacity(projections.len());
    let mut blocks = Vec::with_capacity(projections.len());
    for (i, p) in projections.iter().enumerate() {
        for u in matrix_units(d) {
            let y = e_n.apply(&(p * u * p))?;
            residual = residual.max((&y - p * &y * p).norm());
        }
        let v = range_isometry(p, tol);
        let kraus: Vec<ComplexMatrix> = e_n
            .kraus()
            .iter()
            .map(|k| v.adjoint() * k * &v)
            .filter(|k| k.norm() > tol.eps)
            .collect();
        let block = Channel::new(kraus)?;
        let flags = block.verify(tol);
        if flags.tp != Some(true) || flags.unital != Some(true) {
            return Err(Error::InternalInvariant(format!(
                "block {i} is not unital and trace preserving: {flags:?}"
            )));
        }
        let md_dim = multiplicative_domain(&block, tol)?.dim();
        if md_dim != 1 {
            return Err(Error::InternalInvariant(format!(
                "block {i} has a multiplicative domain of dimension {md_dim}"
            )));
        }
        isometries.push(v);
        blocks.push(block);
    }
    if residual > tol.bound(1.0) * 10.0 {
        return Err(Error::InternalInvariant(format!(
            "blocks leak under the power: residual {residual:e}"
        )));
    }
    Ok(BlockDecomposition {
        kappa,
        projections,
        sigma,
        m,
        n,
        isometries,
        blocks,
        residual,
        ppt: is_ppt(e, tol),
    })
}

#[derive(Debug, Clone)]
pub struct AsymptoticClassification {
    pub asymptotically_eb: bool,
    pub stabilized_dim: usize,
    pub abelian: bool,
    pub kappa: usize,
    pub peripheral_projection: Channel,
    pub peripheral_projection_verdict: SeparabilityVerdict,
}

impl AsymptoticClassification {
    pub fn export(&self) -> AsymptoticExport {
        AsymptoticExport {
            asymptotically_eb: self.asymptotically_eb,
            stabilized_dim: self.stabilized_dim,
            abelian: self.abelian,
            kappa: self.kappa,
            peripheral_projection: ChannelFile::from_channel(&self.peripheral_projection),
            peripheral_projection_verdict: self.peripheral_projection_verdict.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticExport {
    pub asymptotically_eb: bool,
    pub stabilized_dim: usize,
    pub abelian: bool,
    pub kappa: usize,
    pub peripheral_projection: ChannelFile,
    pub peripheral_projection_verdict: SeparabilityVerdict,
}

/// Asymptotically EB exactly when `M_{E^∞}` is abelian. In that case the
/// range of the peripheral projection sits inside an abelian algebra and
/// carries an abelian-range certificate.
pub fn classify_asymptotic(e: &Channel, tol: Tolerance) -> Result<AsymptoticClassification> {
    require_unital_tp(e, tol, "classify_asymptotic")?;
    let chain = md_chain(e, None, tol)?;
    let abelian = chain.stabilized.is_abelian(tol);
    let p = peripheral_projection(e, tol)?;
    let verdict = if abelian {
        match abelian_range_certificate(&p, tol)? {
            Some(cert) => SeparabilityVerdict::eb(cert),
            None => {
                return Err(Error::InternalInvariant(
                    "abelian stabilized domain but the peripheral projection has non-abelian range".into(),
                ))
            }
        }
    } else {
        eb_verdict(&p, tol)?
    };
    Ok(AsymptoticClassification {
        asymptotically_eb: abelian,
        stabilized_dim: chain.stabilized.dim(),
        abelian,
        kappa: chain.kappa,
        peripheral_projection: p,
        peripheral_projection_verdict: verdict,
    })
}

#[derive(Debug, Clone)]
pub struct Densified {
    pub mix: DepolarizingMix,
    pub predicted_n: usize,
    pub distance: f64,
}

impl Densified {
    pub fn export(&self) -> DensifyExport {
        DensifyExport {
            delta: self.mix.delta,
            a: self.mix.a,
            predicted_n: self.predicted_n,
            distance: self.distance,
            mix: ChannelFile::from_channel(self.mix.channel()),
            certificate: stormer_mix_certificate(&self.mix, self.predicted_n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensifyExport {
    pub delta: f64,
    pub a: f64,
    pub predicted_n: usize,
    pub distance: f64,
    pub mix: ChannelFile,
    pub certificate: Option<Certificate>,
}

/// `(1 − δ/2) Φ + (δ/2) Ω` together with the first power whose
/// closed-form bound certifies entanglement breaking.
pub fn densify(phi: &Channel, delta: f64, tol: Tolerance) -> Result<Densified> {
    require_unital_tp(phi, tol, "densify")?;
    let mix = DepolarizingMix::new(phi.clone(), delta)?;
    let mut predicted_n = 1;
    while mix.stormer_bound(predicted_n) > 1.0 {
        predicted_n += 1;
    }
    let distance = channel_distance(mix.channel(), phi)?;
    Ok(Densified { mix, predicted_n, distance })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Schur {
        #[serde(with = "crate::io::cmat")]
        b: ComplexMatrix,
    },
    Unitary {
        #[serde(with = "crate::io::cmat")]
        u: ComplexMatrix,
    },
    Example51 { d: usize },
    SchurLambda { lambda: f64 },
    Omega { d: usize },
    Identity { d: usize },
    Depolarizing { d: usize, p: f64 },
    RandomUnital { d: usize, m: usize, seed: u64 },
    RandomPptUnital { d: usize, seed: u64 },
}

fn positive_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(())
}

/// `x ↦ w (b∘x) w*` with `b = J_{d−1} ⊕ 1` and `w e_i = e_{i+1 mod d}`.
pub fn example51(d: usize) -> Result<Channel> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("example51 needs d ≥ 2, got {d}")));
    }
    let tol = Tolerance::default();
    let b = ComplexMatrix::from_fn(d, d, |i, j| {
        if (i < d - 1 && j < d - 1) || (i == d - 1 && j == d - 1) { c(1.0, 0.0) } else { c(0.0, 0.0) }
    });
    let w = ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { c(1.0, 0.0) } else { c(0.0, 0.0) });
    Channel::unitary(w, tol)?.compose(&Channel::schur(&b, tol)?)
}

pub fn generate(family: &FamilySpec) -> Result<Channel> {
    let tol = Tolerance::default();
    match family {
        FamilySpec::Schur { b } => {
            let d = b.nrows();
            if !b.is_square() || (0..d).any(|i| (b[(i, i)] - c(1.0, 0.0)).norm() > tol.eps) {
                return Err(Error::InvalidParameter(
                    "Schur multiplier must be square with unit diagonal".into(),
                ));
            }
            Channel::schur(b, tol)
        }
        FamilySpec::Unitary { u } => Channel::unitary(u.clone(), tol),
        FamilySpec::Example51 { d } => example51(*d),
        FamilySpec::SchurLambda { lambda } => {
            if !(*lambda > 0.0 && *lambda < 1.0) {
                return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")));
            }
            Channel::schur(&from_real_rows(&[&[1.0, *lambda], &[*lambda, 1.0]]), tol)
        }
        FamilySpec::Omega { d } => {
            positive_dim(*d)?;
            Ok(Channel::omega(*d))
        }
        FamilySpec::Identity { d } => {
            positive_dim(*d)?;
            Ok(Channel::identity(*d))
        }
        FamilySpec::Depolarizing { d, p } => {
            positive_dim(*d)?;
            Channel::depolarizing(*d, *p)
        }
        FamilySpec::RandomUnital { d, m, seed } => {
            positive_dim(*d)?;
            random_unital(*d, *m, &mut ChaCha8Rng::seed_from_u64(*seed))
        }
        FamilySpec::RandomPptUnital { d, seed } => random_ppt_unital(*d, &mut ChaCha8Rng::seed_from_u64(*seed)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdChainExport {
    pub dims: Vec<usize>,
    pub kappa: usize,
    pub stabilized_abelian: bool,
}

/// Versioned analysis report. Every verdict carries the evidence needed to
/// re-check it with [`verify_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel: Option<ChannelFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flags: Option<ChannelFlags>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub choi: Option<ChoiFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ppt: Option<PptResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdict: Option<SeparabilityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub md_chain: Option<MdChainExport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectrum: Option<SpectrumExport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<IndexResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition: Option<BlockDecompositionExport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub asymptotic: Option<AsymptoticExport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub densify: Option<DensifyExport>,
}

impl Report {
    pub fn new(command: &str, channel: &Channel) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            command: command.to_string(),
            channel: Some(ChannelFile::from_channel(channel)),
            flags: None,
            choi: None,
            ppt: None,
            verdict: None,
            md_chain: None,
            spectrum: None,
            index: None,
            decomposition: None,
            asymptotic: None,
            densify: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportCheck {
    pub passed: Vec<String>,
    pub failed: Vec<String>,
}

impl ReportCheck {
    fn record(&mut self, what: &str, ok: bool) {
        if ok {
            self.passed.push(what.to_string());
        } else {
            self.failed.push(what.to_string());
        }
    }

    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Re-validates the evidence in a report against its embedded channel.
pub fn verify_report(report: &Report, tol: Tolerance) -> Result<ReportCheck> {
    if report.schema != REPORT_SCHEMA {
        return Err(Error::Parse(format!("unsupported report schema `{}`", report.schema)));
    }
    let mut check = ReportCheck::default();
    let channel = match &report.channel {
        Some(file) => Some(file.clone().into_channel()?),
        None => None,
    };
    if let Some(asym) = &report.asymptotic {
        let p = asym.peripheral_projection.clone().into_channel()?;
        let verdict = &asym.peripheral_projection_verdict;
        check.record("asymptotic.peripheral_projection_verdict", verdict.validate(&p, tol));
        check.record(
            "asymptotic.consistency",
            asym.asymptotically_eb == asym.abelian && (!asym.abelian || verdict.status == EbStatus::EB),
        );
    }
    if let Some(dens) = &report.densify {
        let mix = dens.mix.clone().into_channel()?;
        let ok = dens.certificate.as_ref().is_some_and(|cert| {
            matches!(cert, Certificate::StormerMix { n, .. } if *n == dens.predicted_n) && cert.validate(&mix, tol)
        });
        check.record("densify.certificate", ok);
    }
    let Some(e) = channel else {
        return Ok(check);
    };
    if let Some(flags) = &report.flags {
        check.record("flags", e.verify(tol) == *flags);
    }
    if let Some(ppt) = &report.ppt {
        let fresh = is_ppt(&e, tol);
        let drift = (fresh.min_eigenvalue - ppt.min_eigenvalue).abs();
        check.record("ppt", fresh.ppt == ppt.ppt && drift <= CHECK_SLACK * tol.bound(fresh.min_eigenvalue.abs()));
    }
    if let Some(verdict) = &report.verdict {
        check.record("verdict", verdict.validate(&e, tol));
    }
    if let Some(index) = &report.index {
        let log_ok = index.per_power_log.iter().enumerate().all(|(k, s)| s.n == k + 1);
        check.record("index.log", log_ok);
        if let IndexOutcome::Found { n, certificate } = &index.outcome {
            let last_ok = index.per_power_log.last().is_some_and(|s| s.n == *n && s.status == EbStatus::EB);
            check.record("index.outcome", last_ok && certificate.validate(&e.power(*n)?, tol));
        }
    }
    if let Some(dec) = &report.decomposition {
        let power = e.power(dec.n)?;
        let d = e.dim();
        let mut total = ComplexMatrix::zeros(d, d);
        let mut ok = dec.isometries.len() == dec.blocks.len() && dec.n == dec.m * dec.kappa;
        for (v, block) in dec.isometries.iter().zip(&dec.blocks) {
            let block = block.clone().into_channel()?;
            total += v * v.adjoint();
            for u in matrix_units(block.dim()) {
                let lifted = v * &u * v.adjoint();
                let want = v * block.apply(&u)? * v.adjoint();
                let got = power.apply(&lifted)?;
                ok &= (got - want).norm() <= tol.bound(1.0) * 100.0;
            }
        }
        ok &= (total - identity(d)).norm() <= tol.bound(1.0) * 10.0;
        check.record("decomposition.blocks", ok);
    }
    Ok(check)
}
