//! Superoperator spectra, peripheral eigenoperators and the projection onto
//! them, primitivity and irreducibility.

use serde::{Deserialize, Serialize};

use crate::algebra::{generated_unital_algebra_dim, md_chain};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{unvec, ComplexMatrix, ComplexSchur, Tolerance, C64};

/// Eigenvalues with `|λ| ≥ 1 − PERIPHERAL_TOL` count as peripheral.
pub const PERIPHERAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Sorted by descending modulus, then ascending argument.
    pub eigenvalues: Vec<C64>,
    pub right_eigenoperators: Vec<ComplexMatrix>,
    pub peripheral_mask: Vec<bool>,
    pub peripheral_tol: f64,
}

impl SpectralData {
    pub fn peripheral_count(&self) -> usize {
        self.peripheral_mask.iter().filter(|&&p| p).count()
    }

    pub fn peripheral_eigenvalues(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .zip(&self.peripheral_mask)
            .filter(|(_, &p)| p)
            .map(|(z, _)| *z)
            .collect()
    }

    pub fn export(&self) -> SpectrumExport {
        SpectrumExport {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            peripheral: self.peripheral_mask.clone(),
            peripheral_tol: self.peripheral_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumExport {
    pub eigenvalues: Vec<[f64; 2]>,
    pub peripheral: Vec<bool>,
    pub peripheral_tol: f64,
}

fn is_peripheral(z: C64, ptol: f64) -> bool {
    z.norm() >= 1.0 - ptol
}

pub fn spectrum(e: &Channel) -> SpectralData {
    spectrum_with(e, PERIPHERAL_TOL)
}

pub fn spectrum_with(e: &Channel, peripheral_tol: f64) -> SpectralData {
    let d = e.dim();
    let schur = ComplexSchur::new(e.superoperator());
    let values = schur.eigenvalues();
    let vectors = schur.eigenvectors();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .norm()
            .total_cmp(&values[i].norm())
            .then(values[i].arg().total_cmp(&values[j].arg()))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let right_eigenoperators = order
        .iter()
        .map(|&i| unvec(&vectors[i], d).expect("eigenvector has length d²"))
        .collect();
    let peripheral_mask = eigenvalues.iter().map(|&z| is_peripheral(z, peripheral_tol)).collect();
    SpectralData {
        eigenvalues,
        right_eigenoperators,
        peripheral_mask,
        peripheral_tol,
    }
}

/// Orthonormal basis (as `d×d` matrices) of the span of the peripheral
/// eigenoperators, read off the leading block of a reordered Schur form.
pub fn peripheral_subspace(e: &Channel, peripheral_tol: f64) -> Vec<ComplexMatrix> {
    let d = e.dim();
    let mut schur = ComplexSchur::new(e.superoperator());
    let k = schur.reorder(|z| is_peripheral(z, peripheral_tol));
    (0..k)
        .map(|j| unvec(&schur.q.column(j).into_owned(), d).expect("Schur vector has length d²"))
        .collect()
}

pub(crate) fn require_unital_tp(e: &Channel, tol: Tolerance, what: &str) -> Result<()> {
    if !e.is_unital(tol) || !e.is_tp(tol) {
        return Err(Error::UnsupportedPrecondition(format!(
            "{what} requires a unital trace-preserving channel"
        )));
    }
    Ok(())
}

/// Spectral projection of the superoperator onto its peripheral invariant
/// subspace, as a channel. For unital channels the peripheral eigenvalues
/// are semisimple and this is the idempotent limit point of `Eⁿ`.
pub fn peripheral_projection(e: &Channel, tol: Tolerance) -> Result<Channel> {
    peripheral_projection_with(e, tol, PERIPHERAL_TOL)
}

pub fn peripheral_projection_with(e: &Channel, tol: Tolerance, peripheral_tol: f64) -> Result<Channel> {
    require_unital_tp(e, tol, "peripheral_projection")?;
    let mut schur = ComplexSchur::new(e.superoperator());
    let k = schur.reorder(|z| is_peripheral(z, peripheral_tol));
    let values = schur.eigenvalues();
    let (inner, outer) = values.split_at(k);
    let gap = inner
        .iter()
        .flat_map(|a| outer.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    if gap < peripheral_tol {
        return Err(Error::IllConditionedSpectrum {
            gap,
            threshold: peripheral_tol,
        });
    }
    let projector = schur
        .leading_projector(k)
        .map_err(|err| Error::IllConditionedSpectrum {
            gap: err.gap,
            threshold: peripheral_tol,
        })?;
    Channel::from_superoperator(&projector, tol).map_err(|err| match err {
        Error::NotAChannel { eigenvalue } => Error::InternalInvariant(format!(
            "peripheral projection is not completely positive (Choi eigenvalue {eigenvalue:e})"
        )),
        other => other,
    })
}

/// `M_{E^∞} = C·1`, cross-checked against a simple peripheral eigenvalue 1.
pub fn is_primitive(e: &Channel, tol: Tolerance) -> Result<bool> {
    require_unital_tp(e, tol, "is_primitive")?;
    let chain = md_chain(e, None, tol)?;
    let trivial = chain.stabilized.dim() == 1;
    let peripheral = spectrum(e).peripheral_count();
    if trivial != (peripheral == 1) {
        return Err(Error::InternalInvariant(format!(
            "stabilized multiplicative domain has dimension {} but {peripheral} peripheral eigenvalues were found",
            chain.stabilized.dim()
        )));
    }
    Ok(trivial)
}

/// A CP map is reducible iff its Kraus operators share a nontrivial
/// invariant subspace: `E(p) ≤ λp` forces `K_k p = p K_k p`, and conversely
/// an invariant range gives `E(p) ≤ ‖E‖ p`. Burnside's theorem turns this
/// into "the algebra generated by the Kraus operators is all of `M_d`".
pub fn is_irreducible(e: &Channel, tol: Tolerance) -> Result<bool> {
    let d = e.dim();
    Ok(generated_unital_algebra_dim(e.kraus(), tol)? == d * d)
}
