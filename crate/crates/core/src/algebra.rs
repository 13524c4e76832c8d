//! Unital *-subalgebras of `M_d`: multiplicative domains, fixed-point
//! algebras, the stabilized chain `M_E ⊇ M_{E²} ⊇ …`, abelianness and
//! minimal projections.
//!
//! # Multiplicative domain of a unital map
//!
//! Write a unital CP map as `E(x) = W*(I ⊗ x)W` with `W = Σ_k e_k ⊗ K_k*`;
//! unitality makes `W` an isometry. Then
//!
//! ```text
//! E(x*x) − E(x)*E(x) = W*(I ⊗ x*)(I − WW*)(I ⊗ x)W
//! ```
//!
//! is zero iff `(I − WW*)(I ⊗ x)W = 0`, i.e. iff `(I ⊗ x)W = W E(x)`, which
//! reads `x K_k* = K_k* E(x)` for every `k`. The same argument applied to
//! `x*` turns `E(xx*) = E(x)E(x*)` into `K_k x = E(x) K_k`. Both families are
//! linear in `x`, so `M_E` is the nullspace of one `2m·d² × d²` system.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, conj, eigh, identity, kron, nullspace, orthonormal_span, span_residual, unvec,
    vec, ComplexMatrix, Tolerance,
};

/// HS-orthonormal basis of a unital *-subalgebra of `M_d`.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    d: usize,
    basis: Vec<ComplexMatrix>,
    contains_identity: bool,
    abelian: OnceLock<bool>,
}

/// Slack applied to span-membership tests. Basis vectors come out of SVDs
/// and products of them, so membership residuals sit a little above the
/// raw rank cut.
const MEMBERSHIP_SLACK: f64 = 10.0;

impl StarAlgebra {
    /// Algebra spanned by `mats`. The span is orthonormalized but closure
    /// is not imposed; use [`StarAlgebra::is_closed`] to check it.
    pub fn from_spanning(d: usize, mats: &[ComplexMatrix], tol: Tolerance) -> Result<Self> {
        for m in mats {
            if m.shape() != (d, d) {
                return Err(Error::Dimension(format!(
                    "algebra element has shape {:?}, expected {d}x{d}",
                    m.shape()
                )));
            }
        }
        let basis = orthonormal_span(mats, tol)?;
        let unit = identity(d) / c((d as f64).sqrt(), 0.0);
        let contains_identity = span_residual(&basis, &unit) <= tol.eps * MEMBERSHIP_SLACK;
        Ok(StarAlgebra {
            d,
            basis,
            contains_identity,
            abelian: OnceLock::new(),
        })
    }

    pub fn scalars(d: usize) -> Self {
        Self::from_spanning(d, &[identity(d)], Tolerance::default()).expect("identity spans")
    }

    pub fn full(d: usize) -> Self {
        let units: Vec<_> = crate::channel::matrix_units(d).collect();
        Self::from_spanning(d, &units, Tolerance::default()).expect("matrix units span")
    }

    pub fn diagonal(d: usize) -> Self {
        let units: Vec<_> = (0..d).map(|i| crate::linalg::matrix_unit(d, i, i)).collect();
        Self::from_spanning(d, &units, Tolerance::default()).expect("diagonal units span")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    /// Distance from `x` to the algebra.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        span_residual(&self.basis, x)
    }

    pub fn contains(&self, x: &ComplexMatrix, tol: Tolerance) -> bool {
        self.residual(x) <= tol.bound(x.norm()) * MEMBERSHIP_SLACK
    }

    /// Orthogonal (HS) projection onto the algebra.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for b in &self.basis {
            let coeff: crate::linalg::C64 = b.iter().zip(x.iter()).map(|(p, q)| p.conj() * q).sum();
            out += b * coeff;
        }
        out
    }

    /// Subspace containment in both directions, so bases need not agree.
    pub fn equals(&self, other: &StarAlgebra, tol: Tolerance) -> bool {
        self.d == other.d
            && self.dim() == other.dim()
            && self.basis.iter().all(|b| other.contains(b, tol))
            && other.basis.iter().all(|b| self.contains(b, tol))
    }

    pub fn is_subalgebra_of(&self, other: &StarAlgebra, tol: Tolerance) -> bool {
        self.d == other.d && self.basis.iter().all(|b| other.contains(b, tol))
    }

    /// Closure under adjoints and pairwise products.
    pub fn is_closed(&self, tol: Tolerance) -> bool {
        self.basis.iter().all(|b| self.contains(&b.adjoint(), tol))
            && self
                .basis
                .iter()
                .all(|a| self.basis.iter().all(|b| self.contains(&(a * b), tol)))
    }

    pub fn is_abelian(&self, tol: Tolerance) -> bool {
        *self.abelian.get_or_init(|| self.max_commutator().is_none_or(|(_, _, n)| n <= tol.bound(1.0) * MEMBERSHIP_SLACK))
    }

    /// Largest `‖[b_i, b_j]‖_F` over basis pairs, with the pair.
    pub fn max_commutator(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.basis.len() {
            for j in (i + 1)..self.basis.len() {
                let n = commutator(&self.basis[i], &self.basis[j]).norm();
                if best.is_none_or(|(_, _, m)| n > m) {
                    best = Some((i, j, n));
                }
            }
        }
        best
    }

    pub fn export(&self, tol: Tolerance) -> StarAlgebraExport {
        StarAlgebraExport {
            d: self.d,
            dim: self.dim(),
            basis: self.basis.clone(),
            abelian: self.is_abelian(tol),
        }
    }
}

/// `{"d": int, "dim": int, "basis": [matrix…], "abelian": bool}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarAlgebraExport {
    pub d: usize,
    pub dim: usize,
    #[serde(with = "crate::io::cmat_vec")]
    pub basis: Vec<ComplexMatrix>,
    pub abelian: bool,
}

fn require_unital(e: &Channel, tol: Tolerance, what: &str) -> Result<()> {
    if !e.is_unital(tol) {
        return Err(Error::UnsupportedPrecondition(format!("{what} requires a unital channel")));
    }
    Ok(())
}

/// `M_E` for a unital channel, as the nullspace of the linear Kraus system
/// `K_k x − E(x) K_k = 0`, `x K_k* − K_k* E(x) = 0`.
pub fn multiplicative_domain(e: &Channel, tol: Tolerance) -> Result<StarAlgebra> {
    require_unital(e, tol, "multiplicative_domain")?;
    let d = e.dim();
    let n = d * d;
    let id = identity(d);
    let s = e.superoperator();
    let kraus = e.kraus();
    let mut system = ComplexMatrix::zeros(2 * kraus.len() * n, n);
    for (k, op) in kraus.iter().enumerate() {
        // vec(K x) = (I ⊗ K) vec x ; vec(E(x) K) = (Kᵀ ⊗ I) S vec x
        let left = kron(&id, op) - kron(&op.transpose(), &id) * s;
        // vec(x K*) = (conj(K) ⊗ I) vec x ; vec(K* E(x)) = (I ⊗ K*) S vec x
        let right = kron(&conj(op), &id) - kron(&id, &op.adjoint()) * s;
        system.view_mut((2 * k * n, 0), (n, n)).copy_from(&left);
        system.view_mut(((2 * k + 1) * n, 0), (n, n)).copy_from(&right);
    }
    let null = nullspace(&system, tol);
    let mats = null
        .iter()
        .map(|v| unvec(v, d))
        .collect::<Result<Vec<_>>>()?;
    StarAlgebra::from_spanning(d, &mats, tol)
}

/// Direct evaluation of `E(x*x) = E(x*)E(x)` and `E(xx*) = E(x)E(x*)`.
pub fn md_brute_check(e: &Channel, x: &ComplexMatrix, tol: Tolerance) -> Result<bool> {
    let ex = e.apply(x)?;
    let exs = e.apply(&x.adjoint())?;
    let scale = x.norm() * x.norm();
    let left = (e.apply(&(x.adjoint() * x))? - &exs * &ex).norm();
    let right = (e.apply(&(x * x.adjoint()))? - &ex * &exs).norm();
    Ok(left.max(right) <= tol.bound(scale) * MEMBERSHIP_SLACK)
}

/// `Fix_E = {a : E(a) = a}` for a unital trace-preserving channel.
pub fn fixed_point_algebra(e: &Channel, tol: Tolerance) -> Result<StarAlgebra> {
    require_unital(e, tol, "fixed_point_algebra")?;
    if !e.is_tp(tol) {
        return Err(Error::UnsupportedPrecondition(
            "fixed_point_algebra requires a trace-preserving channel".into(),
        ));
    }
    let d = e.dim();
    let shifted = e.superoperator() - ComplexMatrix::identity(d * d, d * d);
    let mats = nullspace(&shifted, tol)
        .iter()
        .map(|v| unvec(v, d))
        .collect::<Result<Vec<_>>>()?;
    StarAlgebra::from_spanning(d, &mats, tol)
}

/// The chain `M_{E¹} ⊇ … ⊇ M_{E^κ} = M_{E^∞}`.
#[derive(Debug, Clone)]
pub struct MdChain {
    /// `M_{E^1}, …, M_{E^κ}`.
    pub algebras: Vec<StarAlgebra>,
    /// Multiplicative index κ.
    pub kappa: usize,
    pub stabilized: StarAlgebra,
}

impl MdChain {
    pub fn dims(&self) -> Vec<usize> {
        self.algebras.iter().map(StarAlgebra::dim).collect()
    }
}

/// Computes `M_{E^n}` for `n = 1, 2, …` until two consecutive terms agree.
/// Once `M_{E^{n+1}} = M_{E^n}` the chain is constant, since
/// `M_{E^{n+1}} = {x ∈ M_E : E(x) ∈ M_{E^n}}`.
pub fn md_chain(e: &Channel, cap: Option<usize>, tol: Tolerance) -> Result<MdChain> {
    require_unital(e, tol, "md_chain")?;
    let d = e.dim();
    let cap = cap.unwrap_or(d * d).max(1);
    let s = e.superoperator().clone();
    let mut current_s = s.clone();
    let mut algebras = vec![multiplicative_domain(e, tol)?];
    loop {
        let n = algebras.len();
        if n > cap {
            return Err(Error::InternalInvariant(format!(
                "multiplicative-domain chain did not stabilize within {cap} steps (dims {:?})",
                algebras.iter().map(StarAlgebra::dim).collect::<Vec<_>>()
            )));
        }
        current_s = &s * &current_s;
        let next_power = Channel::from_superoperator(&current_s, Tolerance::default())?;
        let next = multiplicative_domain(&next_power, tol)?;
        let last = algebras.last().expect("chain is nonempty");
        if next.equals(last, tol) {
            let stabilized = last.clone();
            return Ok(MdChain {
                kappa: n,
                stabilized,
                algebras,
            });
        }
        if next.dim() >= last.dim() {
            return Err(Error::InternalInvariant(format!(
                "multiplicative-domain chain is not decreasing at step {}: {} -> {}",
                n + 1,
                last.dim(),
                next.dim()
            )));
        }
        algebras.push(next);
    }
}

/// `{x ∈ M_first : first(x) ∈ M_second}`, which equals the multiplicative
/// domain of `second ∘ first`.
pub fn composed_domain(
    first: &Channel,
    first_domain: &StarAlgebra,
    second_domain: &StarAlgebra,
    tol: Tolerance,
) -> Result<StarAlgebra> {
    let d = first.dim();
    let basis = first_domain.basis();
    if basis.is_empty() {
        return StarAlgebra::from_spanning(d, &[], tol);
    }
    let mut system = ComplexMatrix::zeros(d * d, basis.len());
    for (i, b) in basis.iter().enumerate() {
        let image = first.apply(b)?;
        let off = &image - second_domain.project(&image);
        system.column_mut(i).copy_from(&vec(&off));
    }
    let mats: Vec<ComplexMatrix> = nullspace(&system, tol)
        .iter()
        .map(|coeffs| {
            let mut x = ComplexMatrix::zeros(d, d);
            for (b, w) in basis.iter().zip(coeffs.iter()) {
                x += b * *w;
            }
            x
        })
        .collect();
    StarAlgebra::from_spanning(d, &mats, tol)
}

pub fn is_abelian(a: &StarAlgebra, tol: Tolerance) -> bool {
    a.is_abelian(tol)
}

/// Minimal projections of an abelian unital algebra, from the spectral
/// decomposition of a random self-adjoint element.
pub fn minimal_projections(a: &StarAlgebra, tol: Tolerance) -> Result<Vec<ComplexMatrix>> {
    minimal_projections_seeded(a, tol, 0)
}

pub fn minimal_projections_seeded(a: &StarAlgebra, tol: Tolerance, seed: u64) -> Result<Vec<ComplexMatrix>> {
    if !a.is_abelian(tol) {
        return Err(Error::Contract("minimal_projections requires an abelian algebra".into()));
    }
    if !a.contains_identity() {
        return Err(Error::Contract("minimal_projections requires a unital algebra".into()));
    }
    const ATTEMPTS: u64 = 8;
    let d = a.d();
    let gap = 10.0 * tol.eps;
    let mut last_count = 0;
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut h = ComplexMatrix::zeros(d, d);
        for b in a.basis() {
            let r: f64 = StandardNormal.sample(&mut rng);
            h += (b + b.adjoint()) * c(0.5 * r, 0.0);
        }
        let (values, vectors) = eigh(&h);
        let spread = values[d - 1] - values[0];
        let mut projections = Vec::new();
        let mut start = 0;
        for end in 1..=d {
            if end == d || values[end] - values[end - 1] > gap * spread.max(1.0) {
                let mut p = ComplexMatrix::zeros(d, d);
                for k in start..end {
                    let v = vectors.column(k);
                    p += v * v.adjoint();
                }
                projections.push(p);
                start = end;
            }
        }
        last_count = projections.len();
        if projections.len() == a.dim() && projections.iter().all(|p| a.contains(p, tol)) {
            return Ok(projections);
        }
    }
    Err(Error::InternalInvariant(format!(
        "could not separate the minimal projections of a {}-dimensional abelian algebra (found {last_count})",
        a.dim()
    )))
}

/// Smallest unital *-algebra containing `mats`.
pub fn generated_algebra(mats: &[ComplexMatrix], tol: Tolerance) -> Result<StarAlgebra> {
    let d = check_generators(mats)?;
    let basis = close_under_products(d, mats, true, tol)?;
    StarAlgebra::from_spanning(d, &basis, tol)
}

/// Dimension of the unital algebra (no adjoints) generated by `mats`.
/// By Burnside's theorem it is `d²` iff the family has no common
/// nontrivial invariant subspace.
pub fn generated_unital_algebra_dim(mats: &[ComplexMatrix], tol: Tolerance) -> Result<usize> {
    let d = check_generators(mats)?;
    Ok(close_under_products(d, mats, false, tol)?.len())
}

fn check_generators(mats: &[ComplexMatrix]) -> Result<usize> {
    let Some(first) = mats.first() else {
        return Err(Error::InvalidParameter("generator list is empty".into()));
    };
    if !first.is_square() {
        return Err(Error::Dimension(format!("generator has shape {:?}", first.shape())));
    }
    Ok(first.nrows())
}

fn close_under_products(
    d: usize,
    mats: &[ComplexMatrix],
    with_adjoints: bool,
    tol: Tolerance,
) -> Result<Vec<ComplexMatrix>> {
    let mut seed = vec![identity(d)];
    for m in mats {
        if m.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "generator has shape {:?}, expected {d}x{d}",
                m.shape()
            )));
        }
        seed.push(m.clone());
        if with_adjoints {
            seed.push(m.adjoint());
        }
    }
    let mut basis = orthonormal_span(&seed, tol)?;
    loop {
        let mut grown = basis.clone();
        for a in &basis {
            for b in &basis {
                grown.push(a * b);
            }
        }
        let next = orthonormal_span(&grown, tol)?;
        if next.len() == basis.len() {
            return Ok(next);
        }
        basis = next;
    }
}
