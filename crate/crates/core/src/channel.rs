//! Completely positive maps `x ↦ Σ_k K_k x K_k*` on `M_d` and their Choi and
//! superoperator forms.
//!
//! The Choi matrix is stored unnormalized, `C = Σ_ij E_ij ⊗ E(E_ij)` with the
//! channel output in the right tensor factor, so `Tr C = d` for a trace
//! preserving map. Consumers that need a state (the Gurvits-Barnum ball)
//! divide by `d` themselves.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, conj, eigh, identity, is_psd, kron, matrix_unit, unvec, ComplexMatrix, Tolerance,
    C64,
};

/// Verified properties; `None` means not checked yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChannelFlags {
    pub cp: Option<bool>,
    pub tp: Option<bool>,
    pub unital: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Channel {
    d: usize,
    kraus: Vec<ComplexMatrix>,
    flags: OnceLock<ChannelFlags>,
    choi: OnceLock<ComplexMatrix>,
    superop: OnceLock<ComplexMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: ComplexMatrix,
    /// `true` for the trace-one state form, `false` for the trace-`d` operator form.
    pub normalized: bool,
}

impl ChoiMatrix {
    pub fn normalize(&self) -> ChoiMatrix {
        if self.normalized {
            return self.clone();
        }
        ChoiMatrix {
            matrix: &self.matrix / c(self.d_in as f64, 0.0),
            normalized: true,
            ..*self
        }
    }

    pub fn unnormalized_matrix(&self) -> ComplexMatrix {
        if self.normalized {
            &self.matrix * c(self.d_in as f64, 0.0)
        } else {
            self.matrix.clone()
        }
    }
}

impl Channel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidParameter("empty Kraus list".into()));
        };
        let d = first.nrows();
        if d == 0 {
            return Err(Error::InvalidParameter("zero-dimensional channel".into()));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.shape() != (d, d) {
                return Err(Error::Dimension(format!(
                    "Kraus operator {k} has shape {:?}, expected {d}x{d}",
                    op.shape()
                )));
            }
        }
        Ok(Channel {
            d,
            kraus,
            flags: OnceLock::new(),
            choi: OnceLock::new(),
            superop: OnceLock::new(),
        })
    }

    pub fn identity(d: usize) -> Self {
        Channel::new(vec![identity(d)]).expect("identity is well formed")
    }

    /// `x ↦ u x u*`. Fails when `u` is not unitary within `tol`.
    pub fn unitary(u: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let d = u.nrows();
        if !u.is_square() {
            return Err(Error::Dimension(format!("unitary must be square, got {:?}", u.shape())));
        }
        let defect = (u.adjoint() * &u - identity(d)).norm();
        if defect > tol.bound((d as f64).sqrt()) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary: ‖u*u − I‖ = {defect:e}"
            )));
        }
        Channel::new(vec![u])
    }

    /// Completely depolarizing channel `x ↦ Tr(x) I/d`.
    pub fn omega(d: usize) -> Self {
        let s = c(1.0 / (d as f64).sqrt(), 0.0);
        let kraus = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| matrix_unit(d, i, j) * s)
            .collect();
        Channel::new(kraus).expect("omega is well formed")
    }

    /// `x ↦ (1 − p) x + p Tr(x) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing weight must lie in [0, 1], got {p}"
            )));
        }
        convex_mix(1.0 - p, &Channel::identity(d), &Channel::omega(d))
    }

    /// Schur multiplier `x ↦ b ∘ x`. Requires `b` PSD; unital and trace
    /// preserving exactly when the diagonal of `b` is all ones.
    pub fn schur(b: &ComplexMatrix, tol: Tolerance) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::Dimension(format!("Schur symbol must be square, got {:?}", b.shape())));
        }
        if !linalg::is_hermitian(b, tol) {
            return Err(Error::InvalidParameter("Schur symbol is not Hermitian".into()));
        }
        if !is_psd(b, tol)? {
            return Err(Error::InvalidParameter(
                "Schur symbol is not positive semidefinite, so T_b is not completely positive".into(),
            ));
        }
        let d = b.nrows();
        let (values, vectors) = eigh(b);
        let cut = tol.bound(values[d - 1].abs());
        let kraus: Vec<_> = (0..d)
            .filter(|&k| values[k] > cut)
            .map(|k| {
                let s = values[k].sqrt();
                let diag: Vec<C64> = (0..d).map(|i| vectors[(i, k)] * s).collect();
                linalg::diag(&diag)
            })
            .collect();
        if kraus.is_empty() {
            return Channel::new(vec![ComplexMatrix::zeros(d, d)]);
        }
        Channel::new(kraus)
    }

    /// Rebuilds Kraus operators from the eigendecomposition of a Choi matrix.
    /// Eigenvalues at or below `eps · λ_max` are dropped.
    pub fn from_choi(choi: &ChoiMatrix, tol: Tolerance) -> Result<Self> {
        kraus_from_choi(choi, tol)
    }

    /// Channel whose superoperator (column-stacking convention) is `s`.
    pub fn from_superoperator(s: &ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let n = s.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || !s.is_square() {
            return Err(Error::Dimension(format!(
                "superoperator shape {:?} is not d²×d²",
                s.shape()
            )));
        }
        let choi = ChoiMatrix {
            d_in: d,
            d_out: d,
            matrix: choi_from_superoperator(s, d),
            normalized: false,
        };
        kraus_from_choi(&choi, tol)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(x)?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Hilbert-Schmidt adjoint `x ↦ Σ K_k* x K_k`.
    pub fn apply_adjoint(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(x)?;
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        Ok(out)
    }

    fn check_operand(&self, x: &ComplexMatrix) -> Result<()> {
        if x.shape() != (self.d, self.d) {
            return Err(Error::Dimension(format!(
                "operand has shape {:?}, channel acts on {}x{}",
                x.shape(),
                self.d,
                self.d
            )));
        }
        Ok(())
    }

    /// Unnormalized Choi matrix `Σ_ij E_ij ⊗ E(E_ij)`, cached.
    pub fn choi(&self) -> &ComplexMatrix {
        self.choi.get_or_init(|| {
            let d = self.d;
            let mut out = ComplexMatrix::zeros(d * d, d * d);
            for i in 0..d {
                for j in 0..d {
                    let image = self.apply_unchecked(&matrix_unit(d, i, j));
                    out.view_mut((i * d, j * d), (d, d)).copy_from(&image);
                }
            }
            out
        })
    }

    pub fn choi_of(&self) -> ChoiMatrix {
        ChoiMatrix {
            d_in: self.d,
            d_out: self.d,
            matrix: self.choi().clone(),
            normalized: false,
        }
    }

    /// `S = Σ conj(K) ⊗ K`, so that `vec(E(x)) = S vec(x)`. Cached.
    pub fn superoperator(&self) -> &ComplexMatrix {
        self.superop.get_or_init(|| {
            let n = self.d * self.d;
            let mut s = ComplexMatrix::zeros(n, n);
            for k in &self.kraus {
                s += kron(&conj(k), k);
            }
            s
        })
    }

    pub fn verify(&self, tol: Tolerance) -> ChannelFlags {
        *self.flags.get_or_init(|| {
            let d = self.d;
            let id = identity(d);
            let scale = (d as f64).sqrt();
            let mut tp_sum = ComplexMatrix::zeros(d, d);
            let mut unital_sum = ComplexMatrix::zeros(d, d);
            for k in &self.kraus {
                tp_sum += k.adjoint() * k;
                unital_sum += k * k.adjoint();
            }
            ChannelFlags {
                cp: Some(is_psd(self.choi(), tol).unwrap_or(false)),
                tp: Some((tp_sum - &id).norm() <= tol.bound(scale)),
                unital: Some((unital_sum - &id).norm() <= tol.bound(scale)),
            }
        })
    }

    /// Flags cached by the first `verify` call, all `None` before that.
    pub fn flags(&self) -> ChannelFlags {
        self.flags.get().copied().unwrap_or_default()
    }

    pub fn is_unital(&self, tol: Tolerance) -> bool {
        self.verify(tol).unital == Some(true)
    }

    pub fn is_tp(&self, tol: Tolerance) -> bool {
        self.verify(tol).tp == Some(true)
    }

    pub fn compose(&self, first: &Channel) -> Result<Channel> {
        compose(self, first)
    }

    pub fn power(&self, n: usize) -> Result<Channel> {
        power(self, n)
    }
}

/// Kraus form from a Choi matrix (normalized or not).
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: Tolerance) -> Result<Channel> {
    if choi.d_in != choi.d_out {
        return Err(Error::UnsupportedPrecondition(format!(
            "only endomorphic channels are supported, got {} -> {}",
            choi.d_in, choi.d_out
        )));
    }
    let d = choi.d_in;
    let m = choi.unnormalized_matrix();
    if m.shape() != (d * d, d * d) {
        return Err(Error::Dimension(format!(
            "Choi matrix shape {:?} does not match d = {d}",
            m.shape()
        )));
    }
    if !linalg::is_hermitian(&m, tol) {
        return Err(Error::Contract("Choi matrix is not Hermitian".into()));
    }
    let (values, vectors) = eigh(&m);
    let top = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if values[0] < -tol.bound(top) {
        return Err(Error::NotAChannel { eigenvalue: values[0] });
    }
    let cut = tol.eps * top;
    let mut kraus = Vec::new();
    for k in (0..values.len()).rev() {
        if values[k] <= cut {
            break;
        }
        let v = vectors.column(k).into_owned();
        kraus.push(unvec(&v, d)? * c(values[k].sqrt(), 0.0));
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(d, d));
    }
    Channel::new(kraus)
}

/// Choi matrix of the map with superoperator `s`: block `(i, j)` is
/// `unvec(S vec(E_ij))`.
pub fn choi_from_superoperator(s: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = s.column(j * d + i);
            for b in 0..d {
                for a in 0..d {
                    out[(i * d + a, j * d + b)] = col[b * d + a];
                }
            }
        }
    }
    out
}

fn check_same_dim(a: &Channel, b: &Channel) -> Result<()> {
    if a.d != b.d {
        return Err(Error::Dimension(format!(
            "channels act on different dimensions: {} vs {}",
            a.d, b.d
        )));
    }
    Ok(())
}

/// `second ∘ first`, with Kraus operators `K²_j K¹_i`. Lists longer than
/// `d²` are re-canonicalized through the Choi matrix.
pub fn compose(second: &Channel, first: &Channel) -> Result<Channel> {
    check_same_dim(second, first)?;
    let d = first.d;
    if second.kraus.len() * first.kraus.len() > d * d {
        let s = second.superoperator() * first.superoperator();
        return Channel::from_superoperator(&s, Tolerance::default());
    }
    let mut kraus = Vec::with_capacity(second.kraus.len() * first.kraus.len());
    for k2 in &second.kraus {
        for k1 in &first.kraus {
            kraus.push(k2 * k1);
        }
    }
    Channel::new(kraus)
}

/// `n`-fold composition by repeated squaring of the superoperator.
pub fn power(e: &Channel, n: usize) -> Result<Channel> {
    if n == 0 {
        return Err(Error::InvalidParameter("channel power must be at least 1".into()));
    }
    if n == 1 {
        return Ok(e.clone());
    }
    Channel::from_superoperator(&superoperator_power(e.superoperator(), n), Tolerance::default())
}

pub(crate) fn superoperator_power(s: &ComplexMatrix, mut n: usize) -> ComplexMatrix {
    let mut base = s.clone();
    let mut acc = ComplexMatrix::identity(s.nrows(), s.ncols());
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// `x ↦ a E(x) + (1 − a) F(x)` for `a ∈ [0, 1]`.
pub fn convex_mix(a: f64, e: &Channel, f: &Channel) -> Result<Channel> {
    check_same_dim(e, f)?;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("mixing weight {a} outside [0, 1]")));
    }
    let (sa, sb) = (c(a.sqrt(), 0.0), c((1.0 - a).sqrt(), 0.0));
    let mut kraus: Vec<ComplexMatrix> = Vec::new();
    if a > 0.0 {
        kraus.extend(e.kraus.iter().map(|k| k * sa));
    }
    if a < 1.0 {
        kraus.extend(f.kraus.iter().map(|k| k * sb));
    }
    let d = e.d;
    let mixed = Channel::new(kraus)?;
    if mixed.kraus.len() > d * d {
        return Channel::from_choi(&mixed.choi_of(), Tolerance::default());
    }
    Ok(mixed)
}

/// Frobenius distance between normalized Choi matrices. A computable
/// stand-in for the completely bounded norm distance; it is not that norm.
pub fn channel_distance(e: &Channel, f: &Channel) -> Result<f64> {
    check_same_dim(e, f)?;
    Ok((e.choi() - f.choi()).norm() / e.d as f64)
}

/// `x ↦ a Φ(x) + (1 − a) Tr(x) I/d` with `a = 1 − δ/2`.
#[derive(Debug, Clone)]
pub struct DepolarizingMix {
    pub base: Channel,
    pub delta: f64,
    pub a: f64,
    mixed: OnceLock<Channel>,
}

impl DepolarizingMix {
    pub fn new(base: Channel, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok(DepolarizingMix {
            base,
            delta,
            a: 1.0 - delta / 2.0,
            mixed: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn channel(&self) -> &Channel {
        self.mixed.get_or_init(|| {
            convex_mix(self.a, &self.base, &Channel::omega(self.base.dim()))
                .expect("weights are in range and dimensions agree")
        })
    }

    /// `d aⁿ / (1 − aⁿ)`, the operator-norm factor in front of `Φⁿ` once
    /// the `n`-th power is written as a multiple of `Tr(x) I + c Φⁿ(x)`.
    pub fn stormer_bound(&self, n: usize) -> f64 {
        let an = self.a.powi(n as i32);
        self.dim() as f64 * an / (1.0 - an)
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase
/// of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = gaussian_matrix(d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Mixture of `m` Haar-random unitary conjugations with Dirichlet(1, …, 1)
/// weights. Unital and trace preserving by construction.
pub fn random_unital<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Channel> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter(
            "random unital channel needs d ≥ 1 and m ≥ 1".into(),
        ));
    }
    let raw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let kraus: Vec<ComplexMatrix> = raw
        .iter()
        .map(|w| random_unitary(d, rng) * c((w / total).sqrt(), 0.0))
        .collect();
    let ch = Channel::new(kraus)?;
    if ch.kraus.len() > d * d {
        return Channel::from_choi(&ch.choi_of(), Tolerance::default());
    }
    Ok(ch)
}

/// Matrix units of `M_d` in row-major order.
pub fn matrix_units(d: usize) -> impl Iterator<Item = ComplexMatrix> {
    (0..d).flat_map(move |i| (0..d).map(move |j| matrix_unit(d, i, j)))
}

/// Largest deviation `‖E(E_ij) − F(E_ij)‖_F` over all matrix units.
pub fn max_unit_deviation(e: &Channel, f: &Channel) -> Result<f64> {
    check_same_dim(e, f)?;
    Ok(matrix_units(e.d)
        .map(|u| (e.apply_unchecked(&u) - f.apply_unchecked(&u)).norm())
        .fold(0.0, f64::max))
}
