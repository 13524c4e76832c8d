use super::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};

/// Complex Schur form `A = Q T Q*` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

/// `A = Q H Q*` with `H` upper Hessenberg.
fn hessenberg(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n, n);
    for k in 0..n.saturating_sub(2) {
        let mut v = h.view((k + 1, k), (n - k - 1, 1)).clone_owned();
        let alpha = v.norm();
        if alpha == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 { ONE } else { v[0] / v[0].norm() };
        v[0] += phase * alpha;
        let vn = v.norm();
        v /= C64::new(vn, 0.0);
        let two = C64::new(2.0, 0.0);
        let w = v.adjoint() * h.rows(k + 1, n - k - 1);
        let mut rows = h.rows_mut(k + 1, n - k - 1);
        rows -= &v * w * two;
        let w = h.columns(k + 1, n - k - 1) * &v;
        let mut cols = h.columns_mut(k + 1, n - k - 1);
        cols -= w * v.adjoint() * two;
        let w = q.columns(k + 1, n - k - 1) * &v;
        let mut cols = q.columns_mut(k + 1, n - k - 1);
        cols -= w * v.adjoint() * two;
    }
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = ZERO;
        }
    }
    (q, h)
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let (l1, l2) = (d + half + root, d + half - root);
    if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 }
}

/// `(c, s)` with `c` real such that `[[c, s], [-s̄, c]] [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if x.norm() == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let alpha = x / x.norm();
    (x.norm() / r, alpha * y.conj() / r)
}

/// One implicit single-shift QR sweep on the active window `lo..=hi`,
/// applied to the full matrix so that `A = Q H Q*` is preserved.
fn qr_sweep(h: &mut ComplexMatrix, q: &mut ComplexMatrix, lo: usize, hi: usize, mu: C64) {
    let n = h.nrows();
    for k in lo..hi {
        let (x, y) = if k == lo {
            (h[(lo, lo)] - mu, h[(lo + 1, lo)])
        } else {
            (h[(k, k - 1)], h[(k + 1, k - 1)])
        };
        let (c, s) = givens(x, y);
        let first_col = if k == lo { lo } else { k - 1 };
        for j in first_col..n {
            let (a, b) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = a * c + s * b;
            h[(k + 1, j)] = -s.conj() * a + b * c;
        }
        for i in 0..=(k + 2).min(hi) {
            let (a, b) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = a * c + b * s.conj();
            h[(i, k + 1)] = -a * s + b * c;
        }
        for i in 0..n {
            let (a, b) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = a * c + b * s.conj();
            q[(i, k + 1)] = -a * s + b * c;
        }
        if k > lo {
            h[(k + 1, k - 1)] = ZERO;
        }
    }
}

/// A triangular Sylvester solve hit two nearly equal diagonal entries.
#[derive(Debug, Clone, Copy)]
pub struct SylvesterError {
    pub gap: f64,
}

impl ComplexSchur {
    /// Householder reduction to Hessenberg form followed by single-shift QR
    /// sweeps with Wilkinson shifts and an exceptional shift every tenth
    /// sweep. Unitary inputs, whose eigenvalues all sit on the unit circle,
    /// need the exceptional shifts to make progress.
    ///
    /// # Panics
    /// If a single eigenvalue needs more than `30 n` sweeps.
    pub fn new(a: &ComplexMatrix) -> Self {
        Self::try_new(a).expect("complex QR iteration converges")
    }

    pub fn try_new(a: &ComplexMatrix) -> Option<Self> {
        assert!(a.is_square(), "Schur form needs a square matrix");
        let n = a.nrows();
        let (mut q, mut h) = hessenberg(a);
        let scale = h.norm();
        let mut hi = n.saturating_sub(1);
        let mut sweeps = 0;
        while hi > 0 {
            let mut lo = hi;
            while lo > 0 {
                let mut tst = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
                if tst == 0.0 {
                    tst = scale;
                }
                if h[(lo, lo - 1)].norm() <= f64::EPSILON * tst {
                    h[(lo, lo - 1)] = ZERO;
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                hi -= 1;
                sweeps = 0;
                continue;
            }
            sweeps += 1;
            if sweeps > 30 * n {
                return None;
            }
            let mu = if sweeps % 10 == 0 {
                h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs()
            } else {
                wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
            };
            qr_sweep(&mut h, &mut q, lo, hi, mu);
        }
        for j in 0..n {
            for i in (j + 1)..n {
                h[(i, j)] = ZERO;
            }
        }
        Some(ComplexSchur { q, t: h })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Exchange the diagonal entries at `k` and `k + 1` with a unitary
    /// rotation, keeping `A = Q T Q*`.
    pub fn swap(&mut self, k: usize) {
        let n = self.dim();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let t12 = self.t[(k, k + 1)];
        // eigenvector of the 2x2 block for t22
        let x1 = t12;
        let x2 = t22 - t11;
        let norm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
        if norm == 0.0 {
            return;
        }
        let (g11, g21) = (x1 / norm, x2 / norm);
        let (g12, g22) = (-g21.conj(), g11.conj());
        // T <- G* T on rows k, k+1
        for j in 0..n {
            let a = self.t[(k, j)];
            let b = self.t[(k + 1, j)];
            self.t[(k, j)] = g11.conj() * a + g21.conj() * b;
            self.t[(k + 1, j)] = g12.conj() * a + g22.conj() * b;
        }
        // T <- T G and Q <- Q G on columns k, k+1
        for m in [&mut self.t, &mut self.q] {
            for i in 0..n {
                let a = m[(i, k)];
                let b = m[(i, k + 1)];
                m[(i, k)] = a * g11 + b * g21;
                m[(i, k + 1)] = a * g12 + b * g22;
            }
        }
        self.t[(k + 1, k)] = ZERO;
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
    }

    /// Move every diagonal entry satisfying `select` to the leading block,
    /// preserving relative order. Returns the size of the leading block.
    pub fn reorder<F: Fn(C64) -> bool>(&mut self, select: F) -> usize {
        let n = self.dim();
        let mut placed = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                let mut pos = i;
                while pos > placed {
                    self.swap(pos - 1);
                    pos -= 1;
                }
                placed += 1;
            }
        }
        placed
    }

    /// Right eigenvectors, one per diagonal position, by back-substitution
    /// in `T`. Near-equal diagonal entries are perturbed to a floor of
    /// `f64::EPSILON * ‖T‖` as in LAPACK's `ztrevc`.
    pub fn eigenvectors(&self) -> Vec<ComplexVector> {
        let n = self.dim();
        let floor = (f64::EPSILON * self.t.norm()).max(f64::MIN_POSITIVE);
        (0..n)
            .map(|k| {
                let lambda = self.t[(k, k)];
                let mut y = ComplexVector::zeros(n);
                y[k] = ONE;
                for i in (0..k).rev() {
                    let mut rhs = self.t[(i, k)];
                    for j in (i + 1)..k {
                        rhs += self.t[(i, j)] * y[j];
                    }
                    let mut denom = self.t[(i, i)] - lambda;
                    if denom.norm() < floor {
                        denom = C64::new(floor, 0.0);
                    }
                    y[i] = -rhs / denom;
                }
                let v = &self.q * y;
                let norm = v.norm();
                v / C64::new(norm, 0.0)
            })
            .collect()
    }

    /// Spectral projector onto the invariant subspace of the leading `k`
    /// diagonal entries, along the complementary invariant subspace.
    pub fn leading_projector(&self, k: usize) -> Result<ComplexMatrix, SylvesterError> {
        let n = self.dim();
        let x = self.solve_separating(k)?;
        let mut block = ComplexMatrix::zeros(n, n);
        for i in 0..k {
            block[(i, i)] = ONE;
            for j in k..n {
                block[(i, j)] = x[(i, j - k)];
            }
        }
        Ok(&self.q * block * self.q.adjoint())
    }

    /// Solves `T11 X − X T22 = T12` for the k-leading split.
    fn solve_separating(&self, k: usize) -> Result<ComplexMatrix, SylvesterError> {
        let n = self.dim();
        let m = n - k;
        let mut x = ComplexMatrix::zeros(k, m);
        for j in 0..m {
            let tjj = self.t[(k + j, k + j)];
            // rhs = T12[:, j] + Σ_{l<j} X[:, l] T22[l, j]
            let mut rhs: Vec<C64> = (0..k).map(|i| self.t[(i, k + j)]).collect();
            for l in 0..j {
                let coeff = self.t[(k + l, k + j)];
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r += x[(i, l)] * coeff;
                }
            }
            // (T11 − tjj I) x_j = rhs, upper triangular
            for i in (0..k).rev() {
                let mut acc = rhs[i];
                for p in (i + 1)..k {
                    acc -= self.t[(i, p)] * x[(p, j)];
                }
                let denom = self.t[(i, i)] - tjj;
                if denom.norm() == 0.0 {
                    return Err(SylvesterError { gap: 0.0 });
                }
                x[(i, j)] = acc / denom;
            }
        }
        Ok(x)
    }
}
