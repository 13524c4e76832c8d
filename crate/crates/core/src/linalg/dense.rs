//! SVD and Hermitian eigensolver backed by faer.
//!
//! nalgebra's complex SVD can return factors that do not reconstruct the
//! input when the matrix is numerically rank deficient, which is the common
//! case for subspace computations here.

use faer::{Mat, Side};

use super::{ComplexMatrix, C64};

fn to_faer(a: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `a = U diag(s) V*`, singular values descending.
pub(crate) struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

pub(crate) fn svd(a: &ComplexMatrix) -> Svd {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: ComplexMatrix::identity(r, r),
            s: Vec::new(),
            v: ComplexMatrix::identity(c, c),
        };
    }
    let f = to_faer(a).svd().expect("SVD iteration converges");
    let s = f.S().column_vector().iter().map(|z| z.re).collect();
    Svd {
        u: from_faer(f.U()),
        s,
        v: from_faer(f.V()),
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let f = to_faer(a)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges");
    let values: Vec<f64> = f.S().column_vector().iter().map(|z| z.re).collect();
    let vectors = from_faer(f.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    (
        order.iter().map(|&i| values[i]).collect(),
        ComplexMatrix::from_fn(n, n, |r, k| vectors[(r, order[k])]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, cols, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn svd_reconstructs_rank_deficient_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, cols, rank) in [(9, 3, 1), (9, 9, 4), (4, 16, 2), (25, 25, 7)] {
            let a = random(r, rank, &mut rng) * random(rank, cols, &mut rng);
            let f = svd(&a);
            let k = f.s.len();
            let sigma = ComplexMatrix::from_fn(k, k, |i, j| if i == j { c(f.s[i], 0.0) } else { c(0.0, 0.0) });
            let back = f.u.columns(0, k) * sigma * f.v.columns(0, k).adjoint();
            assert!((back - &a).norm() < 1e-12 * (1.0 + a.norm()));
            assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(f.s[rank..].iter().all(|&s| s < 1e-12));
        }
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random(6, 6, &mut rng);
        let h = &g + g.adjoint();
        let (values, vectors) = hermitian_eigen(&h);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let d = ComplexMatrix::from_fn(6, 6, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) });
        assert!((&vectors * d * vectors.adjoint() - h).norm() < 1e-12);
    }
}
