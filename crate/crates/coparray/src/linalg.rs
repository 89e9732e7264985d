//! Small shared helpers over complex Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Largest `|m[i][j] - conj(m[j][i])|` over all entries.
pub(crate) fn max_hermitian_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Eigenvector columns are phase-normalized so that the
/// first component of largest magnitude is real and non-negative, which
/// pins a deterministic representative for each eigenvector.
pub(crate) fn hermitian_eigen_desc(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let src = eig.eigenvectors.column(old_col);
        // phase convention: rotate so the largest-magnitude entry is real >= 0
        let mut pivot = Complex64::new(0.0, 0.0);
        let mut best = 0.0;
        for z in src.iter() {
            if z.norm() > best {
                best = z.norm();
                pivot = *z;
            }
        }
        let rotation = if best > 0.0 {
            pivot.conj() / best
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, new_col)] = src[i] * rotation;
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_known_hermitian_matrix() {
        // A = v v^H + I with |v|² = 4 → eigenvalues {5, 1, 1}
        let v = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, -1.0),
        ];
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = v[i] * v[j].conj();
            }
            a[(i, i)] += Complex64::new(1.0, 0.0);
        }
        let (vals, vecs) = hermitian_eigen_desc(&a);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        // reconstruction
        let mut recon = DMatrix::<Complex64>::zeros(3, 3);
        for k in 0..3 {
            let col = vecs.column(k);
            for i in 0..3 {
                for j in 0..3 {
                    recon[(i, j)] += Complex64::new(vals[k], 0.0) * col[i] * col[j].conj();
                }
            }
        }
        let err: f64 = (&a - &recon).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12, "reconstruction error {err}");
        // deterministic phase convention
        let (_, vecs2) = hermitian_eigen_desc(&a);
        assert_eq!(vecs, vecs2);
    }

    #[test]
    fn asymmetry_detects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        assert_eq!(max_hermitian_asymmetry(&m), 0.0);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0); // should be -i for Hermitian
        assert!((max_hermitian_asymmetry(&m) - 2.0).abs() < 1e-15);
    }
}
