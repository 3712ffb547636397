use nalgebra::{Cholesky, SymmetricEigen};

use super::{ensure_finite, ensure_square, symmetrize, Matrix, Vector};
use crate::error::{Error, Result};

/// Eigenvalues in ascending order with unit-norm eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vector,
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Flips the sign of a vector so its largest-magnitude entry is positive.
/// Ties go to the lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn sorted_pairs(values: Vector, vectors: Matrix) -> EigenPairs {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let values = Vector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut out = Matrix::zeros(vectors.nrows(), n);
    for (j, &i) in order.iter().enumerate() {
        let mut col: Vec<f64> = vectors.column(i).iter().copied().collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|x| *x /= norm);
        }
        fix_sign(&mut col);
        out.set_column(j, &Vector::from_vec(col));
    }
    EigenPairs {
        values,
        vectors: out,
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(A + Aᵀ)/2` before solving.
pub fn sym_eig(a: &Matrix) -> Result<EigenPairs> {
    ensure_square(a, "matrix")?;
    ensure_finite(a, "matrix")?;
    let eig = SymmetricEigen::new(symmetrize(a));
    Ok(sorted_pairs(eig.eigenvalues, eig.eigenvectors))
}

/// Default ridge added to the right-hand matrix: `1e-9 · trace(B) / n`,
/// falling back to `1e-9` when the trace is not positive.
pub fn default_regularization(b: &Matrix) -> f64 {
    let n = b.nrows().max(1) as f64;
    let scaled = 1e-9 * b.trace() / n;
    if scaled > 0.0 && scaled.is_finite() {
        scaled
    } else {
        1e-9
    }
}

/// Solves `A v = λ (B + reg·I) v` for symmetric `A` and `B`.
///
/// Reduces to a standard symmetric problem through the Cholesky factor of
/// `B + reg·I`. Returned eigenvectors have unit Euclidean norm.
pub fn gen_eig(a: &Matrix, b: &Matrix, reg: f64) -> Result<EigenPairs> {
    ensure_square(a, "left matrix")?;
    ensure_square(b, "right matrix")?;
    if a.nrows() != b.nrows() {
        return Err(Error::dimension(format!(
            "generalized problem sizes differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::validation(format!("regularization must be finite and >= 0, got {reg}")));
    }
    ensure_finite(a, "left matrix")?;
    ensure_finite(b, "right matrix")?;

    let n = a.nrows();
    let a = symmetrize(a);
    let b = symmetrize(b) + Matrix::identity(n, n) * reg;
    let chol = Cholesky::new(b)
        .ok_or_else(|| Error::Singular("right matrix is not positive definite".into()))?;
    let l = chol.l();
    let diag = l.diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo * lo <= 1e-14 * hi * hi {
        return Err(Error::Singular(format!(
            "right matrix condition too poor (pivot ratio {:.3e})",
            (lo / hi).powi(2)
        )));
    }

    // C = L⁻¹ A L⁻ᵀ
    let left = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let eig = SymmetricEigen::new(symmetrize(&c));
    let vectors = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::Singular("back substitution failed".into()))?;
    Ok(sorted_pairs(eig.eigenvalues, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &Matrix, b: &Matrix, lambda: f64, v: &Matrix) -> f64 {
        (a * v - b * v * lambda).norm()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = sym_eig(&Matrix::identity(3, 3)).unwrap();
        assert!(eig.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let gram = eig.vectors.transpose() * &eig.vectors;
        assert!((gram - Matrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_gives_coordinate_axes() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![5.0, 2.0]));
        let eig = sym_eig(&a).unwrap();
        assert_eq!(eig.values.as_slice(), &[2.0, 5.0]);
        assert_eq!(eig.vectors, Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn two_by_two_hand_decomposition() {
        // characteristic polynomial (2-λ)² - 1 = 0 → λ = 1, 3
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.vectors.column(0);
        let v1 = eig.vectors.column(1);
        // (1,-1)/√2 up to the sign convention
        assert!((v0[0].abs() - h).abs() < 1e-12 && (v0[0] + v0[1]).abs() < 1e-12);
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] - h).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_rejects_bad_input() {
        assert!(matches!(sym_eig(&Matrix::zeros(2, 3)), Err(Error::Dimension(_))));
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(sym_eig(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn gen_eig_identity_rhs() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0]));
        let eig = gen_eig(&a, &Matrix::identity(2, 2), 0.0).unwrap();
        assert_eq!(eig.values.as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn gen_eig_coordinate_ratios() {
        // per-coordinate ratios 4/2 and 9/3
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]));
        let eig = gen_eig(&a, &b, 0.0).unwrap();
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        for j in 0..2 {
            let v = eig.vectors.columns(j, 1).into_owned();
            assert!(residual(&a, &b, eig.values[j], &v) < 1e-10);
        }
    }

    #[test]
    fn gen_eig_regularized_singular_rhs() {
        let reg = 1e-6;
        let a = Matrix::identity(2, 2) * 2.0;
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let eig = gen_eig(&a, &b, reg).unwrap();
        // closed form: 2/(1+reg) and 2/reg
        assert!((eig.values[0] - 2.0 / (1.0 + reg)).abs() < 1e-9);
        assert!((eig.values[1] / (2.0 / reg) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gen_eig_errors() {
        let a = Matrix::identity(2, 2);
        assert!(matches!(gen_eig(&a, &Matrix::identity(3, 3), 0.0), Err(Error::Dimension(_))));
        assert!(matches!(gen_eig(&a, &Matrix::zeros(2, 2), 0.0), Err(Error::Singular(_))));
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(gen_eig(&a, &b, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn default_regularization_scales_with_trace() {
        assert_eq!(default_regularization(&Matrix::zeros(3, 3)), 1e-9);
        let b = Matrix::identity(4, 4) * 8.0;
        assert!((default_regularization(&b) - 8e-9).abs() < 1e-20);
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
