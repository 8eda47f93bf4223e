use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, ascending, with each eigenvector's
/// first clearly non-zero component made positive.
///
/// The input is symmetrized first. Ties keep the solver's order (stable sort).
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sym = (m + m.transpose()) * 0.5;
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| canonical_sign(eig.eigenvectors.column(i).into_owned()))
        .collect();
    (values, vectors)
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen(m).0
}

/// Flips `v` so its first component with magnitude above `1e-12` is positive.
pub fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => v,
    }
}

/// Determinant as the product of symmetric eigenvalues.
pub fn sym_det(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().product()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}
