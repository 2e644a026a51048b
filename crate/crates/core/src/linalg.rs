use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular values in nonincreasing order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a symmetric matrix in nondecreasing order.
pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub(crate) struct TikhonovSolution {
    pub coeffs: DVector<f64>,
    pub singular_values: Vec<f64>,
}

/// Minimizes `|A c - y|^2 + reg |c|^2` through the SVD of `A`.
pub(crate) fn tikhonov_solve(a: &DMatrix<f64>, y: &DVector<f64>, reg: f64) -> TikhonovSolution {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let s = &svd.singular_values;
    let uty = u.transpose() * y;
    let mut scaled = DVector::zeros(s.len());
    for k in 0..s.len() {
        let denom = s[k] * s[k] + reg;
        if denom > 0.0 {
            scaled[k] = s[k] * uty[k] / denom;
        }
    }
    let mut sv: Vec<f64> = s.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    TikhonovSolution {
        coeffs: vt.transpose() * scaled,
        singular_values: sv,
    }
}
