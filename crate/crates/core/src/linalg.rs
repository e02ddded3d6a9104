//! Rank-revealing least squares on a thin SVD.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Truncated thin SVD `A = U diag(s) V^T` of an `n x p` matrix.
///
/// Only the retained singular triplets are stored, so `U` is `n x r` and
/// `V` is `p x r` with `r` the numerical rank.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
}

impl LeastSquares {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (n, p) = a.shape();
        if n == 0 || p == 0 {
            return LeastSquares {
                u: DMatrix::zeros(n, 0),
                s: DVector::zeros(0),
                v: DMatrix::zeros(p, 0),
            };
        }
        let (u, singular_values, v_t) = checked_svd(a);
        let s_max = singular_values.iter().copied().fold(0.0_f64, f64::max);
        let keep: Vec<usize> = (0..singular_values.len())
            .filter(|&j| s_max > 0.0 && singular_values[j] > RANK_TOL * s_max)
            .collect();
        let r = keep.len();
        let mut uu = DMatrix::zeros(n, r);
        let mut vv = DMatrix::zeros(p, r);
        let mut ss = DVector::zeros(r);
        for (col, &j) in keep.iter().enumerate() {
            uu.set_column(col, &u.column(j));
            vv.set_column(col, &v_t.row(j).transpose());
            ss[col] = singular_values[j];
        }
        LeastSquares { u: uu, s: ss, v: vv }
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Minimum-norm least-squares solution `A^+ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut w = self.u.tr_mul(b);
        for (wi, si) in w.iter_mut().zip(self.s.iter()) {
            *wi /= si;
        }
        &self.v * w
    }

    /// `A^+ B` column by column.
    pub fn solve_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = self.u.tr_mul(b);
        for (j, si) in self.s.iter().enumerate() {
            w.row_mut(j).scale_mut(1.0 / si);
        }
        &self.v * w
    }

    /// Diagonal of the hat matrix `A A^+`.
    pub fn leverages(&self) -> Vec<f64> {
        (0..self.u.nrows())
            .map(|s| self.u.row(s).norm_squared())
            .collect()
    }

    /// Full hat matrix `A A^+ = U U^T`.
    pub fn hat(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }

    /// Factorisation of `A` with its columns reordered so that new column
    /// `j` is old column `old_of_new[j]`.
    pub fn permute_coefficients(&self, old_of_new: &[usize]) -> Self {
        LeastSquares {
            u: self.u.clone(),
            s: self.s.clone(),
            v: self.v.select_rows(old_of_new.iter()),
        }
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// `B - A A^+ B`: residual of projecting each column onto `col(A)`.
    pub fn residualize(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        b - &self.u * self.u.tr_mul(b)
    }
}

/// Thin SVD of `a` as nalgebra matrices `(U, s, V^T)`.
///
/// nalgebra's own implicit-shift SVD returns factors that do not reproduce
/// some `{-1, 0, 1}` designs with repeated or zero singular values, so the
/// decomposition is done by faer.
fn checked_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (n, p) = a.shape();
    let m = faer::Mat::<f64>::from_fn(n, p, |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("SVD did not converge");
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let r = fs.nrows();
    let u = DMatrix::from_fn(n, r, |i, j| fu[(i, j)]);
    let s = DVector::from_fn(r, |j, _| fs[j]);
    let v_t = DMatrix::from_fn(r, p, |i, j| fv[(j, i)]);
    (u, s, v_t)
}
