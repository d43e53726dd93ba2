//! Blocked dense kernels for symmetric positive-definite systems.
//!
//! EP needs `diag(A⁻¹)` and `diag(H A⁻¹ Hᵀ)` of a K×K precision matrix at
//! every iteration. Both are read off the inverse Cholesky factor, which is
//! computed with recursive blocking so that almost all the work is matrix
//! multiplication.

use nalgebra::{DMatrix, DVector};

use crate::real::Real;

const BLOCK: usize = 64;

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor<T: Real> {
    l: DMatrix<T>,
}

impl<T: Real> CholeskyFactor<T> {
    /// Factorizes a symmetric matrix; only the lower triangle is read.
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn new(mut a: DMatrix<T>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let mut j0 = 0;
        while j0 < n {
            let jb = BLOCK.min(n - j0);
            factor_diagonal_block(&mut a, j0, jb)?;
            let rest = n - j0 - jb;
            if rest > 0 {
                solve_panel(&mut a, j0, jb);
                update_trailing(&mut a, j0, jb);
            }
            j0 += jb;
        }
        // clear the strict upper triangle so `l` is a genuine factor
        for j in 1..n {
            for i in 0..j {
                a[(i, j)] = T::zero();
            }
        }
        Some(CholeskyFactor { l: a })
    }

    pub fn l(&self) -> &DMatrix<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `ln det A = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim()).fold(T::zero(), |acc, i| acc + two * self.l[(i, i)].ln())
    }

    /// `L⁻¹`, lower triangular.
    pub fn inverse_factor(&self) -> DMatrix<T> {
        lower_triangular_inverse(&self.l)
    }

    /// Full inverse `A⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> DMatrix<T> {
        let li = self.inverse_factor();
        li.transpose() * li
    }
}

/// Diagonals needed by EP: `diag(A⁻¹)` and `diag(H A⁻¹ Hᵀ)`.
pub fn inverse_diagonals<T: Real>(
    factor: &CholeskyFactor<T>,
    h: &DMatrix<T>,
) -> (DVector<T>, DVector<T>) {
    let li = factor.inverse_factor();
    let diag_inv = DVector::from_iterator(li.ncols(), li.column_iter().map(|c| c.norm_squared()));
    let w = &li * h.transpose();
    let diag_proj = DVector::from_iterator(w.ncols(), w.column_iter().map(|c| c.norm_squared()));
    (diag_inv, diag_proj)
}

fn factor_diagonal_block<T: Real>(a: &mut DMatrix<T>, j0: usize, jb: usize) -> Option<()> {
    for j in j0..j0 + jb {
        let mut d = a[(j, j)];
        for p in j0..j {
            d -= a[(j, p)] * a[(j, p)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in j + 1..j0 + jb {
            let mut s = a[(i, j)];
            for p in j0..j {
                s -= a[(i, p)] * a[(j, p)];
            }
            a[(i, j)] = s / d;
        }
    }
    Some(())
}

/// `A21 ← A21 L11⁻ᵀ` for the panel below the freshly factored diagonal block.
fn solve_panel<T: Real>(a: &mut DMatrix<T>, j0: usize, jb: usize) {
    let n = a.nrows();
    for c in j0..j0 + jb {
        for p in j0..c {
            let lcp = a[(c, p)];
            if lcp != T::zero() {
                for i in j0 + jb..n {
                    let v = a[(i, p)];
                    a[(i, c)] -= v * lcp;
                }
            }
        }
        let inv = T::one() / a[(c, c)];
        for i in j0 + jb..n {
            a[(i, c)] *= inv;
        }
    }
}

/// `A22 ← A22 - A21 A21ᵀ`, lower block trapezoid only.
fn update_trailing<T: Real>(a: &mut DMatrix<T>, j0: usize, jb: usize) {
    let n = a.nrows();
    let start = j0 + jb;
    let panel = a.view((start, j0), (n - start, jb)).into_owned();
    let mut c0 = 0;
    while c0 < n - start {
        let cb = BLOCK.min(n - start - c0);
        let rows = panel.rows(c0, n - start - c0);
        let cols_t = panel.rows(c0, cb).transpose();
        a.view_mut((start + c0, start + c0), (n - start - c0, cb))
            .gemm(-T::one(), &rows, &cols_t, T::one());
        c0 += cb;
    }
}

/// Inverse of a lower-triangular matrix by recursive 2×2 blocking.
pub fn lower_triangular_inverse<T: Real>(l: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    if n <= BLOCK {
        let mut x = DMatrix::<T>::zeros(n, n);
        for j in 0..n {
            x[(j, j)] = T::one() / l[(j, j)];
            for i in j + 1..n {
                let mut s = T::zero();
                for p in j..i {
                    s += l[(i, p)] * x[(p, j)];
                }
                x[(i, j)] = -s / l[(i, i)];
            }
        }
        return x;
    }
    let n1 = n / 2;
    let n2 = n - n1;
    let x11 = lower_triangular_inverse(&l.view((0, 0), (n1, n1)).into_owned());
    let x22 = lower_triangular_inverse(&l.view((n1, n1), (n2, n2)).into_owned());
    let l21 = l.view((n1, 0), (n2, n1));
    let x21 = -(&x22 * (l21 * &x11));
    let mut x = DMatrix::<T>::zeros(n, n);
    x.view_mut((0, 0), (n1, n1)).copy_from(&x11);
    x.view_mut((n1, n1), (n2, n2)).copy_from(&x22);
    x.view_mut((n1, 0), (n2, n1)).copy_from(&x21);
    x
}

/// `Hᵀ diag(d) H` computed as a single product.
pub fn weighted_gram<T: Real>(h: &DMatrix<T>, d: &[T]) -> DMatrix<T> {
    let mut scaled = h.clone();
    for (mut row, &w) in scaled.row_iter_mut().zip(d) {
        row *= w;
    }
    h.transpose() * scaled
}
