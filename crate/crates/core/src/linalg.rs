//! Small dense linear algebra for covariance matrices.
//!
//! Dimensions here stay in the low hundreds, so everything is plain
//! row-major storage with textbook factorizations.

use crate::error::{dim_err, Error, Result};
use crate::Scalar;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return dim_err(format!("row of length {} in {n}x{n} matrix", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `self += s · v vᵀ` for a sparse `v`.
    pub fn add_sparse_outer(&mut self, v: &[(usize, T)], s: T) {
        for &(i, vi) in v {
            for &(j, vj) in v {
                self.data[i * self.n + j] += s * vi * vj;
            }
        }
    }

    /// `self += s · u vᵀ` for dense vectors.
    pub fn add_outer(&mut self, u: &[T], v: &[T], s: T) {
        for (i, &ui) in u.iter().enumerate() {
            if ui == T::zero() {
                continue;
            }
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += s * ui * vj;
            }
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `M v` for a sparse `v`.
    pub fn mul_sparse(&self, v: &[(usize, T)]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *o = v.iter().map(|&(j, vj)| row[j] * vj).sum();
        }
        out
    }

    /// `vᵀ M v` for a sparse `v`.
    pub fn sparse_quad(&self, v: &[(usize, T)]) -> T {
        let mut acc = T::zero();
        for &(i, vi) in v {
            let row = self.row(i);
            for &(j, vj) in v {
                acc += vi * row[j] * vj;
            }
        }
        acc
    }

    /// Largest absolute entry of `M − Mᵀ`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: SquareMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(m: &SquareMatrix<T>) -> Result<Self> {
        let n = m.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix not positive definite at pivot {j} (d = {d})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `bᵀ M⁻¹ b` through the forward substitution only.
    pub fn inv_quad(&self, b: &[T]) -> T {
        let n = self.l.dim();
        let mut y = b.to_vec();
        let mut acc = T::zero();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
            acc += y[i] * y[i];
        }
        acc
    }

    pub fn log_det(&self) -> T {
        (0..self.l.dim()).map(|i| self.l[(i, i)].ln()).sum::<T>() * T::lit(2.0)
    }

    /// Explicit inverse; used to seed incremental updates.
    pub fn inverse(&self) -> SquareMatrix<T> {
        let n = self.l.dim();
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solves `M x = b` for a symmetric positive semidefinite `M` by pivoted
/// Cholesky, returning some solution when `b` lies in the range of `M`.
///
/// Pivots below `rank_tol · max diag` are treated as zero. Returns the
/// relative residual alongside the solution; callers decide what counts as
/// "outside the range".
pub fn psd_solve<T: Scalar>(m: &SquareMatrix<T>, b: &[T], rank_tol: T) -> (Vec<T>, T) {
    let n = m.dim();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = (0..n).map(|i| m[(i, i)]).fold(T::zero(), T::max);
    let mut rank = 0;
    // Outer-product form with symmetric pivoting; lower triangle holds L.
    for j in 0..n {
        let (p, piv) = (j..n)
            .map(|i| (i, a[(i, i)]))
            .fold((j, T::neg_infinity()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(piv > rank_tol * scale) || scale == T::zero() {
            break;
        }
        if p != j {
            perm.swap(j, p);
            for k in 0..n {
                let t = a[(j, k)];
                a[(j, k)] = a[(p, k)];
                a[(p, k)] = t;
            }
            for k in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(k, p)];
                a[(k, p)] = t;
            }
        }
        let d = a[(j, j)].sqrt();
        a[(j, j)] = d;
        for i in (j + 1)..n {
            a[(i, j)] /= d;
        }
        for i in (j + 1)..n {
            for k in (j + 1)..=i {
                let v = a[(i, k)] - a[(i, j)] * a[(k, j)];
                a[(i, k)] = v;
                a[(k, i)] = v;
            }
        }
        rank += 1;
    }
    // L11 L11ᵀ y = (Pᵀ b)[..rank], remaining coordinates zero.
    let pb: Vec<T> = perm.iter().map(|&i| b[i]).collect();
    let mut y = pb[..rank].to_vec();
    for i in 0..rank {
        let mut s = y[i];
        for k in 0..i {
            s -= a[(i, k)] * y[k];
        }
        y[i] = s / a[(i, i)];
    }
    for i in (0..rank).rev() {
        let mut s = y[i];
        for k in (i + 1)..rank {
            s -= a[(k, i)] * y[k];
        }
        y[i] = s / a[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for (k, &yi) in y.iter().enumerate() {
        x[perm[k]] = yi;
    }
    let r = m.mul_vec(&x);
    let resid = norm2(&r.iter().zip(b).map(|(&ri, &bi)| ri - bi).collect::<Vec<_>>());
    let bn = norm2(b);
    let rel = if bn > T::zero() { resid / bn } else { resid };
    (x, rel)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &SquareMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off <= T::epsilon() * T::epsilon() * (T::one() + a.max_abs() * a.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> SquareMatrix<f64> {
        // L = [[2,0,0],[1,3,0],[0.5,-1,1.5]], M = L Lᵀ
        let l = [[2.0, 0.0, 0.0], [1.0, 3.0, 0.0], [0.5, -1.0, 1.5]];
        let mut rows = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rows[i][j] = (0..3).map(|k| l[i][k] * l[j][k]).sum();
            }
        }
        SquareMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn cholesky_solves_and_inverts() {
        let m = spd3();
        let ch = Cholesky::factor(&m).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = ch.solve(&b);
        let r = m.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let inv = ch.inverse();
        let quad: f64 = (0..3).map(|i| b[i] * dot(inv.row(i), &b)).sum();
        assert!((ch.inv_quad(&b) - quad).abs() < 1e-12);
        // det = (2·3·1.5)² = 81
        assert!((ch.log_det() - 81f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(Cholesky::factor(&m).is_err());
    }

    #[test]
    fn psd_solve_handles_rank_deficiency() {
        // diag(2, 0, 1): b in range, then out of range
        let m = SquareMatrix::<f64>::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (x, rel) = psd_solve(&m, &[4.0, 0.0, 3.0], 1e-12);
        assert!(rel < 1e-14);
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[2] - 3.0).abs() < 1e-14);
        let (_, rel) = psd_solve(&m, &[0.0, 1.0, 0.0], 1e-12);
        assert!(rel > 0.5);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let m = SquareMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_helpers_agree_with_dense() {
        let m = spd3();
        let sv = [(0usize, 0.5), (2, -1.0)];
        let dv = [0.5, 0.0, -1.0];
        let a = m.mul_sparse(&sv);
        let b = m.mul_vec(&dv);
        assert_eq!(a, b);
        assert!((m.sparse_quad(&sv) - dot(&dv, &b)).abs() < 1e-14);
    }
}
