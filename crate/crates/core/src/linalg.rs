//! Small dense linear algebra for desk-scale constraint systems: a
//! rank-revealing elimination for nullspace extraction and a modified
//! Gram-Schmidt row-space basis for orthogonal projection.

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub(crate) struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Nullspace basis by Gauss-Jordan elimination with full pivoting.  A pivot
/// candidate below `rel_tol` times the largest pivot seen so far terminates
/// the elimination; the remaining columns are free.  Returned vectors span
/// the kernel exactly for the reduced system (one vector per free column,
/// unpermuted back to the original column order).
pub(crate) fn nullspace(a: &DenseMatrix, rel_tol: f64) -> Vec<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut max_pivot = 0.0f64;
    let mut rank = 0;

    for k in 0..m.min(n) {
        let mut best = (k, k, 0.0f64);
        for r in k..m {
            for c in k..n {
                let v = w.at(r, c).abs();
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        let (pr, pc, pv) = best;
        if pv <= rel_tol * max_pivot || pv == 0.0 {
            break;
        }
        max_pivot = max_pivot.max(pv);
        // Swap pivot into place.
        if pr != k {
            for c in 0..n {
                let (lo, hi) = (k.min(pr), k.max(pr));
                w.data.swap(lo * n + c, hi * n + c);
            }
        }
        if pc != k {
            for r in 0..m {
                w.data.swap(r * n + k, r * n + pc);
            }
            col_perm.swap(k, pc);
        }
        let pivot = w.at(k, k);
        for c in k..n {
            *w.at_mut(k, c) /= pivot;
        }
        for r in 0..m {
            if r != k {
                let factor = w.at(r, k);
                if factor != 0.0 {
                    for c in k..n {
                        let sub = factor * w.at(k, c);
                        *w.at_mut(r, c) -= sub;
                    }
                }
            }
        }
        rank = k + 1;
    }

    // In reduced form, row r reads x'_r + sum_{f >= rank} w[r][f] x'_f = 0.
    let mut basis = Vec::with_capacity(n - rank);
    for f in rank..n {
        let mut v = vec![0.0; n];
        v[col_perm[f]] = 1.0;
        for r in 0..rank {
            v[col_perm[r]] = -w.at(r, f);
        }
        basis.push(v);
    }
    basis
}

/// Orthonormal basis of the row space of `a` via modified Gram-Schmidt with
/// reorthogonalization.  Rows whose residual drops below `rel_tol` times the
/// largest original row norm are treated as dependent and dropped.
pub(crate) fn orthonormal_rows(a: &DenseMatrix, rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = (0..a.rows)
        .map(|r| norm2(a.row(r)))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return basis;
    }
    for r in 0..a.rows {
        let mut v = a.row(r).to_vec();
        for _ in 0..2 {
            for q in &basis {
                let d = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
        }
        let nv = norm2(&v);
        if nv > rel_tol * scale {
            for vi in &mut v {
                *vi /= nv;
            }
            basis.push(v);
        }
    }
    basis
}

/// Subtract from `v` its projection onto the span of an orthonormal basis
/// (two passes, so the result is orthogonal to the span to roundoff).
pub(crate) fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for q in basis {
            let d = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= d * qi;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn matvec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
        (0..a.rows).map(|r| dot(a.row(r), x)).collect()
    }

    #[test]
    fn zero_matrix_has_full_nullspace() {
        let a = DenseMatrix::zeros(3, 4);
        let basis = nullspace(&a, 1e-10);
        assert_eq!(basis.len(), 4);
        // Spans the identity.
        for (i, v) in basis.iter().enumerate() {
            assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
            assert_eq!(v[i], 1.0);
        }
    }

    #[test]
    fn rank_one_system() {
        // x + y + z = 0 twice: rank 1, nullspace dimension 2.
        let mut a = DenseMatrix::zeros(2, 3);
        for c in 0..3 {
            *a.at_mut(0, c) = 1.0;
            *a.at_mut(1, c) = 1.0;
        }
        let basis = nullspace(&a, 1e-10);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            for r in matvec(&a, v) {
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_kernel_vectors_annihilate() {
        let mut rng = SplitMix64::new(1);
        for _ in 0..20 {
            let (m, n) = (4, 6);
            let mut a = DenseMatrix::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    *a.at_mut(r, c) = rng.next_normal();
                }
            }
            let basis = nullspace(&a, 1e-10);
            assert_eq!(basis.len(), n - 4); // random 4x6 has full row rank
            for v in &basis {
                for r in matvec(&a, v) {
                    assert!(r.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn projection_is_orthogonal_to_rowspace() {
        let mut rng = SplitMix64::new(2);
        let (m, n) = (3, 8);
        let mut a = DenseMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                *a.at_mut(r, c) = rng.next_normal();
            }
        }
        let q = orthonormal_rows(&a, 1e-12);
        assert_eq!(q.len(), 3);
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        project_out(&q, &mut v);
        for r in matvec(&a, &v) {
            assert!(r.abs() < 1e-12);
        }
    }
}
