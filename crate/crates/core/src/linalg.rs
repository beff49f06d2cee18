//! Dense kernels for small partial regressions.
//!
//! A sub-design is passed around as a slice of column slices; the intercept
//! column of ones is implicit and always occupies coefficient slot 0.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Column `j` of a column-major matrix as a contiguous slice.
#[inline]
pub fn column(x: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = x.nrows();
    &x.as_slice()[j * n..(j + 1) * n]
}

pub fn columns<'a>(x: &'a DMatrix<f64>, subset: &[usize]) -> Vec<&'a [f64]> {
    subset.iter().map(|&j| column(x, j)).collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators; the summation order is fixed so results are reproducible
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

#[inline]
pub fn sum(a: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] += a[i];
        s[1] += a[i + 1];
        s[2] += a[i + 2];
        s[3] += a[i + 3];
    }
    let mut tail = 0.0;
    for &v in &a[4 * chunks..] {
        tail += v;
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// `eta = beta_0 + sum_k beta_{k+1} * cols[k]`.
pub fn linear_predictor(beta: &[f64], cols: &[&[f64]], n: usize, eta: &mut Vec<f64>) {
    debug_assert_eq!(beta.len(), cols.len() + 1);
    eta.clear();
    eta.resize(n, beta[0]);
    for (c, &b) in cols.iter().zip(&beta[1..]) {
        if b != 0.0 {
            for (e, &x) in eta.iter_mut().zip(c.iter()) {
                *e += b * x;
            }
        }
    }
}

/// `n^{-1} Xbar^T r`.
pub fn cross(cols: &[&[f64]], r: &[f64]) -> Vec<f64> {
    let n = r.len() as f64;
    let mut g = Vec::with_capacity(cols.len() + 1);
    g.push(sum(r) / n);
    for c in cols {
        g.push(dot(c, r) / n);
    }
    g
}

/// `n^{-1} Xbar^T diag(w) Xbar`.
pub fn weighted_gram(cols: &[&[f64]], w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let k = cols.len() + 1;
    let nf = n as f64;
    let mut g = DMatrix::zeros(k, k);
    let mut wa = vec![0.0; n];
    g[(0, 0)] = sum(w) / nf;
    for b in 0..cols.len() {
        let v = dot(w, cols[b]) / nf;
        g[(0, b + 1)] = v;
        g[(b + 1, 0)] = v;
    }
    for a in 0..cols.len() {
        for (t, (&wi, &xi)) in wa.iter_mut().zip(w.iter().zip(cols[a].iter())) {
            *t = wi * xi;
        }
        for b in a..cols.len() {
            let v = dot(&wa, cols[b]) / nf;
            g[(a + 1, b + 1)] = v;
            g[(b + 1, a + 1)] = v;
        }
    }
    g
}

/// Cholesky factorization that also rejects numerically singular matrices:
/// every squared pivot must exceed `rel_tol` times the matching diagonal entry.
pub fn cholesky(h: DMatrix<f64>, rel_tol: f64) -> Option<Cholesky<f64, Dyn>> {
    let diag: Vec<f64> = h.diagonal().iter().copied().collect();
    if diag.iter().any(|d| !d.is_finite() || *d <= 0.0) {
        return None;
    }
    let chol = Cholesky::new(h)?;
    let l = chol.l_dirty();
    for (i, d) in diag.iter().enumerate() {
        let piv = l[(i, i)];
        if !(piv * piv > rel_tol * d) {
            return None;
        }
    }
    Some(chol)
}

pub fn solve(chol: &Cholesky<f64, Dyn>, rhs: &[f64]) -> Vec<f64> {
    let v = DVector::from_column_slice(rhs);
    chol.solve(&v).as_slice().to_vec()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_naive() {
        let c1 = [1.0, 2.0, -1.0, 0.5, 3.0];
        let c2 = [0.0, 1.0, 1.0, -2.0, 1.0];
        let w = [1.0, 0.5, 2.0, 1.0, 0.25];
        let g = weighted_gram(&[&c1, &c2], &w);
        let rows: Vec<[f64; 3]> = (0..5).map(|i| [1.0, c1[i], c2[i]]).collect();
        for a in 0..3 {
            for b in 0..3 {
                let naive: f64 = (0..5).map(|i| w[i] * rows[i][a] * rows[i][b]).sum::<f64>() / 5.0;
                assert!((g[(a, b)] - naive).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_collinear() {
        let c = [1.0, 2.0, 3.0, 4.0];
        let g = weighted_gram(&[&c, &c], &[1.0; 4]);
        assert!(cholesky(g, 1e-12).is_none());
        let d = [0.3, -1.0, 2.0, 0.0];
        let g = weighted_gram(&[&c, &d], &[1.0; 4]);
        assert!(cholesky(g, 1e-12).is_some());
    }

    #[test]
    fn dot_and_sum_handle_tails() {
        let a: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert_eq!(sum(&a), 21.0);
        assert_eq!(dot(&a, &a), 91.0);
    }
}
