//! Small dense-vector helpers and the operator abstraction used by the solvers.

use alloc::vec::Vec;

/// A real symmetric operator that can be applied to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators keep the reduction order fixed and vectorizable
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

/// `<x|A|x>`.
pub fn quadratic_form<A: LinearOperator + ?Sized>(op: &A, x: &[f64]) -> f64 {
    let mut y = alloc::vec![0.0; x.len()];
    op.apply(x, &mut y);
    dot(x, &y)
}

/// Two passes of classical Gram–Schmidt against `basis` (assumed orthonormal).
pub fn orthogonalize<'a, I>(x: &mut [f64], basis: I)
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    for _ in 0..2 {
        for b in basis.clone() {
            let c = dot(b, x);
            axpy(-c, b, x);
        }
    }
}

/// Largest eigenvalue of a dense symmetric row-major matrix.
pub fn largest_symmetric_eigenvalue(n: usize, data: &[f64]) -> f64 {
    symmetric_eigenvalues(n, data)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues (ascending) of a dense symmetric row-major matrix.
pub fn symmetric_eigenvalues(n: usize, data: &[f64]) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let (d, _) = tridiagonal_eigen(n, data, false);
    d
}

/// Eigen-decomposition of a dense symmetric row-major matrix: ascending
/// eigenvalues and the matching eigenvectors, vector `j` stored
/// contiguously at `[j*n..(j+1)*n]`.
pub fn symmetric_eigen(n: usize, data: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let (d, v) = tridiagonal_eigen(n, data, true);
    (d, v.expect("vectors requested"))
}

// Householder reduction to tridiagonal form, then implicit QL with
// Wilkinson shifts (the EISPACK tql2 scheme). nalgebra's own symmetric QR
// iteration occasionally returns eigenvectors with residuals far above
// roundoff on the sparse model matrices, so only its reduction is used.
fn tridiagonal_eigen(n: usize, data: &[f64], vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    assert_eq!(data.len(), n * n);
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (data[i * n + j] + data[j * n + i]));
    let (mut d, off, mut q) = if n == 1 {
        (alloc::vec![m[(0, 0)]], Vec::new(), alloc::vec![1.0])
    } else {
        let (q, diag, off) = nalgebra::SymmetricTridiagonal::new(m).unpack();
        let q: Vec<f64> = if vectors { q.as_slice().to_vec() } else { Vec::new() };
        (diag.iter().copied().collect(), off.iter().copied().collect::<Vec<f64>>(), q)
    };
    let mut e = alloc::vec![0.0; n];
    e[..n - 1].copy_from_slice(&off);
    tql2(&mut d, &mut e, if vectors { Some(&mut q) } else { None });

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vecs = vectors.then(|| {
        let mut out = Vec::with_capacity(n * n);
        for &c in &order {
            out.extend_from_slice(&q[c * n..(c + 1) * n]);
        }
        out
    });
    (values, vecs)
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[0..n-1]`. Rotations are accumulated into the column-major
/// matrix `v`.
fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut Vec<f64>>) {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in d.iter_mut().skip(l + 2) {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (a, b) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut a[i * n..];
                        let col_j = &mut b[..n];
                        for k in 0..n {
                            let h = col_j[k];
                            col_j[k] = s * col_i[k] + c * h;
                            col_i[k] = c * col_i[k] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn check(n: usize, a: &[f64]) {
        let (vals, vecs) = symmetric_eigen(n, a);
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for j in 0..n {
            let v = &vecs[j * n..(j + 1) * n];
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * v[k]).sum();
                assert!((av - vals[j] * v[i]).abs() < 1e-12 * scale * n as f64);
            }
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_cases() {
        check(1, &[3.0]);
        check(2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, _) = symmetric_eigen(2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((vals[0] - 1.0).abs() < 1e-15 && (vals[1] - 3.0).abs() < 1e-15);
        check(3, &[0.0; 9]);
    }

    #[test]
    fn sparse_patterned_matrices() {
        // block structure with exact zeros and repeated entries
        for n in [5usize, 17, 40] {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                a[i * n + i] = (i % 3) as f64;
                if i + 3 < n {
                    a[i * n + i + 3] = 1.0;
                    a[(i + 3) * n + i] = 1.0;
                }
                if i % 4 == 0 && i + 1 < n {
                    a[i * n + i + 1] = -0.5;
                    a[(i + 1) * n + i] = -0.5;
                }
            }
            check(n, &a);
        }
    }
}
