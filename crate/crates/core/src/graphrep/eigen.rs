//! Symmetric eigenvalue routines: Householder reduction to tridiagonal form
//! followed by implicit-shift QL, and a Lanczos fallback for large operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GraphError;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// All eigenvalues of a symmetric matrix, ascending. Only the lower
/// triangle is read.
pub fn symmetric_eigenvalues(matrix: &DenseMatrix) -> Result<Vec<f64>, GraphError> {
    let n = matrix.size();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.data.clone();
    for i in 0..n {
        for j in 0..i {
            a[j * n + i] = a[i * n + j];
        }
    }
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Householder reduction of the symmetric matrix `a` (row-major, full
/// storage, destroyed). Returns the diagonal and the sub-diagonal (`e[i]`
/// couples `i-1` and `i`, `e[0] = 0`). Works on whole rows so the inner
/// loops stay contiguous.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let s = n - k - 1;
        let lo = k + 1;
        d[k] = a[k * n + k];
        let x = &a[k * n + lo..k * n + n];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            e[lo] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[..s].copy_from_slice(x);
        v[0] -= alpha;
        let vv = dot(&v[..s], &v[..s]);
        e[lo] = alpha;
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;
        for r in 0..s {
            let row = (lo + r) * n;
            p[r] = beta * dot(&a[row + lo..row + n], &v[..s]);
        }
        let kk = 0.5 * beta * dot(&p[..s], &v[..s]);
        for r in 0..s {
            p[r] -= kk * v[r];
        }
        for r in 0..s {
            let row = (lo + r) * n;
            let (vr, pr) = (v[r], p[r]);
            for (c, x) in a[row + lo..row + n].iter_mut().enumerate() {
                *x -= vr * p[c] + pr * v[c];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 1] = a[(n - 2) * n + n - 1];
    }
    d[n - 1] = a[(n - 1) * n + n - 1];
    (d, e)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// On return `d` holds the eigenvalues (unsorted).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<(), GraphError> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(GraphError::EigenNonConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Ritz values of a symmetric operator after `k` Lanczos steps with full
/// reorthogonalization, ascending. The extremal ones converge first.
pub fn lanczos_ritz_values(
    n: usize,
    k: usize,
    seed: u64,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Result<Vec<f64>, GraphError> {
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut alpha = Vec::with_capacity(k);
    let mut beta: Vec<f64> = Vec::with_capacity(k);
    let mut w = vec![0.0; n];
    for _ in 0..k {
        apply(&q, &mut w);
        let a = dot(&q, &w);
        alpha.push(a);
        basis.push(q.clone());
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm < 1e-12 {
            break;
        }
        beta.push(norm);
        q = w.iter().map(|x| x / norm).collect();
    }
    let steps = alpha.len();
    let mut d = alpha;
    let mut e = vec![0.0; steps];
    e[1..steps].copy_from_slice(&beta[..steps - 1]);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    fn oracle(m: &DenseMatrix) -> Vec<f64> {
        let n = m.size();
        let a = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn matches_independent_solver() {
        for (n, seed) in [(1, 0), (2, 1), (3, 2), (7, 3), (40, 4), (101, 5)] {
            let m = random_symmetric(n, seed);
            let ours = symmetric_eigenvalues(&m).unwrap();
            let theirs = oracle(&m);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn diagonal_and_repeated() {
        let mut m = DenseMatrix::zeros(4);
        for (i, v) in [3.0, 1.0, 1.0, -2.0].into_iter().enumerate() {
            m.set(i, i, v);
        }
        assert_eq!(symmetric_eigenvalues(&m).unwrap(), vec![-2.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn lanczos_finds_extremes() {
        let n = 200;
        let m = random_symmetric(n, 9);
        let exact = oracle(&m);
        let ritz = lanczos_ritz_values(n, 200, 1, |x, y| {
            for i in 0..n {
                y[i] = dot(m.row(i), x);
            }
        })
        .unwrap();
        assert!((ritz[0] - exact[0]).abs() < 1e-8);
        assert!((ritz[ritz.len() - 1] - exact[n - 1]).abs() < 1e-8);
        let partial = lanczos_ritz_values(n, 64, 1, |x, y| {
            for i in 0..n {
                y[i] = dot(m.row(i), x);
            }
        })
        .unwrap();
        assert_eq!(partial.len(), 64);
        assert!((partial[63] - exact[n - 1]).abs() < 1e-2);
    }
}
