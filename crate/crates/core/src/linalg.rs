//! Small dense and banded linear algebra used by the solvers.
//!
//! Everything here works on plain slices so the core stays allocation-light and
//! free of external matrix crates.

// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square matrix with equal lower and upper bandwidth, stored row by row as
/// `2 * bandwidth + 1` diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (2 * bandwidth + 1)],
        }
    }

    pub fn identity(n: usize, bandwidth: usize) -> Self {
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            *m.get_mut(i, i) = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let s = self.slot(i, j);
        &mut self.data[s]
    }

    /// y = A x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// In-place LU factorization without pivoting.
    ///
    /// Only valid for matrices where elimination without pivoting is stable,
    /// e.g. column diagonally dominant M-matrices. For those, every factor
    /// keeps nonpositive off-diagonals, so substitution with a nonnegative
    /// right-hand side never produces a negative entry.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !(pivot.abs() > 0.0) || !pivot.is_finite() {
                return Err(Error::LinearSolver {
                    iterations: k,
                    residual: f64::NAN,
                });
            }
            let hi = (k + bw).min(n - 1);
            for i in k + 1..=hi {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=hi {
                    let ukj = self.data[self.slot(k, j)];
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * ukj;
                }
            }
        }
        Ok(BandLu { lu: self })
    }
}

/// Factorized band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = &self.lu;
        let n = m.n;
        for i in 0..n {
            let lo = i.saturating_sub(m.bw);
            let mut acc = x[i];
            for j in lo..i {
                acc -= m.data[m.slot(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + m.bw).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=hi {
                acc -= m.data[m.slot(i, j)] * x[j];
            }
            x[i] = acc / m.data[m.slot(i, i)];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// (semi)definite operator.
///
/// With `zero_mean` set the iteration is confined to the mean-zero subspace,
/// which is how singular Neumann problems are handled. `tol` bounds the
/// Euclidean residual norm scaled by `sqrt(weight)`, i.e. the discrete L2
/// norm when `weight` is the cell volume.
#[allow(clippy::too_many_arguments)]
pub fn conjugate_gradient<A>(
    apply: A,
    diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    zero_mean: bool,
    weight: f64,
) -> Result<(Vec<f64>, IterStats)>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let scale = weight.sqrt();
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if zero_mean {
        remove_mean(&mut x);
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if zero_mean {
        remove_mean(&mut r);
    }
    let mut res = norm2(&r) * scale;
    if res <= tol {
        return Ok((x, IterStats { iterations: 0, residual: res }));
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(diag) {
            *zi = if *di != 0.0 { ri / di } else { *ri };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if zero_mean {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if zero_mean {
            remove_mean(&mut r);
        }
        res = norm2(&r) * scale;
        if res <= tol {
            // confirm against the true residual; recursion drift is possible
            apply(&x, &mut ax);
            let mut true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if zero_mean {
                remove_mean(&mut true_r);
            }
            let true_res = norm2(&true_r) * scale;
            if true_res <= tol {
                if zero_mean {
                    remove_mean(&mut x);
                }
                return Ok((
                    x,
                    IterStats {
                        iterations: it,
                        residual: true_res,
                    },
                ));
            }
            r = true_r;
            res = true_res;
        }
        precond(&r, &mut z);
        if zero_mean {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver {
        iterations: max_iter,
        residual: res,
    })
}

/// Solves the symmetric positive definite system `a x = b` (row-major `n x n`)
/// by Cholesky factorization. Returns `None` when a pivot is not positive.
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Some(y)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(a: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in a {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn remove_mean(a: &mut [f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    for v in a.iter_mut() {
        *v -= mean;
    }
    mean
}

/// Operator 2-norm of a 2x2 matrix (largest singular value).
pub fn op_norm2(m: &[[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = *m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}
