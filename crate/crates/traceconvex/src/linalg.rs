//! Small dense symmetric linear algebra: cyclic Jacobi eigendecomposition,
//! PSD square-root factors (float), exact LDL^T factorization of rational
//! Gram matrices, and random symmetric matrices with a prescribed spectrum.

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::scalar::IntervalSpec;

/// Default relative tolerance for PSD checks and eigenvalue clipping.
pub const PSD_TOL: f64 = 1e-9;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = SymMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "square matrix required");
            for (j, &v) in row.iter().enumerate() {
                m.data[i * n + j] = v;
            }
        }
        for i in 0..n {
            for j in 0..i {
                let a = m.data[i * n + j];
                let b = m.data[j * n + i];
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())),
                    "matrix is not symmetric"
                );
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns eigenvalues ascending and the matrix Q whose ROWS are the
/// matching eigenvectors, so M = Q^T diag(lambda) Q.
pub fn symmetric_eigen(m: &SymMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.n;
    let mut a = m.data.clone();
    // v accumulates the rotations; rows end up as eigenvectors
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[idx(i, j)].abs());
            }
        }
        let scale = (0..n).map(|i| a[idx(i, i)].abs()).fold(1.0, f64::max);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vpk = v[idx(p, k)];
                    let vqk = v[idx(q, k)];
                    v[idx(p, k)] = c * vpk - s * vqk;
                    v[idx(q, k)] = s * vpk + c * vqk;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|i| (a[idx(i, i)], (0..n).map(|k| v[idx(i, k)]).collect()))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let eigvals = pairs.iter().map(|(l, _)| *l).collect();
    let eigvecs = pairs.into_iter().map(|(_, r)| r).collect();
    (eigvals, eigvecs)
}

/// Result of a float PSD factorization M ~= R^T R.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    /// rows scaled by sqrt(eigenvalue); M = sum of r_i^T r_i
    pub rows: Vec<Vec<f64>>,
    /// most negative eigenvalue that was clipped to zero (0 if none)
    pub clipped: f64,
}

/// Factor a PSD matrix as R^T R, clipping slightly negative eigenvalues.
/// Eigenvalues below -tol * scale yield Error::NotPsd.
pub fn psd_factor(m: &SymMatrix, tol: f64) -> Result<PsdFactor> {
    let (vals, vecs) = symmetric_eigen(m);
    let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut rows = Vec::new();
    let mut clipped = 0.0f64;
    for (l, vec) in vals.iter().zip(vecs.iter()) {
        if *l < -tol * scale {
            return Err(Error::NotPsd(*l));
        }
        if *l <= 0.0 {
            clipped = clipped.min(*l);
            continue;
        }
        let s = l.sqrt();
        rows.push(vec.iter().map(|v| v * s).collect());
    }
    Ok(PsdFactor { rows, clipped })
}

/// Exact factorization of a symmetric rational PSD matrix as a sum
/// d_i v_i v_i^T with d_i > 0 rational, via LDL^T with diagonal pivoting.
/// Returns Error::NotPsd when a pivot is negative or a zero diagonal sits
/// on a nonzero row.
pub fn rational_ldl(m: &[Vec<BigRational>]) -> Result<Vec<(BigRational, Vec<BigRational>)>> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::Input("LDL input must be square".into()));
        }
    }
    let mut a = m.to_vec();
    let mut out: Vec<(BigRational, Vec<BigRational>)> = Vec::new();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        use num_traits::ToPrimitive;
        // pick the largest remaining diagonal as pivot
        let pivot = *active
            .iter()
            .max_by(|&&i, &&j| a[i][i].cmp(&a[j][j]))
            .unwrap();
        let d = a[pivot][pivot].clone();
        if d < BigRational::zero() {
            return Err(Error::NotPsd(d.to_f64().unwrap_or(-1.0)));
        }
        if d.is_zero() {
            // every remaining entry in the pivot row must vanish
            for &j in &active {
                if !a[pivot][j].is_zero() {
                    return Err(Error::NotPsd(-a[pivot][j].to_f64().unwrap_or(1.0).abs()));
                }
            }
            active.retain(|&i| i != pivot);
            continue;
        }
        let mut v = vec![BigRational::zero(); n];
        for &j in &active {
            v[j] = &a[pivot][j] / &d;
        }
        // rank-one update a -= d v v^T on the active block
        for &i in &active {
            for &j in &active {
                let delta = &d * &v[i] * &v[j];
                a[i][j] = &a[i][j] - delta;
            }
        }
        out.push((d, v));
        active.retain(|&i| i != pivot);
    }
    Ok(out)
}

/// Random n x n symmetric matrix with eigenvalues drawn uniformly from the
/// delta-shrunk domain (clamped to radius 10 on unbounded sides), conjugated
/// by a random orthogonal matrix.
pub fn random_symmetric_with_spectrum(
    n: usize,
    interval: &IntervalSpec,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> SymMatrix {
    let (lo, hi) = match interval {
        IntervalSpec::Global => (-10.0, 10.0),
        IntervalSpec::Interval(a, b) => (a.to_f64() + delta, b.to_f64() - delta),
        IntervalSpec::RayRight(b) => (b.to_f64() + delta, b.to_f64() + 10.0),
        IntervalSpec::RayLeft(a) => (a.to_f64() - 10.0, a.to_f64() - delta),
    };
    let eigs: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    let q = random_orthogonal(n, rng);
    // M = Q^T diag(eigs) Q
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += q[k][i] * eigs[k] * q[k][j];
            }
            m.set(i, j, s);
        }
    }
    m
}

/// Haar-ish random orthogonal matrix: QR of a gaussian matrix by
/// Gram-Schmidt with sign fixing. Rows are orthonormal.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    loop {
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| gaussian(rng)).collect())
            .collect();
        let mut ok = true;
        for i in 0..n {
            for k in 0..i {
                let dot: f64 = (0..n).map(|j| rows[i][j] * rows[k][j]).sum();
                for j in 0..n {
                    rows[i][j] -= dot * rows[k][j];
                }
            }
            let norm: f64 = (0..n).map(|j| rows[i][j] * rows[i][j]).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for j in 0..n {
                rows[i][j] /= norm;
            }
        }
        if ok {
            return rows;
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Convert a rational Gram matrix given as Coeff entries.
pub fn coeff_matrix_to_rational(m: &[Vec<Coeff>]) -> Vec<Vec<BigRational>> {
    m.iter()
        .map(|row| row.iter().map(|c| c.as_rat().clone()).collect())
        .collect()
}
