//! Float root extraction: Aberth-Ehrlich simultaneous iteration, cluster
//! detection for multiple roots, and Newton refinement of cluster centers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERS: usize = 400;
const RESTARTS: usize = 6;
/// Fixed seed for the initial-guess jitter: results are reproducible.
const ABERTH_SEED: u64 = 0x5eed_ab34;

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + Complex64::new(c, 0.0);
    }
    (p, dp)
}

/// All complex roots of the polynomial with ascending real coefficients.
/// The constant and leading coefficients must be nonzero (strip zero roots
/// and trailing zeros before calling).
pub fn aberth_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    if n == 1 {
        return Ok(vec![Complex64::new(-monic[0], 0.0)]);
    }
    let radius = 1.0
        + monic[..n]
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(ABERTH_SEED);

    for restart in 0..RESTARTS {
        let jitter = restart as f64 * 0.17;
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / n as f64
                    + jitter
                    + if restart > 0 { rng.gen_range(-0.1..0.1) } else { 0.0 };
                let r = radius * (0.6 + 0.4 * ((k % 3) as f64) / 3.0);
                Complex64::from_polar(r, angle)
            })
            .collect();

        let mut converged = false;
        for _ in 0..MAX_ITERS {
            let mut max_step = 0.0f64;
            // backward-error test: multiple roots never satisfy a step
            // criterion, but their residual relative to the coefficient
            // magnitude at |z| reaches machine level
            let mut residual_ok = true;
            for i in 0..n {
                let (p, dp) = horner(&monic, z[i]);
                let zb = z[i].norm();
                let mut bound = 0.0;
                let mut pw = 1.0;
                for &c in &monic {
                    bound += c.abs() * pw;
                    pw *= zb;
                }
                if p.norm() > 1e-13 * bound.max(1.0) {
                    residual_ok = false;
                }
                if p.norm() == 0.0 {
                    continue;
                }
                let newton = if dp.norm() == 0.0 {
                    // nudge off a stationary point
                    Complex64::new(1e-8, 1e-8)
                } else {
                    p / dp
                };
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.norm() > 1e-300 {
                            s += d.inv();
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - newton * s;
                let step = if denom.norm() < 1e-300 {
                    newton
                } else {
                    newton / denom
                };
                z[i] -= step;
                let rel = step.norm() / (1.0 + z[i].norm());
                max_step = max_step.max(rel);
            }
            if max_step < 1e-14 || residual_ok {
                converged = true;
                break;
            }
        }
        if converged {
            return Ok(z);
        }
    }
    Err(Error::Numerical(
        "root iteration did not converge".into(),
    ))
}

/// A cluster of nearby computed roots, interpreted as one root with
/// multiplicity equal to the cluster size.
#[derive(Debug, Clone)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Cluster radius for a multiplicity-m root on a monic-normalized input:
/// a simple root is accurate to machine precision, an m-fold root only to
/// about eps^(1/m).
fn cluster_radius(m: usize, scale: f64) -> f64 {
    let base: f64 = 1e-15;
    (1e-6f64).max(8.0 * base.powf(1.0 / m as f64)) * scale
}

/// Agglomerative clustering with multiplicity-scaled radii. Members of an
/// m-fold root scatter like eps^(1/m), so the merge radius must assume the
/// final multiplicity; passes with increasing hypothesis m bootstrap this.
/// `max_mult` caps the hypothesis: large radii also swallow genuinely
/// distinct roots, so the caller raises the cap only while the factored
/// form fails to reproduce the input.
pub fn cluster_roots(roots: &[Complex64], max_mult: usize) -> Vec<RootCluster> {
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut clusters: Vec<(Complex64, Vec<Complex64>)> =
        roots.iter().map(|&z| (z, vec![z])).collect();
    for m in 2..=max_mult.max(1) {
        loop {
            let mut merged = false;
            'outer: for i in 0..clusters.len() {
                for j in (i + 1)..clusters.len() {
                    let size = clusters[i].1.len() + clusters[j].1.len();
                    if size <= m
                        && (clusters[i].0 - clusters[j].0).norm() < cluster_radius(m, scale)
                    {
                        let (_, pts_j) = clusters.remove(j);
                        clusters[i].1.extend(pts_j);
                        let sum: Complex64 = clusters[i].1.iter().sum();
                        clusters[i].0 = sum / clusters[i].1.len() as f64;
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
    }
    clusters
        .into_iter()
        .map(|(center, pts)| RootCluster {
            center,
            multiplicity: pts.len(),
        })
        .collect()
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c)
        .collect()
}

/// Newton-refine a multiplicity-m cluster center: an m-fold root of p is a
/// simple root of the (m-1)-th derivative.
pub fn refine_cluster(coeffs: &[f64], cluster: &RootCluster) -> Complex64 {
    let mut d = coeffs.to_vec();
    for _ in 1..cluster.multiplicity {
        d = derivative(&d);
    }
    let mut z = cluster.center;
    for _ in 0..50 {
        let (p, dp) = horner(&d, z);
        if dp.norm() < 1e-300 {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    // only accept the refinement if it stayed near the cluster
    let scale = 1.0 + cluster.center.norm();
    if (z - cluster.center).norm() < cluster_radius(cluster.multiplicity, scale) * 4.0 {
        z
    } else {
        cluster.center
    }
}
