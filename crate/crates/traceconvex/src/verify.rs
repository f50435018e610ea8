//! Independent certificate checking: symbolic residual against the Hessian,
//! structural validation, and randomized matrix-evaluation oracles for
//! trace positivity and midpoint trace convexity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{evaluate_f64, trace_f64, NcPoly, H, X};
use crate::calculus;
use crate::certificate::{Certificate, Shape};
use crate::coeff::Mode;
use crate::linalg::{random_symmetric_with_spectrum, symmetric_eigen, SymMatrix};
use crate::scalar::{IntervalSpec, UniPoly};

/// A matrix (pair) at which a randomized check failed.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzWitness {
    pub n: usize,
    /// row-major symmetric matrix for the letter x
    pub x: Vec<f64>,
    /// direction matrix, when the check uses one
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    /// second point, for midpoint checks
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// the offending value
    pub value: f64,
}

/// Outcome of a verification or fuzzing run.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub symbolic_residual: f64,
    pub structural_ok: bool,
    pub trials_run: usize,
    pub trials_failed: usize,
    /// most negative observed trace value (0 when nothing was sampled)
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<FuzzWitness>,
    pub pass: bool,
}

impl VerificationReport {
    fn fuzz(trials_run: usize, trials_failed: usize, worst: f64, witness: Option<FuzzWitness>) -> Self {
        VerificationReport {
            symbolic_residual: 0.0,
            structural_ok: true,
            trials_run,
            trials_failed,
            worst_margin: worst,
            witness,
            pass: trials_failed == 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "pass:              {}", self.pass)?;
        writeln!(f, "symbolic residual: {:e}", self.symbolic_residual)?;
        writeln!(f, "structure ok:      {}", self.structural_ok)?;
        if self.trials_run > 0 {
            writeln!(
                f,
                "trials:            {} run, {} failed",
                self.trials_run, self.trials_failed
            )?;
            writeln!(f, "worst margin:      {:e}", self.worst_margin)?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "witness (n = {}): value {:e}", w.n, w.value)?;
        }
        Ok(())
    }
}

/// Interior margin for sampling: the domains are open.
fn domain_delta(interval: &IntervalSpec) -> f64 {
    match interval {
        IntervalSpec::Global => 0.0,
        IntervalSpec::Interval(a, b) => 0.05 * (b.to_f64() - a.to_f64()),
        _ => 0.05,
    }
}

/// Expansion of a certificate done here, independently of the construction
/// code, using only free-algebra primitives.
fn expand_for_verification(c: &Certificate) -> NcPoly {
    let mode = c.mode;
    let iv = c.interval.into_mode(mode);
    let x = NcPoly::letter(X, mode);
    let lin = |shift: &crate::coeff::Coeff| -> NcPoly {
        x.try_sub(&NcPoly::constant(shift.clone()))
            .expect("same mode")
    };
    let mut out = NcPoly::zero(mode);
    for t in &c.terms {
        let vstar = t.poly.involute();
        let piece = match t.shape {
            Shape::Q => &vstar * &t.poly,
            Shape::R => {
                let w = t.weight.expect("R carries a weight").poly(&iv, mode);
                &(&vstar * &w) * &t.poly
            }
            Shape::T | Shape::U => {
                let (a, b) = match &iv {
                    IntervalSpec::Interval(a, b) => (lin(a), lin(b).negate()),
                    _ => unreachable!("structure check rejects this earlier"),
                };
                match t.shape {
                    Shape::T => &(&(&vstar * &a) * &b) * &t.poly,
                    _ => &(&(&a * &vstar) * &b) * &t.poly,
                }
            }
        };
        out = out
            .try_add(&piece.scale(&t.mult.clone().into_mode(mode)))
            .expect("same mode");
    }
    out
}

fn structure_ok(c: &Certificate) -> bool {
    for t in &c.terms {
        if t.poly.is_zero() || !t.poly.is_homogeneous_in(H, 1) {
            return false;
        }
        if t.mult.is_negative() {
            return false;
        }
        match t.shape {
            Shape::Q => {
                if t.weight.is_some() {
                    return false;
                }
            }
            Shape::R => match t.weight {
                Some(w) if w.legal_for(&c.interval) => {}
                _ => return false,
            },
            Shape::T | Shape::U => {
                if t.weight.is_some() || !matches!(c.interval, IntervalSpec::Interval(_, _)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Check a certificate against p: symbolic residual of the cyclic canonical
/// form of expansion - hessian, plus structural validation.
pub fn verify_certificate(p: &UniPoly, c: &Certificate, tol: f64) -> VerificationReport {
    let structural_ok = structure_ok(c);
    let residual = if structural_ok {
        let hess = calculus::hessian(&p.to_ncpoly().into_mode(c.mode))
            .expect("hessian of an x-polynomial");
        expand_for_verification(c)
            .try_sub(&hess)
            .expect("same mode")
            .cyclic_canonical()
            .max_abs_coeff()
    } else {
        f64::INFINITY
    };
    VerificationReport {
        symbolic_residual: residual,
        structural_ok,
        trials_run: 0,
        trials_failed: 0,
        worst_margin: 0.0,
        witness: None,
        pass: structural_ok && residual <= tol,
    }
}

fn random_symmetric_uniform(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..=1.0);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

/// Tr p(M) by matrix Horner evaluation.
fn trace_poly_at(p: &UniPoly, m: &[f64], n: usize) -> f64 {
    let coeffs = p.to_f64_coeffs();
    let mut acc = vec![0.0; n * n];
    for c in coeffs.iter().rev() {
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for t in 0..n {
                    s += acc[i * n + t] * m[t * n + j];
                }
                next[i * n + j] = s;
            }
        }
        for i in 0..n {
            next[i * n + i] += c;
        }
        acc = next;
    }
    trace_f64(&acc, n)
}

/// Sample X in the shrunk domain and unconstrained symmetric H; check
/// Tr hessian(p)(X, H) >= -eps. A violation is recorded only when it
/// exceeds eps tenfold (hysteresis against borderline noise).
pub fn trace_positivity_fuzz(
    p: &UniPoly,
    interval: &IntervalSpec,
    n_max: usize,
    trials: usize,
    seed: u64,
    eps: f64,
) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = domain_delta(interval);
    let hess = calculus::hessian(&p.to_ncpoly().into_mode(Mode::Float))
        .expect("hessian of an x-polynomial");
    let mut failed = 0;
    let mut worst = 0.0f64;
    let mut witness = None;
    for _ in 0..trials {
        let n = rng.gen_range(1..=n_max.max(1));
        let xm = random_symmetric_with_spectrum(n, interval, delta, &mut rng);
        let hm = random_symmetric_uniform(n, &mut rng);
        let mut mats = BTreeMap::new();
        mats.insert(X, xm.data.clone());
        mats.insert(H, hm.clone());
        let val = trace_f64(&evaluate_f64(&hess, &mats, n), n);
        worst = worst.min(val);
        if val < -10.0 * eps {
            failed += 1;
            if witness.is_none() {
                witness = Some(FuzzWitness {
                    n,
                    x: xm.data,
                    h: Some(hm),
                    y: None,
                    value: val,
                });
            }
        }
    }
    VerificationReport::fuzz(trials, failed, worst, witness)
}

/// Sample pairs X, Y in the shrunk domain; check the midpoint inequality
/// (Tr p(X) + Tr p(Y))/2 - Tr p((X+Y)/2) >= -eps.
pub fn midpoint_convexity_fuzz(
    p: &UniPoly,
    interval: &IntervalSpec,
    n_max: usize,
    trials: usize,
    seed: u64,
    eps: f64,
) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = domain_delta(interval);
    let mut failed = 0;
    let mut worst = 0.0f64;
    let mut witness = None;
    for _ in 0..trials {
        let n = rng.gen_range(1..=n_max.max(1));
        let xm = random_symmetric_with_spectrum(n, interval, delta, &mut rng);
        let ym = random_symmetric_with_spectrum(n, interval, delta, &mut rng);
        let mid: Vec<f64> = xm
            .data
            .iter()
            .zip(ym.data.iter())
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        let gap = (trace_poly_at(p, &xm.data, n) + trace_poly_at(p, &ym.data, n)) / 2.0
            - trace_poly_at(p, &mid, n);
        worst = worst.min(gap);
        if gap < -10.0 * eps {
            failed += 1;
            if witness.is_none() {
                witness = Some(FuzzWitness {
                    n,
                    x: xm.data,
                    h: None,
                    y: Some(ym.data),
                    value: gap,
                });
            }
        }
    }
    VerificationReport::fuzz(trials, failed, worst, witness)
}

/// Search for X, H where the Hessian evaluation is trace-nonnegative but
/// has a negative eigenvalue: trace certificates are weaker than matrix
/// (Loewner) positivity.
pub fn matrix_nonconvexity_witness(
    p: &UniPoly,
    n: usize,
    trials: usize,
    seed: u64,
) -> Option<FuzzWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hess = calculus::hessian(&p.to_ncpoly().into_mode(Mode::Float))
        .expect("hessian of an x-polynomial");
    for _ in 0..trials {
        let xm = random_symmetric_uniform(n, &mut rng);
        let hm = random_symmetric_uniform(n, &mut rng);
        let mut mats = BTreeMap::new();
        mats.insert(X, xm.clone());
        mats.insert(H, hm.clone());
        let m = evaluate_f64(&hess, &mats, n);
        let tr = trace_f64(&m, n);
        if tr < -1e-8 {
            continue;
        }
        // symmetrize against float round-off before the eigensolve
        let mut sym = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                sym.data[i * n + j] = (m[i * n + j] + m[j * n + i]) / 2.0;
            }
        }
        let (vals, _) = symmetric_eigen(&sym);
        if vals[0] < -1e-6 {
            return Some(FuzzWitness {
                n,
                x: xm,
                h: Some(hm),
                y: None,
                value: vals[0],
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Word;
    use crate::certificate::{certify_global, certify_local, CertTerm};
    use crate::coeff::Coeff;
    use crate::scalar::parse_unipoly;

    fn h_poly(c: Coeff) -> NcPoly {
        NcPoly::monomial(c, Word(vec![H]))
    }

    #[test]
    fn verify_square_certificate() {
        let p = parse_unipoly("x^2").unwrap();
        let c = certify_global(&p, 1e-9).unwrap();
        let r = verify_certificate(&p, &c, 0.0);
        assert!(r.pass);
        assert_eq!(r.symbolic_residual, 0.0);
    }

    #[test]
    fn verify_catches_wrong_scale() {
        // {Q: h} expands to h^2, but hessian(x^2) = 2h^2
        let p = parse_unipoly("x^2").unwrap();
        let c = Certificate {
            interval: IntervalSpec::Global,
            mode: Mode::Exact,
            terms: vec![CertTerm {
                shape: Shape::Q,
                weight: None,
                mult: Coeff::one(Mode::Exact),
                poly: h_poly(Coeff::one(Mode::Exact)),
            }],
            clipped: 0.0,
        };
        let r = verify_certificate(&p, &c, 1e-12);
        assert!(!r.pass);
        assert_eq!(r.symbolic_residual, 1.0);
    }

    #[test]
    fn verify_flags_illegal_structure() {
        let p = parse_unipoly("x^2").unwrap();
        // kind R is illegal on the global domain
        let c = Certificate {
            interval: IntervalSpec::Global,
            mode: Mode::Exact,
            terms: vec![CertTerm {
                shape: Shape::R,
                weight: Some(crate::certificate::RWeight::XMinusA),
                mult: Coeff::one(Mode::Exact),
                poly: h_poly(Coeff::one(Mode::Exact)),
            }],
            clipped: 0.0,
        };
        let r = verify_certificate(&p, &c, 1e-9);
        assert!(!r.structural_ok && !r.pass);
    }

    #[test]
    fn trace_fuzz_examples() {
        let quartic = parse_unipoly("x^4").unwrap();
        let r = trace_positivity_fuzz(&quartic, &IntervalSpec::Global, 6, 1000, 1, 1e-8);
        assert_eq!(r.trials_failed, 0, "worst margin {:e}", r.worst_margin);

        let cube = parse_unipoly("x^3").unwrap();
        let r = trace_positivity_fuzz(&cube, &IntervalSpec::Global, 1, 100, 1, 1e-8);
        assert!(r.trials_failed > 0);
        assert!(r.witness.is_some());

        let ray = IntervalSpec::RayRight(Coeff::from_int(0, Mode::Exact));
        let r = trace_positivity_fuzz(&cube, &ray, 4, 500, 1, 1e-8);
        assert_eq!(r.trials_failed, 0, "worst margin {:e}", r.worst_margin);
    }

    #[test]
    fn midpoint_fuzz_examples() {
        let cube = parse_unipoly("x^3").unwrap();
        let r = midpoint_convexity_fuzz(&cube, &IntervalSpec::Global, 1, 100, 1, 1e-8);
        assert!(r.trials_failed > 0);
        let w = r.witness.unwrap();
        assert!(w.value < 0.0 && w.y.is_some());

        let quartic = parse_unipoly("x^4").unwrap();
        let r = midpoint_convexity_fuzz(&quartic, &IntervalSpec::Global, 8, 500, 1, 1e-8);
        assert_eq!(r.trials_failed, 0, "worst margin {:e}", r.worst_margin);
    }

    #[test]
    fn fuzz_is_deterministic() {
        let p = parse_unipoly("x^4 - 2*x^2").unwrap();
        let a = trace_positivity_fuzz(&p, &IntervalSpec::Global, 4, 50, 42, 1e-8);
        let b = trace_positivity_fuzz(&p, &IntervalSpec::Global, 4, 50, 42, 1e-8);
        assert_eq!(a.trials_failed, b.trials_failed);
        assert_eq!(a.worst_margin, b.worst_margin);
    }

    #[test]
    fn nonconvexity_witness_examples() {
        let quartic = parse_unipoly("x^4").unwrap();
        let w = matrix_nonconvexity_witness(&quartic, 2, 10_000, 1);
        let w = w.expect("x^4 is trace-convex but not matrix-convex");
        assert!(w.value < -1e-6);

        let square = parse_unipoly("x^2").unwrap();
        assert!(matrix_nonconvexity_witness(&square, 2, 100, 1).is_none());

        let cube = parse_unipoly("x^3").unwrap();
        assert!(matrix_nonconvexity_witness(&cube, 1, 10, 1).is_none());
    }

    #[test]
    fn verify_local_certificate() {
        let p = parse_unipoly("x^3").unwrap();
        let iv = IntervalSpec::RayRight(Coeff::from_int(0, Mode::Exact));
        let c = certify_local(&p, &iv, 1e-9).unwrap();
        let r = verify_certificate(&p, &c, 0.0);
        assert!(r.pass, "residual {:e}", r.symbolic_residual);
    }
}
