//! Certificate construction: Hankel moment matrices H_l, their block
//! expansions C_l, the W vector of f_s polynomials, the Gram identity that
//! rewrites a symmetrized product as a W-quadratic form, and the assembly
//! of global and interval certificates from a positivity decomposition.

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::algebra::{Letter, NcPoly, H};
use crate::calculus;
use crate::coeff::{Coeff, Mode};
use crate::error::{Error, Result};
use crate::linalg::{psd_factor, rational_ldl, SymMatrix, PSD_TOL};
use crate::scalar::{
    decompose_on, second_derivative, IntervalSpec, PositivityDecomposition, UniPoly, Weight,
};

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn binomial_big(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
    }
    num / factorial(k)
}

fn binomial(n: usize, k: usize) -> usize {
    binomial_big(n, k).to_usize().expect("small binomial")
}

/// The (d+1)x(d+1) Hankel matrix H_l with entries
/// 1/((2d+k+1) * l! * (k-l)!) * 1/C(2d+k, l+r+s).
#[derive(Debug, Clone)]
pub struct HankelH {
    pub d: usize,
    pub k: usize,
    pub ell: usize,
    pub matrix: Vec<Vec<BigRational>>,
}

pub fn hankel_h(d: usize, k: usize, ell: usize) -> Result<HankelH> {
    if ell > k {
        return Err(Error::Input(format!(
            "hankel index l = {} exceeds k = {}",
            ell, k
        )));
    }
    if 2 * d + k > 60 {
        return Err(Error::Resource("hankel matrix order above 60".into()));
    }
    let pre = BigRational::new(
        BigInt::one(),
        BigInt::from(2 * d + k + 1) * factorial(ell) * factorial(k - ell),
    );
    let matrix = (0..=d)
        .map(|r| {
            (0..=d)
                .map(|s| &pre / BigRational::from_integer(binomial_big(2 * d + k, ell + r + s)))
                .collect()
        })
        .collect();
    Ok(HankelH { d, k, ell, matrix })
}

/// Expand a (d+1)x(d+1) matrix into blocks: entry H[i][j] becomes the
/// constant n_i x n_j block H[i][j] * 1.
pub fn block_expand(h: &[Vec<BigRational>], sizes: &[usize]) -> Vec<Vec<BigRational>> {
    assert_eq!(h.len(), sizes.len(), "one size per block row");
    let total: usize = sizes.iter().sum();
    let mut out = vec![vec![BigRational::zero(); total]; total];
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    for (i, row) in h.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            for r in 0..sizes[i] {
                for s in 0..sizes[j] {
                    out[offsets[i] + r][offsets[j] + s] = v.clone();
                }
            }
        }
    }
    out
}

/// The stacked vector of f_s polynomials: block s lists, for each s-subset
/// of the root labels in lexicographic order, the product
/// (chosen factors)(h)(remaining factors), factors ascending on each side.
#[derive(Debug, Clone)]
pub struct WVector {
    pub d: usize,
    pub entries: Vec<NcPoly>,
}

pub fn w_vector(roots: &[Coeff], direction: Letter, mode: Mode) -> WVector {
    let d = roots.len();
    let lin: Vec<NcPoly> = roots
        .iter()
        .map(|r| UniPoly::linear_minus(&r.clone().into_mode(mode)).to_ncpoly())
        .collect();
    let h = NcPoly::letter(direction, mode);
    let mut entries = Vec::with_capacity(1 << d);
    for s in 0..=d {
        for subset in (0..d).combinations(s) {
            let mut p = NcPoly::one(mode);
            for &i in &subset {
                p = &p * &lin[i];
            }
            p = &p * &h;
            for i in 0..d {
                if !subset.contains(&i) {
                    p = &p * &lin[i];
                }
            }
            entries.push(p);
        }
    }
    WVector { d, entries }
}

/// One term of the Gram identity: n(x) * W^T * m(x) * G * W, where n is the
/// product of the a-factors indexed by `subset` and m the product of the
/// rest. The gram matrix carries the l!(k-l)! subset-count scaling.
#[derive(Debug, Clone)]
pub struct RawTerm {
    pub subset: Vec<usize>,
    pub n: UniPoly,
    pub m: UniPoly,
    pub gram: Vec<Vec<BigRational>>,
}

/// The Gram identity: the returned terms, expanded as
/// sum_t n_t(x) * W(h1)^T * m_t(x) * G_t * W(h2), are cyclically equivalent
/// to Sym(x-a_1, ..., x-a_k, each x-b_j twice, h1, h2).
pub fn gram_identity(
    d: usize,
    k: usize,
    a_weights: &[Coeff],
    roots: &[Coeff],
    mode: Mode,
) -> Result<Vec<RawTerm>> {
    if k > 2 {
        return Err(Error::Input("gram identity supports at most k = 2 weights".into()));
    }
    if a_weights.len() != k || roots.len() != d {
        return Err(Error::Input("gram identity dimension mismatch".into()));
    }
    let sizes: Vec<usize> = (0..=d).map(|s| binomial(d, s)).collect();
    let mut out = Vec::new();
    for ell in 0..=k {
        let h = hankel_h(d, k, ell)?;
        let scale = BigRational::from_integer(factorial(ell) * factorial(k - ell));
        // The left W entries enter the expansion involuted, which turns a
        // block-r entry into one with d-r factors before h1; the matching
        // moment index is therefore l + 2d - (r+s), i.e. the row/column
        // flip of H_l (still Hankel and PSD).
        let flipped: Vec<Vec<BigRational>> = (0..=d)
            .map(|r| (0..=d).map(|s| h.matrix[d - r][d - s].clone()).collect())
            .collect();
        let c = block_expand(&flipped, &sizes);
        let scaled: Vec<Vec<BigRational>> = c
            .iter()
            .map(|row| row.iter().map(|v| v * &scale).collect())
            .collect();
        for subset in (0..k).combinations(ell) {
            let mut n = UniPoly::constant(Coeff::one(mode));
            let mut m = UniPoly::constant(Coeff::one(mode));
            for i in 0..k {
                let lin = UniPoly::linear_minus(&a_weights[i].clone().into_mode(mode));
                if subset.contains(&i) {
                    n = n.mul(&lin);
                } else {
                    m = m.mul(&lin);
                }
            }
            out.push(RawTerm {
                subset,
                n,
                m,
                gram: scaled.clone(),
            });
        }
    }
    Ok(out)
}

/// Expand Gram-identity terms with two direction letters kept distinct.
pub fn expand_raw_terms(
    terms: &[RawTerm],
    roots: &[Coeff],
    dirs: (Letter, Letter),
    mode: Mode,
) -> NcPoly {
    let w1 = w_vector(roots, dirs.0, mode);
    let w2 = w_vector(roots, dirs.1, mode);
    let mut out = NcPoly::zero(mode);
    for t in terms {
        let n = t.n.to_ncpoly();
        let m = t.m.to_ncpoly();
        for (r, row) in t.gram.iter().enumerate() {
            for (s, g) in row.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                let c = Coeff::from_big(g.clone(), mode);
                let piece = &(&(&n * &w1.entries[r].involute()) * &m) * &w2.entries[s];
                out = out.try_add(&piece.scale(&c)).expect("same mode");
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// certificates

/// Shape of a certificate term: plain hermitian square, single linear
/// weight, double weight in the middle, or split weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shape {
    Q,
    R,
    T,
    U,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::Q => "Q",
            Shape::R => "R",
            Shape::T => "T",
            Shape::U => "U",
        }
    }

    pub fn from_str(s: &str) -> Option<Shape> {
        match s {
            "Q" => Some(Shape::Q),
            "R" => Some(Shape::R),
            "T" => Some(Shape::T),
            "U" => Some(Shape::U),
            _ => None,
        }
    }
}

/// Linear weight attached to a kind-R term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RWeight {
    XMinusA,
    BMinusX,
    XMinusB,
    AMinusX,
}

impl RWeight {
    pub fn as_str(&self) -> &'static str {
        match self {
            RWeight::XMinusA => "x-a",
            RWeight::BMinusX => "b-x",
            RWeight::XMinusB => "x-b",
            RWeight::AMinusX => "a-x",
        }
    }

    pub fn from_str(s: &str) -> Option<RWeight> {
        match s {
            "x-a" => Some(RWeight::XMinusA),
            "b-x" => Some(RWeight::BMinusX),
            "x-b" => Some(RWeight::XMinusB),
            "a-x" => Some(RWeight::AMinusX),
            _ => None,
        }
    }

    pub fn legal_for(&self, interval: &IntervalSpec) -> bool {
        matches!(
            (self, interval),
            (RWeight::XMinusA, IntervalSpec::Interval(_, _))
                | (RWeight::BMinusX, IntervalSpec::Interval(_, _))
                | (RWeight::XMinusB, IntervalSpec::RayRight(_))
                | (RWeight::AMinusX, IntervalSpec::RayLeft(_))
        )
    }

    /// The weight as a polynomial in x over the interval endpoints.
    pub fn poly(&self, interval: &IntervalSpec, mode: Mode) -> NcPoly {
        let iv = interval.into_mode(mode);
        let p = match (self, &iv) {
            (RWeight::XMinusA, IntervalSpec::Interval(a, _)) => UniPoly::linear_minus(a),
            (RWeight::BMinusX, IntervalSpec::Interval(_, b)) => UniPoly::linear_minus(b).neg(),
            (RWeight::XMinusB, IntervalSpec::RayRight(b)) => UniPoly::linear_minus(b),
            (RWeight::AMinusX, IntervalSpec::RayLeft(a)) => UniPoly::linear_minus(a).neg(),
            _ => panic!("weight {:?} illegal for interval {}", self, interval),
        };
        p.to_ncpoly()
    }
}

/// One certificate term: `mult` times the shape expansion of `poly`.
#[derive(Debug, Clone)]
pub struct CertTerm {
    pub shape: Shape,
    /// present exactly for kind R
    pub weight: Option<RWeight>,
    /// nonnegative scalar multiplier
    pub mult: Coeff,
    /// degree-1 homogeneous in h
    pub poly: NcPoly,
}

/// An algebraic trace-convexity certificate: the Hessian of p is cyclically
/// equivalent to the expansion of these terms.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub interval: IntervalSpec,
    pub mode: Mode,
    pub terms: Vec<CertTerm>,
    /// most negative eigenvalue clipped during float PSD factoring
    pub clipped: f64,
}

impl Certificate {
    pub fn count_shape(&self, shape: Shape) -> usize {
        self.terms.iter().filter(|t| t.shape == shape).count()
    }
}

/// Multiply a certificate back out into the free algebra.
pub fn expand_certificate(c: &Certificate) -> NcPoly {
    let mode = c.mode;
    let iv = c.interval.into_mode(mode);
    let (lin_a, lin_b_neg) = match &iv {
        IntervalSpec::Interval(a, b) => (
            Some(UniPoly::linear_minus(a).to_ncpoly()),
            Some(UniPoly::linear_minus(b).neg().to_ncpoly()),
        ),
        _ => (None, None),
    };
    let mut out = NcPoly::zero(mode);
    for t in &c.terms {
        let vstar = t.poly.involute();
        let piece = match t.shape {
            Shape::Q => &vstar * &t.poly,
            Shape::R => {
                let w = t
                    .weight
                    .expect("kind R carries a weight")
                    .poly(&iv, mode);
                &(&vstar * &w) * &t.poly
            }
            Shape::T => {
                let a = lin_a.as_ref().expect("T needs a bounded interval");
                let b = lin_b_neg.as_ref().expect("T needs a bounded interval");
                &(&(&vstar * a) * b) * &t.poly
            }
            Shape::U => {
                let a = lin_a.as_ref().expect("U needs a bounded interval");
                let b = lin_b_neg.as_ref().expect("U needs a bounded interval");
                &(&(a * &vstar) * b) * &t.poly
            }
        };
        out = out
            .try_add(&piece.scale(&t.mult.clone().into_mode(mode)))
            .expect("same mode");
    }
    out
}

/// Role of one linear weight factor relative to the domain.
#[derive(Debug, Clone, Copy)]
enum FactorRole {
    /// (x - endpoint), no sign flip
    Lo,
    /// written (endpoint - x) in the certificate; enters the identity as
    /// (x - endpoint) with one tracked sign flip
    Hi,
}

fn weight_plan(w: Weight, iv: &IntervalSpec, mode: Mode) -> (Vec<(Coeff, FactorRole)>, usize) {
    let iv = iv.into_mode(mode);
    match (w, &iv) {
        (Weight::One, _) => (Vec::new(), 0),
        (Weight::XMinusA, IntervalSpec::Interval(a, _)) => {
            (vec![(a.clone(), FactorRole::Lo)], 0)
        }
        (Weight::BMinusX, IntervalSpec::Interval(_, b)) => {
            (vec![(b.clone(), FactorRole::Hi)], 1)
        }
        (Weight::Both, IntervalSpec::Interval(a, b)) => (
            vec![(a.clone(), FactorRole::Lo), (b.clone(), FactorRole::Hi)],
            1,
        ),
        (Weight::XMinusB, IntervalSpec::RayRight(b)) => {
            (vec![(b.clone(), FactorRole::Lo)], 0)
        }
        (Weight::AMinusX, IntervalSpec::RayLeft(a)) => {
            (vec![(a.clone(), FactorRole::Hi)], 1)
        }
        _ => panic!("weight {:?} illegal for interval {}", w, iv),
    }
}

fn r_weight_for(role: FactorRole, iv: &IntervalSpec) -> RWeight {
    match (role, iv) {
        (FactorRole::Lo, IntervalSpec::Interval(_, _)) => RWeight::XMinusA,
        (FactorRole::Hi, IntervalSpec::Interval(_, _)) => RWeight::BMinusX,
        (FactorRole::Lo, IntervalSpec::RayRight(_)) => RWeight::XMinusB,
        (FactorRole::Hi, IntervalSpec::RayLeft(_)) => RWeight::AMinusX,
        _ => unreachable!("role/interval combination"),
    }
}

/// Canonical destination of one factored Gram row, given which a-factors
/// sit in outer position (`subset`).
fn canonical_shape(
    k: usize,
    subset: &[usize],
    roles: &[FactorRole],
    iv: &IntervalSpec,
) -> (Shape, Option<RWeight>, bool) {
    // returns (shape, weight, involute the row vector?)
    match k {
        0 => (Shape::Q, None, false),
        1 => {
            let w = r_weight_for(roles[0], iv);
            (Shape::R, Some(w), !subset.is_empty())
        }
        2 => match subset {
            [] => (Shape::T, None, false),
            [0, 1] => (Shape::T, None, true),
            [0] => (Shape::U, None, false),
            [1] => (Shape::U, None, true),
            _ => unreachable!("k = 2 subsets"),
        },
        _ => unreachable!("k capped at 2"),
    }
}

fn combine_row_big(row: &[BigRational], w: &WVector, mode: Mode) -> NcPoly {
    let mut v = NcPoly::zero(mode);
    for (c, e) in row.iter().zip(w.entries.iter()) {
        if !c.is_zero() {
            v = v
                .try_add(&e.scale(&Coeff::from_big(c.clone(), mode)))
                .expect("same mode");
        }
    }
    v
}

fn combine_row_f64(row: &[f64], w: &WVector) -> NcPoly {
    let mut v = NcPoly::zero(Mode::Float);
    for (c, e) in row.iter().zip(w.entries.iter()) {
        if c.abs() > 0.0 {
            v = v.try_add(&e.scale(&Coeff::F64(*c))).expect("same mode");
        }
    }
    v
}

/// Deterministic key for merging identical certificate terms.
fn term_key(shape: Shape, weight: Option<RWeight>, poly: &NcPoly) -> String {
    format!(
        "{}|{}|{}",
        shape.as_str(),
        weight.map(|w| w.as_str()).unwrap_or("-"),
        poly
    )
}

fn build_certificate(decomp: &PositivityDecomposition, _tol: f64) -> Result<Certificate> {
    let mode = decomp.mode;
    let iv = decomp.interval.clone();
    let mut merged: std::collections::BTreeMap<String, CertTerm> = Default::default();
    let mut clipped = 0.0f64;

    for term in &decomp.terms {
        let a_mult = term.multiplier.clone().into_mode(mode);
        let (factors, _flips) = weight_plan(term.weight, &iv, mode);
        let k = factors.len();
        let roles: Vec<FactorRole> = factors.iter().map(|(_, r)| *r).collect();
        let a_vals: Vec<Coeff> = factors.iter().map(|(v, _)| v.clone()).collect();
        let d = term.squared_roots.len();
        let roots: Vec<Coeff> = term
            .squared_roots
            .iter()
            .map(|r| r.clone().into_mode(mode))
            .collect();
        let raw = gram_identity(d, k, &a_vals, &roots, mode)?;
        let w = w_vector(&roots, H, mode);

        for rt in &raw {
            let (shape, weight, invol) = canonical_shape(k, &rt.subset, &roles, &iv);
            match mode {
                Mode::Exact => {
                    let a_rat = a_mult.as_rat().clone();
                    let scaled: Vec<Vec<BigRational>> = rt
                        .gram
                        .iter()
                        .map(|row| row.iter().map(|v| v * &a_rat).collect())
                        .collect();
                    let ldl = rational_ldl(&scaled)?;
                    for (dcoef, vvec) in ldl {
                        if dcoef.is_zero() {
                            continue;
                        }
                        let mut v = combine_row_big(&vvec, &w, mode);
                        if v.is_zero() {
                            continue;
                        }
                        if invol {
                            v = v.involute();
                        }
                        push_merged(&mut merged, shape, weight, Coeff::Rat(dcoef), v)?;
                    }
                }
                Mode::Float => {
                    let n = rt.gram.len();
                    let a_f = a_mult.to_f64();
                    let mut sm = SymMatrix::zeros(n);
                    for i in 0..n {
                        for j in 0..n {
                            sm.data[i * n + j] =
                                rt.gram[i][j].to_f64().unwrap_or(f64::NAN) * a_f;
                        }
                    }
                    let f = psd_factor(&sm, PSD_TOL)?;
                    clipped = clipped.min(f.clipped);
                    for row in &f.rows {
                        let mut v = combine_row_f64(row, &w);
                        if v.is_zero() {
                            continue;
                        }
                        if invol {
                            v = v.involute();
                        }
                        push_merged(&mut merged, shape, weight, Coeff::F64(1.0), v)?;
                    }
                }
            }
        }
    }

    let terms: Vec<CertTerm> = merged
        .into_values()
        .filter(|t| !t.mult.is_negligible() && !t.poly.is_zero())
        .collect();
    Ok(Certificate {
        interval: iv,
        mode,
        terms,
        clipped,
    })
}

fn push_merged(
    merged: &mut std::collections::BTreeMap<String, CertTerm>,
    shape: Shape,
    weight: Option<RWeight>,
    mult: Coeff,
    poly: NcPoly,
) -> Result<()> {
    if mult.is_negative() {
        return Err(Error::Internal(
            "certificate term with negative multiplier".into(),
        ));
    }
    let key = term_key(shape, weight, &poly);
    match merged.get_mut(&key) {
        Some(t) => t.mult = t.mult.add(&mult),
        None => {
            merged.insert(
                key,
                CertTerm {
                    shape,
                    weight,
                    mult,
                    poly,
                },
            );
        }
    }
    Ok(())
}

/// Certify trace-convexity on the whole real line.
pub fn certify_global(p: &UniPoly, tol: f64) -> Result<Certificate> {
    certify(p, &IntervalSpec::Global, tol)
}

/// Certify trace-convexity on an interval or half line.
pub fn certify_local(p: &UniPoly, interval: &IntervalSpec, tol: f64) -> Result<Certificate> {
    if interval.is_global() {
        return Err(Error::Input("certify_local requires a non-global interval".into()));
    }
    certify(p, interval, tol)
}

/// Certify trace-convexity on any domain kind.
pub fn certify(p: &UniPoly, interval: &IntervalSpec, tol: f64) -> Result<Certificate> {
    let q = second_derivative(p);
    let decomp = decompose_on(&q, interval, tol).map_err(|e| match e {
        Error::NotNonnegative { witness } => Error::NotConvex { witness },
        Error::NotNonnegativeOnInterval { witness } => Error::NotConvexOnInterval { witness },
        e => e,
    })?;
    build_certificate(&decomp, tol)
}

/// Hessian of a scalar polynomial viewed in the free algebra.
pub fn scalar_hessian(p: &UniPoly) -> NcPoly {
    calculus::hessian(&p.to_ncpoly()).expect("hessian of an x-polynomial")
}

/// Max absolute coefficient of the cyclic canonical form of
/// expand_certificate(c) - hessian(p): the certificate's symbolic residual.
pub fn symbolic_residual(p: &UniPoly, c: &Certificate) -> f64 {
    let hess = scalar_hessian(p).into_mode(c.mode);
    let diff = expand_certificate(c)
        .try_sub(&hess)
        .expect("same mode")
        .cyclic_canonical();
    diff.max_abs_coeff()
}
