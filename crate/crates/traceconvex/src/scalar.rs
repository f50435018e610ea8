//! Commutative univariate polynomials: parsing, differentiation, root
//! extraction and the weighted-square positivity decompositions behind the
//! global and local certificates.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{NcPoly, Word, X};
use crate::coeff::{Coeff, Mode};
use crate::error::{Error, Result};
use crate::roots;

/// Dense univariate polynomial, ascending coefficients, trailing
/// coefficient nonzero unless zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    mode: Mode,
    coeffs: Vec<Coeff>,
}

impl UniPoly {
    pub fn new(mode: Mode, mut coeffs: Vec<Coeff>) -> Self {
        while let Some(c) = coeffs.last() {
            if c.is_negligible() {
                coeffs.pop();
            } else {
                break;
            }
        }
        UniPoly { mode, coeffs }
    }

    pub fn zero(mode: Mode) -> Self {
        UniPoly {
            mode,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: Coeff) -> Self {
        let mode = c.mode();
        UniPoly::new(mode, vec![c])
    }

    pub fn from_ints(vals: &[i64], mode: Mode) -> Self {
        UniPoly::new(mode, vals.iter().map(|&v| Coeff::from_int(v, mode)).collect())
    }

    /// x - shift
    pub fn linear_minus(shift: &Coeff) -> Self {
        let mode = shift.mode();
        UniPoly::new(mode, vec![shift.neg(), Coeff::one(mode)])
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Coeff {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Coeff::zero(self.mode))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self) -> Option<&Coeff> {
        self.coeffs.last()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &Coeff) -> Coeff {
        let x = x.clone().into_mode(self.mode);
        let mut acc = Coeff::zero(self.mode);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&x).add(c);
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64();
        }
        acc
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    pub fn into_mode(&self, mode: Mode) -> UniPoly {
        UniPoly::new(
            mode,
            self.coeffs
                .iter()
                .map(|c| c.clone().into_mode(mode))
                .collect(),
        )
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        assert_eq!(self.mode, other.mode, "mode mismatch");
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        UniPoly::new(self.mode, out)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly::new(self.mode, self.coeffs.iter().map(|c| c.neg()).collect())
    }

    pub fn scale(&self, s: &Coeff) -> UniPoly {
        let s = s.clone().into_mode(self.mode);
        UniPoly::new(self.mode, self.coeffs.iter().map(|c| c.mul(&s)).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        assert_eq!(self.mode, other.mode, "mode mismatch");
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero(self.mode);
        }
        let mut out = vec![Coeff::zero(self.mode); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        UniPoly::new(self.mode, out)
    }

    pub fn derivative(&self) -> UniPoly {
        let out: Vec<Coeff> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.mul(&Coeff::from_int(i as i64, self.mode)))
            .collect();
        UniPoly::new(self.mode, out)
    }

    /// Antiderivative with integration constant 0.
    pub fn antiderivative(&self) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = vec![Coeff::zero(self.mode)];
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c.div(&Coeff::from_int((i + 1) as i64, self.mode)));
        }
        UniPoly::new(self.mode, out)
    }

    /// View as an nc polynomial in the single letter x.
    pub fn to_ncpoly(&self) -> NcPoly {
        let mut out = NcPoly::zero(self.mode);
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out = out
                    .try_add(&NcPoly::monomial(c.clone(), Word(vec![X; i])))
                    .expect("same mode");
            }
        }
        out
    }
}

impl std::fmt::Display for UniPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            match i {
                0 => write!(f, "{}", mag)?,
                _ => {
                    if mag == Coeff::one(self.mode) {
                        write!(f, "x")?;
                    } else {
                        write!(f, "{}*x", mag)?;
                    }
                    if i > 1 {
                        write!(f, "^{}", i)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// d^2 p / dx^2.
pub fn second_derivative(p: &UniPoly) -> UniPoly {
    p.derivative().derivative()
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone)]
enum Lit {
    Rat(BigRational),
    Dec(f64),
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser {
            bytes: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn digits(&mut self) -> Result<&'a [u8]> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected digits"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<Lit> {
        let int_part = self.digits()?;
        match self.bytes.get(self.pos) {
            Some(b'/') => {
                self.pos += 1;
                let den = self.digits()?;
                let n: BigInt = std::str::from_utf8(int_part).unwrap().parse().unwrap();
                let d: BigInt = std::str::from_utf8(den).unwrap().parse().unwrap();
                if d.is_zero() {
                    return Err(self.err("zero denominator"));
                }
                Ok(Lit::Rat(BigRational::new(n, d)))
            }
            Some(b'.') => {
                self.pos += 1;
                let frac = self.digits()?;
                let text = format!(
                    "{}.{}",
                    std::str::from_utf8(int_part).unwrap(),
                    std::str::from_utf8(frac).unwrap()
                );
                text.parse::<f64>()
                    .map(Lit::Dec)
                    .map_err(|_| self.err("bad decimal"))
            }
            _ => {
                let n: BigInt = std::str::from_utf8(int_part).unwrap().parse().unwrap();
                Ok(Lit::Rat(BigRational::from_integer(n)))
            }
        }
    }

    fn exponent(&mut self) -> Result<usize> {
        // after 'x': optional ^k
        if self.bytes.get(self.pos) == Some(&b'^') {
            self.pos += 1;
            self.skip_ws();
            let d = self.digits()?;
            std::str::from_utf8(d)
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent too large"))
        } else {
            Ok(1)
        }
    }
}

/// Parse the polynomial grammar: signed terms `c`, `c*x^k`, `x^k`, with
/// integer, decimal or rational (`p/q`) coefficients; `*` optional;
/// whitespace-insensitive. Exact mode iff every literal is rational.
pub fn parse_unipoly(text: &str) -> Result<UniPoly> {
    let mut p = Parser::new(text);
    let mut terms: Vec<(Lit, usize, bool)> = Vec::new(); // (magnitude, power, negated)
    let mut any = false;
    loop {
        let c = match p.peek() {
            None => break,
            Some(c) => c,
        };
        let mut neg = false;
        let mut saw_sign = false;
        if c == b'+' || c == b'-' {
            neg = c == b'-';
            saw_sign = true;
            p.pos += 1;
        } else if any {
            return Err(p.err("expected '+' or '-' between terms"));
        }
        let c = p.peek().ok_or_else(|| {
            if saw_sign {
                p.err("dangling sign")
            } else {
                p.err("expected a term")
            }
        })?;
        let (lit, power) = if c == b'x' {
            p.pos += 1;
            let e = p.exponent()?;
            (Lit::Rat(BigRational::one()), e)
        } else if c.is_ascii_digit() {
            let lit = p.number()?;
            p.skip_ws();
            let power = match p.bytes.get(p.pos) {
                Some(b'*') => {
                    p.pos += 1;
                    p.skip_ws();
                    if p.bytes.get(p.pos) != Some(&b'x') {
                        return Err(p.err("expected 'x' after '*'"));
                    }
                    p.pos += 1;
                    p.exponent()?
                }
                Some(b'x') => {
                    p.pos += 1;
                    p.exponent()?
                }
                _ => 0,
            };
            (lit, power)
        } else {
            return Err(p.err(format!("unexpected character {:?}", c as char)));
        };
        terms.push((lit, power, neg));
        any = true;
    }
    if !any {
        return Err(Error::Parse {
            pos: 0,
            msg: "empty polynomial".into(),
        });
    }
    let mode = if terms.iter().any(|(l, _, _)| matches!(l, Lit::Dec(_))) {
        Mode::Float
    } else {
        Mode::Exact
    };
    let maxp = terms.iter().map(|(_, p, _)| *p).max().unwrap();
    let mut coeffs = vec![Coeff::zero(mode); maxp + 1];
    for (lit, power, neg) in terms {
        let mut c = match (lit, mode) {
            (Lit::Rat(r), Mode::Exact) => Coeff::Rat(r),
            (Lit::Rat(r), Mode::Float) => Coeff::F64(r.to_f64().unwrap_or(f64::NAN)),
            (Lit::Dec(v), _) => Coeff::F64(v),
        };
        if neg {
            c = c.neg();
        }
        coeffs[power] = coeffs[power].add(&c);
    }
    Ok(UniPoly::new(mode, coeffs))
}

// ---------------------------------------------------------------------------
// intervals and decompositions

/// Domain selector: the real line, a bounded open interval, or a half line.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalSpec {
    Global,
    Interval(Coeff, Coeff),
    RayRight(Coeff),
    RayLeft(Coeff),
}

impl IntervalSpec {
    pub fn validate(&self) -> Result<()> {
        if let IntervalSpec::Interval(a, b) = self {
            if a.mode() != b.mode() {
                return Err(Error::Input("interval endpoint mode mismatch".into()));
            }
            if a.cmp_real(b) != std::cmp::Ordering::Less {
                return Err(Error::Input("interval requires a < b".into()));
            }
        }
        Ok(())
    }

    pub fn is_global(&self) -> bool {
        matches!(self, IntervalSpec::Global)
    }

    pub fn into_mode(&self, mode: Mode) -> IntervalSpec {
        match self {
            IntervalSpec::Global => IntervalSpec::Global,
            IntervalSpec::Interval(a, b) => {
                IntervalSpec::Interval(a.clone().into_mode(mode), b.clone().into_mode(mode))
            }
            IntervalSpec::RayRight(b) => IntervalSpec::RayRight(b.clone().into_mode(mode)),
            IntervalSpec::RayLeft(a) => IntervalSpec::RayLeft(a.clone().into_mode(mode)),
        }
    }

    /// (lo, hi) as floats, unbounded sides as None.
    pub fn bounds_f64(&self) -> (Option<f64>, Option<f64>) {
        match self {
            IntervalSpec::Global => (None, None),
            IntervalSpec::Interval(a, b) => (Some(a.to_f64()), Some(b.to_f64())),
            IntervalSpec::RayRight(b) => (Some(b.to_f64()), None),
            IntervalSpec::RayLeft(a) => (None, Some(a.to_f64())),
        }
    }

    pub fn contains_open_f64(&self, x: f64) -> bool {
        let (lo, hi) = self.bounds_f64();
        lo.map_or(true, |l| x > l) && hi.map_or(true, |h| x < h)
    }
}

impl std::fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntervalSpec::Global => write!(f, "(-inf, inf)"),
            IntervalSpec::Interval(a, b) => write!(f, "({}, {})", a, b),
            IntervalSpec::RayRight(b) => write!(f, "({}, inf)", b),
            IntervalSpec::RayLeft(a) => write!(f, "(-inf, {})", a),
        }
    }
}

/// Weight attached to one positivity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    One,
    XMinusA,
    BMinusX,
    /// (x-a)(b-x)
    Both,
    XMinusB,
    AMinusX,
}

impl Weight {
    pub fn legal_for(&self, interval: &IntervalSpec) -> bool {
        match interval {
            IntervalSpec::Global => matches!(self, Weight::One),
            IntervalSpec::Interval(_, _) => matches!(
                self,
                Weight::One | Weight::XMinusA | Weight::BMinusX | Weight::Both
            ),
            IntervalSpec::RayRight(_) => matches!(self, Weight::One | Weight::XMinusB),
            IntervalSpec::RayLeft(_) => matches!(self, Weight::One | Weight::AMinusX),
        }
    }

    /// The weight as a scalar polynomial over the interval's endpoints.
    pub fn poly(&self, interval: &IntervalSpec, mode: Mode) -> UniPoly {
        let iv = interval.into_mode(mode);
        match (self, &iv) {
            (Weight::One, _) => UniPoly::constant(Coeff::one(mode)),
            (Weight::XMinusA, IntervalSpec::Interval(a, _)) => UniPoly::linear_minus(a),
            (Weight::BMinusX, IntervalSpec::Interval(_, b)) => UniPoly::linear_minus(b).neg(),
            (Weight::Both, IntervalSpec::Interval(a, b)) => {
                UniPoly::linear_minus(a).mul(&UniPoly::linear_minus(b).neg())
            }
            (Weight::XMinusB, IntervalSpec::RayRight(b)) => UniPoly::linear_minus(b),
            (Weight::AMinusX, IntervalSpec::RayLeft(a)) => UniPoly::linear_minus(a).neg(),
            _ => panic!("weight {:?} illegal for interval {}", self, interval),
        }
    }
}

/// One term A * weight(x) * prod (x - b_k)^2 of a positivity decomposition.
#[derive(Debug, Clone)]
pub struct PositivityTerm {
    pub multiplier: Coeff,
    pub weight: Weight,
    pub squared_roots: Vec<Coeff>,
}

/// A representation of a scalar polynomial that is nonnegative on a domain
/// as a sum of weighted square products.
#[derive(Debug, Clone)]
pub struct PositivityDecomposition {
    pub interval: IntervalSpec,
    pub mode: Mode,
    pub terms: Vec<PositivityTerm>,
}

impl PositivityDecomposition {
    /// Multiply every term back out.
    pub fn expand(&self) -> UniPoly {
        let mut sum = UniPoly::zero(self.mode);
        for t in &self.terms {
            let mut p = UniPoly::constant(t.multiplier.clone().into_mode(self.mode));
            p = p.mul(&t.weight.poly(&self.interval, self.mode));
            for r in &t.squared_roots {
                let lin = UniPoly::linear_minus(&r.clone().into_mode(self.mode));
                p = p.mul(&lin).mul(&lin);
            }
            sum = sum.add(&p);
        }
        sum
    }
}

// ---------------------------------------------------------------------------
// factorization

/// Real factorization of a scalar polynomial: leading coefficient, real
/// roots with multiplicity, and complex pairs stored as (alpha, beta^2)
/// with multiplicity, so exact quadratics stay exact.
#[derive(Debug, Clone)]
pub struct RealFactorization {
    pub mode: Mode,
    pub leading: Coeff,
    pub real_roots: Vec<(Coeff, usize)>,
    pub complex_pairs: Vec<(Coeff, Coeff, usize)>,
}

impl RealFactorization {
    pub fn expand(&self) -> UniPoly {
        let mut p = UniPoly::constant(self.leading.clone());
        for (r, m) in &self.real_roots {
            let lin = UniPoly::linear_minus(r);
            for _ in 0..*m {
                p = p.mul(&lin);
            }
        }
        for (alpha, beta_sq, m) in &self.complex_pairs {
            let lin = UniPoly::linear_minus(alpha);
            let quad = lin.mul(&lin).add(&UniPoly::constant(beta_sq.clone()));
            for _ in 0..*m {
                p = p.mul(&quad);
            }
        }
        p
    }
}

const DIVISOR_LIMIT: u64 = 1_000_000_000_000;
const CANDIDATE_LIMIT: usize = 4000;

fn divisors(n: &BigInt) -> Option<Vec<u64>> {
    let n = n.abs().to_u64()?;
    if n == 0 || n > DIVISOR_LIMIT {
        return None;
    }
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m && d <= 1_000_000 {
        if m % d == 0 {
            let mut e = 0;
            while m % d == 0 {
                m /= d;
                e += 1;
            }
            factors.push((d, e));
        }
        d += 1;
    }
    if m > 1 {
        if m > DIVISOR_LIMIT {
            return None;
        }
        factors.push((m, 1));
    }
    let mut divs = vec![1u64];
    for (p, e) in factors {
        let mut next = Vec::new();
        for &v in &divs {
            let mut pw = 1u64;
            for _ in 0..=e {
                next.push(v.saturating_mul(pw));
                pw = pw.saturating_mul(p);
            }
        }
        divs = next;
        if divs.len() > CANDIDATE_LIMIT {
            return None;
        }
    }
    divs.sort_unstable();
    divs.dedup();
    Some(divs)
}

/// Divide an exact polynomial by (x - r); returns the quotient if the
/// remainder is zero.
fn deflate_exact(coeffs: &[BigRational], r: &BigRational) -> Option<Vec<BigRational>> {
    let n = coeffs.len() - 1;
    let mut quot = vec![BigRational::zero(); n];
    let mut acc = BigRational::zero();
    for i in (0..=n).rev() {
        acc = &acc * r + &coeffs[i];
        if i > 0 {
            quot[i - 1] = acc.clone();
        }
    }
    if acc.is_zero() {
        Some(quot)
    } else {
        None
    }
}

/// Attempt an entirely exact factorization. Returns None when the
/// polynomial has roots this path cannot express (the caller falls back to
/// floats).
fn exact_factorization(q: &UniPoly) -> Option<RealFactorization> {
    let mode = Mode::Exact;
    let mut coeffs: Vec<BigRational> = q.coeffs().iter().map(|c| c.as_rat().clone()).collect();
    let mut real_roots: Vec<(Coeff, usize)> = Vec::new();
    let mut complex_pairs: Vec<(Coeff, Coeff, usize)> = Vec::new();

    // zero roots
    let mut zero_mult = 0;
    while coeffs.first().map_or(false, |c| c.is_zero()) {
        coeffs.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        real_roots.push((Coeff::zero(mode), zero_mult));
    }

    // clear denominators -> integer coefficients
    let mut denom_lcm = BigInt::one();
    for c in &coeffs {
        denom_lcm = denom_lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(denom_lcm.clone())).to_integer())
        .collect();

    // rational root candidates p/q from the constant and leading terms
    if coeffs.len() > 1 {
        let p_divs = divisors(&ints[0])?;
        let q_divs = divisors(ints.last().unwrap())?;
        if p_divs.len() * q_divs.len() > CANDIDATE_LIMIT {
            return None;
        }
        let mut candidates: Vec<BigRational> = Vec::new();
        for &pn in &p_divs {
            for &qd in &q_divs {
                let r = BigRational::new(BigInt::from(pn), BigInt::from(qd));
                candidates.push(r.clone());
                candidates.push(-r);
            }
        }
        candidates.sort();
        candidates.dedup();
        for r in candidates {
            let mut mult = 0;
            while coeffs.len() > 1 {
                match deflate_exact(&coeffs, &r) {
                    Some(quot) => {
                        coeffs = quot;
                        mult += 1;
                    }
                    None => break,
                }
            }
            if mult > 0 {
                real_roots.push((Coeff::Rat(r), mult));
            }
        }
    }

    let leading = Coeff::Rat(coeffs.last().cloned().unwrap_or_else(BigRational::one));
    match coeffs.len() {
        0 | 1 => {}
        3 => {
            // a x^2 + b x + c with no rational roots; exact only if the
            // discriminant is negative (a complex pair with rational
            // alpha and beta^2)
            let a = &coeffs[2];
            let b = &coeffs[1];
            let c = &coeffs[0];
            let alpha = -(b / (a * BigRational::from_integer(BigInt::from(2))));
            let beta_sq = c / a - &alpha * &alpha;
            if beta_sq.is_positive() {
                complex_pairs.push((Coeff::Rat(alpha), Coeff::Rat(beta_sq), 1));
            } else {
                return None; // irrational real roots
            }
        }
        _ => return None, // higher-degree irreducible part: go numeric
    }

    real_roots.sort_by(|a, b| a.0.cmp_real(&b.0));
    Some(RealFactorization {
        mode,
        leading,
        real_roots,
        complex_pairs,
    })
}

fn float_factorization(q: &UniPoly, tol: f64) -> Result<RealFactorization> {
    let qf = q.into_mode(Mode::Float);
    let mut coeffs = qf.to_f64_coeffs();

    let mut zero_mult = 0;
    while coeffs.first().map_or(false, |&c| c == 0.0) && coeffs.len() > 1 {
        coeffs.remove(0);
        zero_mult += 1;
    }
    let found = if coeffs.len() > 1 {
        roots::aberth_roots(&coeffs)?
    } else {
        Vec::new()
    };

    // Growing the multiplicity hypothesis widens the cluster radius, which
    // eventually swallows distinct roots; accept the smallest cap whose
    // factored form reproduces the input.
    let bound = tol.max(1e-8) * qf.max_abs().max(1.0);
    let mut best: Option<(f64, RealFactorization)> = None;
    for max_mult in 1..=found.len().max(1) {
        let fact = match assemble_factorization(&coeffs, &found, zero_mult, max_mult) {
            Ok(f) => f,
            Err(_) if max_mult < found.len().max(1) => continue,
            Err(e) => {
                return Err(best.map_or(e, |(r, _)| {
                    Error::Numerical(format!(
                        "factorization residual {:.3e} exceeds bound {:.3e}",
                        r, bound
                    ))
                }))
            }
        };
        let residual = fact.expand().sub(&qf).max_abs();
        if residual <= bound {
            return Ok(fact);
        }
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, fact));
        }
    }
    let (residual, _) = best.expect("at least one hypothesis attempted");
    Err(Error::Numerical(format!(
        "factorization residual {:.3e} exceeds bound {:.3e}",
        residual, bound
    )))
}

fn assemble_factorization(
    coeffs: &[f64],
    found: &[Complex64],
    zero_mult: usize,
    max_mult: usize,
) -> Result<RealFactorization> {
    let mode = Mode::Float;
    let mut real_roots: Vec<(Coeff, usize)> = Vec::new();
    let mut complex_pairs: Vec<(Coeff, Coeff, usize)> = Vec::new();
    if zero_mult > 0 {
        real_roots.push((Coeff::F64(0.0), zero_mult));
    }
    let leading = Coeff::F64(*coeffs.last().unwrap());

    if !found.is_empty() {
        let clusters = roots::cluster_roots(found, max_mult);
        let scale = 1.0 + found.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let imag_tol = 1e-7 * scale;
        let mut pending: Vec<roots::RootCluster> = Vec::new();
        for cl in clusters {
            let z = roots::refine_cluster(&coeffs, &cl);
            if z.im.abs() <= imag_tol {
                real_roots.push((Coeff::F64(z.re), cl.multiplicity));
            } else {
                pending.push(roots::RootCluster {
                    center: z,
                    multiplicity: cl.multiplicity,
                });
            }
        }
        // pair complex clusters with their conjugates
        let mut used = vec![false; pending.len()];
        for i in 0..pending.len() {
            if used[i] || pending[i].center.im < 0.0 {
                continue;
            }
            let zi = pending[i].center;
            let mut best: Option<(usize, f64)> = None;
            for (j, cl) in pending.iter().enumerate() {
                if used[j] || j == i || cl.center.im > 0.0 {
                    continue;
                }
                let d = (zi - cl.center.conj()).norm();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            let (j, d) = best.ok_or_else(|| {
                Error::Numerical("unpaired complex root".into())
            })?;
            if d > 1e-4 * scale || pending[j].multiplicity != pending[i].multiplicity {
                return Err(Error::Numerical("inconsistent complex pairing".into()));
            }
            used[i] = true;
            used[j] = true;
            let alpha = (zi.re + pending[j].center.re) / 2.0;
            let beta = (zi.im.abs() + pending[j].center.im.abs()) / 2.0;
            complex_pairs.push((
                Coeff::F64(alpha),
                Coeff::F64(beta * beta),
                pending[i].multiplicity,
            ));
        }
        if used.iter().enumerate().any(|(i, &u)| !u && pending[i].center.im > 0.0) {
            return Err(Error::Numerical("unpaired complex root".into()));
        }
    }

    real_roots.sort_by(|a, b| a.0.cmp_real(&b.0));
    Ok(RealFactorization {
        mode,
        leading,
        real_roots,
        complex_pairs,
    })
}

/// Factor q over the reals. Rational roots are detected exactly in exact
/// mode; anything irrational falls back to the float path.
pub fn real_factorization(q: &UniPoly, tol: f64) -> Result<RealFactorization> {
    if q.is_zero() {
        return Err(Error::Input("cannot factor the zero polynomial".into()));
    }
    if q.mode() == Mode::Exact {
        if let Some(f) = exact_factorization(q) {
            return Ok(f);
        }
    }
    float_factorization(q, tol)
}

// ---------------------------------------------------------------------------
// witness search

fn witness_candidates(
    fact: &RealFactorization,
    interval: &IntervalSpec,
) -> Vec<f64> {
    let (lo, hi) = interval.bounds_f64();
    let roots: Vec<f64> = fact
        .real_roots
        .iter()
        .map(|(r, _)| r.to_f64())
        .collect();
    let scale = 1.0 + roots.iter().map(|r| r.abs()).fold(0.0, f64::max);
    // finite endpoints and in-domain roots, in order
    let mut breaks: Vec<f64> = Vec::new();
    if let Some(l) = lo {
        breaks.push(l);
    }
    for &r in &roots {
        if interval.contains_open_f64(r) {
            breaks.push(r);
        }
    }
    if let Some(h) = hi {
        breaks.push(h);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut cands: Vec<f64> = Vec::new();
    // simple unit offsets first on unbounded sides, then gap midpoints
    if lo.is_none() {
        match breaks.first() {
            Some(&first) => cands.push(first - 1.0),
            None => cands.extend([0.0, -1.0, 1.0]),
        }
    }
    for w in breaks.windows(2) {
        cands.push((w[0] + w[1]) / 2.0);
    }
    if hi.is_none() {
        if let Some(&last) = breaks.last() {
            cands.push(last + 1.0);
        }
    }
    let far = 2.0 * scale + 1.0;
    cands.extend([-far, far]);
    // fine grid as a fallback
    let g0 = lo.unwrap_or(-far);
    let g1 = hi.unwrap_or(far);
    for k in 0..=400 {
        cands.push(g0 + (g1 - g0) * k as f64 / 400.0);
    }
    cands.retain(|&x| interval.contains_open_f64(x));
    cands
}

fn find_witness(q: &UniPoly, fact: &RealFactorization, interval: &IntervalSpec) -> Option<Coeff> {
    for x in witness_candidates(fact, interval) {
        // prefer an exact rational witness in exact mode
        let c = match q.mode() {
            Mode::Exact => Coeff::Rat(BigRational::from_float(x)?),
            Mode::Float => Coeff::F64(x),
        };
        let v = q.eval(&c);
        if v.is_negative() && v.abs_f64() > 1e-12 * q.max_abs().max(1.0) * f64::EPSILON.sqrt() {
            return Some(c);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// decompositions

const TERM_GUARD: usize = 1 << 16;
/// Distance below which a root counts as sitting on an endpoint.
const ENDPOINT_TOL: f64 = 1e-9;

/// Side of the domain an odd linear factor leans on.
#[derive(Debug, Clone, Copy)]
enum OddSide {
    /// factor (x - r) with r <= lo endpoint: (x - lo) + (lo - r), no flip
    Lo,
    /// factor (x - r) with r >= hi endpoint: -[(hi - x) + (r - hi)], one flip
    Hi,
}

struct OddFactor {
    side: OddSide,
    /// nonnegative distance from the root to the endpoint
    shift: Coeff,
}

struct Assembly {
    mode: Mode,
    leading: Coeff,
    base_squares: Vec<Coeff>,
    odd: Vec<OddFactor>,
    pairs: Vec<(Coeff, Coeff, usize)>,
    flips: usize,
}

fn assemble(interval: &IntervalSpec, asm: Assembly) -> Result<Vec<PositivityTerm>> {
    let mode = asm.mode;
    let sign = if asm.flips % 2 == 0 { 1 } else { -1 };
    let lead = if sign < 0 {
        asm.leading.neg()
    } else {
        asm.leading.clone()
    };
    if !lead.is_positive() {
        return Err(Error::Internal(
            "assembly reached a nonpositive leading constant".into(),
        ));
    }

    // partial terms: (constant, lo count, hi count, extra squared roots)
    let mut partial: Vec<(Coeff, usize, usize, Vec<Coeff>)> =
        vec![(lead, 0, 0, Vec::new())];
    for f in &asm.odd {
        let mut next = Vec::new();
        for (c, nlo, nhi, sq) in &partial {
            match f.side {
                OddSide::Lo => next.push((c.clone(), nlo + 1, *nhi, sq.clone())),
                OddSide::Hi => next.push((c.clone(), *nlo, nhi + 1, sq.clone())),
            }
            if !f.shift.is_negligible() {
                next.push((c.mul(&f.shift), *nlo, *nhi, sq.clone()));
            }
        }
        partial = next;
        if partial.len() > TERM_GUARD {
            return Err(Error::Resource("decomposition term blowup".into()));
        }
    }
    for (alpha, beta_sq, mult) in &asm.pairs {
        for _ in 0..*mult {
            let mut next = Vec::new();
            for (c, nlo, nhi, sq) in &partial {
                let mut sq2 = sq.clone();
                sq2.push(alpha.clone());
                next.push((c.clone(), *nlo, *nhi, sq2));
                next.push((c.mul(beta_sq), *nlo, *nhi, sq.clone()));
            }
            partial = next;
            if partial.len() > TERM_GUARD {
                return Err(Error::Resource("decomposition term blowup".into()));
            }
        }
    }

    let (lo_end, hi_end): (Option<Coeff>, Option<Coeff>) = match interval {
        IntervalSpec::Global => (None, None),
        IntervalSpec::Interval(a, b) => (
            Some(a.clone().into_mode(mode)),
            Some(b.clone().into_mode(mode)),
        ),
        IntervalSpec::RayRight(b) => (Some(b.clone().into_mode(mode)), None),
        IntervalSpec::RayLeft(a) => (None, Some(a.clone().into_mode(mode))),
    };

    let mut terms = Vec::new();
    for (c, nlo, nhi, extra_sq) in partial {
        if c.is_negligible() {
            continue;
        }
        if !c.is_positive() {
            return Err(Error::Internal(
                "decomposition produced a nonpositive multiplier".into(),
            ));
        }
        let mut sq = asm.base_squares.clone();
        sq.extend(extra_sq);
        for _ in 0..nlo / 2 {
            sq.push(lo_end.clone().expect("lo endpoint present").clone());
        }
        for _ in 0..nhi / 2 {
            sq.push(hi_end.clone().expect("hi endpoint present").clone());
        }
        let weight = match (nlo % 2, nhi % 2, interval) {
            (0, 0, _) => Weight::One,
            (1, 0, IntervalSpec::Interval(_, _)) => Weight::XMinusA,
            (0, 1, IntervalSpec::Interval(_, _)) => Weight::BMinusX,
            (1, 1, IntervalSpec::Interval(_, _)) => Weight::Both,
            (1, 0, IntervalSpec::RayRight(_)) => Weight::XMinusB,
            (0, 1, IntervalSpec::RayLeft(_)) => Weight::AMinusX,
            _ => {
                return Err(Error::Internal(
                    "weight shape illegal for the interval kind".into(),
                ))
            }
        };
        sq.sort_by(|a, b| a.cmp_real(b));
        terms.push(PositivityTerm {
            multiplier: c,
            weight,
            squared_roots: sq,
        });
    }
    Ok(terms)
}

/// Decompose a polynomial nonnegative on all of R into a sum of
/// A * prod (x-b)^2 with A > 0.
pub fn global_psd_decompose(q: &UniPoly, tol: f64) -> Result<PositivityDecomposition> {
    if q.is_zero() {
        return Ok(PositivityDecomposition {
            interval: IntervalSpec::Global,
            mode: q.mode(),
            terms: Vec::new(),
        });
    }
    let fact = real_factorization(q, tol)?;
    let mode = fact.mode;
    let qm = q.into_mode(mode);

    let odd_root = fact.real_roots.iter().find(|(_, m)| m % 2 == 1);
    let bad_lead = !fact.leading.is_positive();
    if odd_root.is_some() || bad_lead {
        let witness = find_witness(&qm, &fact, &IntervalSpec::Global)
            .ok_or_else(|| Error::Internal("expected a negative point, found none".into()))?;
        return Err(Error::NotNonnegative { witness });
    }

    let mut base_squares = Vec::new();
    for (r, m) in &fact.real_roots {
        for _ in 0..m / 2 {
            base_squares.push(r.clone());
        }
    }
    let terms = assemble(
        &IntervalSpec::Global,
        Assembly {
            mode,
            leading: fact.leading.clone(),
            base_squares,
            odd: Vec::new(),
            pairs: fact.complex_pairs.clone(),
            flips: 0,
        },
    )?;
    Ok(PositivityDecomposition {
        interval: IntervalSpec::Global,
        mode,
        terms,
    })
}

/// Decompose a polynomial nonnegative on an interval or half line into
/// weighted squares, following the endpoint-shift construction.
pub fn interval_decompose(
    q: &UniPoly,
    interval: &IntervalSpec,
    tol: f64,
) -> Result<PositivityDecomposition> {
    interval.validate()?;
    if interval.is_global() {
        return Err(Error::Input(
            "interval_decompose requires a non-global interval".into(),
        ));
    }
    if q.is_zero() {
        return Ok(PositivityDecomposition {
            interval: interval.clone(),
            mode: q.mode(),
            terms: Vec::new(),
        });
    }
    let fact = real_factorization(q, tol)?;
    let mode = fact.mode;
    let qm = q.into_mode(mode);
    let iv = interval.into_mode(mode);
    let (lo_f, hi_f) = iv.bounds_f64();

    let mut base_squares = Vec::new();
    let mut odd = Vec::new();
    let mut flips = 0usize;
    let mut interior_odd = false;
    for (r, m) in &fact.real_roots {
        for _ in 0..m / 2 {
            base_squares.push(r.clone());
        }
        if m % 2 == 1 {
            let rf = r.to_f64();
            let at_lo = lo_f.map_or(false, |l| (rf - l).abs() <= ENDPOINT_TOL);
            let at_hi = hi_f.map_or(false, |h| (rf - h).abs() <= ENDPOINT_TOL);
            if at_lo || (lo_f.map_or(false, |l| rf < l)) {
                let lo_c = match &iv {
                    IntervalSpec::Interval(a, _) => a.clone(),
                    IntervalSpec::RayRight(b) => b.clone(),
                    _ => unreachable!("lo endpoint"),
                };
                let shift = if at_lo { Coeff::zero(mode) } else { lo_c.sub(r) };
                odd.push(OddFactor {
                    side: OddSide::Lo,
                    shift,
                });
            } else if at_hi || (hi_f.map_or(false, |h| rf > h)) {
                let hi_c = match &iv {
                    IntervalSpec::Interval(_, b) => b.clone(),
                    IntervalSpec::RayLeft(a) => a.clone(),
                    _ => unreachable!("hi endpoint"),
                };
                let shift = if at_hi { Coeff::zero(mode) } else { r.sub(&hi_c) };
                odd.push(OddFactor {
                    side: OddSide::Hi,
                    shift,
                });
                flips += 1;
            } else {
                interior_odd = true;
            }
        }
    }

    // an interior odd root, a bad far-side sign, or a negative sample all
    // mean q dips below zero on the open domain
    let mut negative = interior_odd;
    if !negative {
        let sign = fact.leading.is_positive();
        let total_sign = if flips % 2 == 0 { sign } else { !sign };
        if !total_sign {
            negative = true;
        }
    }
    if negative {
        let witness = find_witness(&qm, &fact, &iv)
            .ok_or_else(|| Error::Internal("expected a negative point, found none".into()))?;
        return Err(Error::NotNonnegativeOnInterval { witness });
    }

    let terms = assemble(
        &iv,
        Assembly {
            mode,
            leading: fact.leading.clone(),
            base_squares,
            odd,
            pairs: fact.complex_pairs.clone(),
            flips,
        },
    )?;
    Ok(PositivityDecomposition {
        interval: iv,
        mode,
        terms,
    })
}

/// Decompose on any domain kind.
pub fn decompose_on(
    q: &UniPoly,
    interval: &IntervalSpec,
    tol: f64,
) -> Result<PositivityDecomposition> {
    match interval {
        IntervalSpec::Global => global_psd_decompose(q, tol),
        _ => interval_decompose(q, interval, tol),
    }
}

/// Outcome of a convexity test: either convex, or a point where the second
/// derivative is negative.
#[derive(Debug, Clone)]
pub struct ConvexityCheck {
    pub convex: bool,
    pub witness: Option<Coeff>,
}

/// Is p convex on the domain? Decided through the positivity decomposition
/// of the second derivative.
pub fn is_convex_on(p: &UniPoly, interval: &IntervalSpec, tol: f64) -> Result<ConvexityCheck> {
    let q = second_derivative(p);
    match decompose_on(&q, interval, tol) {
        Ok(_) => Ok(ConvexityCheck {
            convex: true,
            witness: None,
        }),
        Err(Error::NotNonnegative { witness })
        | Err(Error::NotNonnegativeOnInterval { witness }) => Ok(ConvexityCheck {
            convex: false,
            witness: Some(witness),
        }),
        Err(e) => Err(e),
    }
}
