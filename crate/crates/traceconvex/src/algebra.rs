//! The free algebra R<x>: words over a letter alphabet, nc polynomials,
//! involution, cyclic canonicalization and evaluation on symmetric matrices.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::coeff::{Coeff, Mode, FLOAT_EPS};
use crate::error::{Error, Result};

/// A free symmetric variable, named by index: 0 is `x`, 1 is `h`, 2 is `h2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u32);

pub const X: Letter = Letter(0);
pub const H: Letter = Letter(1);
pub const H2: Letter = Letter(2);

impl Letter {
    pub fn name(&self) -> String {
        match self.0 {
            0 => "x".into(),
            1 => "h".into(),
            2 => "h2".into(),
            n => format!("y{}", n),
        }
    }

    pub fn from_name(name: &str) -> Option<Letter> {
        match name {
            "x" => Some(X),
            "h" | "h1" => Some(H),
            "h2" => Some(H2),
            _ => name.strip_prefix('y').and_then(|t| t.parse().ok()).map(Letter),
        }
    }
}

/// A word: a finite sequence of letters. The empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn single(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        let mut v = self.0.clone();
        v.reverse();
        Word(v)
    }

    pub fn count(&self, l: Letter) -> usize {
        self.0.iter().filter(|&&c| c == l).count()
    }

    /// Lexicographically least rotation, via Booth's algorithm.
    pub fn least_rotation(&self) -> Word {
        let n = self.len();
        if n < 2 {
            return self.clone();
        }
        let start = booth(&self.0);
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[start..]);
        v.extend_from_slice(&self.0[..start]);
        Word(v)
    }

    pub fn render(&self) -> String {
        if self.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|l| l.name())
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn parse(text: &str) -> Result<Word> {
        let s = text.trim();
        if s == "1" || s.is_empty() {
            return Ok(Word::empty());
        }
        let mut letters = Vec::new();
        for piece in s.split('*') {
            let piece = piece.trim();
            let l = Letter::from_name(piece).ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("unknown letter {:?}", piece),
            })?;
            letters.push(l);
        }
        Ok(Word(letters))
    }
}

/// Starting index of the least rotation of `w`.
fn booth(w: &[Letter]) -> usize {
    let n = w.len();
    let at = |i: usize| w[i % n];
    let mut f = vec![usize::MAX; 2 * n]; // failure function
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != usize::MAX && sj != at(k + i + 1) {
            if sj < at(k + i + 1) {
                k = j - i - 1;
            }
            i = f[i];
        }
        if i == usize::MAX && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = usize::MAX;
        } else {
            f[j - k] = if i == usize::MAX { 0 } else { i + 1 };
        }
    }
    k
}

// Words ordered by (length, lexicographic).
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An nc polynomial: a sparse coefficient table keyed by words.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct NcPoly {
    mode: Mode,
    terms: BTreeMap<Word, Coeff>,
}

impl NcPoly {
    pub fn zero(mode: Mode) -> Self {
        NcPoly {
            mode,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Coeff) -> Self {
        let mode = c.mode();
        let mut p = NcPoly::zero(mode);
        p.add_term(Word::empty(), c);
        p
    }

    pub fn one(mode: Mode) -> Self {
        NcPoly::constant(Coeff::one(mode))
    }

    pub fn letter(l: Letter, mode: Mode) -> Self {
        NcPoly::monomial(Coeff::one(mode), Word::single(l))
    }

    pub fn monomial(c: Coeff, w: Word) -> Self {
        let mode = c.mode();
        let mut p = NcPoly::zero(mode);
        p.add_term(w, c);
        p
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> Coeff {
        self.terms
            .get(w)
            .cloned()
            .unwrap_or_else(|| Coeff::zero(self.mode))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, l: Letter) -> usize {
        self.terms.keys().map(|w| w.count(l)).max().unwrap_or(0)
    }

    /// Every word uses letter `l` exactly `deg` times.
    pub fn is_homogeneous_in(&self, l: Letter, deg: usize) -> bool {
        self.terms.keys().all(|w| w.count(l) == deg)
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut ls: Vec<Letter> = Vec::new();
        for w in self.terms.keys() {
            for &l in &w.0 {
                if !ls.contains(&l) {
                    ls.push(l);
                }
            }
        }
        ls.sort();
        ls
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs_f64())
            .fold(0.0, f64::max)
    }

    fn add_term(&mut self, w: Word, c: Coeff) {
        debug_assert_eq!(c.mode(), self.mode);
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                if !c.is_negligible() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_negligible() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    fn check_mode(&self, other: &NcPoly) -> Result<()> {
        if self.mode != other.mode {
            return Err(Error::Input("coefficient mode mismatch".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_mode(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_mode(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.neg());
        }
        Ok(out)
    }

    /// Word-concatenation convolution.
    pub fn try_mul(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_mode(other)?;
        let mut out = NcPoly::zero(self.mode);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                out.add_term(wa.concat(wb), ca.mul(cb));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Coeff) -> NcPoly {
        assert_eq!(c.mode(), self.mode, "coefficient mode mismatch");
        let mut out = NcPoly::zero(self.mode);
        for (w, a) in &self.terms {
            out.add_term(w.clone(), a.mul(c));
        }
        out
    }

    pub fn negate(&self) -> NcPoly {
        let mut out = NcPoly::zero(self.mode);
        for (w, a) in &self.terms {
            out.add_term(w.clone(), a.neg());
        }
        out
    }

    /// The involution that reverses each word. An anti-automorphism.
    pub fn involute(&self) -> NcPoly {
        let mut out = NcPoly::zero(self.mode);
        for (w, c) in &self.terms {
            out.add_term(w.reversed(), c.clone());
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.involute() == *self
    }

    /// Canonical representative of the cyclic equivalence class: every word
    /// replaced by its least rotation, merged coefficients.
    pub fn cyclic_canonical(&self) -> NcPoly {
        let mut out = NcPoly::zero(self.mode);
        for (w, c) in &self.terms {
            out.add_term(w.least_rotation(), c.clone());
        }
        out
    }

    /// True iff self and other differ by a sum of commutators, up to `tol`
    /// on each canonical coefficient.
    pub fn cyc_equal(&self, other: &NcPoly, tol: f64) -> Result<bool> {
        self.check_mode(other)?;
        let diff = self.try_sub(other)?.cyclic_canonical();
        Ok(diff.terms.values().all(|c| c.abs_f64() <= tol))
    }

    pub fn into_mode(&self, mode: Mode) -> NcPoly {
        if mode == self.mode {
            return self.clone();
        }
        let mut out = NcPoly::zero(mode);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.clone().into_mode(mode));
        }
        out
    }

    /// Substitute one letter for another.
    pub fn rename_letter(&self, from: Letter, to: Letter) -> NcPoly {
        let mut out = NcPoly::zero(self.mode);
        for (w, c) in &self.terms {
            let nw = Word(
                w.0.iter()
                    .map(|&l| if l == from { to } else { l })
                    .collect(),
            );
            out.add_term(nw, c.clone());
        }
        out
    }
}

impl std::ops::Add for &NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: &NcPoly) -> NcPoly {
        self.try_add(rhs).expect("mode mismatch")
    }
}

impl std::ops::Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self.try_sub(rhs).expect("mode mismatch")
    }
}

impl std::ops::Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        self.try_mul(rhs).expect("mode mismatch")
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
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
            let one = Coeff::one(self.mode);
            if w.is_empty() {
                write!(f, "{}", mag)?;
            } else if mag == one {
                write!(f, "{}", w.render())?;
            } else {
                write!(f, "{}*{}", mag, w.render())?;
            }
        }
        Ok(())
    }
}

/// An assignment of a real symmetric n x n matrix to each letter.
#[derive(Debug, Clone)]
pub struct MatrixAssignment {
    n: usize,
    mode: Mode,
    mats: BTreeMap<Letter, Vec<Coeff>>, // row-major
}

impl MatrixAssignment {
    pub fn new(n: usize, mode: Mode) -> Self {
        MatrixAssignment {
            n,
            mode,
            mats: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Assign a symmetric matrix (row-major, n*n entries).
    pub fn assign(&mut self, l: Letter, data: Vec<Coeff>) -> Result<()> {
        if data.len() != self.n * self.n {
            return Err(Error::Input(format!(
                "matrix for {} has {} entries, expected {}",
                l.name(),
                data.len(),
                self.n * self.n
            )));
        }
        for c in &data {
            if c.mode() != self.mode {
                return Err(Error::Input("matrix coefficient mode mismatch".into()));
            }
        }
        // symmetry within 1e-12 (exact in rational mode)
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = data[i * self.n + j].sub(&data[j * self.n + i]);
                let ok = match self.mode {
                    Mode::Exact => d.is_zero(),
                    Mode::Float => d.abs_f64() <= 1e-12,
                };
                if !ok {
                    return Err(Error::Input(format!(
                        "matrix for {} is not symmetric",
                        l.name()
                    )));
                }
            }
        }
        self.mats.insert(l, data);
        Ok(())
    }

    pub fn assign_f64(&mut self, l: Letter, data: &[f64]) -> Result<()> {
        self.assign(l, data.iter().map(|&v| Coeff::F64(v)).collect())
    }

    pub fn get(&self, l: Letter) -> Option<&Vec<Coeff>> {
        self.mats.get(&l)
    }
}

fn mat_mul(a: &[Coeff], b: &[Coeff], n: usize, mode: Mode) -> Vec<Coeff> {
    let mut out = vec![Coeff::zero(mode); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = &a[i * n + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = out[i * n + j].add(&aik.mul(&b[k * n + j]));
            }
        }
    }
    out
}

/// Evaluate `p` at the assignment: word-by-word matrix products summed with
/// coefficients.
pub fn evaluate(p: &NcPoly, asg: &MatrixAssignment) -> Result<Vec<Coeff>> {
    if p.mode() != asg.mode() {
        return Err(Error::Input("polynomial/assignment mode mismatch".into()));
    }
    for l in p.letters() {
        if asg.get(l).is_none() {
            return Err(Error::Input(format!("letter {} not assigned", l.name())));
        }
    }
    if asg.mode() == Mode::Float {
        let n = asg.n();
        let mats: BTreeMap<Letter, Vec<f64>> = p
            .letters()
            .into_iter()
            .map(|l| {
                (
                    l,
                    asg.get(l).unwrap().iter().map(|c| c.to_f64()).collect(),
                )
            })
            .collect();
        let out = evaluate_f64(p, &mats, n);
        return Ok(out.into_iter().map(Coeff::F64).collect());
    }
    let n = asg.n();
    let mode = asg.mode();
    let mut acc = vec![Coeff::zero(mode); n * n];
    for (w, c) in p.terms() {
        let mut prod: Vec<Coeff> = (0..n * n)
            .map(|i| {
                if i % n == i / n {
                    Coeff::one(mode)
                } else {
                    Coeff::zero(mode)
                }
            })
            .collect();
        for &l in &w.0 {
            prod = mat_mul(&prod, asg.get(l).unwrap(), n, mode);
        }
        for i in 0..n * n {
            acc[i] = acc[i].add(&c.mul(&prod[i]));
        }
    }
    Ok(acc)
}

/// Fast float evaluation used by the fuzz oracles.
pub fn evaluate_f64(p: &NcPoly, mats: &BTreeMap<Letter, Vec<f64>>, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n * n];
    let mut prod = vec![0.0; n * n];
    let mut tmp = vec![0.0; n * n];
    for (w, c) in p.terms() {
        let cv = c.to_f64();
        prod.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            prod[i * n + i] = 1.0;
        }
        for &l in &w.0 {
            let m = &mats[&l];
            tmp.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                for k in 0..n {
                    let pik = prod[i * n + k];
                    if pik == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        tmp[i * n + j] += pik * m[k * n + j];
                    }
                }
            }
            std::mem::swap(&mut prod, &mut tmp);
        }
        for i in 0..n * n {
            acc[i] += cv * prod[i];
        }
    }
    acc
}

/// Trace of `evaluate(p, asg)`.
pub fn trace_evaluate(p: &NcPoly, asg: &MatrixAssignment) -> Result<Coeff> {
    let m = evaluate(p, asg)?;
    let n = asg.n();
    let mut t = Coeff::zero(asg.mode());
    for i in 0..n {
        t = t.add(&m[i * n + i]);
    }
    Ok(t)
}

pub fn trace_f64(m: &[f64], n: usize) -> f64 {
    (0..n).map(|i| m[i * n + i]).sum()
}

/// Keep float tables clean after long chains of arithmetic.
pub fn cleanup(p: &NcPoly) -> NcPoly {
    if p.mode() == Mode::Exact {
        return p.clone();
    }
    let mut out = NcPoly::zero(p.mode());
    for (w, c) in p.terms() {
        if c.abs_f64() >= FLOAT_EPS {
            out.add_term(w.clone(), c.clone());
        }
    }
    out
}
