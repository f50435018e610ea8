//! Noncommutative directional derivatives, Hessians and the symmetrizer,
//! in brute-force and closed-form variants.

use itertools::Itertools;

use crate::algebra::{Letter, NcPoly, Word, H, X};
use crate::coeff::{Coeff, Mode};
use crate::error::{Error, Result};

/// One argument of the symmetrizer: a binomial (x - shift) or a bare
/// direction letter.
#[derive(Debug, Clone)]
pub enum AffineArg {
    Shift(Coeff),
    Direction(Letter),
}

impl AffineArg {
    fn to_poly(&self, mode: Mode) -> NcPoly {
        match self {
            AffineArg::Shift(a) => {
                let x = NcPoly::letter(X, mode);
                let c = NcPoly::constant(a.clone().into_mode(mode));
                &x - &c
            }
            AffineArg::Direction(l) => NcPoly::letter(*l, mode),
        }
    }
}

/// The l-th directional derivative of `p` (a polynomial in x only) in the
/// given direction: d^l/dt^l p(x + t h) at t = 0.
pub fn directional_derivative(p: &NcPoly, order: usize, direction: Letter) -> Result<NcPoly> {
    if order == 0 {
        return Err(Error::Input("derivative order must be at least 1".into()));
    }
    if direction == X {
        return Err(Error::Input("direction letter must differ from x".into()));
    }
    for l in p.letters() {
        if l != X {
            return Err(Error::Input(format!(
                "polynomial must use only x, found {}",
                l.name()
            )));
        }
    }
    let mode = p.mode();
    let mut fact = Coeff::one(mode);
    for i in 1..=order {
        fact = fact.mul(&Coeff::from_int(i as i64, mode));
    }
    let mut out = NcPoly::zero(mode);
    for (w, c) in p.terms() {
        let m = w.len();
        if m < order {
            continue;
        }
        let scale = c.mul(&fact);
        // all placements of `order` direction letters among m positions
        for combo in (0..m).combinations(order) {
            let mut letters = vec![X; m];
            for &i in &combo {
                letters[i] = direction;
            }
            out = out.try_add(&NcPoly::monomial(scale.clone(), Word(letters)))?;
        }
    }
    Ok(out)
}

/// The nc Hessian p''(x)[h]: second directional derivative in direction h.
pub fn hessian(p: &NcPoly) -> Result<NcPoly> {
    if p.degree() <= 1 {
        return Ok(NcPoly::zero(p.mode()));
    }
    directional_derivative(p, 2, H)
}

/// Average of the products of `factors` over all orderings.
pub fn sym_bruteforce_factors(factors: &[NcPoly], mode: Mode) -> Result<NcPoly> {
    let d = factors.len();
    if d > 10 {
        return Err(Error::Resource(format!(
            "symmetrizer arity {} exceeds the factorial guard (10)",
            d
        )));
    }
    if d == 0 {
        return Ok(NcPoly::one(mode));
    }
    let mut sum = NcPoly::zero(mode);
    let mut count: i64 = 0;
    for perm in (0..d).permutations(d) {
        let mut prod = NcPoly::one(mode);
        for i in perm {
            prod = prod.try_mul(&factors[i])?;
        }
        sum = sum.try_add(&prod)?;
        count += 1;
    }
    let inv = Coeff::one(mode).div(&Coeff::from_int(count, mode));
    Ok(sum.scale(&inv))
}

/// Sym_d over affine arguments, by permutation enumeration. d <= 10.
pub fn sym_bruteforce(args: &[AffineArg], mode: Mode) -> Result<NcPoly> {
    let factors: Vec<NcPoly> = args.iter().map(|a| a.to_poly(mode)).collect();
    sym_bruteforce_factors(&factors, mode)
}

/// Closed form for Sym_{k+2}(x, ..., x, dir1, dir2): the word with dir1 at
/// position i and dir2 at position j (i != j) has coefficient
/// 1/((k+2)(k+1)); with dir1 = dir2 the two placements merge to
/// 2/((k+2)(k+1)).
fn sym_power_pair(k: usize, dirs: (Letter, Letter), mode: Mode) -> NcPoly {
    let len = k + 2;
    let unit = Coeff::one(mode).div(&Coeff::from_int((len * (len - 1)) as i64, mode));
    let mut out = NcPoly::zero(mode);
    for i in 0..len {
        for j in 0..len {
            if i == j {
                continue;
            }
            let mut letters = vec![X; len];
            letters[i] = dirs.0;
            letters[j] = dirs.1;
            out = out
                .try_add(&NcPoly::monomial(unit.clone(), Word(letters)))
                .expect("same mode");
        }
    }
    out
}

/// Sym_{d+2}(x-b_1, ..., x-b_d, dir1, dir2) by subset expansion: the
/// distributivity lemma turns each binomial into a choice between keeping
/// an x slot and multiplying by -b_i.
pub fn sym_affine(roots: &[Coeff], dirs: (Letter, Letter), mode: Mode) -> NcPoly {
    let d = roots.len();
    let roots: Vec<Coeff> = roots.iter().map(|r| r.clone().into_mode(mode)).collect();
    let mut out = NcPoly::zero(mode);
    for mask in 0u64..(1u64 << d) {
        // S = set of dropped binomials, contributing prod of (-b_i)
        let mut scale = Coeff::one(mode);
        let mut kept = 0usize;
        for (i, root) in roots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                scale = scale.mul(&root.neg());
            } else {
                kept += 1;
            }
        }
        if scale.is_zero() {
            continue;
        }
        let inner = sym_power_pair(kept, dirs, mode);
        out = out.try_add(&inner.scale(&scale)).expect("same mode");
    }
    out
}

/// Reassemble the Hessian of a polynomial whose scalar second derivative is
/// given in factored form: sum of A * prod (x - a_i). Each term maps to
/// A * Sym(x-a_1, ..., x-a_d, h, h).
pub fn hessian_from_second_derivative(factored: &[(Coeff, Vec<Coeff>)], mode: Mode) -> NcPoly {
    let mut out = NcPoly::zero(mode);
    for (a, roots) in factored {
        let term = sym_affine(roots, (H, H), mode).scale(&a.clone().into_mode(mode));
        out = out.try_add(&term).expect("same mode");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::H2;

    fn xpow(k: usize, mode: Mode) -> NcPoly {
        NcPoly::monomial(Coeff::one(mode), Word(vec![X; k]))
    }

    #[test]
    fn first_derivative_of_square() {
        let m = Mode::Exact;
        let d = directional_derivative(&xpow(2, m), 1, H).unwrap();
        let want = &NcPoly::monomial(Coeff::one(m), Word(vec![X, H]))
            + &NcPoly::monomial(Coeff::one(m), Word(vec![H, X]));
        assert_eq!(d, want);
    }

    #[test]
    fn second_derivative_of_cube() {
        let m = Mode::Exact;
        let d = directional_derivative(&xpow(3, m), 2, H).unwrap();
        let two = Coeff::from_int(2, m);
        let want = &(&NcPoly::monomial(two.clone(), Word(vec![X, H, H]))
            + &NcPoly::monomial(two.clone(), Word(vec![H, X, H])))
            + &NcPoly::monomial(two.clone(), Word(vec![H, H, X]));
        assert_eq!(d, want);
    }

    #[test]
    fn third_derivative_of_cube() {
        let m = Mode::Exact;
        let d = directional_derivative(&xpow(3, m), 3, H).unwrap();
        assert_eq!(d, NcPoly::monomial(Coeff::from_int(6, m), Word(vec![H; 3])));
    }

    #[test]
    fn order_zero_rejected() {
        assert!(matches!(
            directional_derivative(&xpow(2, Mode::Exact), 0, H),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn hessian_of_square() {
        let m = Mode::Exact;
        let h = hessian(&xpow(2, m)).unwrap();
        assert_eq!(h, NcPoly::monomial(Coeff::from_int(2, m), Word(vec![H, H])));
    }

    #[test]
    fn hessian_of_quartic_has_six_words() {
        let m = Mode::Exact;
        let h = hessian(&xpow(4, m)).unwrap();
        assert_eq!(h.num_terms(), 6);
        for (_, c) in h.terms() {
            assert_eq!(*c, Coeff::from_int(2, m));
        }
        assert!(h.is_homogeneous_in(H, 2));
    }

    #[test]
    fn hessian_of_linear_is_zero() {
        let m = Mode::Exact;
        assert!(hessian(&xpow(1, m)).unwrap().is_zero());
    }

    #[test]
    fn hessian_of_paper_polynomial() {
        // p = 15x^2 - 5x^4 + x^6
        let m = Mode::Exact;
        let p = &(&xpow(2, m).scale(&Coeff::from_int(15, m))
            + &xpow(4, m).scale(&Coeff::from_int(-5, m)))
            + &xpow(6, m);
        let h = hessian(&p).unwrap();
        assert_eq!(h.degree(), 6);
        assert!(h.is_homogeneous_in(H, 2));
        assert_eq!(h.coeff(&Word(vec![H, H])), Coeff::from_int(30, m));
    }

    #[test]
    fn sym_two_generators() {
        let m = Mode::Exact;
        let s = sym_bruteforce(
            &[AffineArg::Shift(Coeff::zero(m)), AffineArg::Direction(H)],
            m,
        )
        .unwrap();
        let half = Coeff::from_ratio(1, 2, m);
        let want = &NcPoly::monomial(half.clone(), Word(vec![X, H]))
            + &NcPoly::monomial(half, Word(vec![H, X]));
        assert_eq!(s, want);
    }

    #[test]
    fn sym_three_with_duplicate_direction() {
        let m = Mode::Exact;
        let s = sym_bruteforce(
            &[
                AffineArg::Shift(Coeff::zero(m)),
                AffineArg::Direction(H),
                AffineArg::Direction(H),
            ],
            m,
        )
        .unwrap();
        let third = Coeff::from_ratio(1, 3, m);
        let want = &(&NcPoly::monomial(third.clone(), Word(vec![X, H, H]))
            + &NcPoly::monomial(third.clone(), Word(vec![H, X, H])))
            + &NcPoly::monomial(third, Word(vec![H, H, X]));
        assert_eq!(s, want);
    }

    #[test]
    fn sym_distributivity_instance() {
        // Sym2(x-1, h) = (xh+hx)/2 - h
        let m = Mode::Exact;
        let s = sym_bruteforce(
            &[
                AffineArg::Shift(Coeff::one(m)),
                AffineArg::Direction(H),
            ],
            m,
        )
        .unwrap();
        let half = Coeff::from_ratio(1, 2, m);
        let want = &(&NcPoly::monomial(half.clone(), Word(vec![X, H]))
            + &NcPoly::monomial(half, Word(vec![H, X])))
            - &NcPoly::letter(H, m);
        assert_eq!(s, want);
    }

    #[test]
    fn factorial_guard() {
        let m = Mode::Exact;
        let args: Vec<AffineArg> = (0..11).map(|_| AffineArg::Direction(H)).collect();
        assert!(matches!(sym_bruteforce(&args, m), Err(Error::Resource(_))));
    }

    #[test]
    fn sym_affine_degenerate_cases() {
        let m = Mode::Exact;
        // d = 0: Sym2(h, h) = h^2
        let s0 = sym_affine(&[], (H, H), m);
        assert_eq!(s0, NcPoly::monomial(Coeff::one(m), Word(vec![H, H])));
        // d = 1, b = 0: Sym3(x, h, h)
        let s1 = sym_affine(&[Coeff::zero(m)], (H, H), m);
        let third = Coeff::from_ratio(1, 3, m);
        let want = &(&NcPoly::monomial(third.clone(), Word(vec![X, H, H]))
            + &NcPoly::monomial(third.clone(), Word(vec![H, X, H])))
            + &NcPoly::monomial(third, Word(vec![H, H, X]));
        assert_eq!(s1, want);
    }

    #[test]
    fn sym_affine_matches_bruteforce() {
        let m = Mode::Exact;
        let cases: Vec<Vec<Coeff>> = vec![
            vec![Coeff::from_ratio(1, 2, m), Coeff::from_int(-3, m)],
            vec![
                Coeff::from_int(2, m),
                Coeff::from_ratio(-5, 3, m),
                Coeff::from_int(1, m),
            ],
            vec![Coeff::from_int(7, m)],
        ];
        for roots in cases {
            for dirs in [(H, H), (H, H2)] {
                let fast = sym_affine(&roots, dirs, m);
                let mut args: Vec<AffineArg> =
                    roots.iter().map(|r| AffineArg::Shift(r.clone())).collect();
                args.push(AffineArg::Direction(dirs.0));
                args.push(AffineArg::Direction(dirs.1));
                let slow = sym_bruteforce(&args, m).unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn hessian_from_factored_constant() {
        let m = Mode::Exact;
        let h = hessian_from_second_derivative(&[(Coeff::one(m), vec![])], m);
        assert_eq!(h, NcPoly::monomial(Coeff::one(m), Word(vec![H, H])));
    }

    #[test]
    fn hessian_from_factored_cube() {
        // d2p/dx2 = 6x, p = x^3
        let m = Mode::Exact;
        let h = hessian_from_second_derivative(&[(Coeff::from_int(6, m), vec![Coeff::zero(m)])], m);
        assert_eq!(h, hessian(&xpow(3, m)).unwrap());
    }

    #[test]
    fn hessian_from_factored_quartic() {
        // d2p/dx2 = 12x^2, p = x^4
        let m = Mode::Exact;
        let h = hessian_from_second_derivative(
            &[(Coeff::from_int(12, m), vec![Coeff::zero(m), Coeff::zero(m)])],
            m,
        );
        assert_eq!(h, hessian(&xpow(4, m)).unwrap());
    }

    #[test]
    fn symmetrizer_permutation_invariance() {
        let m = Mode::Exact;
        let args = [
            AffineArg::Shift(Coeff::from_int(1, m)),
            AffineArg::Shift(Coeff::from_int(-2, m)),
            AffineArg::Direction(H),
            AffineArg::Direction(H2),
        ];
        let base = sym_bruteforce(&args, m).unwrap();
        let permuted = [
            args[2].clone(),
            args[0].clone(),
            args[3].clone(),
            args[1].clone(),
        ];
        assert_eq!(sym_bruteforce(&permuted, m).unwrap(), base);
    }
}
