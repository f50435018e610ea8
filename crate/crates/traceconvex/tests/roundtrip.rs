//! Property tests: parse/display, document codec, and decomposition
//! expansions are mutually consistent.

use proptest::prelude::*;

use traceconvex::algebra::{NcPoly, Word, H, X};
use traceconvex::certificate::{
    certify_global, expand_certificate, symbolic_residual, CertTerm, Certificate, Shape,
};
use traceconvex::codec::{codec_read, codec_write};
use traceconvex::coeff::{Coeff, Mode};
use traceconvex::scalar::{global_psd_decompose, parse_unipoly, IntervalSpec, UniPoly};

fn rat(num: i64, den: i64) -> Coeff {
    Coeff::from_ratio(num, den, Mode::Exact)
}

fn coeff_strategy() -> impl Strategy<Value = Coeff> {
    (-40i64..=40, 1i64..=9).prop_map(|(n, d)| rat(n, d))
}

fn unipoly_strategy() -> impl Strategy<Value = UniPoly> {
    prop::collection::vec(coeff_strategy(), 1..=9)
        .prop_map(|coeffs| UniPoly::new(Mode::Exact, coeffs))
}

fn word_strategy() -> impl Strategy<Value = Word> {
    prop::collection::vec(prop::bool::ANY, 0..=5)
        .prop_map(|bits| Word(bits.into_iter().map(|b| if b { H } else { X }).collect()))
}

fn ncpoly_strategy() -> impl Strategy<Value = NcPoly> {
    prop::collection::vec((coeff_strategy(), word_strategy()), 1..=4).prop_map(|terms| {
        let mut p = NcPoly::zero(Mode::Exact);
        for (c, w) in terms {
            p = p.try_add(&NcPoly::monomial(c, w)).unwrap();
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_display_roundtrip(p in unipoly_strategy()) {
        let text = p.to_string();
        let back = parse_unipoly(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn codec_roundtrip_preserves_certificates(polys in prop::collection::vec(ncpoly_strategy(), 1..=3),
                                              mults in prop::collection::vec((0i64..=20, 1i64..=5), 3)) {
        let terms: Vec<CertTerm> = polys
            .into_iter()
            .zip(mults)
            .map(|(poly, (n, d))| CertTerm {
                shape: Shape::Q,
                weight: None,
                mult: rat(n, d),
                poly,
            })
            .collect();
        let cert = Certificate {
            interval: IntervalSpec::Global,
            mode: Mode::Exact,
            terms,
            clipped: 0.0,
        };
        let text = codec_write(&cert);
        let back = codec_read(&text).unwrap();
        prop_assert_eq!(expand_certificate(&back), expand_certificate(&cert));
        // a second trip through the codec is textually stable
        prop_assert_eq!(codec_write(&back), text);
    }

    #[test]
    fn square_sums_certify(s in prop::collection::vec(coeff_strategy(), 1..=4)
                               .prop_map(|c| UniPoly::new(Mode::Exact, c))) {
        // p'' = s^2 + 1 is positive, so the double antiderivative certifies;
        // irrational roots route through float arithmetic, so the residual
        // is only near zero
        let q = s.mul(&s).add(&UniPoly::constant(rat(1, 1)));
        let p = q.antiderivative().antiderivative();
        let cert = certify_global(&p, 1e-9).unwrap();
        prop_assert!(symbolic_residual(&p, &cert) <= 1e-6 * q.max_abs().max(1.0));
    }

    #[test]
    fn psd_decomposition_expands_back(s in prop::collection::vec(coeff_strategy(), 1..=4)
                                          .prop_map(|c| UniPoly::new(Mode::Exact, c)),
                                      extra in 1i64..=10) {
        let q = s.mul(&s).add(&UniPoly::constant(rat(extra, 1)));
        let dec = global_psd_decompose(&q, 1e-9).unwrap();
        let diff = dec
            .expand()
            .into_mode(Mode::Float)
            .sub(&q.into_mode(Mode::Float))
            .max_abs();
        prop_assert!(diff <= 1e-6 * q.max_abs().max(1.0));
    }
}
