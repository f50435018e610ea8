//! JSON document format for certificates.
//!
//! Schema: top-level `kind` ("global" | "interval" | "ray_right" |
//! "ray_left"), optional `a`, `b` endpoint strings, `mode`
//! ("exact" | "float"), `clipped`, and `terms`: a list of
//! {shape, weight (R only), mult, poly: [[coefficient, word], ...]}.
//! Rational scalars are serialized as "p/q" strings, floats as JSON numbers.

use serde_json::{json, Map, Value};

use crate::algebra::{NcPoly, Word};
use crate::certificate::{CertTerm, Certificate, RWeight, Shape};
use crate::coeff::{parse_scalar, Coeff, Mode};
use crate::error::{Error, Result};
use crate::scalar::IntervalSpec;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        pos: 0,
        msg: msg.into(),
    }
}

fn coeff_to_value(c: &Coeff) -> Value {
    match c {
        Coeff::Rat(_) => Value::String(c.to_string()),
        Coeff::F64(v) => json!(v),
    }
}

fn coeff_from_value(v: &Value, mode: Mode) -> Result<Coeff> {
    let c = match v {
        Value::String(s) => parse_scalar(s)?,
        Value::Number(n) => Coeff::F64(
            n.as_f64()
                .ok_or_else(|| parse_err("non-finite coefficient"))?,
        ),
        _ => return Err(parse_err("coefficient must be a string or number")),
    };
    Ok(c.into_mode(mode))
}

fn poly_to_value(p: &NcPoly) -> Value {
    let entries: Vec<Value> = p
        .terms()
        .map(|(w, c)| json!([coeff_to_value(c), w.render()]))
        .collect();
    Value::Array(entries)
}

fn poly_from_value(v: &Value, mode: Mode) -> Result<NcPoly> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err("polynomial must be an array"))?;
    let mut p = NcPoly::zero(mode);
    for entry in arr {
        let pair = entry
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| parse_err("polynomial entry must be [coefficient, word]"))?;
        let c = coeff_from_value(&pair[0], mode)?;
        let word_text = pair[1]
            .as_str()
            .ok_or_else(|| parse_err("word must be a string"))?;
        let w = Word::parse(word_text)?;
        p = p
            .try_add(&NcPoly::monomial(c, w))
            .map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(p)
}

/// Serialize a certificate to its JSON document text.
pub fn codec_write(c: &Certificate) -> String {
    let mut doc = Map::new();
    let (kind, a, b) = match &c.interval {
        IntervalSpec::Global => ("global", None, None),
        IntervalSpec::Interval(a, b) => ("interval", Some(a), Some(b)),
        IntervalSpec::RayRight(b) => ("ray_right", None, Some(b)),
        IntervalSpec::RayLeft(a) => ("ray_left", Some(a), None),
    };
    doc.insert("kind".into(), json!(kind));
    if let Some(a) = a {
        doc.insert("a".into(), json!(a.to_string()));
    }
    if let Some(b) = b {
        doc.insert("b".into(), json!(b.to_string()));
    }
    doc.insert("mode".into(), json!(c.mode.to_string()));
    if c.clipped != 0.0 {
        doc.insert("clipped".into(), json!(c.clipped));
    }
    let terms: Vec<Value> = c
        .terms
        .iter()
        .map(|t| {
            let mut obj = Map::new();
            obj.insert("shape".into(), json!(t.shape.as_str()));
            if let Some(w) = t.weight {
                obj.insert("weight".into(), json!(w.as_str()));
            }
            obj.insert("mult".into(), coeff_to_value(&t.mult));
            obj.insert("poly".into(), poly_to_value(&t.poly));
            Value::Object(obj)
        })
        .collect();
    doc.insert("terms".into(), Value::Array(terms));
    serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable document")
}

/// Parse a certificate document.
pub fn codec_read(text: &str) -> Result<Certificate> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {}", e)))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("document must be a JSON object"))?;

    let mode = match obj.get("mode").and_then(|v| v.as_str()) {
        Some("exact") => Mode::Exact,
        Some("float") => Mode::Float,
        Some(other) => return Err(parse_err(format!("unknown mode {:?}", other))),
        None => return Err(parse_err("missing mode")),
    };

    let endpoint = |name: &str| -> Result<Coeff> {
        let v = obj
            .get(name)
            .ok_or_else(|| parse_err(format!("kind requires endpoint {:?}", name)))?;
        coeff_from_value(v, mode)
    };
    let interval = match obj.get("kind").and_then(|v| v.as_str()) {
        Some("global") => IntervalSpec::Global,
        Some("interval") => {
            let iv = IntervalSpec::Interval(endpoint("a")?, endpoint("b")?);
            iv.validate()
                .map_err(|e| parse_err(e.to_string()))?;
            iv
        }
        Some("ray_right") => IntervalSpec::RayRight(endpoint("b")?),
        Some("ray_left") => IntervalSpec::RayLeft(endpoint("a")?),
        Some(other) => return Err(parse_err(format!("unknown kind {:?}", other))),
        None => return Err(parse_err("missing kind")),
    };

    let clipped = obj
        .get("clipped")
        .map(|v| v.as_f64().ok_or_else(|| parse_err("clipped must be a number")))
        .transpose()?
        .unwrap_or(0.0);

    let raw_terms = obj
        .get("terms")
        .and_then(|v| v.as_array())
        .ok_or_else(|| parse_err("missing terms array"))?;
    let mut terms = Vec::new();
    for rt in raw_terms {
        let t = rt
            .as_object()
            .ok_or_else(|| parse_err("term must be an object"))?;
        let shape = t
            .get("shape")
            .and_then(|v| v.as_str())
            .and_then(Shape::from_str)
            .ok_or_else(|| parse_err("term shape must be one of Q, R, T, U"))?;
        let weight = match t.get("weight") {
            None => None,
            Some(v) => Some(
                v.as_str()
                    .and_then(RWeight::from_str)
                    .ok_or_else(|| parse_err("unknown weight descriptor"))?,
            ),
        };
        if (shape == Shape::R) != weight.is_some() {
            return Err(parse_err("weight present iff shape is R"));
        }
        if let Some(w) = weight {
            if !w.legal_for(&interval) {
                return Err(parse_err(format!(
                    "weight {:?} illegal for certificate kind",
                    w.as_str()
                )));
            }
        }
        if matches!(shape, Shape::T | Shape::U)
            && !matches!(interval, IntervalSpec::Interval(_, _))
        {
            return Err(parse_err("shapes T and U require kind interval"));
        }
        let mult = match t.get("mult") {
            Some(v) => coeff_from_value(v, mode)?,
            None => Coeff::one(mode),
        };
        let poly = poly_from_value(
            t.get("poly").ok_or_else(|| parse_err("term missing poly"))?,
            mode,
        )?;
        terms.push(CertTerm {
            shape,
            weight,
            mult,
            poly,
        });
    }
    Ok(Certificate {
        interval,
        mode,
        terms,
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{certify_global, certify_local, expand_certificate};
    use crate::scalar::parse_unipoly;

    #[test]
    fn roundtrip_global_exact() {
        let p = parse_unipoly("15*x^2 - 5*x^4 + x^6").unwrap();
        let c = certify_global(&p, 1e-9).unwrap();
        let text = codec_write(&c);
        let back = codec_read(&text).unwrap();
        assert_eq!(back.mode, c.mode);
        assert_eq!(back.terms.len(), c.terms.len());
        let e1 = expand_certificate(&c);
        let e2 = expand_certificate(&back);
        assert_eq!(e1, e2);
    }

    #[test]
    fn roundtrip_interval_with_weights() {
        let p = parse_unipoly("x^3").unwrap();
        let iv = IntervalSpec::RayRight(Coeff::from_int(0, Mode::Exact));
        let c = certify_local(&p, &iv, 1e-9).unwrap();
        let text = codec_write(&c);
        let back = codec_read(&text).unwrap();
        assert_eq!(expand_certificate(&back), expand_certificate(&c));
        assert_eq!(back.terms[0].weight, Some(RWeight::XMinusB));
    }

    #[test]
    fn roundtrip_float_mode() {
        let p = parse_unipoly("1.0*x^4").unwrap();
        let c = certify_global(&p, 1e-9).unwrap();
        assert_eq!(c.mode, Mode::Float);
        let text = codec_write(&c);
        let back = codec_read(&text).unwrap();
        let d = expand_certificate(&back)
            .try_sub(&expand_certificate(&c))
            .unwrap();
        assert!(d.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn rejects_inverted_interval() {
        let text = r#"{"kind":"interval","a":"1","b":"-1","mode":"exact","terms":[]}"#;
        assert!(matches!(codec_read(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_malformed_terms() {
        let bad_shape =
            r#"{"kind":"global","mode":"exact","terms":[{"shape":"Z","poly":[]}]}"#;
        assert!(codec_read(bad_shape).is_err());
        let weight_on_q = r#"{"kind":"global","mode":"exact","terms":[{"shape":"Q","weight":"x-a","poly":[["1","h"]]}]}"#;
        assert!(codec_read(weight_on_q).is_err());
        let t_on_ray = r#"{"kind":"ray_right","b":"0","mode":"exact","terms":[{"shape":"T","poly":[["1","h"]]}]}"#;
        assert!(codec_read(t_on_ray).is_err());
    }

    #[test]
    fn reads_schema_example() {
        let text = r#"{"kind":"global","mode":"float","terms":[{"shape":"Q","poly":[[1.4142135623730951,"h"]]}]}"#;
        let c = codec_read(text).unwrap();
        assert_eq!(c.terms.len(), 1);
        let e = expand_certificate(&c);
        let h2 = crate::algebra::Word(vec![crate::algebra::H, crate::algebra::H]);
        assert!((e.coeff(&h2).to_f64() - 2.0).abs() < 1e-12);
    }
}
