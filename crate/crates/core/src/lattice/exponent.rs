//! Exponents in `[1, inf]`, serialized as JSON numbers or the string `"inf"`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
            other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
        },
    }
}

/// Hölder conjugate `s' = s / (s - 1)`, with `1' = inf` and `inf' = 1`.
pub fn conjugate(s: f64) -> f64 {
    if s == 1.0 {
        f64::INFINITY
    } else if s.is_infinite() {
        1.0
    } else {
        s / (s - 1.0)
    }
}

pub(crate) fn is_exponent(s: f64) -> bool {
    s >= 1.0 && !s.is_nan()
}

