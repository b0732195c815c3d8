//! Serde helpers for Lebesgue exponents, which may be infinite. JSON has no
//! infinity literal, so `∞` is written as the string `"inf"`.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

struct ExponentVisitor;

impl<'de> Visitor<'de> for ExponentVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        match v {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            other => other.parse().map_err(|_| E::custom(format!("bad exponent {other:?}"))),
        }
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    d.deserialize_any(ExponentVisitor)
}

/// Formats an exponent for tables and CSV rows.
pub fn display(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrap {
        #[serde(with = "super")]
        q: f64,
    }

    #[test]
    fn infinity_round_trips() {
        let s = serde_json::to_string(&Wrap { q: f64::INFINITY }).unwrap();
        assert_eq!(s, r#"{"q":"inf"}"#);
        assert_eq!(serde_json::from_str::<Wrap>(&s).unwrap().q, f64::INFINITY);
        assert_eq!(serde_json::from_str::<Wrap>(r#"{"q":2}"#).unwrap().q, 2.0);
        assert_eq!(serde_json::from_str::<Wrap>(r#"{"q":1.5}"#).unwrap().q, 1.5);
    }
}
