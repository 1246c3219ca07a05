//! Serde helpers for arbitrary-precision scalars in JSON.
//!
//! Integers are emitted as plain JSON numbers when they fit in `i64` and as
//! decimal strings otherwise; both forms are accepted on input. Rationals
//! travel as `"num/den"` strings (or a bare integer form).

use std::str::FromStr;

use num_traits::ToPrimitive;
use serde_json::Value;

use crate::{Int, Rat};

pub fn int_to_value(n: &Int) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(n.to_string()),
    }
}

pub fn int_from_value(v: &Value) -> Result<Int, String> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Int::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(Int::from(u))
            } else {
                Err(format!("non-integer number {n} in integer position"))
            }
        }
        Value::String(s) => {
            Int::from_str(s).map_err(|e| format!("bad integer literal {s:?}: {e}"))
        }
        other => Err(format!("expected integer, found {other}")),
    }
}

pub fn rat_to_string(q: &Rat) -> String {
    if q.denom() == &Int::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat_from_str(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = Int::from_str(num.trim()).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
        let d = Int::from_str(den.trim()).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
        if d == Int::from(0) {
            return Err("zero denominator".to_string());
        }
        Ok(Rat::new(n, d))
    } else {
        let n = Int::from_str(s).map_err(|e| format!("bad rational literal {s:?}: {e}"))?;
        Ok(Rat::from_integer(n))
    }
}

pub fn rat_from_value(v: &Value) -> Result<Rat, String> {
    match v {
        Value::String(s) => rat_from_str(s),
        Value::Number(_) => int_from_value(v).map(Rat::from_integer),
        other => Err(format!("expected rational, found {other}")),
    }
}

pub mod int_serde {
    //! `#[serde(with = "...")]` adapter for a single [`Int`] field.

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use crate::Int;

    pub fn serialize<S: Serializer>(n: &Int, ser: S) -> Result<S::Ok, S::Error> {
        super::int_to_value(n).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Int, D::Error> {
        let v = Value::deserialize(de)?;
        super::int_from_value(&v).map_err(D::Error::custom)
    }
}

pub mod int_vec_serde {
    //! Adapter for `Vec<Int>` fields.

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use crate::Int;

    pub fn serialize<S: Serializer>(v: &[Int], ser: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(super::int_to_value)
            .collect::<Vec<_>>()
            .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Int>, D::Error> {
        let vals = Vec::<Value>::deserialize(de)?;
        vals.iter()
            .map(|v| super::int_from_value(v).map_err(D::Error::custom))
            .collect()
    }
}

pub mod int_vec_vec_serde {
    //! Adapter for `Vec<Vec<Int>>` fields (generator lists).

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use crate::Int;

    pub fn serialize<S: Serializer>(v: &[Vec<Int>], ser: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(super::int_to_value).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Int>>, D::Error> {
        let vals = Vec::<Vec<Value>>::deserialize(de)?;
        vals.iter()
            .map(|row| {
                row.iter()
                    .map(|v| super::int_from_value(v).map_err(D::Error::custom))
                    .collect()
            })
            .collect()
    }
}

pub mod rat_serde {
    //! Adapter for a single [`Rat`] field, encoded `"num/den"`.

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use crate::Rat;

    pub fn serialize<S: Serializer>(q: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        super::rat_to_string(q).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let v = Value::deserialize(de)?;
        super::rat_from_value(&v).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_string_roundtrip() {
        for s in ["3/4", "-5/7", "12", "-1/2"] {
            let q = rat_from_str(s).unwrap();
            assert_eq!(rat_to_string(&q), s);
        }
        // normalization to lowest terms
        assert_eq!(rat_to_string(&rat_from_str("2/4").unwrap()), "1/2");
        assert!(rat_from_str("1/0").is_err());
    }
}
