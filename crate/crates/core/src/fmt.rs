//! Serde helpers that write floats with 17 significant digits.

use serde::ser::{SerializeSeq, Serializer};
use serde_json::value::RawValue;

pub(crate) fn sig17(x: f64) -> String {
    if x == 0.0 {
        // keeps the sign of negative zero out of the files
        "0.0".to_string()
    } else if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        // JSON has no representation; callers validate before writing
        "null".to_string()
    }
}

fn raw(x: f64) -> Box<RawValue> {
    RawValue::from_string(sig17(x)).expect("formatted float is valid JSON")
}

pub(crate) fn f64_17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_some(&raw(*x))
}

pub(crate) fn vec_17<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&raw(x))?;
    }
    seq.end()
}

pub(crate) fn mat_17<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    struct Row<'a>(&'a [f64]);
    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            vec_17(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1_f64, 1.0 / 3.0, -2.5e-300, 123456.789] {
            let s = sig17(x);
            let digits = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(digits.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
