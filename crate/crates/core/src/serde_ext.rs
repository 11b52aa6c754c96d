//! JSON encodings for values serde_json cannot represent directly.

use serde::Serializer;

/// Finite values as numbers, infinities as the strings `"inf"` / `"-inf"`.
pub fn extended_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn extended_reals<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&ExtendedReal(*x))?;
    }
    seq.end()
}

pub struct ExtendedReal(pub f64);

impl serde::Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        extended_real(&self.0, s)
    }
}
