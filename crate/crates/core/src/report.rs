//! Shared helpers for machine-readable reports.

use serde::Serializer;

/// Artifact version string embedded in every report.
pub const VERSION: &str = concat!("codesense ", env!("CARGO_PKG_VERSION"));

/// `x` rounded to 12 significant decimal digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Serializes a float with 12 significant digits; non-finite values become `null`.
pub fn sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round_sig12(*x))
    } else {
        s.serialize_none()
    }
}

pub fn sig12_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig12(v, s),
        None => s.serialize_none(),
    }
}

pub fn sig12_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&if x.is_finite() {
            Some(round_sig12(*x))
        } else {
            None
        })?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(
            round_sig12(1.0 - 15_033_173.0 / 33_554_432.0),
            0.551_976_531_744
        );
        assert_eq!(round_sig12(222.0 / 5329.0), 0.041_658_847_813_8);
        assert_eq!(round_sig12(-3.625), -3.625);
        assert_eq!(
            serde_json::to_string(&round_sig12(1.0 / 3.0)).unwrap(),
            "0.333333333333"
        );
    }
}
