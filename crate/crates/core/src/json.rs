//! JSON output with every float written to 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

use crate::Result;

#[derive(Debug, Clone, Copy, Default)]
pub struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

/// Format one float the same way the JSON writer does (used by CSV export).
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serde adapter for reals that may be `+inf`: written as `null`, read back as `+inf`.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_17_digits() {
        let values = vec![0.1, 1.0 / 3.0, -2.5e-300, 7.407_407_407_407_407, 0.0];
        let text = to_string(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(values, back);
        assert!(text.contains("1.0000000000000001e-1"));
    }

    #[test]
    fn infinity_becomes_null() {
        #[derive(Serialize, serde::Deserialize)]
        struct R {
            #[serde(with = "extended_real")]
            x: f64,
        }
        let text = to_string(&R { x: f64::INFINITY }).unwrap();
        assert_eq!(text, r#"{"x":null}"#);
        let back: R = serde_json::from_str(&text).unwrap();
        assert!(back.x.is_infinite());
    }
}
