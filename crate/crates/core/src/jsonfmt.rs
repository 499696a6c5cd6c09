//! JSON serialization with floats rendered at 17 significant digits, the
//! shortest width that always round-trips an f64 exactly. Used for model
//! files and decode logs so write-then-read is bit-exact and diffs are
//! stable.

use serde::Serialize;
use std::io;

pub struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // 16 digits after the point in e-notation = 17 significant digits.
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

/// Serialize to a compact JSON string with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    value.serialize(&mut ser)?;
    // The formatter only ever writes ASCII.
    Ok(String::from_utf8(buf).expect("JSON output is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bit_exactly() {
        let values = vec![
            0.1f64,
            -4.0,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            -0.0,
            1e30,
            std::f64::consts::PI,
        ];
        let s = to_json_string(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in values.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} reparsed as {b}");
        }
    }

    #[test]
    fn output_is_stable() {
        let s1 = to_json_string(&vec![1.5f64, 2.25]).unwrap();
        let s2 = to_json_string(&vec![1.5f64, 2.25]).unwrap();
        assert_eq!(s1, s2);
    }
}
