//! Numeric formatting for all emitted files.
//!
//! Every floating-point number written to CSV or JSON goes through
//! [`fmt_g`]: 17 significant digits, enough for bit-exact round-trips, and a
//! single canonical spelling so byte-identical outputs are a meaningful
//! determinism check.

/// Format with 17 significant digits in scientific notation.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        // Normalize -0.0; "0e0" keeps column parsing trivial.
        return "0e0".to_string();
    }
    format!("{:.16e}", x)
}

/// Parse a float written by [`fmt_g`] (plain `f64` parsing).
pub fn parse_g(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let samples = [
            0.0,
            1.0,
            -1.0,
            0.1,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.25e-2,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            -2.2250738585072014e-308,
        ];
        for &x in &samples {
            let back = parse_g(&fmt_g(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "roundtrip failed for {x:e}");
        }
    }

    #[test]
    fn negative_zero_normalizes() {
        assert_eq!(fmt_g(-0.0), "0e0");
    }
}
