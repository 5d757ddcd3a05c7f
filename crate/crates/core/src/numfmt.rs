/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// JSON number with 12 significant digits; non-finite values become `null`.
pub fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round_sig(x, 12)).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.123_456_789_012_345, 12), 0.123_456_789_012);
        assert_eq!(round_sig(-1.0 / 3.0, 3), -0.333);
        assert_eq!(json_number(f64::NAN), serde_json::Value::Null);
        assert_eq!(json_number(2.0 / 3.0).to_string(), "0.666666666667");
    }
}
