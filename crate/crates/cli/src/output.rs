use serde_json::Value;
use threatfair_core::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
}

pub fn print_json(doc: &Value) {
    print!("{}", canonical::to_string(doc));
}

/// Six significant digits, trailing zeros trimmed, at least one decimal.
pub fn num(x: f64) -> String {
    // Rounding noise such as 1e-16 reads as zero.
    if x.abs() < 1e-12 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').to_string()
        } else {
            s
        };
        if s.ends_with('.') {
            format!("{s}0")
        } else if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent present");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Left-aligned two-column rows.
pub fn rows<'a>(entries: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let entries: Vec<_> = entries.into_iter().collect();
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    entries
        .iter()
        .map(|(k, v)| format!("  {k:<width$}  {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(0.8), "0.8");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(0.9999999999999999), "1.0");
        assert_eq!(num(10.000000000000002), "10.0");
        assert_eq!(num(0.010000000000000009), "0.01");
        assert_eq!(num(0.5 / 0.9), "0.555556");
        assert_eq!(num(123456.7), "123457.0");
        assert_eq!(num(1234567.0), "1.23457e6");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(0.0), "0.0");
        assert_eq!(num(-1.1102230246251565e-16), "0.0");
        assert_eq!(num(-0.3), "-0.3");
        assert_eq!(num(42.0), "42.0");
    }
}
