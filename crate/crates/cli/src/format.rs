//! C-style number formatting so outputs diff cleanly against other tools.

/// printf's `%.6e`: `1.000000e-02`, `-3.500000e+00`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|v| sci(*v)).collect::<Vec<_>>().join(",")
}
