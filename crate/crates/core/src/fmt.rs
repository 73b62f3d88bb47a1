//! Deterministic plain-text float formatting for CSV output.
//!
//! All emitted data files round floats to a fixed number of significant
//! digits with pure string manipulation, so byte-identical output does not
//! depend on platform printf behavior.

/// Format `x` with `digits` significant digits, printf `%g` style:
/// plain decimal notation when the exponent is moderate, otherwise
/// e-notation; trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    // "d.ddd...e[sign]exp" with digits-1 fractional places
    let s = format!("{:.*e}", digits - 1, x.abs());
    let (mant_str, exp_str) = s.split_once('e').expect("e-notation");
    let exp: i64 = exp_str.parse().expect("exponent");
    let mant: String = mant_str.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if x < 0.0 { "-" } else { "" };

    let body = if exp >= -5 && exp < digits as i64 + 3 {
        if exp >= 0 {
            let e = exp as usize;
            if e + 1 >= mant.len() {
                format!("{}{}", &mant, "0".repeat(e + 1 - mant.len()))
            } else {
                trim_frac(&format!("{}.{}", &mant[..e + 1], &mant[e + 1..]))
            }
        } else {
            trim_frac(&format!("0.{}{}", "0".repeat((-exp - 1) as usize), mant))
        }
    } else {
        let m = trim_frac(&format!("{}.{}", &mant[..1], &mant[1..]));
        format!("{}e{}", m, exp)
    };
    format!("{}{}", sign, body)
}

fn trim_frac(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Twelve significant digits, the precision used by every emitted CSV.
pub fn sig12(x: f64) -> String {
    format_sig(x, 12)
}
