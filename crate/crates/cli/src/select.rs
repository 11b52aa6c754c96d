//! Mode selector literals (`1`, `-0.2+3.1i`, `2i`) and catalog matching.

use crate::error::CliError;
use adfm_core::{fmt_complex, Complex64, Mode};

pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::Usage(format!("'{text}' is not a mode literal (expected e.g. 1, -0.2+3.1i, 2i)"));
    let num = |t: &str| -> Result<f64, CliError> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that does not belong to an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let z = match split {
        Some(k) => Complex64::new(body[..k].parse().map_err(|_| bad())?, num(&body[k..])?),
        None => Complex64::new(0.0, num(body)?),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

/// Nearest catalog mode within `tol`; an error when none is that close or a
/// second mode is too.
pub fn match_mode<'a>(catalog: &'a [Mode], selector: &str, tol: f64) -> Result<&'a Mode, CliError> {
    let z = parse_complex(selector)?;
    let mut near: Vec<(&Mode, f64)> = catalog
        .iter()
        .map(|m| (m, (m.value - z).norm()))
        .filter(|(_, d)| *d <= tol)
        .collect();
    near.sort_by(|a, b| a.1.total_cmp(&b.1));
    match near.as_slice() {
        [] => {
            let listed: Vec<String> = catalog.iter().map(|m| fmt_complex(m.value)).collect();
            Err(CliError::Usage(format!(
                "mode {selector} does not match any eigenvalue within {tol:e}; modes are {}",
                listed.join(", ")
            )))
        }
        [(m, _)] => Ok(m),
        [(a, _), (b, _), ..] => Err(CliError::Usage(format!(
            "mode {selector} is ambiguous: {} and {} are both within {tol:e}",
            fmt_complex(a.value),
            fmt_complex(b.value)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let c = |s| parse_complex(s).unwrap();
        assert_eq!(c("1"), Complex64::new(1.0, 0.0));
        assert_eq!(c("1.0"), Complex64::new(1.0, 0.0));
        assert_eq!(c("-0.2+3.1i"), Complex64::new(-0.2, 3.1));
        assert_eq!(c("-0.2 - 3.1i"), Complex64::new(-0.2, -3.1));
        assert_eq!(c("2i"), Complex64::new(0.0, 2.0));
        assert_eq!(c("-i"), Complex64::new(0.0, -1.0));
        assert_eq!(c("1e-3+2e1i"), Complex64::new(1e-3, 20.0));
        assert_eq!(c("1-i"), Complex64::new(1.0, -1.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+xi").is_err());
        assert!(parse_complex("").is_err());
    }

    fn mode(re: f64, im: f64) -> Mode {
        Mode {
            value: Complex64::new(re, im),
            multiplicity: 1,
            conjugate_partner: None,
        }
    }

    #[test]
    fn nearest_and_ambiguous() {
        let catalog = vec![mode(1.0, 0.0), mode(1.0 + 1e-7, 0.0), mode(3.0, 0.0)];
        assert_eq!(match_mode(&catalog, "3", 1e-6).unwrap().value.re, 3.0);
        assert!(match_mode(&catalog, "1", 1e-6).is_err());
        assert!(match_mode(&catalog, "2", 1e-6).is_err());
        assert_eq!(match_mode(&catalog, "1", 1e-8).unwrap().value.re, 1.0);
    }
}
