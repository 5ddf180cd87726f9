pub mod bounds;
pub mod coherence;
pub mod phase;
pub mod recover;

use crate::error::{CliError, CliResult};

/// Parses comma-separated integers and inclusive ranges `a-b` or `a-b:step`,
/// e.g. `1-5,8,10-20:5`.
pub fn parse_list(flag: &str, s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("--{flag}: cannot parse '{s}' (expected e.g. 1-5,8,10-20:5)"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (range, step) = match item.split_once(':') {
            Some((r, st)) => (r, num(st)?),
            None => (item, 1),
        };
        match range.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if step == 0 || a > b {
                    return Err(bad());
                }
                out.extend((a..=b).step_by(step));
            }
            None if step == 1 => out.push(num(range)?),
            None => return Err(bad()),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Shortest round-trip text of `v`, in exponent form for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("k", "1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_list("k", "1-9:4,12").unwrap(), vec![1, 5, 9, 12]);
        assert_eq!(parse_list("k", " 3 , 5").unwrap(), vec![3, 5]);
        for bad in ["", "4-1", "a", "1-3:0", "7:2"] {
            assert!(parse_list("k", bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.0, -0.1, 1.0 / 3.0, 1e-300, 2.0384881461963495e-13, 12345.678901234567, 1e300, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1e-13), "1e-13");
        assert_eq!(num(0.25), "0.25");
    }
}
