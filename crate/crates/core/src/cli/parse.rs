use std::ffi::OsString;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Exact rational from "p/q", an integer, or a plain decimal like "-0.125".
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: BigInt = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("{s:?} is not a rational or decimal number"));
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| format!("bad number {s:?}"))?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(digits, scale);
    Ok(if neg { -v } else { v })
}

/// "a..b" (inclusive) or "a,b,c".
pub fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end in {s:?}"))?;
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| format!("bad level {x:?}"))).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err("no levels".into());
    }
    Ok(out)
}

/// "name:lo:hi:steps" → (name, steps values from lo to hi inclusive).
pub fn parse_axis(s: &str) -> Result<(String, Vec<f64>), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("axis {s:?} is not name:lo:hi:steps"));
    }
    let lo: f64 = parts[1].parse().map_err(|_| format!("bad lower end in {s:?}"))?;
    let hi: f64 = parts[2].parse().map_err(|_| format!("bad upper end in {s:?}"))?;
    let n: usize = parts[3].parse().map_err(|_| format!("bad step count in {s:?}"))?;
    if n == 0 {
        return Err("axis needs at least one step".into());
    }
    let vals = if n == 1 { vec![lo] } else { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() };
    Ok((parts[0].to_string(), vals))
}

/// Expand `--config FILE`: every `key = value` line whose flag is absent
/// from argv is appended as `--key value` (`true` gives a bare flag,
/// `false` is dropped).
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let mut out = argv;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("{path}:{}: expected key=value", i + 1))?;
        let key = k.trim().replace('_', "-");
        let v = v.trim();
        let flag = format!("--{key}");
        if strs.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match v {
            "true" => out.push(flag.into()),
            "false" => {}
            _ => {
                out.push(flag.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/2").unwrap(), BigRational::new(3.into(), 2.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("8").unwrap(), BigRational::from_integer(8.into()));
        assert_eq!(parse_rational(".5").unwrap(), BigRational::new(BigInt::one(), 2.into()));
        for bad in ["", "1/0", "abc", "1e3", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_range("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_range("4,6,8").unwrap(), vec![4, 6, 8]);
        assert!(parse_range("5..2").is_err());
    }

    #[test]
    fn axes() {
        let (n, v) = parse_axis("gamma:0:1:5").unwrap();
        assert_eq!(n, "gamma");
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_axis("gamma:0:1").is_err());
    }
}
