/// Parses `start:step:stop`, a comma list, or a single number.
///
/// A range runs to the grid point nearest `stop`, so `stop` is included
/// whenever a point lies within half a step of it. Spacing stays uniform;
/// only a rounding-sized miss is snapped to `stop`.
pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty value list".into());
    }
    if s.contains(':') {
        return parse_range(s);
    }
    s.split(',').map(|p| parse_number(p.trim())).collect()
}

fn parse_number(p: &str) -> Result<f64, String> {
    let v: f64 = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
    if !v.is_finite() {
        return Err(format!("not finite: {p:?}"));
    }
    Ok(v)
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range must be start:step:stop, got {s:?}"));
    }
    let start = parse_number(parts[0].trim())?;
    let step = parse_number(parts[1].trim())?;
    let stop = parse_number(parts[2].trim())?;
    if step == 0.0 {
        return Err(format!("zero step in {s:?}"));
    }
    let span = (stop - start) / step;
    if span < -0.5 {
        return Err(format!("step runs away from stop in {s:?}"));
    }
    let count = (span + 0.5).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(format!("range {s:?} has {count} points"));
    }
    let mut out: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
    if let Some(last) = out.last_mut() {
        if (*last - stop).abs() <= 1e-9 * step.abs() {
            *last = stop;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_range() {
        let v = parse_values("0:0.1:5").unwrap();
        assert_eq!(v.len(), 51);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 5.0);
    }

    #[test]
    fn half_step_tolerance() {
        assert_eq!(parse_values("0:1:2.4").unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(parse_values("0:1:2.6").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(parse_values("0:1:2.5").unwrap().len(), 4);
        assert_eq!(parse_values("0:0.1:0.3").unwrap()[3], 0.3);
    }

    #[test]
    fn descending_range() {
        assert_eq!(parse_values("1:-0.5:0").unwrap(), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn lists_and_scalars() {
        assert_eq!(parse_values("3").unwrap(), vec![3.0]);
        assert_eq!(parse_values("1e-6, 1e-7").unwrap(), vec![1e-6, 1e-7]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_values("").is_err());
        assert!(parse_values("0:0:1").is_err());
        assert!(parse_values("0:1:-3").is_err());
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("a,b").is_err());
        assert!(parse_values("nan").is_err());
    }
}
