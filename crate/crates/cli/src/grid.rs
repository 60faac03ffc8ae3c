//! Parsing of noise values and grids from the command line.

use prguess::numeric::{Field, Mode, Rational, Scalar};

/// Parses one noise value in the given mode; in exact mode a decimal is read as the rational it denotes.
pub fn parse_v(s: &str, mode: Mode) -> Result<Scalar, String> {
    let t = s.trim();
    let parsed = match mode {
        Mode::Exact => Scalar::parse(t, mode).or_else(|_| Rational::from_decimal_str(t).map(Scalar::Exact)),
        Mode::Float => Scalar::parse(t, mode),
    };
    parsed.map_err(|e| format!("bad noise value {s:?}: {e}"))
}

/// `start:stop:steps`, with `steps` points spaced evenly and both ends included.
pub fn parse_grid(spec: &str, mode: Mode) -> Result<Vec<Scalar>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, steps] = parts[..] else {
        return Err(format!("grid {spec:?} is not start:stop:steps"));
    };
    let steps: usize = steps.trim().parse().map_err(|_| format!("grid {spec:?}: steps must be a positive integer"))?;
    if steps == 0 {
        return Err(format!("grid {spec:?}: steps must be a positive integer"));
    }
    match (parse_v(start, mode)?, parse_v(stop, mode)?) {
        (Scalar::Exact(a), Scalar::Exact(b)) => Ok(spaced(&a, &b, steps).into_iter().map(Scalar::Exact).collect()),
        (Scalar::Float(a), Scalar::Float(b)) => Ok(spaced(&a, &b, steps).into_iter().map(Scalar::Float).collect()),
        _ => unreachable!("both ends parsed in one mode"),
    }
}

fn spaced<T: Field>(a: &T, b: &T, steps: usize) -> Vec<T> {
    if steps == 1 {
        return vec![a.clone()];
    }
    let width = b.clone() - a.clone();
    let denom = T::from_int((steps - 1) as i64);
    (0..steps)
        .map(|k| {
            if k == steps - 1 {
                b.clone()
            } else {
                a.clone() + width.mul_ref(&T::from_int(k as i64)).div_ref(&denom)
            }
        })
        .collect()
}

/// The rational grid used by `table1`; every point keeps clear of the closed-form breakpoints.
pub fn table1_grid() -> Vec<Rational> {
    [(0, 1), (1, 10), (1, 5), (1, 4), (2, 5), (1, 2), (3, 5), (3, 4), (9, 10), (1, 1)]
        .iter()
        .map(|&(p, q)| Rational::new(p, q).expect("nonzero denominator"))
        .collect()
}
