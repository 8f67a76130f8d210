use crate::error::{BlendError, Result};

/// Weighted 1-median over the supplier locations themselves: the index `c`
/// minimizing sum_i w_i |c - i|, ties to the lowest index.
pub fn site_refinery(coords: &[(f64, f64)], weights: &[f64]) -> Result<usize> {
    if coords.len() != weights.len() {
        return Err(BlendError::Argument(format!("{} locations but {} weights", coords.len(), weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(BlendError::Argument("site weights must be finite and nonnegative".into()));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(BlendError::Argument("at least one supplier needs a positive weight".into()));
    }
    let cost = |c: (f64, f64)| -> f64 {
        coords
            .iter()
            .zip(weights)
            .map(|(p, w)| w * ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2)).sqrt())
            .sum()
    };
    let mut best = (0, cost(coords[0]));
    for (i, c) in coords.iter().enumerate().skip(1) {
        let v = cost(*c);
        if v < best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_and_tied() {
        assert_eq!(site_refinery(&[(3.0, 4.0)], &[1.0]).unwrap(), 0);
        assert_eq!(site_refinery(&[(0.0, 0.0), (1.0, 0.0)], &[1.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn weights_pull_the_site() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (5.0, 1.0)];
        assert_eq!(site_refinery(&pts, &[1.0, 1.0, 1.0]).unwrap(), 2);
        assert_eq!(site_refinery(&pts, &[1.0, 5.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn zero_weights_fail() {
        assert!(matches!(site_refinery(&[(0.0, 0.0)], &[0.0]), Err(BlendError::Argument(_))));
    }
}
