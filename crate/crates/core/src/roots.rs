//! Sign-scan plus bisection root location on sampled curves.

/// Outcome of a first-crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Root {
    Found(f64),
    /// No sign change in the searched range. `tangency` carries the time of a
    /// zero touch without crossing seen before any crossing, if one was.
    NotFound {
        tangency: Option<f64>,
    },
}

impl Root {
    pub fn time(self) -> Option<f64> {
        match self {
            Root::Found(t) => Some(t),
            Root::NotFound { .. } => None,
        }
    }

    pub fn is_found(self) -> bool {
        matches!(self, Root::Found(_))
    }
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `tol`.
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one to vanish).
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// First sign change of the samples `g[start..=end]`, refined by bisection on
/// the continuous function `f`. The sample at `start` itself is never
/// reported as a root.
pub fn first_crossing(
    g: &[f64],
    time: impl Fn(usize) -> f64,
    start: usize,
    end: usize,
    f: impl Fn(f64) -> f64,
    tol: f64,
) -> Root {
    let end = end.min(g.len().saturating_sub(1));
    let mut tangency = None;
    let mut k = start;
    while k < end {
        let a = g[k];
        let b = g[k + 1];
        if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
            let (lo, hi) = (time(k), time(k + 1));
            let t = bisect(&f, lo, hi, tol).unwrap_or_else(|| lo + (hi - lo) * a / (a - b));
            return Root::Found(t);
        }
        if b == 0.0 {
            // run of exact zeros starting at k+1
            let mut j = k + 1;
            while j <= end && g[j] == 0.0 {
                j += 1;
            }
            if j > end {
                break;
            }
            let after = g[j];
            if a != 0.0 && a.signum() != after.signum() {
                return Root::Found(time(k + 1));
            }
            tangency.get_or_insert(time(k + 1));
            k = j;
            continue;
        }
        k += 1;
    }
    Root::NotFound { tangency }
}

/// Number of sign changes among the nonzero samples of `g[start..=end]`.
pub fn count_crossings(g: &[f64], start: usize, end: usize) -> usize {
    let end = end.min(g.len().saturating_sub(1));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in &g[start..=end] {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64, n: usize, h: f64) -> Vec<f64> {
        (0..=n).map(|i| f(i as f64 * h)).collect()
    }

    #[test]
    fn finds_first_of_several_roots() {
        let f = |t: f64| (t - 0.3) * (t - 0.7);
        let g = sample(f, 100, 0.01);
        match first_crossing(&g, |i| i as f64 * 0.01, 0, 100, f, 1e-12) {
            Root::Found(t) => assert!((t - 0.3).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
        assert_eq!(count_crossings(&g, 0, 100), 2);
    }

    #[test]
    fn exact_zero_on_node_is_reported_at_node() {
        let f = |t: f64| 2.0 - t;
        let g = sample(f, 4, 1.0);
        assert_eq!(
            first_crossing(&g, |i| i as f64, 0, 4, f, 1e-12),
            Root::Found(2.0)
        );
    }

    #[test]
    fn tangency_is_not_a_root() {
        let f = |t: f64| (t - 1.0) * (t - 1.0);
        let g = sample(f, 4, 0.5);
        assert_eq!(
            first_crossing(&g, |i| i as f64 * 0.5, 0, 4, f, 1e-12),
            Root::NotFound {
                tangency: Some(1.0)
            }
        );
    }

    #[test]
    fn no_sign_change() {
        let f = |t: f64| 1.0 + t;
        let g = sample(f, 10, 0.1);
        assert_eq!(
            first_crossing(&g, |i| i as f64 * 0.1, 0, 10, f, 1e-12),
            Root::NotFound { tangency: None }
        );
        assert_eq!(bisect(f, 0.0, 1.0, 1e-9), None);
    }
}
