//! Small numeric helpers shared across modules.

/// Golden-section minimizer on [lo, hi] for a unimodal objective; returns
/// the location once the bracket is narrower than `tol`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Centered moving average; near the edges the window is truncated to the
/// available samples.
pub(crate) fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_min_finds_parabola_vertex() {
        let x = golden_min(|x| (x - 0.37).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.37).abs() < 1e-9, "got {x}");
    }

    #[test]
    fn golden_min_handles_edge_minimum() {
        let x = golden_min(|x| x, 0.0, 1.0, 1e-10);
        assert!(x < 1e-9);
        let x = golden_min(|x| -x, 0.0, 1.0, 1e-10);
        assert!(x > 1.0 - 1e-9);
    }

    #[test]
    fn moving_average_is_flat_on_constants() {
        let out = moving_average(&[2.0; 7], 5);
        assert!(out.iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let out = moving_average(&[1.0, 2.0, 6.0], 3);
        assert_eq!(out, vec![1.5, 3.0, 4.0]);
    }
}
