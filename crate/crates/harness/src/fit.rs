use serde::{Deserialize, Serialize};

/// Least-squares line through `(ln h, ln e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `ln e = slope·ln h + intercept`; `None` with fewer than two usable points.
/// Non-positive errors are skipped.
pub fn fit_loglog(hs: &[f64], errors: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Some(SlopeFit {
        slope,
        intercept,
        r2,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let hs = [0.4f64, 0.2, 0.1, 0.05];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let f = fit_loglog(&hs, &es).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert_eq!(f.points, 4);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_loglog(&[0.1], &[1.0]).is_none());
        assert!(fit_loglog(&[0.1, 0.1], &[1.0, 2.0]).is_none());
        assert!(fit_loglog(&[0.1, 0.2], &[0.0, 0.0]).is_none());
    }

    proptest! {
        #[test]
        fn recovers_any_power(p in -1.0f64..4.0, c in 0.01f64..100.0) {
            let hs = [0.4f64, 0.2, 0.1, 0.05];
            let es: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
            let f = fit_loglog(&hs, &es).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
        }
    }
}
