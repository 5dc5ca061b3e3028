use serde::Serialize;

use super::BenchError;

/// `value = a * n^b`, fitted on log-transformed data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

/// Ordinary least squares on `(ln n, ln value)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<RegressionFit, BenchError> {
    if points.len() < 3 {
        return Err(BenchError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(BenchError::DegenerateInput(format!("non-positive point ({x}, {y})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(BenchError::DegenerateInput("all n values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let c = my - b * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (c + b * x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RegressionFit { a: c.exp(), b, r2: r2.clamp(0.0, 1.0) })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks). Returns 0 when
/// either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(xs), ranks(ys));
    let k = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / k;
    let my = ry.iter().sum::<f64>() / k;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_powers_are_recovered() {
        let cubic: Vec<(f64, f64)> = (1..=20).map(|k| (200.0 * k as f64, (200.0 * k as f64).powi(3))).collect();
        let f = fit_power_law(&cubic).unwrap();
        assert!((f.b - 3.0).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = (1..=5).map(|k| (k as f64, 7.0 * k as f64)).collect();
        let f = fit_power_law(&lin).unwrap();
        assert!((f.b - 1.0).abs() < 1e-9);
        assert!((f.a - 7.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(BenchError::DegenerateInput(_))));
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0)]),
            Err(BenchError::DegenerateInput(_))
        ));
        assert!(matches!(
            fit_power_law(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]),
            Err(BenchError::DegenerateInput(_))
        ));
    }

    #[test]
    fn median_and_ranks() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(ranks(&[10.0, 20.0, 10.0]), [1.5, 3.0, 1.5]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), 0.0);
    }
}
