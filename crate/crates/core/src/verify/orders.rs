use crate::{Error, Result};

use super::ConvergenceRecord;

/// Least-squares fit `log v ≈ slope·log ε + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points: usize,
}

/// Fits the observed order of `(ε, value)` pairs. Nonpositive values are
/// dropped with a warning; at least three distinct `ε` must remain.
pub fn fit_order(data: &[(f64, f64)]) -> Result<OrderFit> {
    let mut pts = Vec::with_capacity(data.len());
    for &(e, v) in data {
        if v > 0.0 && e > 0.0 && v.is_finite() {
            pts.push((e.ln(), v.ln()));
        } else {
            log::warn!("order fit: dropping nonpositive value {v} at epsilon {e}");
        }
    }
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if xs.len() < 3 || xs.len() != pts.len() {
        return Err(Error::Invalid(format!(
            "order fit needs at least 3 distinct epsilons, got {} points ({} distinct)",
            pts.len(),
            xs.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        eps_min: xs[0].exp(),
        eps_max: xs[xs.len() - 1].exp(),
        points: pts.len(),
    })
}

/// Order fits of every column of `records` restricted to `window = (ε_min, ε_max)`.
/// Columns with fewer than three usable values are skipped.
pub fn fit_orders(records: &[ConvergenceRecord], window: Option<(f64, f64)>) -> Vec<(String, OrderFit)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let names: Vec<String> = first.columns().into_iter().map(|c| c.0).collect();
    let mut out = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let data: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| {
                let e = r.epsilon.value();
                window.map_or(true, |(lo, hi)| e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12))
            })
            .filter_map(|r| r.columns()[j].1.map(|v| (r.epsilon.value(), v)))
            .collect();
        match fit_order(&data) {
            Ok(fit) => out.push((name.clone(), fit)),
            Err(e) => log::debug!("no order for {name}: {e}"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let data: Vec<(f64, f64)> = [1.0, 0.1, 0.01, 1.0 / 31.0].iter().map(|&e| (e, 3.0 * e * e)).collect();
        let fit = fit_order(&data).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn drops_nonpositive_and_needs_three() {
        assert!(fit_order(&[(1.0, 1.0), (0.1, 0.0), (0.01, 1e-2)]).is_err());
        let fit = fit_order(&[(1.0, 1.0), (0.1, -1.0), (0.01, 1e-2), (0.001, 1e-3)]).unwrap();
        assert_eq!(fit.points, 3);
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }
}
