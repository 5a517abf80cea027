use crate::error::{Error, Result};

/// Benjamini-Hochberg step-up adjustment. Output keeps the input order.
pub fn bh_fdr(pvalues: &[f64]) -> Result<Vec<f64>> {
    if pvalues.is_empty() {
        return Err(Error::Invalid("no p-values to adjust".into()));
    }
    if let Some(&p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::PValueRange(p));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        let candidate = pvalues[i] * m as f64 / (rank + 1) as f64;
        running = running.min(candidate);
        // Never report less than the raw p-value, even through rounding.
        adjusted[i] = running.max(pvalues[i]).min(1.0);
    }
    Ok(adjusted)
}
