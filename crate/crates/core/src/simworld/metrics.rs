use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub success: bool,
    pub path_length: f64,
    pub shortest_path: f64,
    pub dtg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub n: usize,
    pub sr: f64,
    pub spl: f64,
    pub dtg: f64,
}

/// `S * L* / max(L, L*)`, with a zero-length success counting as 1.
pub fn spl_term(success: bool, path_length: f64, shortest_path: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = path_length.max(shortest_path);
    if denom > 0.0 {
        shortest_path / denom
    } else {
        1.0
    }
}

pub fn metrics(rows: &[MetricRow]) -> Result<Metrics, SimError> {
    if rows.is_empty() {
        return Err(SimError::EmptyResults);
    }
    let n = rows.len() as f64;
    let sr = rows.iter().filter(|r| r.success).count() as f64 / n;
    let spl = rows.iter().map(|r| spl_term(r.success, r.path_length, r.shortest_path)).sum::<f64>() / n;
    let dtg = rows.iter().map(|r| r.dtg).sum::<f64>() / n;
    Ok(Metrics { n: rows.len(), sr, spl, dtg })
}
