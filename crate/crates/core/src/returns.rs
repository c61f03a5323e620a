//! Price ingestion, percent log-returns and the running statistics the
//! transforms are built on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NovasError, Result};

/// Column names tried, in order, for the timestamp label.
const TIMESTAMP_COLUMNS: [&str; 4] = ["date", "timestamp", "time", "index"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    timestamps: Vec<String>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(timestamps: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(NovasError::InvalidParameter(format!(
                "{} timestamps for {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(NovasError::TooFewPrices);
        }
        for (row, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(NovasError::InvalidValue {
                    row: row + 1,
                    value: p.to_string(),
                    reason: "price must be positive",
                });
            }
        }
        check_timestamp_order(&timestamps)?;
        Ok(Self { timestamps, prices })
    }

    /// Builds a series labelled by position.
    pub fn from_prices(prices: Vec<f64>) -> Result<Self> {
        let timestamps = (0..prices.len()).map(|i| i.to_string()).collect();
        Self::new(timestamps, prices)
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Percent log-returns, `100 * ln(P[t+1] / P[t])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReturnSeries {
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Contiguous sub-series `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> ReturnSeries {
        ReturnSeries::new(self.values[start..start + len].to_vec())
    }
}

impl From<Vec<f64>> for ReturnSeries {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Labels are opaque, but when every label is numeric or an ISO date they
/// must be strictly increasing.
fn check_timestamp_order(labels: &[String]) -> Result<()> {
    let numeric: Option<Vec<f64>> = labels.iter().map(|s| s.trim().parse().ok()).collect();
    if let Some(keys) = numeric {
        for (i, pair) in keys.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(NovasError::UnorderedTimestamps {
                    row: i + 2,
                    label: labels[i + 1].clone(),
                });
            }
        }
        return Ok(());
    }
    if labels.iter().all(|s| is_iso_date(s.trim())) {
        for (i, pair) in labels.windows(2).enumerate() {
            if pair[1].trim() <= pair[0].trim() {
                return Err(NovasError::UnorderedTimestamps {
                    row: i + 2,
                    label: labels[i + 1].clone(),
                });
            }
        }
    }
    Ok(())
}

// YYYY-MM-DD, optionally followed by a time part; lexicographic order is
// chronological for these.
fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b[..4].iter().chain(&b[5..7]).chain(&b[8..10]).all(u8::is_ascii_digit)
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| NovasError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// Reads one numeric column plus (optionally) a timestamp column. Row
/// numbers in errors are 1-based data rows (the header is row 0).
fn read_column(path: &Path, column: &str) -> Result<(Vec<String>, Vec<f64>, Vec<String>)> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers()?.clone();
    let col = find_column(&headers, column)
        .ok_or_else(|| NovasError::MissingColumn(column.to_string()))?;
    let ts_col = TIMESTAMP_COLUMNS
        .iter()
        .find_map(|name| find_column(&headers, name))
        .filter(|&c| c != col);

    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut raw = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = record.get(col).unwrap_or("").to_string();
        let value: f64 = cell.parse().map_err(|_| NovasError::InvalidValue {
            row,
            value: cell.clone(),
            reason: "not a number",
        })?;
        labels.push(match ts_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => row.to_string(),
        });
        values.push(value);
        raw.push(cell);
    }
    Ok((labels, values, raw))
}

/// Loads a price column from a headed CSV file. Unparseable or nonpositive
/// prices are rejected with the offending row.
pub fn load_price_csv(path: impl AsRef<Path>, column: &str) -> Result<PriceSeries> {
    let (labels, prices, raw) = read_column(path.as_ref(), column)?;
    for (i, &p) in prices.iter().enumerate() {
        if !(p.is_finite() && p > 0.0) {
            return Err(NovasError::InvalidValue {
                row: i + 1,
                value: raw[i].clone(),
                reason: "price must be positive",
            });
        }
    }
    if prices.len() < 2 {
        return Err(NovasError::TooFewPrices);
    }
    PriceSeries::new(labels, prices)
}

/// Loads an already-computed return column (e.g. the output of `simulate`).
pub fn load_return_csv(path: impl AsRef<Path>, column: &str) -> Result<ReturnSeries> {
    let (_, values, raw) = read_column(path.as_ref(), column)?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(NovasError::InvalidValue {
            row: i + 1,
            value: raw[i].clone(),
            reason: "return must be finite",
        });
    }
    if values.is_empty() {
        return Err(NovasError::InsufficientData("no returns in file".into()));
    }
    Ok(ReturnSeries::new(values))
}

pub fn to_log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    let prices = p.prices();
    if prices.len() < 2 {
        return Err(NovasError::TooFewPrices);
    }
    let values = prices
        .windows(2)
        .map(|w| 100.0 * (w[1] / w[0]).ln())
        .collect();
    Ok(ReturnSeries::new(values))
}

/// Variance estimate `s²_{t-1}` at 1-based time `upto = t`: the centred,
/// `1/(t-1)`-normalised variance of `Y_1..Y_{t-1}`.
pub fn running_variance(y: &[f64], upto: usize) -> Result<f64> {
    if upto < 2 {
        return Err(NovasError::InsufficientData(format!(
            "running variance needs upto >= 2, got {upto}"
        )));
    }
    let k = upto - 1;
    if k > y.len() {
        return Err(NovasError::InsufficientData(format!(
            "running variance over {k} points of a {}-point series",
            y.len()
        )));
    }
    let window = &y[..k];
    let mean = window.iter().sum::<f64>() / k as f64;
    Ok(window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64)
}

/// Plain moment-ratio kurtosis `m4 / m2²` (no bias correction).
pub fn sample_kurtosis(w: &[f64]) -> Result<f64> {
    if w.len() < 4 {
        return Err(NovasError::InsufficientData(format!(
            "kurtosis needs at least 4 points, got {}",
            w.len()
        )));
    }
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in w {
        let d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    // relative threshold so rounding noise on a constant input is not read as spread
    let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m2 <= 1e-28 * scale * scale {
        return Err(NovasError::ZeroVariance);
    }
    Ok(m4 / (m2 * m2))
}

/// One-pass (Welford) mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl VarianceAccumulator {
    pub fn from_slice(values: &[f64]) -> Self {
        let mut acc = Self::default();
        for &v in values {
            acc.push(v);
        }
        acc
    }

    #[inline]
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance; zero for fewer than two points.
    #[inline]
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }
}

/// `s2[k]` is the variance of the first `k` observations (so the transform at
/// 1-based time `t` reads `s2[t - 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub s2: Vec<f64>,
    pub mean_basis: f64,
}

impl RunningStats {
    pub fn new(y: &[f64]) -> Self {
        let mut s2 = Vec::with_capacity(y.len() + 1);
        let mut acc = VarianceAccumulator::default();
        s2.push(0.0);
        for &v in y {
            acc.push(v);
            s2.push(acc.variance());
        }
        Self {
            s2,
            mean_basis: acc.mean(),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_row_file_loads() {
        let f = csv_file("date,close\n2020-01-01,100.0\n2020-01-02,105.0\n");
        let p = load_price_csv(f.path(), "close").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.timestamps()[1], "2020-01-02");
    }

    #[test]
    fn negative_price_names_row() {
        let f = csv_file("close\n100\n-1.0\n3\n");
        let err = load_price_csv(f.path(), "close").unwrap_err();
        match err {
            NovasError::InvalidValue { row, ref value, .. } => {
                assert_eq!(row, 2);
                assert_eq!(value, "-1.0");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn non_numeric_price_rejected() {
        let f = csv_file("close\n100\nabc\n");
        assert!(matches!(
            load_price_csv(f.path(), "close"),
            Err(NovasError::InvalidValue { row: 2, .. })
        ));
    }

    #[test]
    fn header_only_is_too_few() {
        let f = csv_file("date,close\n");
        let err = load_price_csv(f.path(), "close").unwrap_err();
        assert_eq!(err.to_string(), "fewer than 2 prices");
    }

    #[test]
    fn missing_file_and_column() {
        assert!(matches!(
            load_price_csv("/nonexistent/prices.csv", "close"),
            Err(NovasError::Io { .. })
        ));
        let f = csv_file("open\n1\n2\n");
        assert!(matches!(
            load_price_csv(f.path(), "close"),
            Err(NovasError::MissingColumn(_))
        ));
    }

    #[test]
    fn unordered_dates_rejected() {
        let f = csv_file("date,close\n2020-01-02,1\n2020-01-01,2\n");
        assert!(matches!(
            load_price_csv(f.path(), "close"),
            Err(NovasError::UnorderedTimestamps { row: 2, .. })
        ));
        // opaque labels keep file order
        let f = csv_file("date,close\nb,1\na,2\n");
        assert!(load_price_csv(f.path(), "close").is_ok());
    }

    #[test]
    fn log_return_of_five_percent() {
        let p = PriceSeries::from_prices(vec![100.0, 105.0]).unwrap();
        let r = to_log_returns(&p).unwrap();
        // 100 ln(1.05), evaluated at high precision
        approx::assert_relative_eq!(r.values()[0], 4.879_016_416_943_205, max_relative = 1e-14);
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        let p = PriceSeries::from_prices(vec![7.5; 3]).unwrap();
        assert_eq!(to_log_returns(&p).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn five_hundred_prices_give_499_returns() {
        let prices: Vec<f64> = (0..500).map(|i| 100.0 + (i as f64 * 0.1).sin()).collect();
        let p = PriceSeries::from_prices(prices).unwrap();
        assert_eq!(to_log_returns(&p).unwrap().len(), 499);
    }

    #[test]
    fn running_variance_examples() {
        assert_eq!(running_variance(&[-1.0, 1.0], 3).unwrap(), 1.0);
        assert_eq!(running_variance(&[2.5; 6], 6).unwrap(), 0.0);
        assert!(running_variance(&[1.0, 2.0], 1).is_err());
        assert!(running_variance(&[1.0, 2.0], 4).is_err());
    }

    #[test]
    fn running_variance_matches_two_pass_oracle() {
        let y = [0.3, -1.2, 2.2, 0.9, -0.4, 1.7, -2.6, 0.05, 1.1, -0.8];
        // oracle: explicit centred sum of squares in a separate pass
        let mean: f64 = y.iter().sum::<f64>() / 10.0;
        let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let oracle = dev.iter().map(|d| d * d).sum::<f64>() / 10.0;
        let got = running_variance(&y, 11).unwrap();
        approx::assert_relative_eq!(got, oracle, max_relative = 1e-12);
    }

    #[test]
    fn running_stats_agree_with_direct_variance() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let stats = RunningStats::new(&y);
        for t in 2..=y.len() + 1 {
            let direct = running_variance(&y, t).unwrap();
            approx::assert_relative_eq!(stats.s2[t - 1], direct, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn kurtosis_of_two_point_distribution() {
        assert_eq!(sample_kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn kurtosis_of_constant_fails() {
        assert!(matches!(sample_kurtosis(&[3.0; 10]), Err(NovasError::ZeroVariance)));
        assert!(sample_kurtosis(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn kurtosis_of_normal_draws_near_three() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = sample_kurtosis(&draws).unwrap();
        assert!((k - 3.0).abs() < 0.05, "kurtosis {k}");
    }
}
