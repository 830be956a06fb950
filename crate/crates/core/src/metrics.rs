//! Aggregation of simulation outputs: empirical CDFs with interpolated
//! percentiles, Jain's fairness index and MCS/ACK-NACK histograms, plus the
//! CSV writers for all of them.

use std::io::Write;
use std::path::Path;

use crate::mac::{TransportBlock, TxOutcome};
use crate::{DensimError, Result};

/// Empirical CDF over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    /// Samples sorted ascending.
    pub values: Vec<f64>,
}

/// Build the empirical CDF of a non-empty sample list.
pub fn build_cdf(samples: &[f64]) -> Result<Cdf> {
    if samples.is_empty() {
        return Err(DensimError::Metrics("empty sample set".into()));
    }
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Cdf { values })
}

impl Cdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cumulative probability of the i-th sorted sample: (i+1)/n.
    pub fn prob(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.values.len() as f64
    }

    /// Percentile by linear interpolation between order statistics.
    pub fn percentile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 100.0);
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let h = (n - 1) as f64 * q / 100.0;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.values[lo] + frac * (self.values[hi] - self.values[lo])
    }
}

/// Jain's fairness index: `(sum t)^2 / (n * sum t^2)`, in [1/n, 1].
pub fn jain(throughputs: &[f64]) -> Result<f64> {
    if throughputs.is_empty() {
        return Err(DensimError::Metrics("fairness of an empty set".into()));
    }
    if throughputs.iter().any(|&t| t < 0.0) {
        return Err(DensimError::Metrics("negative throughput".into()));
    }
    let sum: f64 = throughputs.iter().sum();
    let sum_sq: f64 = throughputs.iter().map(|t| t * t).sum();
    if sum_sq == 0.0 {
        return Err(DensimError::Metrics("all-zero throughputs".into()));
    }
    Ok(sum * sum / (throughputs.len() as f64 * sum_sq))
}

/// Per-MCS (ACK count, NACK count) histogram.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct McsHistogram {
    /// Indexed by MCS; each bin is (acks, nacks).
    pub bins: Vec<(u64, u64)>,
}

impl McsHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|(a, n)| a + n).sum()
    }
}

/// Count ACK/NACK outcomes of a transport-block trace per MCS index.
pub fn mcs_histogram(tbs: &[TransportBlock], n_mcs: usize) -> McsHistogram {
    let mut bins = vec![(0u64, 0u64); n_mcs];
    for tb in tbs {
        if tb.mcs >= bins.len() {
            bins.resize(tb.mcs + 1, (0, 0));
        }
        match tb.outcome {
            TxOutcome::Ack => bins[tb.mcs].0 += 1,
            TxOutcome::Nack => bins[tb.mcs].1 += 1,
        }
    }
    McsHistogram { bins }
}

/// Write a CDF as `value,prob` rows, decimated to at most `max_points`
/// evenly spaced quantiles (0 keeps every sample).
pub fn write_cdf_csv(path: &Path, header: (&str, &str), cdf: &Cdf, max_points: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([header.0, header.1])
        .map_err(csv_err)?;
    let n = cdf.len();
    let points: Vec<usize> = if max_points == 0 || n <= max_points {
        (0..n).collect()
    } else {
        (0..max_points)
            .map(|i| (i as f64 / (max_points - 1) as f64 * (n - 1) as f64).round() as usize)
            .collect()
    };
    for i in points {
        w.write_record([format!("{:.6}", cdf.values[i]), format!("{:.6}", cdf.prob(i))])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `fairness.csv` rows: deployment, direction, jain.
pub fn write_fairness_csv(path: &Path, rows: &[(String, String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["deployment", "direction", "jain"]).map_err(csv_err)?;
    for (dep, dir, j) in rows {
        w.write_record([dep.as_str(), dir.as_str(), &format!("{j:.6}")])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `mcs_hist.csv` rows: mcs, acks, nacks.
pub fn write_mcs_hist_csv(path: &Path, hist: &McsHistogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["mcs", "acks", "nacks"]).map_err(csv_err)?;
    for (mcs, (acks, nacks)) in hist.bins.iter().enumerate() {
        w.write_record([mcs.to_string(), acks.to_string(), nacks.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write an arbitrary small table with a header row.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> DensimError {
    DensimError::Metrics(format!("csv write failed: {e}"))
}

/// Buffered line sink for large traces.
pub struct TraceWriter {
    inner: std::io::BufWriter<std::fs::File>,
}

impl TraceWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let file = std::fs::File::create(path)?;
        let mut inner = std::io::BufWriter::new(file);
        writeln!(inner, "{header}")?;
        Ok(Self { inner })
    }

    pub fn line(&mut self, line: &str) -> Result<()> {
        writeln!(self.inner, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{Hop, SlotDirection};
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_single_sample() {
        let c = build_cdf(&[5.0]).unwrap();
        assert_eq!(c.percentile(50.0), 5.0);
        assert_eq!(c.percentile(0.0), 5.0);
        assert_eq!(c.prob(0), 1.0);
    }

    #[test]
    fn cdf_interpolated_median() {
        let c = build_cdf(&[4.0, 2.0, 3.0, 1.0]).unwrap();
        assert_abs_diff_eq!(c.percentile(50.0), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.percentile(0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.percentile(100.0), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_duplicates_keep_total_mass() {
        let c = build_cdf(&[2.0, 2.0, 2.0, 7.0]).unwrap();
        assert_eq!(c.prob(c.len() - 1), 1.0);
        let probs: Vec<f64> = (0..c.len()).map(|i| c.prob(i)).collect();
        assert!(probs.windows(2).all(|w| w[1] >= w[0]));
        assert_abs_diff_eq!(probs[0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn cdf_rejects_empty() {
        assert!(build_cdf(&[]).is_err());
    }

    #[test]
    fn cdf_percentiles_monotone() {
        let c = build_cdf(&[3.0, 9.0, 1.0, 4.0, 1.5, 8.0, 2.0]).unwrap();
        let mut last = f64::NEG_INFINITY;
        for q in 0..=100 {
            let v = c.percentile(q as f64);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn jain_equal_shares() {
        assert_abs_diff_eq!(jain(&[10.0, 10.0, 10.0, 10.0]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jain_single_user_extreme() {
        let t = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_abs_diff_eq!(jain(&t).unwrap(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn jain_direct_formula() {
        assert_abs_diff_eq!(jain(&[1.0, 2.0, 3.0]).unwrap(), 36.0 / 42.0, epsilon = 1e-15);
    }

    #[test]
    fn jain_rejects_degenerate_inputs() {
        assert!(jain(&[]).is_err());
        assert!(jain(&[0.0, 0.0]).is_err());
        assert!(jain(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn jain_scale_invariant() {
        let t = [4.0, 9.0, 2.0, 7.0];
        let a = jain(&t).unwrap();
        let scaled: Vec<f64> = t.iter().map(|x| x * 123.456).collect();
        assert_abs_diff_eq!(a, jain(&scaled).unwrap(), epsilon = 1e-15);
    }

    fn tb(mcs: usize, outcome: TxOutcome) -> TransportBlock {
        TransportBlock {
            tx_node: 0,
            rx_node: 1,
            ue: 1,
            slot: 0,
            direction: SlotDirection::Dl,
            hop: Hop::Access,
            mcs,
            first_prb: 0,
            n_prbs: 1,
            bits: 10,
            delivered_bits: 10,
            sinr_db: 0.0,
            outcome,
        }
    }

    #[test]
    fn histogram_counts() {
        let empty = mcs_histogram(&[], 16);
        assert_eq!(empty.total(), 0);

        let tbs: Vec<_> = (0..10).map(|_| tb(15, TxOutcome::Ack)).collect();
        let h = mcs_histogram(&tbs, 16);
        assert_eq!(h.bins[15], (10, 0));
        assert_eq!(h.total(), 10);

        // mixed trace equals a naive recount
        let mixed = vec![
            tb(3, TxOutcome::Ack),
            tb(3, TxOutcome::Nack),
            tb(7, TxOutcome::Ack),
            tb(3, TxOutcome::Ack),
        ];
        let h = mcs_histogram(&mixed, 16);
        let naive_acks = mixed
            .iter()
            .filter(|t| t.mcs == 3 && t.outcome == TxOutcome::Ack)
            .count() as u64;
        assert_eq!(h.bins[3].0, naive_acks);
        assert_eq!(h.bins[3].1, 1);
        assert_eq!(h.bins[7], (1, 0));
        assert_eq!(h.total(), mixed.len() as u64);
    }
}
