//! Learning curves: `curve.csv` with header
//! `episode,steps,return,epsilon,mean_loss`, one row per episode.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::domain::EpisodeRecord;
use crate::error::Result;
use crate::learner::RecordSink;

pub const CURVE_HEADER: [&str; 5] = ["episode", "steps", "return", "epsilon", "mean_loss"];

pub struct CurveWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl CurveWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(File::create(path)?)
    }
}

impl<W: Write> CurveWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        inner.write_record(CURVE_HEADER)?;
        Ok(Self { inner })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

impl<W: Write> RecordSink for CurveWriter<W> {
    fn record(&mut self, record: &EpisodeRecord) -> Result<()> {
        self.inner.serialize(record)?;
        Ok(())
    }
}

pub fn read_curve(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader.deserialize().collect::<std::result::Result<Vec<EpisodeRecord>, _>>()?;
    Ok(records)
}

/// Mean return over the trailing `window` episodes, defined once `window`
/// episodes exist.
pub fn rolling_means(records: &[EpisodeRecord], window: usize) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(records.len());
    let mut sum = 0.0;
    for (i, r) in records.iter().enumerate() {
        sum += r.undiscounted_return;
        if i >= window {
            sum -= records[i - window].undiscounted_return;
        }
        out.push((i + 1 >= window).then(|| sum / window as f64));
    }
    out
}

/// First episode index at which the rolling mean reaches `threshold`.
pub fn first_success(records: &[EpisodeRecord], window: usize, threshold: f64) -> Option<usize> {
    rolling_means(records, window)
        .iter()
        .position(|m| m.is_some_and(|m| m >= threshold))
}
