use std::path::Path;

use serde::Serialize;

use crate::attacks::Statistic;
use crate::error::{Error, Result};
use crate::records::MembershipRecord;

/// Member and non-member counts over equal-width bins spanning the pooled range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub statistic: String,
    pub lo: f64,
    pub hi: f64,
    pub members: Vec<usize>,
    pub non_members: Vec<usize>,
    /// `Σ_bins min(member density, non-member density) × width`.
    pub overlap: f64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.members.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }
}

pub fn histogram(records: &[MembershipRecord], statistic: Statistic, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histograms need at least one bin"));
    }
    let values = records.iter().map(|r| Ok((statistic.value(r)?, r.member))).collect::<Result<Vec<_>>>()?;
    let n_members = values.iter().filter(|v| v.1).count();
    let n_others = values.len() - n_members;
    if n_members == 0 || n_others == 0 {
        return Err(Error::invalid("histograms need members and non-members"));
    }
    let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let mut members = vec![0; bins];
    let mut non_members = vec![0; bins];
    for (v, m) in values {
        let b = if hi > lo { (((v - lo) / (hi - lo)) * bins as f64) as usize } else { 0 };
        let b = b.min(bins - 1);
        if m {
            members[b] += 1;
        } else {
            non_members[b] += 1;
        }
    }
    let overlap = members
        .iter()
        .zip(&non_members)
        .map(|(&a, &b)| (a as f64 / n_members as f64).min(b as f64 / n_others as f64))
        .sum();
    Ok(Histogram { statistic: statistic.id(), lo, hi, members, non_members, overlap })
}

pub fn write_histogram_csv(h: &Histogram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["bin_lo", "bin_hi", "member_count", "non_member_count", "member_density", "non_member_density"])
        .map_err(csv_error)?;
    let n_m: usize = h.members.iter().sum();
    let n_n: usize = h.non_members.iter().sum();
    let width = if h.hi > h.lo { h.width() } else { 1.0 };
    for b in 0..h.bins() {
        let lo = h.lo + b as f64 * h.width();
        let hi = if b + 1 == h.bins() { h.hi } else { h.lo + (b + 1) as f64 * h.width() };
        w.write_record([
            lo.to_string(),
            hi.to_string(),
            h.members[b].to_string(),
            h.non_members[b].to_string(),
            (h.members[b] as f64 / n_m as f64 / width).to_string(),
            (h.non_members[b] as f64 / n_n as f64 / width).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Bins `statistic` over `records`, writes the CSV, and returns the histogram.
pub fn emit_histograms(records: &[MembershipRecord], statistic: Statistic, bins: usize, path: &Path) -> Result<Histogram> {
    let h = histogram(records, statistic, bins)?;
    write_histogram_csv(&h, path)?;
    Ok(h)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}
