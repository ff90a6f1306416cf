//! Loss sets, membership records, and the JSON-lines record file.
//!
//! Each line is `{"id":..,"member":..,"split":..,"losses":[..],"original_loss":..}`.
//! Floats are written with 17 significant digits so reading a file back
//! reproduces every bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// The multiset of losses a model assigns to the augmented instances of one sample.
///
/// Storage order is an artifact; only permutation-sensitive consumers look at it.
#[derive(Clone, Debug, PartialEq)]
pub struct LossSet(Vec<f64>);

impl LossSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a loss set needs at least one value"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("loss values must be finite and >= 0, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Same multiset, new storage order. `order` must be a permutation of `0..len`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self(order.iter().map(|&i| self.0[i]).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Unassigned,
    AttackTrain,
    AttackEval,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Unassigned => "unassigned",
            Split::AttackTrain => "attack-train",
            Split::AttackEval => "attack-eval",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unassigned" => Ok(Split::Unassigned),
            "attack-train" => Ok(Split::AttackTrain),
            "attack-eval" => Ok(Split::AttackEval),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipRecord {
    pub id: u64,
    pub member: bool,
    pub split: Split,
    pub losses: LossSet,
    /// Loss of the untransformed sample, used by the single-loss baseline.
    pub original_loss: Option<f64>,
}

/// 17 significant digits: enough for any f64 to survive a decimal round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number `{s}`")))
}

impl MembershipRecord {
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{{\"id\":{},\"member\":{},\"split\":\"{}\",\"losses\":[",
            self.id,
            self.member,
            self.split.as_str()
        );
        for (i, v) in self.losses.values().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(*v));
        }
        line.push(']');
        if let Some(v) = self.original_loss {
            let _ = write!(line, ",\"original_loss\":{}", fmt_f64(v));
        }
        line.push('}');
        line
    }

    pub fn from_line(line: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            id: u64,
            member: bool,
            split: String,
            losses: Vec<f64>,
            #[serde(default)]
            original_loss: Option<f64>,
        }
        let raw: Raw = serde_json::from_str(line).map_err(|e| Error::invalid(e.to_string()))?;
        if let Some(v) = raw.original_loss {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("original_loss must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            id: raw.id,
            member: raw.member,
            split: raw.split.parse()?,
            losses: LossSet::new(raw.losses)?,
            original_loss: raw.original_loss,
        })
    }
}

pub fn write_records(records: &[MembershipRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        w.write_all(r.to_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Blank lines are skipped; any other malformed line is reported with its 1-based number.
pub fn read_records(path: &Path) -> Result<Vec<MembershipRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = MembershipRecord::from_line(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: match e {
                Error::InvalidInput(m) => m,
                other => other.to_string(),
            },
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Checks that no sample id appears in both attack splits.
pub fn check_split_disjoint(records: &[MembershipRecord]) -> Result<()> {
    use std::collections::HashSet;
    let train: HashSet<u64> = records.iter().filter(|r| r.split == Split::AttackTrain).map(|r| r.id).collect();
    if let Some(r) = records.iter().find(|r| r.split == Split::AttackEval && train.contains(&r.id)) {
        return Err(Error::Invariant(format!("sample {} is in both attack-train and attack-eval", r.id)));
    }
    Ok(())
}
