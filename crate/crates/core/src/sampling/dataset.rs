use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ranges::VoltageRanges;
use super::sweep::SampleOutcome;
use super::SamplingError;
use crate::kinetics::KmcConfig;

const INPUT_LABELS: [&str; 4] = ["00", "10", "01", "11"];

/// One control vector with its measured current vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: u64,
    /// Control voltages in the order of the dataset's ranges, V.
    pub controls: Vec<f64>,
    /// `(I00, I10, I01, I11)`, nA.
    pub currents: [f64; 4],
    pub stderr: [f64; 4],
}

/// A sample left out of the statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedSample {
    pub sample_index: u64,
    /// Input combination whose run failed (0..4).
    pub input: usize,
    pub reason: String,
}

/// Provenance of a dataset, stored as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub device_hash: String,
    pub ranges: VoltageRanges,
    pub hopping_distance_nm: f64,
    pub temperature_k: f64,
    pub kmc: KmcConfig,
    pub master_seed: u64,
    /// Number of samples drawn, flagged ones included.
    pub requested: u64,
    pub flagged: Vec<FlaggedSample>,
    /// Hash of the run configuration that produced the dataset, if the
    /// caller recorded one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleDataset {
    pub meta: DatasetMeta,
    pub records: Vec<SampleRecord>,
}

impl SampleDataset {
    pub fn new(meta: DatasetMeta) -> Self {
        Self { meta, records: Vec::new() }
    }

    pub fn extend(&mut self, outcomes: impl IntoIterator<Item = SampleOutcome>) {
        for o in outcomes {
            match o {
                SampleOutcome::Record(r) => self.records.push(r),
                SampleOutcome::Flagged(f) => self.meta.flagged.push(f),
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn current_vectors(&self) -> Vec<[f64; 4]> {
        self.records.iter().map(|r| r.currents).collect()
    }

    /// Highest sample index seen, flagged samples included.
    pub fn last_index(&self) -> Option<u64> {
        let r = self.records.iter().map(|r| r.sample_index);
        let f = self.meta.flagged.iter().map(|f| f.sample_index);
        r.chain(f).max()
    }

    /// CSV header for the dataset's control electrodes.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["sample_index".to_string()];
        h.extend(self.meta.ranges.controls.iter().map(|c| format!("U{}", c.electrode)));
        h.extend(INPUT_LABELS.iter().map(|l| format!("I{l}")));
        h.extend(INPUT_LABELS.iter().map(|l| format!("err{l}")));
        h
    }

    /// Writes the records as CSV. A `comment`, if given, becomes a first
    /// line starting with `#`.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> Result<(), SamplingError> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.records {
            let mut row = vec![r.sample_index.to_string()];
            row.extend(r.controls.iter().map(f64::to_string));
            row.extend(r.currents.iter().map(f64::to_string));
            row.extend(r.stderr.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads records written by [`Self::write_csv`]; the header must match
    /// `meta`. Returns the dataset and the comment line, if any.
    pub fn read_csv<R: Read>(input: R, meta: DatasetMeta) -> Result<(Self, Option<String>), SamplingError> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let (comment, header_line) = match first.strip_prefix('#') {
            Some(c) => {
                let mut h = String::new();
                reader.read_line(&mut h)?;
                (Some(c.trim().to_string()), h)
            }
            None => (None, first),
        };
        let mut ds = Self::new(meta);
        let expected = ds.header().join(",");
        if header_line.trim_end() != expected {
            return Err(SamplingError::Schema(format!("header {:?}, expected {expected:?}", header_line.trim_end())));
        }
        let nc = ds.meta.ranges.controls.len();
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        for row in rd.records() {
            let row = row?;
            if row.len() != 1 + nc + 8 {
                return Err(SamplingError::Schema(format!("row with {} fields", row.len())));
            }
            let num = |i: usize| -> Result<f64, SamplingError> {
                row[i].parse().map_err(|_| SamplingError::Schema(format!("bad number {:?}", &row[i])))
            };
            let sample_index = row[0].parse().map_err(|_| SamplingError::Schema(format!("bad index {:?}", &row[0])))?;
            let controls = (1..=nc).map(num).collect::<Result<Vec<_>, _>>()?;
            let mut currents = [0.0; 4];
            let mut stderr = [0.0; 4];
            for j in 0..4 {
                currents[j] = num(1 + nc + j)?;
                stderr[j] = num(5 + nc + j)?;
            }
            ds.records.push(SampleRecord { sample_index, controls, currents, stderr });
        }
        Ok((ds, comment))
    }

    /// Writes `<stem>.csv` and `<stem>.json` (the sidecar).
    pub fn write_files(
        &self,
        csv_path: impl AsRef<Path>,
        json_path: impl AsRef<Path>,
        comment: Option<&str>,
    ) -> Result<(), SamplingError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comment)?;
        std::fs::write(csv_path, buf)?;
        std::fs::write(json_path, serde_json::to_string_pretty(&self.meta)? + "\n")?;
        Ok(())
    }

    pub fn read_files(
        csv_path: impl AsRef<Path>,
        json_path: impl AsRef<Path>,
    ) -> Result<(Self, Option<String>), SamplingError> {
        let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        Self::read_csv(std::fs::File::open(csv_path)?, meta)
    }
}
