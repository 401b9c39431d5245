//! Per-tick time series and its CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this measured force (N) the torque ratio is not recorded.
pub const RATIO_MIN_FORCE: f64 = 0.5;

/// Column order of `log.csv`.
pub const LOG_COLUMNS: [&str; 32] = [
    "t",
    "phase",
    "e",
    "e_n",
    "e_p",
    "abs_e_n",
    "abs_e_p",
    "theta_deg",
    "f_cmd",
    "f_c",
    "tau_x",
    "tau_y",
    "tau_z",
    "ratio",
    "f_true",
    "coil_x",
    "coil_y",
    "coil_z",
    "coil_qw",
    "coil_qx",
    "coil_qy",
    "coil_qz",
    "head_x",
    "head_y",
    "head_z",
    "head_qw",
    "head_qx",
    "head_qy",
    "head_qz",
    "target_x",
    "target_y",
    "target_z",
];

/// One control tick.
///
/// `f_c` and `tau_*` are sensor readings (tool frame); `f_true` is the true
/// reaction magnitude. `ratio` is `|(tau_x, tau_y)| / f_c`, absent when
/// `f_c < 0.5 N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRow {
    pub t: f64,
    pub phase: u8,
    pub e: f64,
    pub e_n: f64,
    pub e_p: f64,
    pub abs_e_n: f64,
    pub abs_e_p: f64,
    pub theta_deg: f64,
    pub f_cmd: f64,
    pub f_c: f64,
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_z: f64,
    pub ratio: Option<f64>,
    pub f_true: f64,
    pub coil_x: f64,
    pub coil_y: f64,
    pub coil_z: f64,
    pub coil_qw: f64,
    pub coil_qx: f64,
    pub coil_qy: f64,
    pub coil_qz: f64,
    pub head_x: f64,
    pub head_y: f64,
    pub head_z: f64,
    pub head_qw: f64,
    pub head_qx: f64,
    pub head_qy: f64,
    pub head_qz: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub target_z: f64,
}

pub fn torque_ratio(tau_x: f64, tau_y: f64, f_c: f64) -> Option<f64> {
    (f_c >= RATIO_MIN_FORCE).then(|| tau_x.hypot(tau_y) / f_c)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesLog {
    pub rows: Vec<LogRow>,
}

impl TimeSeriesLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: LogRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::invalid(format!("log time must increase ({} after {})", row.t, last.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Writes the header and all rows; floats use the shortest decimal that
    /// round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(header())?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a log written by [`TimeSeriesLog::write_csv`]. The header must
    /// match exactly and times must increase.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if found != header() {
            return Err(Error::invalid("log header does not match the expected columns"));
        }
        let mut log = TimeSeriesLog::new();
        for row in r.deserialize::<LogRow>() {
            let row = row?;
            if row.iter_floats().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite value in log row at t = {}", row.t)));
            }
            log.push(row)?;
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

impl LogRow {
    fn iter_floats(&self) -> impl Iterator<Item = f64> {
        [
            self.t,
            self.e,
            self.e_n,
            self.e_p,
            self.abs_e_n,
            self.abs_e_p,
            self.theta_deg,
            self.f_cmd,
            self.f_c,
            self.tau_x,
            self.tau_y,
            self.tau_z,
            self.f_true,
            self.coil_x,
            self.coil_y,
            self.coil_z,
            self.coil_qw,
            self.coil_qx,
            self.coil_qy,
            self.coil_qz,
            self.head_x,
            self.head_y,
            self.head_z,
            self.head_qw,
            self.head_qx,
            self.head_qy,
            self.head_qz,
            self.target_x,
            self.target_y,
            self.target_z,
        ]
        .into_iter()
        .chain(self.ratio)
    }

    pub fn head_position(&self) -> [f64; 3] {
        [self.head_x, self.head_y, self.head_z]
    }

    pub fn target(&self) -> [f64; 3] {
        [self.target_x, self.target_y, self.target_z]
    }
}

pub fn header() -> Vec<String> {
    LOG_COLUMNS.iter().map(|s| s.to_string()).collect()
}
