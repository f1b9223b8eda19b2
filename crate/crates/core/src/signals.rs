//! Sequence generators, CSV ingestion and trajectory files.
//!
//! Input files carry the header `y,yhat1,yhat2`. Trajectory files carry
//! the columns of [`TRAJECTORY_COLUMNS`], with reals written to 17
//! significant digits so that a reload is exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::SignalSample;

/// What to generate.
///
/// For every alternating pattern the first sample (`t = 1`) carries the
/// negative level, matching `(−1)^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `y = Y`, `ŷ₁ = Y`, `ŷ₂ = (−1)^t·Y`.
    Case1,
    /// `y = 0.5`, `ŷ₁ = Y`, `ŷ₂ = (−1)^t·0.5`. Requires `Y ≥ 0.5`.
    Case2,
    /// `y = ŷ₁ = ŷ₂ = level`.
    Constant { level: f64 },
    /// `y = ŷ₁ = (−1)^t·level`, `ŷ₂ = −y`.
    Alternating { level: f64 },
    /// `y` is a square wave of amplitude `level` that starts low and flips
    /// every `period/2` samples; `ŷ₁` lags it by one sample, `ŷ₂ = 0`.
    SquareWave { level: f64, period: usize },
    /// `y = level` throughout; one expert outputs `level` and the other
    /// `−level`, and they swap roles at every switch point (the 1-based
    /// index of the first sample after the swap). Expert 1 starts correct.
    PiecewiseSwitch { level: f64, switch_at: Vec<usize> },
    /// Rows of an input CSV, clipped to `[−Y, Y]`.
    CustomFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub kind: SequenceKind,
    /// Length; required for generated kinds, a truncation for custom files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub y_bound: f64,
}

/// A materialized sequence and how many fields were clipped to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub samples: Vec<SignalSample>,
    pub clip_count: usize,
}

impl SequenceSpec {
    pub fn new(kind: SequenceKind, n: usize, y_bound: f64) -> Self {
        Self {
            kind,
            n: Some(n),
            y_bound,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::domain(format!("invalid sequence spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        match (self.n, &self.kind) {
            (Some(0), _) => return Err(Error::domain("sequence length must be at least 1")),
            (None, SequenceKind::CustomFile { .. }) | (Some(_), _) => {}
            (None, _) => return Err(Error::domain("generated sequences need a length n")),
        }
        if !(self.y_bound.is_finite() && self.y_bound > 0.0) {
            return Err(Error::domain(format!("y_bound must be positive, got {}", self.y_bound)));
        }
        let level_ok = |level: f64| {
            if level.is_finite() && level.abs() <= self.y_bound {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "level {level} is outside [-{0}, {0}]",
                    self.y_bound
                )))
            }
        };
        match &self.kind {
            SequenceKind::Case1 | SequenceKind::CustomFile { .. } => Ok(()),
            SequenceKind::Case2 => level_ok(0.5),
            SequenceKind::Constant { level } | SequenceKind::Alternating { level } => level_ok(*level),
            SequenceKind::SquareWave { level, period } => {
                if *period < 2 || period % 2 != 0 {
                    return Err(Error::domain(format!(
                        "square wave period must be an even number ≥ 2, got {period}"
                    )));
                }
                level_ok(*level)
            }
            SequenceKind::PiecewiseSwitch { level, switch_at } => {
                if switch_at.windows(2).any(|w| w[0] >= w[1]) || switch_at.first() == Some(&0) {
                    return Err(Error::domain("switch points must be strictly increasing and ≥ 1"));
                }
                level_ok(*level)
            }
        }
    }
}

fn parity(t: usize) -> f64 {
    if t % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Materializes `spec`. Custom files are read and clipped; for them `n`,
/// when present, keeps only the first `n` rows.
pub fn generate(spec: &SequenceSpec) -> Result<Sequence> {
    spec.validate()?;
    let y_bound = spec.y_bound;
    if let SequenceKind::CustomFile { path } = &spec.kind {
        let mut raw = read_input_rows(path)?;
        if let Some(n) = spec.n {
            raw.truncate(n);
        }
        let mut clip_count = 0;
        let samples = raw
            .into_iter()
            .map(|s| {
                let (c, k) = s.clipped(y_bound);
                clip_count += k;
                c
            })
            .collect();
        return Ok(Sequence {
            samples,
            clip_count,
        });
    }

    let n = spec.n.expect("validated");
    let samples = (1..=n)
        .map(|t| {
            let (y, yhat1, yhat2) = match &spec.kind {
                SequenceKind::Case1 => (y_bound, y_bound, parity(t) * y_bound),
                SequenceKind::Case2 => (0.5, y_bound, parity(t) * 0.5),
                SequenceKind::Constant { level } => (*level, *level, *level),
                SequenceKind::Alternating { level } => {
                    let v = parity(t) * level;
                    (v, v, -v)
                }
                SequenceKind::SquareWave { level, period } => {
                    let wave = |t: usize| {
                        if ((t - 1) / (period / 2)) % 2 == 0 {
                            -level
                        } else {
                            *level
                        }
                    };
                    let lagged = if t == 1 { 0.0 } else { wave(t - 1) };
                    (wave(t), lagged, 0.0)
                }
                SequenceKind::PiecewiseSwitch { level, switch_at } => {
                    let swaps = switch_at.iter().filter(|&&s| s <= t).count();
                    if swaps % 2 == 0 {
                        (*level, *level, -level)
                    } else {
                        (*level, -level, *level)
                    }
                }
                SequenceKind::CustomFile { .. } => unreachable!(),
            };
            SignalSample { y, yhat1, yhat2 }
        })
        .collect();
    Ok(Sequence {
        samples,
        clip_count: 0,
    })
}

fn read_input_rows(path: &Path) -> Result<Vec<SignalSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { row: 0, msg: e.to_string() })?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Parse { row: 0, msg: "empty file".into() });
    }
    let names: Vec<&str> = header.iter().collect();
    if names != ["y", "yhat1", "yhat2"] {
        return Err(Error::Parse {
            row: 0,
            msg: format!("expected header y,yhat1,yhat2, found {}", names.join(",")),
        });
    }

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        if record.len() != 3 {
            return Err(Error::Parse {
                row,
                msg: format!("expected 3 columns, found {}", record.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (slot, cell) in vals.iter_mut().zip(record.iter()) {
            *slot = cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    row,
                    msg: format!("non-finite cell {cell:?}"),
                });
            }
        }
        out.push(SignalSample {
            y: vals[0],
            yhat1: vals[1],
            yhat2: vals[2],
        });
    }
    if out.is_empty() {
        return Err(Error::Parse { row: 0, msg: "file has no data rows".into() });
    }
    Ok(out)
}

/// Reads an input CSV, clamping every field into `[−y_bound, y_bound]`.
/// Returns the samples and the number of clamped fields.
pub fn load_csv(path: impl AsRef<Path>, y_bound: f64) -> Result<(Vec<SignalSample>, usize)> {
    if !(y_bound.is_finite() && y_bound > 0.0) {
        return Err(Error::domain(format!("y_bound must be positive, got {y_bound}")));
    }
    let seq = generate(&SequenceSpec {
        kind: SequenceKind::CustomFile {
            path: path.as_ref().to_path_buf(),
        },
        n: None,
        y_bound,
    })?;
    Ok((seq.samples, seq.clip_count))
}

/// Column order of trajectory files.
pub const TRAJECTORY_COLUMNS: [&str; 16] = [
    "t",
    "y",
    "yhat1",
    "yhat2",
    "lambda",
    "rho",
    "yhat",
    "e",
    "cum_loss",
    "best_beta_prefix",
    "best_loss_prefix",
    "regret",
    "norm_regret",
    "bound_norm",
    "in_range",
    "projected",
];

/// One line of a trajectory file. `lambda` and `rho` are the values used
/// for the prediction at step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub y: f64,
    pub yhat1: f64,
    pub yhat2: f64,
    pub lambda: f64,
    pub rho: f64,
    pub yhat: f64,
    pub e: f64,
    pub cum_loss: f64,
    pub best_beta_prefix: f64,
    pub best_loss_prefix: f64,
    pub regret: f64,
    pub norm_regret: f64,
    pub bound_norm: f64,
    pub in_range: bool,
    pub projected: bool,
}

impl TrajectoryRow {
    pub fn sample(&self) -> SignalSample {
        SignalSample {
            y: self.y,
            yhat1: self.yhat1,
            yhat2: self.yhat2,
        }
    }
}

/// Formats `v` with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory(rows: &[TrajectoryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(Error::domain("refusing to write an empty trajectory"));
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", TRAJECTORY_COLUMNS.join(",")).map_err(io)?;
    for r in rows {
        let reals = [
            r.y,
            r.yhat1,
            r.yhat2,
            r.lambda,
            r.rho,
            r.yhat,
            r.e,
            r.cum_loss,
            r.best_beta_prefix,
            r.best_loss_prefix,
            r.regret,
            r.norm_regret,
            r.bound_norm,
        ];
        let mut line = r.t.to_string();
        for v in reals {
            line.push(',');
            line.push_str(&fmt_real(v));
        }
        line.push_str(if r.in_range { ",1" } else { ",0" });
        line.push_str(if r.projected { ",1" } else { ",0" });
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a trajectory file written by [`write_trajectory`]. Columns are
/// located by name; a missing column is a parse error naming it.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { row: 0, msg: e.to_string() })?
        .clone();
    let mut index = [0usize; 16];
    for (slot, name) in index.iter_mut().zip(TRAJECTORY_COLUMNS) {
        *slot = header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 0,
            msg: format!("missing column {name:?}"),
        })?;
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        let cell = |k: usize| -> Result<&str> {
            record.get(index[k]).ok_or_else(|| Error::Parse {
                row,
                msg: format!("missing cell for {:?}", TRAJECTORY_COLUMNS[k]),
            })
        };
        let real = |k: usize| -> Result<f64> {
            let c = cell(k)?;
            c.parse::<f64>().map_err(|_| Error::Parse {
                row,
                msg: format!("non-numeric {:?} value {c:?}", TRAJECTORY_COLUMNS[k]),
            })
        };
        let flag = |k: usize| -> Result<bool> {
            match cell(k)? {
                "0" => Ok(false),
                "1" => Ok(true),
                c => Err(Error::Parse {
                    row,
                    msg: format!("flag {:?} must be 0 or 1, got {c:?}", TRAJECTORY_COLUMNS[k]),
                }),
            }
        };
        let t = cell(0)?.parse::<usize>().map_err(|_| Error::Parse {
            row,
            msg: "non-integer t".into(),
        })?;
        rows.push(TrajectoryRow {
            t,
            y: real(1)?,
            yhat1: real(2)?,
            yhat2: real(3)?,
            lambda: real(4)?,
            rho: real(5)?,
            yhat: real(6)?,
            e: real(7)?,
            cum_loss: real(8)?,
            best_beta_prefix: real(9)?,
            best_loss_prefix: real(10)?,
            regret: real(11)?,
            norm_regret: real(12)?,
            bound_norm: real(13)?,
            in_range: flag(14)?,
            projected: flag(15)?,
        });
    }
    Ok(rows)
}
