//! Stopped counting paths, piecewise-constant covariate paths and the
//! line-delimited dataset format.
//!
//! A counting path on `[0, T]` is stored as its sorted jump times. It is
//! observed only up to its `u`-th jump, so at most `u` jumps are ever kept.
//! A covariate path is a step function on a finite grid `0 = s_0 < ... < s_m = T`
//! with values in `[0, 1]^d`, right-continuous at grid points.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Class label, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Plus => 1.0,
            Label::Minus => -1.0,
        }
    }

    /// `sign(t) = 1` for `t > 0` and `-1` otherwise.
    pub fn from_score(t: f64) -> Self {
        if t > 0.0 {
            Label::Plus
        } else {
            Label::Minus
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "1" | "+1" => Some(Label::Plus),
            "-1" => Some(Label::Minus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingPath {
    horizon: f64,
    jump_times: Vec<f64>,
    cap: u32,
}

impl CountingPath {
    pub fn new(horizon: f64, jump_times: Vec<f64>, cap: u32) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidCountingPath(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if cap == 0 {
            return Err(Error::InvalidCountingPath("jump cap u must be at least 1".into()));
        }
        if jump_times.len() > cap as usize {
            return Err(Error::InvalidCountingPath(format!(
                "{} jumps recorded but the path is stopped at jump {cap}",
                jump_times.len()
            )));
        }
        for (i, &t) in jump_times.iter().enumerate() {
            if !(t > 0.0 && t <= horizon) {
                return Err(Error::InvalidCountingPath(format!(
                    "jump time {t} (index {i}) outside (0, {horizon}]"
                )));
            }
            if i > 0 && t <= jump_times[i - 1] {
                return Err(Error::InvalidCountingPath(format!(
                    "jump times not strictly increasing at index {i}"
                )));
            }
        }
        Ok(Self {
            horizon,
            jump_times,
            cap,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    /// `X_t`, the number of jumps in `[0, t]`.
    pub fn count_at(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }

    /// Time of the `u`-th jump, or `T` when the path never reaches `u` jumps.
    ///
    /// Because `tau <= T` always holds, this is also the end of the
    /// observation window `T ∧ tau`.
    pub fn tau(&self) -> f64 {
        if self.jump_times.len() == self.cap as usize {
            self.jump_times[self.cap as usize - 1]
        } else {
            self.horizon
        }
    }

    /// The same trajectory observed with a different jump cap.
    pub fn with_cap(&self, cap: u32) -> Result<Self> {
        let kept = self.jump_times.len().min(cap as usize);
        Self::new(self.horizon, self.jump_times[..kept].to_vec(), cap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariatePath {
    grid: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl CovariatePath {
    /// `grid` holds `m + 1` increasing points from `0` to `T`; `values` holds
    /// `m * dim` entries, row-major, one row per grid segment.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCovariatePath("dimension must be at least 1".into()));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidCovariatePath(
                "grid needs at least two points".into(),
            ));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidCovariatePath(format!(
                "grid must start at 0, got {}",
                grid[0]
            )));
        }
        for i in 1..grid.len() {
            if !(grid[i] > grid[i - 1]) || !grid[i].is_finite() {
                return Err(Error::InvalidCovariatePath(format!(
                    "grid not strictly increasing at index {i}"
                )));
            }
        }
        let segments = grid.len() - 1;
        if values.len() != segments * dim {
            return Err(Error::InvalidCovariatePath(format!(
                "expected {} values ({segments} segments x d={dim}), got {}",
                segments * dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidCovariatePath(format!(
                "value {} at flat index {i} outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self { grid, values, dim })
    }

    /// A path frozen at `value` over the whole window.
    pub fn constant(horizon: f64, value: Vec<f64>) -> Result<Self> {
        let dim = value.len();
        Self::new(vec![0.0, horizon], value, dim)
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("grid is non-empty")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_segments(&self) -> usize {
        self.grid.len() - 1
    }

    /// Start, end and value of segment `k`.
    pub fn segment(&self, k: usize) -> (f64, f64, &[f64]) {
        (
            self.grid[k],
            self.grid[k + 1],
            &self.values[k * self.dim..(k + 1) * self.dim],
        )
    }

    pub fn segment_index(&self, t: f64) -> usize {
        let m = self.num_segments();
        self.grid[..m].partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// `z_t`, right-continuous; times past `T` read the last segment.
    pub fn value_at(&self, t: f64) -> &[f64] {
        let k = self.segment_index(t);
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// `z^tau`: the path on `[0, tau]` frozen at `z_tau` afterwards.
    pub fn stopped_at(&self, tau: f64) -> Self {
        let horizon = self.horizon();
        if tau >= horizon {
            return self.clone();
        }
        let frozen = self.value_at(tau).to_vec();
        // segments [s_k, s_{k+1}) with s_k < tau keep their values; the one
        // holding tau is cut there and the tail [tau, T) takes z_tau
        let below = self.grid.partition_point(|&s| s < tau);
        let mut grid = self.grid[..below].to_vec();
        let mut values = self.values[..below * self.dim].to_vec();
        grid.push(tau);
        grid.push(horizon);
        values.extend_from_slice(&frozen);
        Self {
            grid,
            values,
            dim: self.dim,
        }
    }

    fn is_frozen_after(&self, tau: f64) -> bool {
        if tau >= self.horizon() {
            return true;
        }
        let frozen = self.value_at(tau);
        (0..self.num_segments())
            .filter(|&k| self.grid[k] >= tau)
            .all(|k| self.segment(k).2 == frozen)
    }
}

/// Truncate `z` at `tau(x)`. `x` already carries at most `u` jumps and is
/// returned unchanged. Idempotent.
pub fn stop_pair(x: &CountingPath, z: &CovariatePath) -> Result<(CountingPath, CovariatePath)> {
    if x.horizon() != z.horizon() {
        return Err(Error::HorizonMismatch {
            counting: x.horizon(),
            covariate: z.horizon(),
        });
    }
    Ok((x.clone(), z.stopped_at(x.tau())))
}

/// One observation `(X^tau, Z^tau, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: CountingPath,
    pub z: CovariatePath,
    pub y: Label,
}

impl LabeledSample {
    /// Requires `z` to be frozen after `tau(x)` already.
    pub fn new(x: CountingPath, z: CovariatePath, y: Label) -> Result<Self> {
        if x.horizon() != z.horizon() {
            return Err(Error::HorizonMismatch {
                counting: x.horizon(),
                covariate: z.horizon(),
            });
        }
        if !z.is_frozen_after(x.tau()) {
            return Err(Error::InvalidCovariatePath(format!(
                "covariate path changes after the stopping time tau={}",
                x.tau()
            )));
        }
        Ok(Self { x, z, y })
    }

    /// Applies [`stop_pair`] before building the sample.
    pub fn stopped(x: CountingPath, z: CovariatePath, y: Label) -> Result<Self> {
        let (x, z) = stop_pair(&x, &z)?;
        Ok(Self { x, z, y })
    }
}

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, v) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:.16e}").expect("writing to a String cannot fail");
    }
}

/// Render one record: `y;T;u;jumps;grid;d;values`.
pub fn format_record(sample: &LabeledSample) -> String {
    let mut line = String::new();
    line.push_str(match sample.y {
        Label::Plus => "1",
        Label::Minus => "-1",
    });
    write!(line, ";{:.16e};{};", sample.x.horizon(), sample.x.cap()).unwrap();
    push_floats(&mut line, sample.x.jump_times());
    line.push(';');
    push_floats(&mut line, sample.z.grid());
    write!(line, ";{};", sample.z.dim()).unwrap();
    push_floats(&mut line, sample.z.values());
    line
}

fn parse_floats(field: &str, what: &str) -> std::result::Result<Vec<f64>, String> {
    if field.trim().is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("{what}: cannot parse `{s}`: {e}"))
        })
        .collect()
}

pub fn parse_record(line: &str) -> std::result::Result<LabeledSample, String> {
    let fields: Vec<&str> = line.split(';').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 `;`-separated fields, found {}", fields.len()));
    }
    let y = Label::parse(fields[0]).ok_or_else(|| format!("bad label `{}`", fields[0]))?;
    let horizon: f64 = fields[1]
        .trim()
        .parse()
        .map_err(|e| format!("T: cannot parse `{}`: {e}", fields[1]))?;
    let cap: u32 = fields[2]
        .trim()
        .parse()
        .map_err(|e| format!("u: cannot parse `{}`: {e}", fields[2]))?;
    let jumps = parse_floats(fields[3], "jump_times")?;
    let grid = parse_floats(fields[4], "grid")?;
    let dim: usize = fields[5]
        .trim()
        .parse()
        .map_err(|e| format!("d: cannot parse `{}`: {e}", fields[5]))?;
    let values = parse_floats(fields[6], "values")?;
    let x = CountingPath::new(horizon, jumps, cap).map_err(|e| e.to_string())?;
    let z = CovariatePath::new(grid, values, dim).map_err(|e| e.to_string())?;
    LabeledSample::new(x, z, y).map_err(|e| e.to_string())
}

pub fn write_dataset_to<W: Write>(mut out: W, samples: &[LabeledSample]) -> std::io::Result<()> {
    for s in samples {
        writeln!(out, "{}", format_record(s))?;
    }
    out.flush()
}

pub fn read_dataset_from<R: BufRead>(input: R) -> Result<Vec<LabeledSample>> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = parse_record(&line).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_dataset(path: impl AsRef<Path>, samples: &[LabeledSample]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(std::io::BufWriter::new(file), samples).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledSample>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(file))
}
