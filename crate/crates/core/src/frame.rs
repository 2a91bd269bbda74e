//! Frames, the ASCII XYZM format, observation windows and strided pair iteration.
//!
//! An XYZM file is a header line `XYZM <width> <height>` followed by
//! `width * height` row-major data lines `x y z m`. The grayscale `m` lies in
//! `[0, 255]`; the line `nan nan nan -1` marks a point the sensor did not
//! resolve. Sequences live in a directory as `frame_<index>.xyzm` with a
//! zero-padded six digit index.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of channels in an XYZM file.
pub const XYZM_DIMS: usize = 4;

/// Channel index of the grayscale intensity in an XYZM frame.
pub const GRAYSCALE: usize = 3;

/// A `width x height` grid of observation points, each carrying `dims` real channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    time_index: u64,
    width: usize,
    height: usize,
    dims: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl Frame {
    /// Builds a frame from row-major, point-major channel values.
    ///
    /// Invalid points may hold anything in their channels; they are replaced by NaN.
    pub fn new(
        time_index: u64,
        width: usize,
        height: usize,
        dims: usize,
        mut values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DegenerateInput(format!(
                "frame size {width}x{height} is empty"
            )));
        }
        if dims < 2 {
            return Err(Error::DegenerateInput(format!(
                "a frame needs at least 2 channels, got {dims}"
            )));
        }
        let points = width * height;
        if values.len() != points * dims || valid.len() != points {
            return Err(Error::DegenerateInput(format!(
                "{} values / {} mask entries for a {width}x{height}x{dims} frame",
                values.len(),
                valid.len()
            )));
        }
        for (p, ok) in valid.iter().enumerate() {
            let chans = &mut values[p * dims..(p + 1) * dims];
            if *ok {
                if let Some(v) = chans.iter().find(|v| !v.is_finite()) {
                    return Err(Error::DegenerateInput(format!(
                        "valid point {p} carries non-finite value {v}"
                    )));
                }
            } else {
                chans.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }
        Ok(Frame {
            time_index,
            width,
            height,
            dims,
            values,
            valid,
        })
    }

    /// A frame with every point valid.
    pub fn from_values(
        time_index: u64,
        width: usize,
        height: usize,
        dims: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::new(time_index, width, height, dims, values, vec![true; width * height])
    }

    pub fn time_index(&self) -> u64 {
        self.time_index
    }

    pub fn with_time_index(mut self, time_index: u64) -> Self {
        self.time_index = time_index;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn point_count(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn is_valid(&self, point: usize) -> bool {
        self.valid[point]
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    /// Indices of valid points in row-major order.
    pub fn valid_points(&self) -> Vec<usize> {
        (0..self.point_count()).filter(|&p| self.valid[p]).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn value(&self, point: usize, dim: usize) -> f64 {
        self.values[point * self.dims + dim]
    }

    /// All channels of one point.
    pub fn point(&self, point: usize) -> &[f64] {
        &self.values[point * self.dims..(point + 1) * self.dims]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of channel `dim` at the valid points, in row-major order.
    pub fn channel(&self, dim: usize) -> Vec<f64> {
        self.valid_points()
            .into_iter()
            .map(|p| self.value(p, dim))
            .collect()
    }

    /// Valid 4-neighbours of a point.
    pub fn neighbors(&self, point: usize) -> impl Iterator<Item = usize> + '_ {
        let (row, col) = (point / self.width, point % self.width);
        let up = row.checked_sub(1).map(|r| self.index(r, col));
        let down = (row + 1 < self.height).then(|| self.index(row + 1, col));
        let left = col.checked_sub(1).map(|c| self.index(row, c));
        let right = (col + 1 < self.width).then(|| self.index(row, col + 1));
        [up, down, left, right]
            .into_iter()
            .flatten()
            .filter(|&q| self.valid[q])
    }
}

/// Inclusive row and column bounds of an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl WindowSpec {
    pub fn new(row_start: usize, row_end: usize, col_start: usize, col_end: usize) -> Self {
        WindowSpec {
            row_start,
            row_end,
            col_start,
            col_end,
        }
    }

    /// The window covering a whole frame.
    pub fn full(frame: &Frame) -> Self {
        WindowSpec::new(0, frame.height() - 1, 0, frame.width() - 1)
    }

    pub fn rows(&self) -> usize {
        self.row_end + 1 - self.row_start
    }

    pub fn cols(&self) -> usize {
        self.col_end + 1 - self.col_start
    }

    fn check(&self, frame: &Frame) -> Result<()> {
        let ok = self.row_start <= self.row_end
            && self.col_start <= self.col_end
            && self.row_end < frame.height()
            && self.col_end < frame.width();
        if ok {
            Ok(())
        } else {
            Err(Error::WindowRange {
                row_start: self.row_start,
                row_end: self.row_end,
                col_start: self.col_start,
                col_end: self.col_end,
                width: frame.width(),
                height: frame.height(),
            })
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{},{}:{}",
            self.row_start, self.row_end, self.col_start, self.col_end
        )
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    /// Parses `r0:r1,c0:c1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("window `{s}` is not of the form r0:r1,c0:c1"));
        let (rows, cols) = s.split_once(',').ok_or_else(bad)?;
        let range = |part: &str| -> Result<(usize, usize)> {
            let (a, b) = part.split_once(':').ok_or_else(bad)?;
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            Ok((a, b))
        };
        let (r0, r1) = range(rows)?;
        let (c0, c1) = range(cols)?;
        if r0 > r1 || c0 > c1 {
            return Err(bad());
        }
        Ok(WindowSpec::new(r0, r1, c0, c1))
    }
}

/// Copies the points inside `window` into a new frame, keeping grid adjacency.
pub fn extract_window(frame: &Frame, window: &WindowSpec) -> Result<Frame> {
    window.check(frame)?;
    let (rows, cols, dims) = (window.rows(), window.cols(), frame.dims());
    let mut values = Vec::with_capacity(rows * cols * dims);
    let mut valid = Vec::with_capacity(rows * cols);
    for row in window.row_start..=window.row_end {
        for col in window.col_start..=window.col_end {
            let p = frame.index(row, col);
            values.extend_from_slice(frame.point(p));
            valid.push(frame.is_valid(p));
        }
    }
    Frame::new(frame.time_index(), cols, rows, dims, values, valid)
}

/// Parses one XYZM frame held in memory.
pub fn parse_xyzm(bytes: &[u8]) -> Result<Frame> {
    read_xyzm(bytes)
}

/// Parses one XYZM frame from a reader. The time index is left at zero.
pub fn read_xyzm<R: BufRead>(reader: R) -> Result<Frame> {
    let mut lines = reader.lines().enumerate();
    let (width, height) = loop {
        match lines.next() {
            None => return Err(Error::Format("empty input".into())),
            Some((_, Err(e))) => return Err(Error::Format(e.to_string())),
            Some((_, Ok(line))) if line.trim().is_empty() => continue,
            Some((_, Ok(line))) => break parse_header(&line)?,
        }
    };

    let expected = width * height;
    let mut values = Vec::with_capacity(expected * XYZM_DIMS);
    let mut valid = Vec::with_capacity(expected);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if valid.len() == expected {
            return Err(Error::Format(format!(
                "unexpected data after {expected} points on line {line_no}"
            )));
        }
        let (chans, ok) = parse_point(line, line_no)?;
        values.extend_from_slice(&chans);
        valid.push(ok);
    }
    if valid.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: valid.len(),
        });
    }
    Frame::new(0, width, height, XYZM_DIMS, values, valid)
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("XYZM") {
        return Err(Error::Format(format!("expected `XYZM <width> <height>`, got `{line}`")));
    }
    let mut dim = |name: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .filter(|v| *v > 0)
            .ok_or_else(|| Error::Format(format!("missing or invalid {name} in `{line}`")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if tokens.next().is_some() {
        return Err(Error::Format(format!("trailing tokens in header `{line}`")));
    }
    Ok((width, height))
}

fn parse_point(line: &str, line_no: usize) -> Result<([f64; XYZM_DIMS], bool)> {
    let mut chans = [0.0; XYZM_DIMS];
    let mut tokens = line.split_whitespace();
    for (i, slot) in chans.iter_mut().enumerate() {
        let token = tokens.next().ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected 4 values, found {i}"),
        })?;
        *slot = token.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("`{token}` is not a number"),
        })?;
    }
    if tokens.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "more than 4 values".into(),
        });
    }
    if chans[..3].iter().any(|v| v.is_nan()) || chans[GRAYSCALE] == -1.0 {
        return Ok((chans, false));
    }
    if let Some(v) = chans.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line: line_no,
            message: format!("non-finite value {v}"),
        });
    }
    if !(0.0..=255.0).contains(&chans[GRAYSCALE]) {
        return Err(Error::Parse {
            line: line_no,
            message: format!("grayscale {} outside [0, 255]", chans[GRAYSCALE]),
        });
    }
    Ok((chans, true))
}

/// Writes a four-channel frame as XYZM text. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_xyzm<W: Write>(frame: &Frame, mut out: W) -> Result<()> {
    if frame.dims() != XYZM_DIMS {
        return Err(Error::Format(format!(
            "XYZM needs {XYZM_DIMS} channels, frame has {}",
            frame.dims()
        )));
    }
    let io = |e: io::Error| Error::io("<xyzm writer>", e);
    writeln!(out, "XYZM {} {}", frame.width(), frame.height()).map_err(io)?;
    for p in 0..frame.point_count() {
        if frame.is_valid(p) {
            let v = frame.point(p);
            writeln!(out, "{} {} {} {}", v[0], v[1], v[2], v[3]).map_err(io)?;
        } else {
            writeln!(out, "nan nan nan -1").map_err(io)?;
        }
    }
    Ok(())
}

pub fn to_xyzm_string(frame: &Frame) -> Result<String> {
    let mut buf = Vec::new();
    write_xyzm(frame, &mut buf)?;
    Ok(String::from_utf8(buf).expect("XYZM output is ASCII"))
}

/// `frame_000042.xyzm`
pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:06}.xyzm")
}

fn index_from_file_name(name: &str) -> Option<u64> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".xyzm")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// A directory of `frame_<index>.xyzm` files, read lazily in index order.
#[derive(Debug, Clone)]
pub struct FrameDir {
    root: PathBuf,
    entries: Vec<(u64, PathBuf)>,
}

impl FrameDir {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let read = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
        let mut entries = Vec::new();
        for entry in read {
            let entry = entry.map_err(|e| Error::io(&root, e))?;
            let name = entry.file_name();
            if let Some(index) = name.to_str().and_then(index_from_file_name) {
                entries.push((index, entry.path()));
            }
        }
        entries.sort_by_key(|(index, _)| *index);
        Ok(FrameDir { root, entries })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    /// Reads frame files one at a time; each frame's time index is its file index.
    pub fn frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        self.entries.iter().map(|(index, path)| read_frame_file(path).map(|f| f.with_time_index(*index)))
    }
}

pub fn read_frame_file(path: &Path) -> Result<Frame> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_xyzm(io::BufReader::new(file)).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

/// Writes `frames` into `dir` as `frame_<time index>.xyzm`, creating the directory.
pub fn write_frame_dir<'a>(dir: &Path, frames: impl IntoIterator<Item = &'a Frame>) -> Result<usize> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut count = 0;
    for frame in frames {
        let path = dir.join(frame_file_name(frame.time_index()));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = io::BufWriter::new(file);
        write_xyzm(frame, &mut out)?;
        out.flush().map_err(|e| Error::io(&path, e))?;
        count += 1;
    }
    Ok(count)
}

/// Pairs `(frame[k*n], frame[(k+1)*n])` drawn lazily from a frame source.
///
/// At most two frames are alive at once: the previous analysed frame and the
/// one just read. Skipped frames are dropped as soon as they are read.
pub struct StridePairs<I, T> {
    source: I,
    stride: usize,
    prev: Option<Arc<T>>,
    yielded: usize,
    done: bool,
}

/// Strided pair iteration over any fallible frame source.
pub fn stride_pairs<I, T>(source: I, stride: usize) -> Result<StridePairs<I::IntoIter, T>>
where
    I: IntoIterator<Item = Result<T>>,
{
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    Ok(StridePairs {
        source: source.into_iter(),
        stride,
        prev: None,
        yielded: 0,
        done: false,
    })
}

impl<I, T> StridePairs<I, T>
where
    I: Iterator<Item = Result<T>>,
{
    fn finish(&mut self) {
        self.done = true;
        self.prev = None;
        if self.yielded == 0 {
            log::warn!(
                "frame sequence shorter than stride + 1 = {}; no pairs analysed",
                self.stride + 1
            );
        }
    }
}

impl<I, T> Iterator for StridePairs<I, T>
where
    I: Iterator<Item = Result<T>>,
{
    type Item = Result<(Arc<T>, Arc<T>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.prev.is_none() {
            match self.source.next() {
                Some(Ok(first)) => self.prev = Some(Arc::new(first)),
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.finish();
                    return None;
                }
            }
        }
        for _ in 1..self.stride {
            match self.source.next() {
                Some(Ok(skipped)) => drop(skipped),
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.finish();
                    return None;
                }
            }
        }
        match self.source.next() {
            Some(Ok(cur)) => {
                let cur = Arc::new(cur);
                let prev = self.prev.replace(Arc::clone(&cur)).expect("primed above");
                self.yielded += 1;
                Some(Ok((prev, cur)))
            }
            Some(Err(e)) => {
                self.done = true;
                Some(Err(e))
            }
            None => {
                self.finish();
                None
            }
        }
    }
}
