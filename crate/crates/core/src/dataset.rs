//! Labeled multivariate time series and the RCTS-v1 interchange format.
//!
//! RCTS-v1 is line-delimited JSON. The first line is a header
//! `{"format":"rcts-v1","name":..,"n_vars":..,"classes":[..]}`; every further
//! line is one instance
//! `{"id":..,"label":..,"split":"train"|"test","series":[[ch0..],[ch1..],..]}`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const FORMAT_TAG: &str = "rcts-v1";

/// One labeled series stored channel-major: `channels[v][k]` is variable `v`
/// at time step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesInstance {
    id: String,
    label: String,
    channels: Vec<Vec<f64>>,
}

impl TimeSeriesInstance {
    pub fn new(id: impl Into<String>, label: impl Into<String>, channels: Vec<Vec<f64>>) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.is_empty() {
            return Err(Error::InvalidArgument("series has no channels".into()));
        }
        if len == 0 {
            return Err(Error::InvalidArgument("series is empty".into()));
        }
        if let Some((c, ch)) = channels.iter().enumerate().find(|(_, ch)| ch.len() != len) {
            return Err(Error::InvalidArgument(format!(
                "ragged series: channel {c} has {} samples, channel 0 has {len}",
                ch.len()
            )));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series values"));
        }
        Ok(Self {
            id: id.into(),
            label: label.into(),
            channels,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_vars(&self) -> usize {
        self.channels.len()
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// `u(k + 1)` (zero-based `k`).
    pub fn sample(&self, k: usize) -> Vec<f64> {
        self.channels.iter().map(|ch| ch[k]).collect()
    }

    pub fn sample_into(&self, k: usize, out: &mut [f64]) {
        for (o, ch) in out.iter_mut().zip(&self.channels) {
            *o = ch[k];
        }
    }

    /// Copy with the first `k` time steps.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let channels = self.channels.iter().map(|ch| ch[..k.min(ch.len())].to_vec()).collect();
        Self::new(self.id.clone(), self.label.clone(), channels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub n_vars: usize,
    pub classes: Vec<String>,
    pub train: Vec<TimeSeriesInstance>,
    pub test: Vec<TimeSeriesInstance>,
}

impl Dataset {
    /// Checks every invariant: unique classes, known labels, channel counts
    /// and a non-empty train split.
    pub fn validate(&self) -> Result<()> {
        if self.n_vars == 0 {
            return Err(Error::InvalidArgument("n_vars must be at least 1".into()));
        }
        check_classes(&self.classes)?;
        if self.train.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        for inst in self.train.iter().chain(&self.test) {
            if inst.n_vars() != self.n_vars {
                return Err(Error::InvalidArgument(format!(
                    "instance {} has {} channels, dataset declares {}",
                    inst.id,
                    inst.n_vars(),
                    self.n_vars
                )));
            }
            if !self.classes.contains(&inst.label) {
                return Err(Error::UnknownLabel(inst.label.clone()));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> &[TimeSeriesInstance] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    fn all(&self) -> impl Iterator<Item = &TimeSeriesInstance> {
        self.train.iter().chain(&self.test)
    }

    pub fn t_min(&self) -> usize {
        self.all().map(TimeSeriesInstance::len).min().unwrap_or(0)
    }

    pub fn t_max(&self) -> usize {
        self.all().map(TimeSeriesInstance::len).max().unwrap_or(0)
    }
}

fn check_classes(classes: &[String]) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::InvalidArgument("class list is empty".into()));
    }
    let mut seen = HashSet::new();
    for c in classes {
        if !seen.insert(c.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate class {c:?}")));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    name: String,
    n_vars: usize,
    classes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceLine {
    id: String,
    label: String,
    split: Split,
    series: Vec<Vec<f64>>,
}

/// Parses RCTS-v1 text; `origin` is only used in error messages.
pub fn parse(text: impl BufRead, origin: &str) -> Result<Dataset> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate();
    let (header_no, header_line) = loop {
        match lines.next() {
            Some((i, l)) => {
                let l = l.map_err(|e| perr(i + 1, e.to_string()))?;
                if !l.trim().is_empty() {
                    break (i + 1, l);
                }
            }
            None => return Err(perr(1, "missing header".into())),
        }
    };
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| perr(header_no, format!("bad header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(perr(
            header_no,
            format!("unsupported format {:?}, expected {FORMAT_TAG:?}", header.format),
        ));
    }
    if header.n_vars == 0 {
        return Err(perr(header_no, "n_vars must be at least 1".into()));
    }
    check_classes(&header.classes).map_err(|e| perr(header_no, e.to_string()))?;

    let mut ds = Dataset {
        name: header.name,
        n_vars: header.n_vars,
        classes: header.classes,
        train: Vec::new(),
        test: Vec::new(),
    };
    let mut ids = HashSet::new();
    for (i, l) in lines {
        let no = i + 1;
        let l = l.map_err(|e| perr(no, e.to_string()))?;
        if l.trim().is_empty() {
            continue;
        }
        let rec: InstanceLine =
            serde_json::from_str(&l).map_err(|e| perr(no, format!("bad instance: {e}")))?;
        if rec.series.len() != ds.n_vars {
            return Err(perr(
                no,
                format!("instance has {} channels, header declares {}", rec.series.len(), ds.n_vars),
            ));
        }
        if !ds.classes.contains(&rec.label) {
            return Err(perr(no, format!("unknown label {:?}", rec.label)));
        }
        if !ids.insert(rec.id.clone()) {
            return Err(perr(no, format!("duplicate instance id {:?}", rec.id)));
        }
        let inst = TimeSeriesInstance::new(rec.id, rec.label, rec.series)
            .map_err(|e| perr(no, e.to_string()))?;
        match rec.split {
            Split::Train => ds.train.push(inst),
            Split::Test => ds.test.push(inst),
        }
    }
    if ds.train.is_empty() {
        return Err(perr(header_no, "empty split: train".into()));
    }
    Ok(ds)
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse(BufReader::new(file), &path.display().to_string())
}

/// Writes RCTS-v1: header, then the train split, then the test split.
pub fn write(ds: &Dataset, mut out: impl Write) -> Result<()> {
    ds.validate()?;
    let header = Header {
        format: FORMAT_TAG.to_string(),
        name: ds.name.clone(),
        n_vars: ds.n_vars,
        classes: ds.classes.clone(),
    };
    let io = |e| Error::io("<output>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for (split, insts) in [(Split::Train, &ds.train), (Split::Test, &ds.test)] {
        for inst in insts {
            let rec = InstanceLine {
                id: inst.id.clone(),
                label: inst.label.clone(),
                split,
                series: inst.channels.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn save(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ds.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write(ds, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parameters of the synthetic sinusoid generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub n_vars: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub seed: u64,
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_classes: 2,
            n_vars: 2,
            n_train: 100,
            n_test: 100,
            t_min: 20,
            t_max: 40,
            seed: 7,
            noise: 0.3,
        }
    }
}

const SYNTH_FREQ_LO: f64 = 0.02;
const SYNTH_FREQ_HI: f64 = 0.3;

/// Frequency in cycles per sample used by class `c` on channel `v`.
pub fn synth_frequency(c: usize, v: usize, n_classes: usize) -> f64 {
    let slot = ((c + v) % n_classes + 1) as f64 / (n_classes + 1) as f64;
    SYNTH_FREQ_LO + (SYNTH_FREQ_HI - SYNTH_FREQ_LO) * slot
}

/// Noisy sinusoids with a class- and channel-dependent frequency.
///
/// With `rng = SplitMix64(seed)`, the train split then the test split are
/// generated; instance `i` of a split has class `i % n_classes`. Per instance
/// the draws are, in order: `T = t_min + below(t_max - t_min + 1)`; then for
/// each channel `v` a phase `uniform(0, 2 pi)` followed by `T` noise draws
/// `normal()`. Sample `k` (zero-based) of channel `v` is
/// `sin(2 pi f k + phase) + noise * n_k` with `f = synth_frequency(c, v, n_classes)`.
/// Class labels are `"c0"`, `"c1"`, ...; ids are `"train-00000"` style.
pub fn synth(spec: &SynthSpec) -> Result<Dataset> {
    if spec.n_classes < 1 || spec.n_vars < 1 || spec.n_train < 1 || spec.n_test < 1 {
        return Err(Error::InvalidArgument("synth counts must all be at least 1".into()));
    }
    if spec.t_min < 1 || spec.t_min > spec.t_max {
        return Err(Error::InvalidArgument(format!(
            "invalid length range {}..={}",
            spec.t_min, spec.t_max
        )));
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(Error::InvalidArgument("noise must be finite and nonnegative".into()));
    }

    let mut rng = SplitMix64::new(spec.seed);
    let classes: Vec<String> = (0..spec.n_classes).map(|c| format!("c{c}")).collect();
    let mut make = |prefix: &str, n: usize| -> Result<Vec<TimeSeriesInstance>> {
        (0..n)
            .map(|i| {
                let c = i % spec.n_classes;
                let t = spec.t_min + rng.below(spec.t_max - spec.t_min + 1);
                let channels = (0..spec.n_vars)
                    .map(|v| {
                        let f = synth_frequency(c, v, spec.n_classes);
                        let phase = rng.uniform(0.0, std::f64::consts::TAU);
                        (0..t)
                            .map(|k| {
                                (std::f64::consts::TAU * f * k as f64 + phase).sin()
                                    + spec.noise * rng.normal()
                            })
                            .collect()
                    })
                    .collect();
                TimeSeriesInstance::new(format!("{prefix}-{i:05}"), classes[c].clone(), channels)
            })
            .collect()
    };
    let train = make("train", spec.n_train)?;
    let test = make("test", spec.n_test)?;
    Ok(Dataset {
        name: format!("synth-{}c-{}v-seed{}", spec.n_classes, spec.n_vars, spec.seed),
        n_vars: spec.n_vars,
        classes,
        train,
        test,
    })
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Pools all time steps of all given instances per channel. Channels with
    /// zero spread keep a unit scale.
    pub fn fit(instances: &[TimeSeriesInstance]) -> Result<Self> {
        let n_vars = instances
            .first()
            .ok_or(Error::EmptySplit("train"))?
            .n_vars();
        let mut sum = vec![0.0; n_vars];
        let mut count = 0usize;
        for inst in instances {
            for (s, ch) in sum.iter_mut().zip(&inst.channels) {
                *s += ch.iter().sum::<f64>();
            }
            count += inst.len();
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; n_vars];
        for inst in instances {
            for ((s, ch), m) in sq.iter_mut().zip(&inst.channels).zip(&mean) {
                *s += ch.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
        }
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / count as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, inst: &TimeSeriesInstance) -> Result<TimeSeriesInstance> {
        if inst.n_vars() != self.mean.len() {
            return Err(Error::shape("normalize", self.mean.len(), inst.n_vars()));
        }
        let channels = inst
            .channels
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(ch, (m, s))| ch.iter().map(|v| (v - m) / s).collect())
            .collect();
        TimeSeriesInstance::new(inst.id.clone(), inst.label.clone(), channels)
    }
}

/// Reads a directory of per-instance CSV files:
///
/// ```text
/// DIR/classes.txt            optional, one class label per line, in order
/// DIR/train/<label>/<id>.csv
/// DIR/test/<label>/<id>.csv
/// ```
///
/// Each CSV has no header, one row per time step and one column per variable.
/// Without `classes.txt`, classes are ordered by name as found under `train/`.
pub fn convert_csv_dir(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let classes_file = dir.join("classes.txt");
    let mut classes: Vec<String> = if classes_file.exists() {
        std::fs::read_to_string(&classes_file)
            .map_err(|e| Error::io(&classes_file, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect()
    } else {
        sorted_entries(&dir.join("train"))?
            .into_iter()
            .filter(|p| p.is_dir())
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    };
    check_classes(&classes)?;

    let mut read_split = |split: &str| -> Result<Vec<TimeSeriesInstance>> {
        let root = dir.join(split);
        if !root.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for class_dir in sorted_entries(&root)?.into_iter().filter(|p| p.is_dir()) {
            let label = class_dir.file_name().unwrap().to_string_lossy().into_owned();
            if !classes.contains(&label) {
                if split == "train" && !classes_file.exists() {
                    classes.push(label.clone());
                } else {
                    return Err(Error::UnknownLabel(label));
                }
            }
            for file in sorted_entries(&class_dir)? {
                if file.extension().and_then(|e| e.to_str()) != Some("csv") {
                    continue;
                }
                let id = format!(
                    "{split}/{label}/{}",
                    file.file_stem().unwrap().to_string_lossy()
                );
                out.push(read_csv_instance(&file, id, label.clone())?);
            }
        }
        Ok(out)
    };
    let train = read_split("train")?;
    let test = read_split("test")?;
    let n_vars = train.first().ok_or(Error::EmptySplit("train"))?.n_vars();
    let ds = Dataset {
        name: name.to_string(),
        n_vars,
        classes,
        train,
        test,
    };
    ds.validate()?;
    Ok(ds)
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    v.sort();
    Ok(v)
}

fn read_csv_instance(path: &Path, id: String, label: String) -> Result<TimeSeriesInstance> {
    let origin = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: origin.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
    let mut channels: Vec<Vec<f64>> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let perr = |msg: String| Error::Parse {
            path: origin.clone(),
            line: row_no + 1,
            msg,
        };
        let record = record.map_err(|e| perr(e.to_string()))?;
        if channels.is_empty() {
            channels = vec![Vec::new(); record.len()];
        } else if record.len() != channels.len() {
            return Err(perr(format!("{} columns, expected {}", record.len(), channels.len())));
        }
        for (ch, field) in channels.iter_mut().zip(record.iter()) {
            let v: f64 = field.parse().map_err(|_| perr(format!("not a number: {field:?}")))?;
            ch.push(v);
        }
    }
    TimeSeriesInstance::new(id, label, channels).map_err(|e| Error::Parse {
        path: origin,
        line: 0,
        msg: e.to_string(),
    })
}
