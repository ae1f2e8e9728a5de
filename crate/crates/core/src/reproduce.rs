//! Bundled hyperparameter presets, published reference numbers and the
//! measured-vs-published comparison tables.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::{evaluate, fit_dataset, ExperimentConfig};
use crate::representation::RepresentationTag;

const PRESETS: &[(&str, &str)] = &[
    ("arab_dprr", include_str!("../../../presets/arab_dprr.json")),
    ("arab_drs", include_str!("../../../presets/arab_drs.json")),
    ("aus_dprr", include_str!("../../../presets/aus_dprr.json")),
    ("aus_drs", include_str!("../../../presets/aus_drs.json")),
    ("char_dprr", include_str!("../../../presets/char_dprr.json")),
    ("char_drs", include_str!("../../../presets/char_drs.json")),
    ("cmu_dprr", include_str!("../../../presets/cmu_dprr.json")),
    ("cmu_drs", include_str!("../../../presets/cmu_drs.json")),
    ("ecg_dprr", include_str!("../../../presets/ecg_dprr.json")),
    ("ecg_drs", include_str!("../../../presets/ecg_drs.json")),
    ("jpvow_dprr", include_str!("../../../presets/jpvow_dprr.json")),
    ("jpvow_drs", include_str!("../../../presets/jpvow_drs.json")),
    ("kick_dprr", include_str!("../../../presets/kick_dprr.json")),
    ("kick_drs", include_str!("../../../presets/kick_drs.json")),
    ("lib_dprr", include_str!("../../../presets/lib_dprr.json")),
    ("lib_drs", include_str!("../../../presets/lib_drs.json")),
    ("net_dprr", include_str!("../../../presets/net_dprr.json")),
    ("net_drs", include_str!("../../../presets/net_drs.json")),
    ("compare_dprr", include_str!("../../../presets/compare_dprr.json")),
    ("compare_drs", include_str!("../../../presets/compare_drs.json")),
    ("compare_lrs", include_str!("../../../presets/compare_lrs.json")),
    ("compare_mrs_upad", include_str!("../../../presets/compare_mrs_upad.json")),
    ("compare_mrs_xpad", include_str!("../../../presets/compare_mrs_xpad.json")),
    ("compare_oms", include_str!("../../../presets/compare_oms.json")),
    ("compare_rms", include_str!("../../../presets/compare_rms.json")),
    ("uwav_dprr", include_str!("../../../presets/uwav_dprr.json")),
    ("uwav_drs", include_str!("../../../presets/uwav_drs.json")),
    ("waf_dprr", include_str!("../../../presets/waf_dprr.json")),
    ("waf_drs", include_str!("../../../presets/waf_drs.json")),
    ("walk_dprr", include_str!("../../../presets/walk_dprr.json")),
    ("walk_drs", include_str!("../../../presets/walk_drs.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Parses a bundled preset such as `"arab_dprr"` or `"compare_oms"`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let key = name.trim().to_ascii_lowercase().replace('-', "_");
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled preset named {name:?}")))?;
    ExperimentConfig::from_json(text)
}

/// Shape of a benchmark dataset as published, used to sanity-check
/// converted files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub code: &'static str,
    pub n_vars: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub t_min: usize,
    pub t_max: usize,
}

const fn info(
    code: &'static str,
    n_vars: usize,
    n_classes: usize,
    n_train: usize,
    n_test: usize,
    t_min: usize,
    t_max: usize,
) -> DatasetInfo {
    DatasetInfo { code, n_vars, n_classes, n_train, n_test, t_min, t_max }
}

pub const DATASETS: [DatasetInfo; 12] = [
    info("ARAB", 13, 10, 6600, 2200, 4, 93),
    info("AUS", 22, 95, 1140, 1425, 45, 136),
    info("CHAR", 3, 20, 300, 2558, 109, 205),
    info("CMU", 62, 2, 29, 29, 127, 580),
    info("ECG", 2, 2, 100, 100, 39, 152),
    info("JPVOW", 12, 9, 270, 370, 7, 29),
    info("KICK", 62, 2, 16, 10, 274, 841),
    info("LIB", 2, 15, 180, 180, 45, 45),
    info("NET", 4, 13, 803, 534, 50, 994),
    info("UWAV", 3, 8, 200, 427, 315, 315),
    info("WAF", 6, 2, 298, 896, 104, 198),
    info("WALK", 62, 2, 28, 16, 128, 1918),
];

pub fn dataset_info(code: &str) -> Option<&'static DatasetInfo> {
    DATASETS.iter().find(|d| d.code.eq_ignore_ascii_case(code))
}

/// File name a converted benchmark is expected under, e.g. `arab.rcts.jsonl`.
pub fn dataset_file_name(code: &str) -> String {
    format!("{}.rcts.jsonl", code.to_ascii_lowercase())
}

/// Published ARAB test accuracy (%) per mask degree, columns in
/// `RepresentationTag::ALL` order.
pub const REPRESENTATION_ACCURACY: [(usize, [f64; 7]); 4] = [
    (3, [44.9, 18.2, 89.3, 89.1, 90.9, 85.4, 88.5]),
    (4, [52.6, 22.0, 93.0, 92.6, 95.3, 95.0, 96.5]),
    (5, [54.1, 26.0, 93.5, 93.2, 96.2, 96.0, 97.5]),
    (6, [60.1, 38.1, 94.3, 94.7, 96.0, 98.0, 98.0]),
];

pub fn representation_published(m: usize, tag: RepresentationTag) -> Option<f64> {
    let col = RepresentationTag::ALL.iter().position(|&t| t == tag)?;
    REPRESENTATION_ACCURACY.iter().find(|(d, _)| *d == m).map(|(_, row)| row[col])
}

pub const METHODS: [&str; 9] = [
    "MLP", "FCN", "ResNet", "Encoder", "MCDCNN", "Time-CNN", "TWIESN", "DFR_DRS", "DFR_DPRR",
];

/// Published test accuracy (%), columns in `METHODS` order.
pub const DATASET_ACCURACY: [(&str, [f64; 9]); 12] = [
    ("ARAB", [96.9, 99.4, 99.6, 98.1, 95.9, 95.8, 85.3, 27.8, 98.0]),
    ("AUS", [93.3, 97.5, 97.4, 93.8, 85.4, 72.6, 72.4, 34.4, 95.6]),
    ("CHAR", [96.9, 99.0, 99.0, 97.1, 93.8, 96.0, 92.0, 33.9, 96.2]),
    ("CMU", [60.0, 100.0, 99.7, 98.3, 51.4, 97.6, 89.3, 93.1, 100.0]),
    ("ECG", [74.8, 87.2, 86.7, 87.2, 50.0, 84.1, 73.7, 67.0, 88.0]),
    ("JPVOW", [97.6, 99.3, 99.2, 97.6, 94.4, 95.6, 96.5, 62.4, 97.8]),
    ("KICK", [61.0, 54.0, 51.0, 61.0, 56.0, 62.0, 67.0, 60.0, 80.0]),
    ("LIB", [78.0, 96.4, 95.4, 78.3, 65.1, 63.7, 79.4, 30.0, 78.3]),
    ("NET", [55.0, 89.1, 62.7, 77.7, 63.0, 89.0, 94.5, 92.5, 95.9]),
    ("UWAV", [90.1, 93.4, 92.6, 90.8, 84.5, 85.9, 75.4, 26.2, 86.2]),
    ("WAF", [89.4, 98.2, 98.9, 98.6, 65.8, 94.8, 94.9, 90.2, 99.0]),
    ("WALK", [70.0, 100.0, 100.0, 100.0, 45.0, 100.0, 94.4, 100.0, 100.0]),
];

pub fn dataset_published(code: &str, method: &str) -> Option<f64> {
    let col = METHODS.iter().position(|&m| m == method)?;
    DATASET_ACCURACY
        .iter()
        .find(|(d, _)| d.eq_ignore_ascii_case(code))
        .map(|(_, row)| row[col])
}

/// Hardware figures reported for the FPGA builds. Carried as published
/// constants; nothing here is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareFigure {
    pub source: &'static str,
    pub item: &'static str,
    pub value: &'static str,
}

const fn hw(source: &'static str, item: &'static str, value: &'static str) -> HardwareFigure {
    HardwareFigure { source, item, value }
}

pub const HARDWARE: [HardwareFigure; 27] = [
    hw("representation synthesis, N_x 10/20/30/40/50", "OMS latency", "16344 / 62032 / 162125 / 412452 / 740512"),
    hw("representation synthesis, N_x 10/20/30/40/50", "OMS BRAM", "8 / 8 / 11 / 21 / 37"),
    hw("representation synthesis, N_x 10/20/30/40/50", "RMS latency", "14474 / 63649 / 170557 / 435699 / 789574"),
    hw("representation synthesis, N_x 10/20/30/40/50", "RMS BRAM", "8 / 8 / 12 / 26 / 50"),
    hw("representation synthesis, N_x 10/20/30/40/50", "DPRR latency", "5628 / 21448 / 47468 / 83688 / 130108"),
    hw("representation synthesis, N_x 10/20/30/40/50", "DPRR BRAM", "2 / 2 / 2 / 5 / 9"),
    hw("synthesis, ARAB", "MLP latency/BRAM/DSP/FF/LUT", "6663799 / 3105 / 9 / 3784 / 4575"),
    hw("synthesis, ARAB", "FCN latency/BRAM/DSP/FF/LUT", "126841718 / 942 / 12 / 5277 / 7383"),
    hw("synthesis, ARAB", "ResNet latency/BRAM/DSP/FF/LUT", "227560415 / 1951 / 87 / 34673 / 37984"),
    hw("synthesis, ARAB", "Encoder latency/BRAM/DSP/FF/LUT", "801121336 / 5787 / 19 / 9941 / 12395"),
    hw("synthesis, ARAB", "MCDCNN latency/BRAM/DSP/FF/LUT", "16328669 / 8547 / 62 / 11909 / 14882"),
    hw("synthesis, ARAB", "Time-CNN latency/BRAM/DSP/FF/LUT", "270020 / 61 / 74 / 14488 / 16600"),
    hw("synthesis, ARAB", "TWIESN latency/BRAM/DSP/FF/LUT", "6229486 / 330 / 24 / 3529 / 4946"),
    hw("synthesis, ARAB", "DFR_DRS latency/BRAM/DSP/FF/LUT", "2130 / 21 / 182 / 22905 / 30767"),
    hw("synthesis, ARAB", "DFR_DPRR latency/BRAM/DSP/FF/LUT", "84532 / 57 / 65 / 12083 / 14152"),
    hw("power estimate", "MLP total W", "0.201"),
    hw("power estimate", "FCN total W", "0.226"),
    hw("power estimate", "ResNet total W", "0.605"),
    hw("power estimate", "Encoder total W", "0.288"),
    hw("power estimate", "MCDCNN total W", "0.333"),
    hw("power estimate", "Time-CNN total W", "0.365"),
    hw("power estimate", "TWIESN total W", "0.209"),
    hw("power estimate", "DFR_DRS total W", "0.535"),
    hw("power estimate", "DFR_DPRR total W", "0.333"),
    hw("implementation, ARAB", "DFR_DPRR clock / power", "100 MHz / 0.274 W"),
    hw("implementation, ARAB", "DFR_DPRR prediction time, 2200 series", "7.68 s"),
    hw("implementation, ARAB", "DFR_DPRR energy per series", "9.57e-4 J"),
];

/// Configuration used for the representation comparison: theta 0.25,
/// lambda 1, beta 0.01 and a per-representation gamma/eta.
pub fn comparison_config(tag: RepresentationTag, m: usize) -> Result<ExperimentConfig> {
    let name = format!("compare_{}", tag.as_str().to_ascii_lowercase());
    Ok(ExperimentConfig { m, ..preset(&name)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Measured,
    /// Published number only; not reproduced by this software.
    PublishedOnly,
    /// Reproducible, but the dataset was not available.
    MissingData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Accuracy in percent.
    pub published: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub origin: Origin,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub comparison: &'static str,
    pub rows: Vec<ComparisonRow>,
    pub hardware_published: Vec<HardwareFigure>,
}

impl ComparisonReport {
    fn new(comparison: &'static str) -> Self {
        Self {
            comparison,
            rows: Vec::new(),
            hardware_published: HARDWARE.to_vec(),
        }
    }

    fn push(&mut self, dataset: &str, method: &str, m: Option<usize>, published: f64, measured: Option<f64>, origin: Origin) {
        self.rows.push(ComparisonRow {
            dataset: dataset.to_string(),
            method: method.to_string(),
            m,
            published,
            measured,
            delta: measured.map(|v| v - published),
            origin,
        });
    }

    pub fn measured(&self, dataset: &str, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.dataset.eq_ignore_ascii_case(dataset) && r.method == method)
            .and_then(|r| r.measured)
    }

    pub fn markdown(&self) -> String {
        let mut s = format!("{} comparison (accuracy, %)\n\n", self.comparison);
        s.push_str("| dataset | method | m | published | measured | delta | origin |\n");
        s.push_str("|---|---|---|---|---|---|---|\n");
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1}"));
        for r in &self.rows {
            let origin = match r.origin {
                Origin::Measured => "measured",
                Origin::PublishedOnly => "published only",
                Origin::MissingData => "no data",
            };
            s.push_str(&format!(
                "| {} | {} | {} | {:.1} | {} | {} | {} |\n",
                r.dataset,
                r.method,
                r.m.map_or("-".to_string(), |m| m.to_string()),
                r.published,
                opt(r.measured),
                opt(r.delta),
                origin
            ));
        }
        s.push_str("\nHardware figures (published constants, not reproduced)\n\n");
        for h in &self.hardware_published {
            s.push_str(&format!("- {}: {} = {}\n", h.source, h.item, h.value));
        }
        s
    }
}

fn test_accuracy(ds: &Dataset, cfg: &ExperimentConfig) -> Result<f64> {
    let model = fit_dataset(ds, cfg)?;
    Ok(100.0 * evaluate(&model, &ds.test, false)?.accuracy)
}

/// Runs every representation at each mask degree in `m_values` on `ds`
/// (ARAB in the published comparison).
pub fn run_representation_comparison(ds: Option<&Dataset>, m_values: &[usize]) -> Result<ComparisonReport> {
    let mut report = ComparisonReport::new("representations");
    for &m in m_values {
        for tag in RepresentationTag::ALL {
            let published = representation_published(m, tag)
                .ok_or_else(|| Error::InvalidArgument(format!("no published row for m = {m}")))?;
            match ds {
                Some(ds) => {
                    let acc = test_accuracy(ds, &comparison_config(tag, m)?)?;
                    report.push("ARAB", tag.as_str(), Some(m), published, Some(acc), Origin::Measured);
                }
                None => report.push("ARAB", tag.as_str(), Some(m), published, None, Origin::MissingData),
            }
        }
    }
    Ok(report)
}

/// Runs the DFR columns with the per-dataset presets for every dataset that
/// `lookup` provides; the other methods are reported as published only.
pub fn run_dataset_comparison<'a>(
    codes: &[&str],
    mut lookup: impl FnMut(&str) -> Result<Option<&'a Dataset>>,
) -> Result<ComparisonReport> {
    let mut report = ComparisonReport::new("datasets");
    for &code in codes {
        let (name, row) = DATASET_ACCURACY
            .iter()
            .find(|(d, _)| d.eq_ignore_ascii_case(code))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset {code:?}")))?;
        let ds = lookup(name)?;
        for (method, &published) in METHODS.iter().zip(row) {
            let rep = match *method {
                "DFR_DRS" => Some("drs"),
                "DFR_DPRR" => Some("dprr"),
                _ => None,
            };
            match (rep, ds) {
                (None, _) => report.push(name, method, None, published, None, Origin::PublishedOnly),
                (Some(_), None) => report.push(name, method, None, published, None, Origin::MissingData),
                (Some(rep), Some(ds)) => {
                    let cfg = preset(&format!("{}_{rep}", name.to_ascii_lowercase()))?;
                    let acc = test_accuracy(ds, &cfg)?;
                    report.push(name, method, Some(cfg.m), published, Some(acc), Origin::Measured);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        let mut n = 0;
        for name in preset_names() {
            preset(name).unwrap();
            n += 1;
        }
        assert_eq!(n, 7 + 2 * 12);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn presets_carry_published_values() {
        let c = preset("arab_dprr").unwrap();
        assert_eq!((c.representation, c.gamma, c.eta, c.theta, c.beta, c.m), (RepresentationTag::Dprr, 0.04, 1.0, 0.3, 1e-2, 5));
        let c = preset("NET-DPRR").unwrap();
        assert_eq!((c.gamma, c.eta, c.theta, c.beta), (0.025, 3.0, 0.2, 1e-3));
        let c = preset("ecg_drs").unwrap();
        assert_eq!((c.gamma, c.eta, c.theta, c.beta), (1.0, 1.0, 0.15, 1e-1));
        let c = comparison_config(RepresentationTag::MrsUpad, 3).unwrap();
        assert_eq!((c.gamma, c.eta, c.theta, c.lambda, c.beta, c.m), (0.1, 0.1, 0.25, 1.0, 0.01, 3));
    }

    #[test]
    fn published_lookups() {
        assert_eq!(representation_published(5, RepresentationTag::Dprr), Some(97.5));
        assert_eq!(representation_published(3, RepresentationTag::Drs), Some(18.2));
        assert_eq!(representation_published(7, RepresentationTag::Dprr), None);
        assert_eq!(dataset_published("jpvow", "DFR_DPRR"), Some(97.8));
        assert_eq!(dataset_published("ECG", "DFR_DRS"), Some(67.0));
        assert_eq!(dataset_info("arab").unwrap().n_train, 6600);
        assert_eq!(dataset_file_name("ARAB"), "arab.rcts.jsonl");
    }

    #[test]
    fn missing_data_reports_published_only() {
        let r = run_dataset_comparison(&["ECG"], |_| Ok(None)).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r.rows.iter().all(|row| row.measured.is_none()));
        assert_eq!(r.rows[0].origin, Origin::PublishedOnly);
        assert_eq!(r.rows[8].origin, Origin::MissingData);
        let md = r.markdown();
        assert!(md.contains("published only"));
        assert!(md.contains("not reproduced"));
        assert!(run_dataset_comparison(&["XYZ"], |_| Ok(None)).is_err());

        let t3 = run_representation_comparison(None, &[5]).unwrap();
        assert_eq!(t3.rows.len(), 7);
        assert!(run_representation_comparison(None, &[9]).is_err());
    }
}
