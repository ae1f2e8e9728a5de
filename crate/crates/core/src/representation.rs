//! Fixed-length summaries of a reservoir trajectory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesInstance;
use crate::error::{Error, Result};
use crate::linalg::{flatten, ridge_solve, Matrix};
use crate::masking::MaskMatrix;
use crate::reservoir::{run, run_padded, run_streaming, DfrParams, Trajectory};

/// Representation family without its parameters, as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RepresentationTag {
    Lrs,
    Drs,
    MrsUpad,
    MrsXpad,
    Oms,
    Rms,
    Dprr,
}

impl RepresentationTag {
    pub const ALL: [RepresentationTag; 7] = [
        Self::Lrs,
        Self::Drs,
        Self::MrsUpad,
        Self::MrsXpad,
        Self::Oms,
        Self::Rms,
        Self::Dprr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lrs => "LRS",
            Self::Drs => "DRS",
            Self::MrsUpad => "MRS_UPAD",
            Self::MrsXpad => "MRS_XPAD",
            Self::Oms => "OMS",
            Self::Rms => "RMS",
            Self::Dprr => "DPRR",
        }
    }
}

impl fmt::Display for RepresentationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentationTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown representation {s:?}")))
    }
}

/// Representation family together with the parameters it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RepresentationKind {
    Lrs,
    Drs,
    MrsUpad { t_max: usize },
    MrsXpad { t_max: usize },
    Oms { lambda: f64 },
    Rms { lambda: f64 },
    Dprr,
}

impl RepresentationKind {
    pub fn tag(&self) -> RepresentationTag {
        match self {
            Self::Lrs => RepresentationTag::Lrs,
            Self::Drs => RepresentationTag::Drs,
            Self::MrsUpad { .. } => RepresentationTag::MrsUpad,
            Self::MrsXpad { .. } => RepresentationTag::MrsXpad,
            Self::Oms { .. } => RepresentationTag::Oms,
            Self::Rms { .. } => RepresentationTag::Rms,
            Self::Dprr => RepresentationTag::Dprr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MrsUpad { t_max } | Self::MrsXpad { t_max } if t_max == 0 => {
                Err(Error::InvalidArgument("t_max must be at least 1".into()))
            }
            Self::Oms { lambda } | Self::Rms { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidArgument(format!("lambda must be finite and nonnegative, got {lambda}")))
            }
            _ => Ok(()),
        }
    }

    /// Feature count `N_r` (per step for DRS).
    pub fn feature_len(&self, n_nodes: usize, n_vars: usize) -> usize {
        match *self {
            Self::Lrs | Self::Drs => n_nodes,
            Self::MrsUpad { t_max } | Self::MrsXpad { t_max } => t_max * n_nodes,
            Self::Oms { .. } => n_vars * (n_nodes + 1),
            Self::Rms { .. } | Self::Dprr => n_nodes * (n_nodes + 1),
        }
    }

    pub fn is_per_step(&self) -> bool {
        matches!(self, Self::Drs)
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag().as_str())
    }
}

/// Feature rows produced from one series: a single row for every kind except
/// DRS, which yields one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    kind: RepresentationKind,
    width: usize,
    data: Vec<f64>,
}

impl Representation {
    fn new(kind: RepresentationKind, width: usize, data: Vec<f64>) -> Result<Self> {
        debug_assert!(width > 0 && data.len() % width == 0);
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("representation features"));
        }
        Ok(Self { kind, width, data })
    }

    pub fn kind(&self) -> &RepresentationKind {
        &self.kind
    }

    /// `N_r` (per-step length for DRS).
    pub fn len(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Fixed-length feature vector. For DRS this is every step concatenated.
    pub fn features(&self) -> &[f64] {
        &self.data
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.width)
    }
}

fn require_steps(traj: &Trajectory) -> Result<()> {
    if traj.is_empty() {
        Err(Error::EmptyTrajectory)
    } else {
        Ok(())
    }
}

/// Last reservoir state `x(T)`.
pub fn lrs(traj: &Trajectory) -> Result<Representation> {
    require_steps(traj)?;
    Representation::new(RepresentationKind::Lrs, traj.n_nodes(), traj.last().to_vec())
}

/// Every driven state `x(1) .. x(T)` as its own row.
pub fn drs(traj: &Trajectory) -> Result<Representation> {
    require_steps(traj)?;
    Representation::new(RepresentationKind::Drs, traj.n_nodes(), traj.driven_flat().to_vec())
}

/// States `x(1) .. x(T)` flattened time-major and zero-filled to `t_max` steps.
pub fn mrs_xpad(traj: &Trajectory, t_max: usize) -> Result<Representation> {
    require_steps(traj)?;
    if traj.len() > t_max {
        return Err(Error::ExceedsTMax {
            len: traj.len(),
            t_max,
        });
    }
    let mut data = traj.driven_flat().to_vec();
    data.resize(t_max * traj.n_nodes(), 0.0);
    Representation::new(RepresentationKind::MrsXpad { t_max }, t_max * traj.n_nodes(), data)
}

/// Runs the reservoir on the input extended by zero samples up to `t_max` and
/// flattens all `t_max` states time-major.
pub fn mrs_upad(
    series: &TimeSeriesInstance,
    mask: &MaskMatrix,
    params: &DfrParams,
    t_max: usize,
) -> Result<Representation> {
    if series.len() > t_max {
        return Err(Error::ExceedsTMax {
            len: series.len(),
            t_max,
        });
    }
    let traj = run_padded(series, mask, params, t_max - series.len())?;
    Representation::new(
        RepresentationKind::MrsUpad { t_max },
        t_max * traj.n_nodes(),
        traj.driven_flat().to_vec(),
    )
}

/// `[x'(0) .. x'(T-1)]` with `x'(k) = [x(k), 1]`, shape `(N_x + 1) x T`.
fn augmented_previous(traj: &Trajectory) -> Result<Matrix> {
    let n = traj.n_nodes();
    let t = traj.len();
    let mut m = Matrix::zeros(n + 1, t);
    for k in 0..t {
        for (i, &v) in traj.state(k).iter().enumerate() {
            m.set(i, k, v);
        }
        m.set(n, k, 1.0);
    }
    Ok(m)
}

/// Ridge-regressed one-step-ahead input predictor, vectorized row-major.
pub fn oms(series: &TimeSeriesInstance, traj: &Trajectory, lambda: f64) -> Result<Representation> {
    require_steps(traj)?;
    if series.len() != traj.len() {
        return Err(Error::shape("oms", format!("series of {}", series.len()), format!("trajectory of {}", traj.len())));
    }
    let kind = RepresentationKind::Oms { lambda };
    kind.validate()?;
    let inputs = Matrix::new(
        series.n_vars(),
        series.len(),
        series.channels().concat(),
    )?;
    let design = augmented_previous(traj)?;
    let r = ridge_solve(&inputs, &design, lambda)?;
    Representation::new(kind, r.rows() * r.cols(), flatten(&r))
}

/// Ridge-regressed one-step-ahead state predictor, vectorized row-major.
pub fn rms(traj: &Trajectory, lambda: f64) -> Result<Representation> {
    require_steps(traj)?;
    let kind = RepresentationKind::Rms { lambda };
    kind.validate()?;
    let n = traj.n_nodes();
    let targets = Matrix::new(traj.len(), n, traj.driven_flat().to_vec())?.transpose();
    let design = augmented_previous(traj)?;
    let r = ridge_solve(&targets, &design, lambda)?;
    Representation::new(kind, r.rows() * r.cols(), flatten(&r))
}

/// Running sum of `x(k) x'(k-1)^T` over the steps of a trajectory.
#[derive(Debug, Clone)]
pub struct DprrAccumulator {
    n: usize,
    steps: usize,
    acc: Vec<f64>,
}

impl DprrAccumulator {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n: n_nodes,
            steps: 0,
            acc: vec![0.0; n_nodes * (n_nodes + 1)],
        }
    }

    /// Adds the contribution of step `k` given `x(k-1)` and `x(k)`.
    pub fn push(&mut self, prev: &[f64], cur: &[f64]) {
        let w = self.n + 1;
        for (i, &xi) in cur.iter().enumerate() {
            let row = &mut self.acc[i * w..(i + 1) * w];
            for (a, &pj) in row[..self.n].iter_mut().zip(prev) {
                *a += xi * pj;
            }
            row[self.n] += xi;
        }
        self.steps += 1;
    }

    pub fn finish(self) -> Result<Representation> {
        if self.steps == 0 {
            return Err(Error::EmptyTrajectory);
        }
        Representation::new(RepresentationKind::Dprr, self.acc.len(), self.acc)
    }
}

/// Dot-product representation: `vec(sum_k x(k) x'(k-1)^T)`, with entry
/// `(i, j)` the lag-one product of nodes `i` and `j` and the last column the
/// plain state sums.
pub fn dprr(traj: &Trajectory) -> Result<Representation> {
    let mut acc = DprrAccumulator::new(traj.n_nodes());
    for k in 1..=traj.len() {
        acc.push(traj.state(k - 1), traj.state(k));
    }
    acc.finish()
}

/// Unshifted `sum_k x(k) x(k)^T`. Symmetric by construction; kept as a
/// cross-check of the accumulation loop.
pub fn unshifted_gram(traj: &Trajectory) -> Matrix {
    let n = traj.n_nodes();
    let mut g = Matrix::zeros(n, n);
    for k in 1..=traj.len() {
        let x = traj.state(k);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, g.get(i, j) + x[i] * x[j]);
            }
        }
    }
    g
}

/// Computes the representation of `kind` for one series, running the
/// reservoir as needed. DPRR is accumulated while streaming.
pub fn compute(
    kind: &RepresentationKind,
    series: &TimeSeriesInstance,
    mask: &MaskMatrix,
    params: &DfrParams,
) -> Result<Representation> {
    match *kind {
        RepresentationKind::Dprr => {
            let mut acc = DprrAccumulator::new(params.n_nodes());
            run_streaming(series, mask, params, 0, |_, prev, cur| acc.push(prev, cur))?;
            acc.finish()
        }
        RepresentationKind::MrsUpad { t_max } => mrs_upad(series, mask, params, t_max),
        _ => {
            let traj = run(series, mask, params)?;
            from_trajectory(kind, series, &traj)
        }
    }
}

/// Representation of `kind` from an existing trajectory. MRS_UPAD needs to
/// keep running the reservoir and is therefore not available here.
pub fn from_trajectory(
    kind: &RepresentationKind,
    series: &TimeSeriesInstance,
    traj: &Trajectory,
) -> Result<Representation> {
    match *kind {
        RepresentationKind::Lrs => lrs(traj),
        RepresentationKind::Drs => drs(traj),
        RepresentationKind::MrsXpad { t_max } => mrs_xpad(traj, t_max),
        RepresentationKind::Oms { lambda } => oms(series, traj, lambda),
        RepresentationKind::Rms { lambda } => rms(traj, lambda),
        RepresentationKind::Dprr => dprr(traj),
        RepresentationKind::MrsUpad { .. } => Err(Error::InvalidArgument(
            "MRS_UPAD needs the input series and mask; use compute()".into(),
        )),
    }
}
