//! Discretized Mackey-Glass delayed feedback reservoir.
//!
//! Each input step drives a cascade over the `N_x` virtual nodes: node 1 is fed
//! by the last node of the previous step, node `n > 1` by the freshly updated
//! node `n - 1`, and every node mixes in the nonlinearity applied to its own
//! previous value plus the masked input.

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesInstance;
use crate::error::{Error, Result};
use crate::masking::MaskMatrix;

/// Reservoir hyperparameters with the precomputed decay constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct DfrParams {
    gamma: f64,
    eta: f64,
    theta: f64,
    p: u32,
    n_nodes: usize,
    decay: f64,
    gain: f64,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    gamma: f64,
    eta: f64,
    theta: f64,
    p: u32,
    n_nodes: usize,
}

impl TryFrom<ParamsRepr> for DfrParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        DfrParams::new(r.gamma, r.eta, r.theta, r.p, r.n_nodes)
    }
}

impl From<DfrParams> for ParamsRepr {
    fn from(p: DfrParams) -> Self {
        ParamsRepr {
            gamma: p.gamma,
            eta: p.eta,
            theta: p.theta,
            p: p.p,
            n_nodes: p.n_nodes,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and positive, got {v}")))
    }
}

impl DfrParams {
    pub fn new(gamma: f64, eta: f64, theta: f64, p: u32, n_nodes: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        positive("eta", eta)?;
        positive("theta", theta)?;
        if p == 0 {
            return Err(Error::InvalidArgument("nonlinearity exponent p must be >= 1".into()));
        }
        if n_nodes == 0 {
            return Err(Error::InvalidArgument("reservoir needs at least one node".into()));
        }
        let decay = (-theta).exp();
        Ok(Self {
            gamma,
            eta,
            theta,
            p,
            n_nodes,
            decay,
            gain: 1.0 - decay,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Total loop delay `N_x * theta`.
    pub fn tau(&self) -> f64 {
        self.n_nodes as f64 * self.theta
    }

    /// `exp(-theta)`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// `1 - exp(-theta)`.
    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// `eta * t / (1 + t^p)` with `t = x + gamma * j`.
pub fn nonlinearity(x: f64, j: f64, params: &DfrParams) -> Result<f64> {
    let t = x + params.gamma * j;
    let tp = if params.p == 2 { t * t } else { t.powi(params.p as i32) };
    let denom = 1.0 + tp;
    if denom == 0.0 {
        return Err(Error::NonlinearityPole(t));
    }
    Ok(params.eta * t / denom)
}

/// One input step of the virtual-node cascade, writing `x(k)` into `next`.
pub fn step_into(prev: &[f64], j: &[f64], params: &DfrParams, next: &mut [f64]) -> Result<()> {
    let n = params.n_nodes;
    if prev.len() != n || j.len() != n || next.len() != n {
        return Err(Error::shape(
            "step",
            format!("{n} nodes"),
            format!("prev {}, j {}, out {}", prev.len(), j.len(), next.len()),
        ));
    }
    let (decay, gain) = (params.decay, params.gain);
    let mut carry = prev[n - 1];
    for i in 0..n {
        let x = carry * decay + gain * nonlinearity(prev[i], j[i], params)?;
        next[i] = x;
        carry = x;
    }
    Ok(())
}

pub fn step(prev: &[f64], j: &[f64], params: &DfrParams) -> Result<Vec<f64>> {
    let mut next = vec![0.0; params.n_nodes];
    step_into(prev, j, params, &mut next)?;
    Ok(next)
}

/// States `x(0), x(1), ..., x(T)` with `x(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_nodes: usize,
    /// Row-major `(T + 1) x n_nodes`.
    states: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from explicit states; the first one must be zero.
    pub fn from_states(states: &[Vec<f64>]) -> Result<Self> {
        let n_nodes = states.first().map_or(0, Vec::len);
        if n_nodes == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if states.iter().any(|s| s.len() != n_nodes) {
            return Err(Error::shape("Trajectory", n_nodes, "ragged states"));
        }
        if states[0].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument("x(0) must be the zero state".into()));
        }
        let flat = states.concat();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory states"));
        }
        Ok(Self {
            n_nodes,
            states: flat,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of driven steps `T` (excluding `x(0)`).
    pub fn len(&self) -> usize {
        self.states.len() / self.n_nodes - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `x(k)` for `k` in `0..=T`.
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.chunks(self.n_nodes)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len())
    }

    /// Row-major `x(1) .. x(T)`.
    pub(crate) fn driven_flat(&self) -> &[f64] {
        &self.states[self.n_nodes..]
    }
}

fn check_dims(series: &TimeSeriesInstance, mask: &MaskMatrix, params: &DfrParams) -> Result<()> {
    if series.n_vars() != mask.n_vars() {
        return Err(Error::shape("run", format!("mask for {} vars", mask.n_vars()), format!("series with {} vars", series.n_vars())));
    }
    if mask.n_nodes() != params.n_nodes() {
        return Err(Error::shape("run", format!("mask with {} nodes", mask.n_nodes()), format!("params with {} nodes", params.n_nodes())));
    }
    Ok(())
}

/// Drives the reservoir over `series` followed by `extra_zero_steps` zero
/// inputs, calling `visit(k, x(k-1), x(k))` for every step.
pub fn run_streaming<F>(
    series: &TimeSeriesInstance,
    mask: &MaskMatrix,
    params: &DfrParams,
    extra_zero_steps: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64], &[f64]),
{
    check_dims(series, mask, params)?;
    let n = params.n_nodes();
    let mut prev = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut j = vec![0.0; n];
    let mut u = vec![0.0; series.n_vars()];
    let total = series.len() + extra_zero_steps;
    for k in 1..=total {
        if k <= series.len() {
            series.sample_into(k - 1, &mut u);
        } else {
            u.fill(0.0);
        }
        mask.apply_into(&u, &mut j)?;
        step_into(&prev, &j, params, &mut next)?;
        visit(k, &prev, &next);
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(())
}

/// Full trajectory over `series`, optionally extended with zero inputs.
pub fn run_padded(
    series: &TimeSeriesInstance,
    mask: &MaskMatrix,
    params: &DfrParams,
    extra_zero_steps: usize,
) -> Result<Trajectory> {
    let n = params.n_nodes();
    let mut states = Vec::with_capacity((series.len() + extra_zero_steps + 1) * n);
    states.resize(n, 0.0);
    run_streaming(series, mask, params, extra_zero_steps, |_, _, x| {
        states.extend_from_slice(x)
    })?;
    Ok(Trajectory { n_nodes: n, states })
}

pub fn run(series: &TimeSeriesInstance, mask: &MaskMatrix, params: &DfrParams) -> Result<Trajectory> {
    run_padded(series, mask, params, 0)
}
