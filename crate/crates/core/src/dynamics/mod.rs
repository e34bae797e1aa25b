//! Time-dependent Hamiltonians on flat tori and on charts of ℝ²ⁿ, their
//! flows, and their linearized flows.
//!
//! Coordinates are `x = (q₁..qₙ, p₁..pₙ)` with `ω = Σ dpᵢ ∧ dqᵢ`, so
//! `i_{X_H} ω = −dH` gives `ẋ = J₀ ∇H` with `J₀ = [[0, I], [−I, 0]]`, i.e.
//! `q̇ = ∂H/∂p` and `ṗ = −∂H/∂q`. Torus flows are computed in the universal
//! cover and never wrapped, so lifts of loops come for free.

pub mod constructions;
pub mod terms;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{apply_j, matmul_into, max_norm};

pub use terms::{SystemConfig, Term, TermSystem, TimeProfile};

/// Step count used when a caller does not choose one.
pub const DEFAULT_STEPS: usize = 2000;

/// Convergence tolerance of the implicit-midpoint inner solve.
pub const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// `ℝ²ⁿ/ℤ²ⁿ`.
    Torus { n: usize },
    /// A chart of `ℝ²ⁿ`, optionally restricted to a ball around the origin.
    Chart {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
}

impl Domain {
    pub fn n(&self) -> usize {
        match *self {
            Domain::Torus { n } | Domain::Chart { n, .. } => n,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("invalid system: {0}")]
    Config(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Construction(String),
    #[error("operation requires a torus domain")]
    NotTorus,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("point has {got} coordinates, system needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("implicit midpoint solve did not converge at step {step} (last update {update:e})")]
    NewtonFailed { step: usize, update: f64 },
    #[error("singular implicit midpoint Jacobian at step {step}")]
    SingularJacobian { step: usize },
    #[error("flow produced a non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("trajectory from {start:?} leaves the chart at t = {time}")]
    ChartExit { start: Vec<f64>, time: f64 },
}

/// What to record besides the endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowOptions {
    pub steps: usize,
    /// Linearized flow `Dφ` at the endpoint.
    pub monodromy: bool,
    /// States at every step (`steps + 1` points including both ends).
    pub samples: bool,
    /// Linearized flow at every step; implies `monodromy`.
    pub monodromy_path: bool,
}

impl FlowOptions {
    pub fn endpoint(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }

    pub fn with_monodromy(steps: usize) -> Self {
        Self {
            steps,
            monodromy: true,
            ..Self::default()
        }
    }

    pub fn full(steps: usize) -> Self {
        Self {
            steps,
            monodromy: true,
            samples: true,
            monodromy_path: true,
        }
    }

    fn wants_monodromy(&self) -> bool {
        self.monodromy || self.monodromy_path
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub endpoint: Vec<f64>,
    /// Sample times; empty unless samples or a monodromy path were requested.
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub monodromy: Option<DMatrix<f64>>,
    pub monodromy_path: Vec<DMatrix<f64>>,
}

/// A time-dependent Hamiltonian `H(t, x)`.
///
/// Implementors provide the value and gradient; the Hessian defaults to
/// central differences of the gradient. A construction whose flow is known
/// in closed form or by composition may override [`Hamiltonian::structured_flow`].
pub trait Hamiltonian: Send + Sync + fmt::Debug {
    fn domain(&self) -> Domain;

    fn value(&self, t: f64, x: &[f64]) -> f64;

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]);

    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        fd_hessian(self, t, x, out)
    }

    fn is_autonomous(&self) -> bool;

    fn describe(&self) -> serde_json::Value;

    /// `H(tₖ, xₖ)` along a trajectory that starts at time 0, for action
    /// integrals. Constructions with expensive pointwise values override it.
    fn values_along(&self, times: &[f64], samples: &[Vec<f64>]) -> Vec<f64> {
        times.iter().zip(samples).map(|(&t, x)| self.value(t, x)).collect()
    }

    /// The term list, when the system is a plain [`TermSystem`].
    fn as_terms(&self) -> Option<&TermSystem> {
        None
    }

    /// The flow from `t0` to `t1`, when it can be computed without
    /// integrating the vector field.
    fn structured_flow(
        &self,
        _x0: &[f64],
        _t0: f64,
        _t1: f64,
        _options: &FlowOptions,
    ) -> Option<Result<FlowResult, FlowError>> {
        None
    }
}

pub(crate) fn fd_hessian<H: Hamiltonian + ?Sized>(h: &H, t: f64, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for j in 0..d {
        let step = 1e-5 * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        h.gradient(t, &xp, &mut gp);
        xp[j] = x[j] - step;
        h.gradient(t, &xp, &mut gm);
        xp[j] = x[j];
        for i in 0..d {
            out[i * d + j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    // symmetrize
    for i in 0..d {
        for j in i + 1..d {
            let m = 0.5 * (out[i * d + j] + out[j * d + i]);
            out[i * d + j] = m;
            out[j * d + i] = m;
        }
    }
}

/// Shared handle to any [`Hamiltonian`].
#[derive(Clone)]
pub struct HamiltonianSystem(Arc<dyn Hamiltonian>);

impl fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl HamiltonianSystem {
    pub fn new<H: Hamiltonian + 'static>(h: H) -> Self {
        Self(Arc::new(h))
    }

    pub fn from_config(config: SystemConfig) -> Result<Self, SystemError> {
        Ok(Self::new(TermSystem::new(config)?))
    }

    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        let config: SystemConfig = serde_json::from_str(text).map_err(|e| SystemError::Parse {
            path: "<input>".into(),
            message: e.to_string(),
        })?;
        Self::from_config(config)
    }

    pub fn load(path: &Path) -> Result<Self, SystemError> {
        let text = std::fs::read_to_string(path).map_err(|e| SystemError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config: SystemConfig = serde_json::from_str(&text).map_err(|e| SystemError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_config(config)
    }

    pub fn inner(&self) -> &dyn Hamiltonian {
        &*self.0
    }

    pub fn domain(&self) -> Domain {
        self.0.domain()
    }

    pub fn dim(&self) -> usize {
        self.0.domain().dim()
    }

    pub fn is_autonomous(&self) -> bool {
        self.0.is_autonomous()
    }

    pub fn describe(&self) -> serde_json::Value {
        self.0.describe()
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.0.value(t, x)
    }

    pub fn values_along(&self, times: &[f64], samples: &[Vec<f64>]) -> Vec<f64> {
        self.0.values_along(times, samples)
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.0.gradient(t, x, &mut g);
        g
    }

    pub fn hessian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        self.0.hessian(t, x, &mut h);
        DMatrix::from_row_slice(d, d, &h)
    }

    /// `X_H(t, x) = J₀ ∇H(t, x)`.
    pub fn vector_field(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let g = self.gradient(t, x);
        let mut v = vec![0.0; g.len()];
        apply_j(&g, &mut v);
        v
    }

    /// Endpoint of the flow from `t0` to `t1`.
    pub fn flow(&self, x0: &[f64], t0: f64, t1: f64, steps: usize) -> Result<FlowResult, FlowError> {
        self.flow_with(x0, t0, t1, &FlowOptions::endpoint(steps))
    }

    /// Flow using a structured shortcut when the system provides one.
    pub fn flow_with(&self, x0: &[f64], t0: f64, t1: f64, options: &FlowOptions) -> Result<FlowResult, FlowError> {
        check_flow_input(self.dim(), x0, options)?;
        match self.0.structured_flow(x0, t0, t1, options) {
            Some(r) => r,
            None => integrate(&*self.0, x0, t0, t1, options),
        }
    }

    /// Flow by implicit-midpoint integration of the vector field, ignoring
    /// any structured shortcut.
    pub fn integrate(&self, x0: &[f64], t0: f64, t1: f64, options: &FlowOptions) -> Result<FlowResult, FlowError> {
        check_flow_input(self.dim(), x0, options)?;
        integrate(&*self.0, x0, t0, t1, options)
    }

    /// `φ^{t1}` applied to `x0` starting at time 0, with its linearization.
    pub fn time_map(&self, x0: &[f64], t1: f64, steps: usize) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
        let r = self.flow_with(x0, 0.0, t1, &FlowOptions::with_monodromy(steps))?;
        Ok((r.endpoint, r.monodromy.expect("requested")))
    }
}

fn check_flow_input(dim: usize, x0: &[f64], options: &FlowOptions) -> Result<(), FlowError> {
    if options.steps == 0 {
        return Err(FlowError::NoSteps);
    }
    if x0.len() != dim {
        return Err(FlowError::Dimension {
            expected: dim,
            got: x0.len(),
        });
    }
    Ok(())
}

/// Reusable buffers and a factorized Newton matrix for one trajectory.
struct Stepper<'a> {
    h: &'a dyn Hamiltonian,
    d: usize,
    g: Vec<f64>,
    jg: Vec<f64>,
    y: Vec<f64>,
    delta: Vec<f64>,
    hess: Vec<f64>,
    lu: Lu,
    cayley: Lu,
    plus: Vec<f64>,
    tmp: Vec<f64>,
}

/// LU factorization with partial pivoting, solving many right-hand sides.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn new(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
            perm: (0..n).collect(),
        }
    }

    fn factor(&mut self) -> bool {
        let n = self.n;
        let a = &mut self.a;
        for (i, p) in self.perm.iter_mut().enumerate() {
            *p = i;
        }
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            if a[piv * n + col].abs() < 1e-300 {
                return false;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                self.perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                for k in col + 1..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
            }
        }
        true
    }

    /// Solves in place for one right-hand side stored with stride `stride`
    /// starting at `offset` (so columns of a row-major matrix can be solved).
    fn solve_strided(&self, b: &mut [f64], offset: usize, stride: usize, scratch: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            scratch[i] = b[offset + self.perm[i] * stride];
        }
        for i in 0..n {
            let mut s = scratch[i];
            for k in 0..i {
                s -= self.a[i * n + k] * scratch[k];
            }
            scratch[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = scratch[i];
            for k in i + 1..n {
                s -= self.a[i * n + k] * scratch[k];
            }
            scratch[i] = s / self.a[i * n + i];
        }
        for i in 0..n {
            b[offset + i * stride] = scratch[i];
        }
    }
}

impl<'a> Stepper<'a> {
    fn new(h: &'a dyn Hamiltonian, d: usize) -> Self {
        Self {
            h,
            d,
            g: vec![0.0; d],
            jg: vec![0.0; d],
            y: vec![0.0; d],
            delta: vec![0.0; d],
            hess: vec![0.0; d * d],
            lu: Lu::new(d),
            cayley: Lu::new(d),
            plus: vec![0.0; d * d],
            tmp: vec![0.0; d * d],
        }
    }

    /// Loads `I + sign·(dt/2) J₀ S` into `out`, with `S` the stored Hessian.
    fn cayley_half(&self, dt: f64, sign: f64, out: &mut [f64]) {
        let d = self.d;
        let n = d / 2;
        let c = sign * 0.5 * dt;
        for i in 0..d {
            for j in 0..d {
                // (J₀ S)_{ij} = S_{i+n, j} for i < n, −S_{i−n, j} otherwise
                let js = if i < n { self.hess[(i + n) * d + j] } else { -self.hess[(i - n) * d + j] };
                out[i * d + j] = if i == j { 1.0 } else { 0.0 } + c * js;
            }
        }
    }

    /// Factors `I − (dt/2) J₀ S(t, at)` into `lu` (the Newton matrix) or
    /// into `cayley` (the monodromy update).
    fn factor_at(&mut self, t: f64, at: &[f64], dt: f64, step: usize, newton: bool) -> Result<(), FlowError> {
        self.h.hessian(t, at, &mut self.hess);
        let target = if newton { &mut self.lu } else { &mut self.cayley };
        let mut a = std::mem::take(&mut target.a);
        self.cayley_half(dt, -1.0, &mut a);
        let target = if newton { &mut self.lu } else { &mut self.cayley };
        target.a = a;
        if target.factor() {
            Ok(())
        } else {
            Err(FlowError::SingularJacobian { step })
        }
    }

    /// Solves `y = x + (dt/2) J₀ ∇H(t_mid, y)` and advances `x ← 2y − x`.
    fn step(&mut self, x: &mut [f64], t_mid: f64, dt: f64, step: usize) -> Result<(), FlowError> {
        let d = self.d;
        self.h.gradient(t_mid, x, &mut self.g);
        apply_j(&self.g, &mut self.jg);
        for i in 0..d {
            self.y[i] = x[i] + 0.5 * dt * self.jg[i];
        }
        let mut scratch = [0.0; 64];
        let mut heap;
        let scratch: &mut [f64] = if d <= 64 {
            &mut scratch[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut last = f64::INFINITY;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            self.h.gradient(t_mid, &self.y, &mut self.g);
            apply_j(&self.g, &mut self.jg);
            for i in 0..d {
                self.delta[i] = self.y[i] - x[i] - 0.5 * dt * self.jg[i];
            }
            self.lu.solve_strided(&mut self.delta, 0, 1, scratch);
            for i in 0..d {
                self.y[i] -= self.delta[i];
            }
            last = max_norm(&self.delta);
            if !last.is_finite() {
                return Err(FlowError::NonFinite { step });
            }
            if last <= NEWTON_TOL * max_norm(&self.y).max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(FlowError::NewtonFailed { step, update: last });
        }
        for i in 0..d {
            x[i] = 2.0 * self.y[i] - x[i];
        }
        Ok(())
    }

    /// `Y ← (I − dt/2 J₀S)⁻¹ (I + dt/2 J₀S) Y` with `S` at the converged
    /// midpoint: the exact derivative of the discrete step.
    fn advance_monodromy(&mut self, y_mat: &mut [f64], t_mid: f64, dt: f64, step: usize) -> Result<(), FlowError> {
        let d = self.d;
        let mid = std::mem::take(&mut self.y);
        let factored = self.factor_at(t_mid, &mid, dt, step, false);
        self.y = mid;
        factored?;
        let mut plus = std::mem::take(&mut self.plus);
        self.cayley_half(dt, 1.0, &mut plus);
        matmul_into(&plus, y_mat, &mut self.tmp, d, d, d);
        self.plus = plus;
        let mut scratch = vec![0.0; d];
        for col in 0..d {
            self.cayley.solve_strided(&mut self.tmp, col, d, &mut scratch);
        }
        y_mat.copy_from_slice(&self.tmp);
        Ok(())
    }
}

/// Newton matrix refresh interval. The matrix only steers convergence, so a
/// slightly stale one is harmless; keeping the schedule independent of the
/// requested outputs makes endpoints bitwise reproducible across options.
const JACOBIAN_REFRESH: usize = 32;

pub(crate) fn integrate(
    h: &dyn Hamiltonian,
    x0: &[f64],
    t0: f64,
    t1: f64,
    options: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let d = x0.len();
    let steps = options.steps;
    let dt = (t1 - t0) / steps as f64;
    let mut stepper = Stepper::new(h, d);
    let mut x = x0.to_vec();
    let want_mono = options.wants_monodromy();
    let mut y_mat = vec![0.0; d * d];
    for i in 0..d {
        y_mat[i * d + i] = 1.0;
    }
    let record = options.samples || options.monodromy_path;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut path = Vec::new();
    if record {
        times.push(t0);
        if options.samples {
            samples.push(x.clone());
        }
        if options.monodromy_path {
            path.push(DMatrix::identity(d, d));
        }
    }
    for k in 0..steps {
        let t_mid = t0 + (k as f64 + 0.5) * dt;
        if k % JACOBIAN_REFRESH == 0 {
            stepper.factor_at(t_mid, &x, dt, k, true)?;
        }
        stepper.step(&mut x, t_mid, dt, k)?;
        if want_mono {
            stepper.advance_monodromy(&mut y_mat, t_mid, dt, k)?;
        }
        if record {
            times.push(if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * dt });
            if options.samples {
                samples.push(x.clone());
            }
            if options.monodromy_path {
                path.push(DMatrix::from_row_slice(d, d, &y_mat));
            }
        }
    }
    Ok(FlowResult {
        endpoint: x,
        times,
        samples,
        monodromy: want_mono.then(|| DMatrix::from_row_slice(d, d, &y_mat)),
        monodromy_path: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symplectic_defect;
    use std::f64::consts::PI;

    pub(crate) fn rotation(a: f64) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"chart","n":1}},"terms":[
                {{"type":"monomial","coefficient":{h},"exponents":[2,0]}},
                {{"type":"monomial","coefficient":{h},"exponents":[0,2]}}]}}"#,
            h = a / 2.0
        ))
        .unwrap()
    }

    fn cos_cos(eps: f64) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"torus","n":1}},"terms":[
                {{"type":"fourier","amplitude":{eps},"wavevector":[1,0]}},
                {{"type":"fourier","amplitude":{eps},"wavevector":[0,1]}}],"normalized":true}}"#
        ))
        .unwrap()
    }

    #[test]
    fn constant_hamiltonian_does_not_move() {
        let h = HamiltonianSystem::from_json(r#"{"domain":{"type":"torus","n":1},"terms":[{"type":"constant","value":3}]}"#)
            .unwrap();
        let r = h.flow(&[0.3, 0.7], 0.0, 1.0, 50).unwrap();
        assert_eq!(r.endpoint, vec![0.3, 0.7]);
    }

    #[test]
    fn half_turn_rotation() {
        let r = rotation(PI).flow(&[1.0, 0.0], 0.0, 1.0, DEFAULT_STEPS).unwrap();
        assert!((r.endpoint[0] + 1.0).abs() < 1e-6, "{:?}", r.endpoint);
        assert!(r.endpoint[1].abs() < 1e-5);
    }

    #[test]
    fn linear_flow_phase_error_is_second_order() {
        // implicit midpoint on a rotation is exact up to the Cayley phase error
        let a = PI;
        let steps = DEFAULT_STEPS;
        let h = 1.0 / steps as f64;
        let phase = 2.0 * steps as f64 * (a * h / 2.0).atan();
        let r = rotation(a).flow(&[1.0, 0.0], 0.0, 1.0, steps).unwrap();
        assert!((r.endpoint[0] - phase.cos()).abs() < 1e-12);
        assert!((r.endpoint[1] + phase.sin()).abs() < 1e-12);
    }

    #[test]
    fn maximum_is_fixed() {
        let r = cos_cos(0.05).flow(&[0.0, 0.0], 0.0, 1.0, 100).unwrap();
        assert_eq!(r.endpoint, vec![0.0, 0.0]);
    }

    #[test]
    fn monodromy_is_symplectic_and_matches_differences() {
        let h = cos_cos(0.05);
        let x = [0.13, 0.41];
        let (end, m) = h.time_map(&x, 1.0, 400).unwrap();
        assert!(symplectic_defect(&m) < 1e-12);
        let e = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            xp[j] += e;
            let mut xm = x;
            xm[j] -= e;
            let p = h.flow(&xp, 0.0, 1.0, 400).unwrap().endpoint;
            let q = h.flow(&xm, 0.0, 1.0, 400).unwrap().endpoint;
            for i in 0..2 {
                let fd = (p[i] - q[i]) / (2.0 * e);
                assert!((fd - m[(i, j)]).abs() < 1e-7, "{fd} vs {}", m[(i, j)]);
            }
        }
        assert_eq!(end, h.flow(&x, 0.0, 1.0, 400).unwrap().endpoint);
    }

    #[test]
    fn backward_flow_inverts_forward_flow() {
        let h = cos_cos(0.1);
        let x = [0.2, 0.9];
        let f = h.flow(&x, 0.0, 1.0, 500).unwrap().endpoint;
        let b = h.flow(&f, 1.0, 0.0, 500).unwrap().endpoint;
        assert!(crate::linalg::distance(&x, &b) < 1e-12);
    }

    #[test]
    fn samples_and_paths_have_step_count_plus_one_entries() {
        let r = cos_cos(0.05).integrate(&[0.1, 0.2], 0.0, 1.0, &FlowOptions::full(10)).unwrap();
        assert_eq!(r.samples.len(), 11);
        assert_eq!(r.monodromy_path.len(), 11);
        assert_eq!(r.times[10], 1.0);
        assert_eq!(r.samples[10], r.endpoint);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            rotation(1.0).flow(&[1.0], 0.0, 1.0, 10),
            Err(FlowError::Dimension { .. })
        ));
        assert!(matches!(rotation(1.0).flow(&[1.0, 0.0], 0.0, 1.0, 0), Err(FlowError::NoSteps)));
    }
}
