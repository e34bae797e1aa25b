//! New Hamiltonians built from old ones: reversal, time changes, caps at a
//! fixed maximum, a bump supported near a fixed point, and normalization.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::terms::smoothstep;
use super::{
    Domain, FlowError, FlowOptions, FlowResult, Hamiltonian, HamiltonianSystem, SystemConfig, SystemError, Term,
    TermSystem, DEFAULT_STEPS,
};

// ---------------------------------------------------------------- reversal

/// `−H`, the reversal of an autonomous system.
#[derive(Debug)]
struct Negated(HamiltonianSystem);

impl Hamiltonian for Negated {
    fn domain(&self) -> Domain {
        self.0.domain()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        -self.0.value(t, x)
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.0.inner().gradient(t, x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.0.inner().hessian(t, x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn describe(&self) -> serde_json::Value {
        json!({"construction": "reverse", "form": "negated", "base": self.0.describe()})
    }
}

/// Forward trajectory of the base system on the uniform grid `k/steps`.
/// The linearization along it is computed on first use.
#[derive(Debug)]
struct Trajectory {
    points: Vec<Vec<f64>>,
    monodromy: OnceLock<Vec<DMatrix<f64>>>,
}

const CACHE_LIMIT: usize = 4096;

/// `H̄(t, x) = −H(t, φᵗ_H(x))`, generating `(φᵗ_H)⁻¹`.
///
/// Values need the forward trajectory through `x`; those are memoized per
/// starting point. The cache only saves work: every entry is a pure function
/// of its key, so results do not depend on what happens to be cached.
#[derive(Debug)]
struct Reversed {
    base: HamiltonianSystem,
    steps: usize,
    cache: Mutex<HashMap<Vec<u64>, Arc<Trajectory>>>,
}

impl Reversed {
    fn trajectory(&self, x: &[f64]) -> Result<Arc<Trajectory>, FlowError> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(t) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(t.clone());
        }
        let opts = FlowOptions {
            steps: self.steps,
            samples: true,
            monodromy: false,
            monodromy_path: false,
        };
        let r = self.base.flow_with(x, 0.0, 1.0, &opts)?;
        let traj = Arc::new(Trajectory {
            points: r.samples,
            monodromy: OnceLock::new(),
        });
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, traj.clone());
        Ok(traj)
    }

    fn monodromy<'a>(&self, traj: &'a Trajectory) -> &'a [DMatrix<f64>] {
        traj.monodromy.get_or_init(|| {
            self.base
                .flow_with(&traj.points[0], 0.0, 1.0, &FlowOptions::full(self.steps))
                .expect("base flow failed")
                .monodromy_path
        })
    }

    /// Grid index `k` with `k/steps ≤ t`, snapping to a grid time when `t`
    /// is one up to rounding.
    fn grid_index(&self, t: f64) -> (usize, f64) {
        let pos = t * self.steps as f64;
        let k = if (pos - pos.round()).abs() < 1e-9 { pos.round() } else { pos.floor() };
        let k = (k as usize).min(self.steps);
        (k, k as f64 / self.steps as f64)
    }

    /// `φᵗ_H(x)`.
    fn forward_point(&self, t: f64, x: &[f64]) -> Vec<f64> {
        if t == 0.0 {
            return x.to_vec();
        }
        if !(0.0..=1.0).contains(&t) {
            return self.base.flow(x, 0.0, t, self.steps).expect("base flow failed").endpoint;
        }
        let traj = self.trajectory(x).expect("base flow failed");
        let (k, tk) = self.grid_index(t);
        if k == self.steps || (t - tk).abs() < 1e-9 / self.steps as f64 {
            return traj.points[k].clone();
        }
        self.base.flow(&traj.points[k], tk, t, 1).expect("base flow failed").endpoint
    }

    /// `φᵗ_H(x)` and `Dφᵗ_H(x)`.
    fn forward(&self, t: f64, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let d = x.len();
        if t == 0.0 {
            return (x.to_vec(), DMatrix::identity(d, d));
        }
        if !(0.0..=1.0).contains(&t) {
            return self.base.time_map(x, t, self.steps).expect("base flow failed");
        }
        let traj = self.trajectory(x).expect("base flow failed");
        let path = self.monodromy(&traj);
        let (k, tk) = self.grid_index(t);
        if k == self.steps || (t - tk).abs() < 1e-9 / self.steps as f64 {
            return (traj.points[k].clone(), path[k].clone());
        }
        let r = self
            .base
            .flow_with(&traj.points[k], tk, t, &FlowOptions::with_monodromy(1))
            .expect("base flow failed");
        (r.endpoint, r.monodromy.unwrap() * &path[k])
    }
}

impl Hamiltonian for Reversed {
    fn domain(&self) -> Domain {
        self.base.domain()
    }

    fn value(&self, t: f64, x: &[f64]) -> f64 {
        -self.base.value(t, &self.forward_point(t, x))
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (y, m) = self.forward(t, x);
        let g = self.base.gradient(t, &y);
        for (j, o) in out.iter_mut().enumerate() {
            *o = -(0..g.len()).map(|i| m[(i, j)] * g[i]).sum::<f64>();
        }
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    fn describe(&self) -> serde_json::Value {
        json!({"construction": "reverse", "form": "lazy", "steps": self.steps, "base": self.base.describe()})
    }

    fn structured_flow(
        &self,
        x0: &[f64],
        t0: f64,
        t1: f64,
        options: &FlowOptions,
    ) -> Option<Result<FlowResult, FlowError>> {
        // The flow of H̄ is ψₜ = (φᵗ_H)⁻¹, so ψ_{t1} ∘ ψ_{t0}⁻¹ runs the base
        // flow forward from 0 to t0 and then backward from t1 to 0.
        Some(self.composed_flow(x0, t0, t1, options))
    }
}

/// Steps for a sub-interval of length `len`, keeping the base step size.
fn sub_steps(total: usize, len: f64) -> usize {
    ((total as f64 * len.abs()).round() as usize).max(1)
}

impl Reversed {
    fn psi_inverse_then_psi(&self, x0: &[f64], t0: f64, t: f64, steps: usize) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
        let d = x0.len();
        let (mut x, mut m) = (x0.to_vec(), DMatrix::identity(d, d));
        if t0 != 0.0 {
            let r = self.base.flow_with(&x, 0.0, t0, &FlowOptions::with_monodromy(sub_steps(steps, t0)))?;
            x = r.endpoint;
            m = r.monodromy.unwrap();
        }
        if t != 0.0 {
            let r = self.base.flow_with(&x, t, 0.0, &FlowOptions::with_monodromy(sub_steps(steps, t)))?;
            x = r.endpoint;
            m = r.monodromy.unwrap() * m;
        }
        Ok((x, m))
    }

    fn composed_flow(&self, x0: &[f64], t0: f64, t1: f64, options: &FlowOptions) -> Result<FlowResult, FlowError> {
        let steps = options.steps;
        let (endpoint, mono) = self.psi_inverse_then_psi(x0, t0, t1, steps)?;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        let mut path = Vec::new();
        if options.samples || options.monodromy_path {
            for k in 0..=steps {
                let t = if k == steps { t1 } else { t0 + (t1 - t0) * k as f64 / steps as f64 };
                let (x, m) = if k == steps {
                    (endpoint.clone(), mono.clone())
                } else {
                    self.psi_inverse_then_psi(x0, t0, t, steps)?
                };
                times.push(t);
                if options.samples {
                    samples.push(x);
                }
                if options.monodromy_path {
                    path.push(m);
                }
            }
        }
        Ok(FlowResult {
            endpoint,
            times,
            samples,
            monodromy: (options.monodromy || options.monodromy_path).then_some(mono),
            monodromy_path: path,
        })
    }
}

/// The Hamiltonian generating `t ↦ (φᵗ_H)⁻¹`.
///
/// Autonomous systems give exactly `−H`; otherwise evaluation is lazy and
/// runs the base flow with `steps` steps on `[0, 1]`.
pub fn reverse(system: &HamiltonianSystem) -> HamiltonianSystem {
    reverse_with_steps(system, DEFAULT_STEPS)
}

pub fn reverse_with_steps(system: &HamiltonianSystem, steps: usize) -> HamiltonianSystem {
    if system.is_autonomous() {
        HamiltonianSystem::new(Negated(system.clone()))
    } else {
        HamiltonianSystem::new(Reversed {
            base: system.clone(),
            steps: steps.max(1),
            cache: Mutex::new(HashMap::new()),
        })
    }
}

// ------------------------------------------------------- reparameterization

/// A time change `α: [0,1] → [0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeMap {
    Identity,
    /// `s(clamp((t − margin)/(1 − 2·margin)))` with `s(u) = 3u² − 2u³`;
    /// constant near both ends.
    FlattenedSmoothstep { margin: f64 },
    /// `Σ cₖ tᵏ`.
    Polynomial { coefficients: Vec<f64> },
}

impl Default for TimeMap {
    fn default() -> Self {
        TimeMap::FlattenedSmoothstep { margin: 0.05 }
    }
}

impl TimeMap {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeMap::Identity => t,
            TimeMap::FlattenedSmoothstep { margin } => smoothstep((t - margin) / (1.0 - 2.0 * margin)),
            TimeMap::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |a, c| a * t + c),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeMap::Identity => 1.0,
            TimeMap::FlattenedSmoothstep { margin } => {
                let w = 1.0 - 2.0 * margin;
                let u = (t - margin) / w;
                if !(0.0..=1.0).contains(&u) {
                    0.0
                } else {
                    6.0 * u * (1.0 - u) / w
                }
            }
            TimeMap::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |a, (k, c)| a * t + k as f64 * c),
        }
    }

    fn validate(&self) -> Result<(), SystemError> {
        if let TimeMap::FlattenedSmoothstep { margin } = self {
            if !(0.0..0.5).contains(margin) {
                return Err(SystemError::Construction(format!(
                    "smoothstep margin must lie in [0, 0.5), got {margin}"
                )));
            }
        }
        for (t, want) in [(0.0, 0.0), (1.0, 1.0)] {
            let got = self.value(t);
            if (got - want).abs() > 1e-12 {
                return Err(SystemError::Construction(format!("time map has α({t}) = {got}, expected {want}")));
            }
        }
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let d = self.derivative(t);
            if d < -1e-12 {
                return Err(SystemError::Construction(format!(
                    "time map is not monotone: α'({t}) = {d}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
struct Reparameterized {
    base: HamiltonianSystem,
    alpha: TimeMap,
}

impl Hamiltonian for Reparameterized {
    fn domain(&self) -> Domain {
        self.base.domain()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        let a = self.alpha.derivative(t);
        if a == 0.0 {
            return 0.0;
        }
        a * self.base.value(self.alpha.value(t), x)
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let a = self.alpha.derivative(t);
        if a == 0.0 {
            out.fill(0.0);
            return;
        }
        self.base.inner().gradient(self.alpha.value(t), x, out);
        out.iter_mut().for_each(|v| *v *= a);
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let a = self.alpha.derivative(t);
        if a == 0.0 {
            out.fill(0.0);
            return;
        }
        self.base.inner().hessian(self.alpha.value(t), x, out);
        out.iter_mut().for_each(|v| *v *= a);
    }
    fn is_autonomous(&self) -> bool {
        matches!(self.alpha, TimeMap::Identity) && self.base.is_autonomous()
    }
    fn describe(&self) -> serde_json::Value {
        json!({"construction": "reparameterize", "alpha": self.alpha, "base": self.base.describe()})
    }
}

/// `H_α(t, x) = α'(t) H(α(t), x)`, whose flow is `φ^{α(t)}_H`.
pub fn reparameterize(system: &HamiltonianSystem, alpha: TimeMap) -> Result<HamiltonianSystem, SystemError> {
    alpha.validate()?;
    if alpha == TimeMap::Identity {
        return Ok(system.clone());
    }
    Ok(HamiltonianSystem::new(Reparameterized {
        base: system.clone(),
        alpha,
    }))
}

// --------------------------------------------------------------- rescaling

#[derive(Debug)]
struct Rescaled {
    base: HamiltonianSystem,
    eps: f64,
}

impl Hamiltonian for Rescaled {
    fn domain(&self) -> Domain {
        self.base.domain()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.eps * self.base.value(self.eps * t, x)
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.inner().gradient(self.eps * t, x, out);
        out.iter_mut().for_each(|v| *v *= self.eps);
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.inner().hessian(self.eps * t, x, out);
        out.iter_mut().for_each(|v| *v *= self.eps);
    }
    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }
    fn describe(&self) -> serde_json::Value {
        json!({"construction": "rescale", "epsilon": self.eps, "base": self.base.describe()})
    }
}

/// `εH(εt, x)`, whose time-`t` map is `φ^{εt}_H`.
pub fn rescale(system: &HamiltonianSystem, eps: f64) -> Result<HamiltonianSystem, SystemError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(SystemError::Construction(format!("rescaling factor must lie in (0, 1], got {eps}")));
    }
    if eps == 1.0 {
        return Ok(system.clone());
    }
    Ok(HamiltonianSystem::new(Rescaled {
        base: system.clone(),
        eps,
    }))
}

// ---------------------------------------------------------------- caps

/// `f_P(x) = Σᵢ cos 2π(xᵢ − Pᵢ) − 2n`: a Morse function on the torus whose
/// only maximum is `P`, with `f_P(P) = 0`.
pub fn centered_cosine(p: &[f64], x: &[f64]) -> f64 {
    p.iter().zip(x).map(|(a, b)| (TAU * (b - a)).cos()).sum::<f64>() - p.len() as f64
}

fn centered_cosine_gradient(p: &[f64], x: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(p).zip(x) {
        *o = -TAU * (TAU * (b - a)).sin();
    }
}

#[derive(Debug)]
struct Cap {
    base: HamiltonianSystem,
    p: Vec<f64>,
    scale: f64,
}

impl Hamiltonian for Cap {
    fn domain(&self) -> Domain {
        self.base.domain()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.base.value(t, &self.p) + self.scale * centered_cosine(&self.p, x)
    }
    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        centered_cosine_gradient(&self.p, x, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
    fn hessian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = -self.scale * TAU * TAU * (TAU * (x[i] - self.p[i])).cos();
        }
    }
    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }
    fn describe(&self) -> serde_json::Value {
        json!({"construction": "cosine_cap", "point": self.p, "scale": self.scale, "base": self.base.describe()})
    }
}

/// Sample grid used to verify pointwise inequalities on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGrid {
    /// Points per torus direction.
    pub space: usize,
    /// Time samples on `[0, 1]` (both ends included).
    pub time: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self { space: 32, time: 9 }
    }
}

impl SampleGrid {
    pub fn times(&self) -> Vec<f64> {
        let m = self.time.max(1);
        if m == 1 {
            return vec![0.0];
        }
        (0..m).map(|k| k as f64 / (m - 1) as f64).collect()
    }

    /// `H(tⱼ, xᵢ)` as `values[i][j]` over [`Self::points`] and [`Self::times`].
    ///
    /// Points are the outer loop so that constructions caching per-point
    /// trajectories evaluate each trajectory once.
    pub fn evaluate(&self, system: &HamiltonianSystem, origin: &[f64]) -> Vec<Vec<f64>> {
        let times = self.times();
        self.points(system.dim(), origin)
            .par_iter()
            .map(|x| times.iter().map(|&t| system.value(t, x)).collect())
            .collect()
    }

    /// Every point of the `space^{2n}` lattice, offset so that it contains `origin`.
    pub fn points(&self, dim: usize, origin: &[f64]) -> Vec<Vec<f64>> {
        let r = self.space.max(1);
        let total = r.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; dim];
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = origin[i] + (idx % r) as f64 / r as f64;
                    idx /= r;
                }
                x
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapThreshold {
    /// Largest scale for which `H(t,P) + c f_P ≥ H` held on the grid.
    pub threshold: f64,
    /// Where the threshold is attained (`None` when set by the local bound at `P`).
    pub sample: Option<(f64, Vec<f64>)>,
    /// Smallest eigenvalue of `−∇²H(t,P)/(2π)²` over the time samples.
    pub local_bound: f64,
    /// Smallest scale for which `H(t,P) + c f_P ≤ H` held on the grid.
    pub floor: f64,
    pub floor_sample: Option<(f64, Vec<f64>)>,
    /// Largest eigenvalue of `−∇²H(t,P)/(2π)²` over the time samples.
    pub local_floor: f64,
}

#[derive(Clone, Debug)]
pub struct CapReport {
    pub system: HamiltonianSystem,
    pub scale: f64,
    pub threshold: CapThreshold,
}

/// Range of `c` with `c·(−f_P(x)) ≤ H(t,P) − H(t,x)` (threshold) and
/// `≥` (floor) on the grid, each combined with the second-order bound at `P`.
pub fn cap_threshold(system: &HamiltonianSystem, p: &[f64], grid: &SampleGrid) -> Result<CapThreshold, SystemError> {
    if !system.domain().is_torus() {
        return Err(SystemError::NotTorus);
    }
    let times = grid.times();
    let at_p: Vec<f64> = times.iter().map(|&t| system.value(t, p)).collect();
    let values = grid.evaluate(system, p);
    let (mut best, mut worst) = (f64::INFINITY, 0.0f64);
    let (mut at, mut worst_at) = (None, None);
    for (x, row) in grid.points(system.dim(), p).into_iter().zip(&values) {
        let depth = -centered_cosine(p, &x);
        if depth < 1e-12 {
            continue;
        }
        for ((&t, &hp), &h) in times.iter().zip(&at_p).zip(row) {
            let drop = hp - h;
            if drop < 0.0 {
                return Err(SystemError::Construction(format!(
                    "P is not a maximum: H({t}, {x:?}) = {h} exceeds H({t}, P) = {hp}"
                )));
            }
            let ratio = drop / depth;
            if ratio < best {
                best = ratio;
                at = Some((t, x.clone()));
            }
            if ratio > worst {
                worst = ratio;
                worst_at = Some((t, x.clone()));
            }
        }
    }
    let (mut local, mut local_floor) = (f64::INFINITY, 0.0f64);
    for &t in &times {
        let eig = (-system.hessian(t, p)).symmetric_eigen().eigenvalues / (TAU * TAU);
        local = local.min(eig.min());
        local_floor = local_floor.max(eig.max());
    }
    let (threshold, sample) = if local < best { (local.max(0.0), None) } else { (best, at) };
    let (floor, floor_sample) = if local_floor > worst { (local_floor, None) } else { (worst, worst_at) };
    Ok(CapThreshold {
        threshold,
        sample,
        local_bound: local,
        floor,
        floor_sample,
        local_floor,
    })
}

fn sample_text(sample: &Option<(f64, Vec<f64>)>) -> String {
    match sample {
        Some((t, x)) => format!("sample t = {t}, x = {x:?}"),
        None => "second-order bound at P".to_string(),
    }
}

/// `G(t, x) = H(t, P) + c·f_P(x)`, verified to dominate `H` on the grid.
pub fn dominating_cap(
    system: &HamiltonianSystem,
    p: &[f64],
    scale: f64,
    grid: &SampleGrid,
) -> Result<CapReport, SystemError> {
    if !(scale > 0.0) {
        return Err(SystemError::Construction(format!("cap scale must be positive, got {scale}")));
    }
    let threshold = cap_threshold(system, p, grid)?;
    if scale > threshold.threshold {
        return Err(SystemError::Construction(format!(
            "cap scale {scale} exceeds the verified threshold {} ({}): G < H there",
            threshold.threshold,
            sample_text(&threshold.sample)
        )));
    }
    Ok(CapReport {
        system: HamiltonianSystem::new(Cap { base: system.clone(), p: p.to_vec(), scale }),
        scale,
        threshold,
    })
}

/// `K(t, x) = H(t, P) + c·f_P(x)`, verified to be dominated by `H` on the grid.
pub fn subordinate_cap(
    system: &HamiltonianSystem,
    p: &[f64],
    scale: f64,
    grid: &SampleGrid,
) -> Result<CapReport, SystemError> {
    let threshold = cap_threshold(system, p, grid)?;
    if !(scale >= threshold.floor) {
        return Err(SystemError::Construction(format!(
            "cap scale {scale} is below the verified floor {} ({}): K > H there",
            threshold.floor,
            sample_text(&threshold.floor_sample)
        )));
    }
    Ok(CapReport {
        system: HamiltonianSystem::new(Cap { base: system.clone(), p: p.to_vec(), scale }),
        scale,
        threshold,
    })
}

// ---------------------------------------------------------------- bump

/// `g(s) = height·(1 − s/ρ²)⁴` on `[0, ρ²)`, zero beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub height: f64,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        if s >= r2 {
            0.0
        } else {
            self.height * (1.0 - s / r2).powi(4)
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        if s >= r2 {
            0.0
        } else {
            -4.0 * self.height / r2 * (1.0 - s / r2).powi(3)
        }
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        if s >= r2 {
            0.0
        } else {
            12.0 * self.height / (r2 * r2) * (1.0 - s / r2).powi(2)
        }
    }
}

/// Offset `x − P` in the chart at `P` (nearest lift on a torus).
fn chart_offset(domain: Domain, p: &[f64], x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(p)
        .map(|(a, b)| {
            let u = a - b;
            if domain.is_torus() {
                u - u.round()
            } else {
                u
            }
        })
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Rotates each `(qᵢ, pᵢ)` pair of `u` by angle `θ`, which is
/// `R = e^{iθ}` acting on `z = p + iq`.
fn rotate_pairs(u: &[f64], theta: f64) -> Vec<f64> {
    let n = u.len() / 2;
    let (s, c) = theta.sin_cos();
    let mut out = vec![0.0; u.len()];
    for i in 0..n {
        let (q, p) = (u[i], u[n + i]);
        out[i] = q * c + p * s;
        out[n + i] = -q * s + p * c;
    }
    out
}

#[derive(Debug)]
struct BumpPerturbed {
    base: HamiltonianSystem,
    bump: Bump,
    p: Vec<f64>,
    steps: usize,
}

impl BumpPerturbed {
    /// `(φᵗ_K)⁻¹(x)` and its derivative.
    fn pull_back(&self, t: f64, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        if t == 0.0 {
            let d = x.len();
            return (x.to_vec(), DMatrix::identity(d, d));
        }
        let r = self
            .base
            .flow_with(x, t, 0.0, &FlowOptions::with_monodromy(sub_steps(self.steps, t)))
            .expect("base flow failed");
        (r.endpoint, r.monodromy.unwrap())
    }

    /// `φᵗ_g(x) = P + R(t, |x − P|²)(x − P)` and its derivative.
    fn inner_flow(&self, t: f64, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let d = x.len();
        let n = d / 2;
        let u = chart_offset(self.base.domain(), &self.p, x);
        let s = norm2(&u);
        let theta = 2.0 * self.bump.derivative(s) * t;
        let w = rotate_pairs(&u, theta);
        let point: Vec<f64> = x.iter().zip(&u).zip(&w).map(|((xi, ui), wi)| xi - ui + wi).collect();
        // D(R(θ(s))u) = R + (∂_θ R u)(dθ/ds)(2uᵀ)
        let dtheta_ds = 2.0 * self.bump.second_derivative(s) * t;
        let (sn, cs) = theta.sin_cos();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..n {
            m[(i, i)] = cs;
            m[(i, n + i)] = sn;
            m[(n + i, i)] = -sn;
            m[(n + i, n + i)] = cs;
        }
        let mut dr_u = vec![0.0; d];
        for i in 0..n {
            let (q, p) = (u[i], u[n + i]);
            dr_u[i] = -q * sn + p * cs;
            dr_u[n + i] = -q * cs - p * sn;
        }
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += dr_u[i] * dtheta_ds * 2.0 * u[j];
            }
        }
        (point, m)
    }

    fn composed(&self, x0: &[f64], t: f64, steps: usize) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
        let (y, dg) = self.inner_flow(t, x0);
        if t == 0.0 {
            return Ok((y, dg));
        }
        let r = self
            .base
            .flow_with(&y, 0.0, t, &FlowOptions::with_monodromy(sub_steps(steps, t)))?;
        Ok((r.endpoint, r.monodromy.unwrap() * dg))
    }
}

impl Hamiltonian for BumpPerturbed {
    fn domain(&self) -> Domain {
        self.base.domain()
    }

    fn value(&self, t: f64, x: &[f64]) -> f64 {
        let (y, _) = self.pull_back(t, x);
        let u = chart_offset(self.base.domain(), &self.p, &y);
        self.base.value(t, x) + self.bump.value(norm2(&u))
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.inner().gradient(t, x, out);
        let (y, m) = self.pull_back(t, x);
        let u = chart_offset(self.base.domain(), &self.p, &y);
        let gp = self.bump.derivative(norm2(&u));
        if gp == 0.0 {
            return;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += 2.0 * gp * (0..u.len()).map(|i| m[(i, j)] * u[i]).sum::<f64>();
        }
    }

    fn values_along(&self, times: &[f64], samples: &[Vec<f64>]) -> Vec<f64> {
        // Along ψₜ(x₀) = φᵗ_K(φᵗ_g(x₀)) the pulled-back point is φᵗ_g(x₀),
        // which stays on the sphere through x₀.
        let Some(x0) = samples.first() else {
            return Vec::new();
        };
        let s = norm2(&chart_offset(self.base.domain(), &self.p, x0));
        let g = self.bump.value(s);
        times.iter().zip(samples).map(|(&t, x)| self.base.value(t, x) + g).collect()
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    fn describe(&self) -> serde_json::Value {
        json!({"construction": "bump_perturb", "point": self.p, "bump": self.bump, "steps": self.steps, "base": self.base.describe()})
    }

    fn structured_flow(
        &self,
        x0: &[f64],
        t0: f64,
        t1: f64,
        options: &FlowOptions,
    ) -> Option<Result<FlowResult, FlowError>> {
        if t0 != 0.0 {
            return None;
        }
        let u = chart_offset(self.base.domain(), &self.p, x0);
        let s = norm2(&u);
        if self.bump.derivative(s) == 0.0 && self.bump.second_derivative(s) == 0.0 {
            // outside the bump φ_g is the identity near x₀
            return Some(self.base.flow_with(x0, t0, t1, options));
        }
        Some((|| {
            let steps = options.steps;
            let (endpoint, mono) = self.composed(x0, t1, steps)?;
            let mut times = Vec::new();
            let mut samples = Vec::new();
            let mut path = Vec::new();
            if options.samples || options.monodromy_path {
                for k in 0..=steps {
                    let t = if k == steps { t1 } else { t1 * k as f64 / steps as f64 };
                    let (x, m) = if k == steps {
                        (endpoint.clone(), mono.clone())
                    } else {
                        self.composed(x0, t, steps)?
                    };
                    times.push(t);
                    if options.samples {
                        samples.push(x);
                    }
                    if options.monodromy_path {
                        path.push(m);
                    }
                }
            }
            Ok(FlowResult {
                endpoint,
                times,
                samples,
                monodromy: (options.monodromy || options.monodromy_path).then_some(mono),
                monodromy_path: path,
            })
        })())
    }
}

/// Largest offset (sup norm) allowed in the chart at `P`.
fn chart_half_width(domain: Domain) -> f64 {
    match domain {
        Domain::Torus { .. } => 0.5,
        Domain::Chart { radius, .. } => radius.unwrap_or(f64::INFINITY),
    }
}

/// Points on the sphere `|x − P| = ρ` used to test chart containment.
fn sphere_samples(p: &[f64], rho: f64) -> Vec<Vec<f64>> {
    let d = p.len();
    let mut out = Vec::new();
    if d == 2 {
        for k in 0..32 {
            let a = TAU * k as f64 / 32.0;
            out.push(vec![p[0] + rho * a.cos(), p[1] + rho * a.sin()]);
        }
    } else {
        for i in 0..d {
            for sign in [-1.0, 1.0] {
                let mut x = p.to_vec();
                x[i] += sign * rho;
                out.push(x);
            }
        }
        for mask in 0..1usize << d.min(10) {
            let x: Vec<f64> = (0..d)
                .map(|i| p[i] + rho / (d as f64).sqrt() * if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            out.push(x);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BumpReport {
    pub system: HamiltonianSystem,
    /// Increase of the action of `P`: `∫₀¹ g(0) dt`.
    pub action_shift: f64,
}

/// `K'(t, x) = K(t, x) + g(|(φᵗ_K)⁻¹(x) − P|²)`, whose flow is `φᵗ_K ∘ φᵗ_g`.
pub fn bump_perturb(
    system: &HamiltonianSystem,
    bump: Bump,
    p: &[f64],
    steps: usize,
) -> Result<BumpReport, SystemError> {
    if !(bump.height >= 0.0 && bump.radius > 0.0) {
        return Err(SystemError::Construction("bump needs height ≥ 0 and radius > 0".into()));
    }
    if p.len() != system.dim() {
        return Err(SystemError::Construction("bump centre has the wrong dimension".into()));
    }
    let half = chart_half_width(system.domain());
    if bump.radius >= half {
        return Err(SystemError::Construction(format!(
            "bump radius {} does not fit in the chart (half-width {half})",
            bump.radius
        )));
    }
    let checks = 16;
    for x in sphere_samples(p, bump.radius) {
        for j in 1..=checks {
            let t = j as f64 / checks as f64;
            let y = system.flow(&x, t, 0.0, sub_steps(steps, t))?.endpoint;
            let u: Vec<f64> = y.iter().zip(p).map(|(a, b)| a - b).collect();
            if u.iter().any(|v| v.abs() >= half) {
                return Err(FlowError::ChartExit { start: x, time: t }.into());
            }
        }
    }
    Ok(BumpReport {
        system: HamiltonianSystem::new(BumpPerturbed {
            base: system.clone(),
            bump,
            p: p.to_vec(),
            steps: steps.max(1),
        }),
        action_shift: bump.value(0.0),
    })
}

// ------------------------------------------------------ normalized distance

/// `𝒟_K(x)`: the angle between `x − P` and `φ¹_K(x) − P` divided by `π`
/// when the flow keeps `x` on its sphere around `P`, and 1 otherwise.
pub fn normalized_distance(system: &HamiltonianSystem, p: &[f64], x: &[f64], steps: usize) -> Result<f64, FlowError> {
    let y = system.flow(x, 0.0, 1.0, steps)?.endpoint;
    let domain = system.domain();
    let u = chart_offset(domain, p, x);
    let w = chart_offset(domain, p, &y);
    let (ru, rw) = (norm2(&u).sqrt(), norm2(&w).sqrt());
    if ru == 0.0 {
        return Ok(if rw == 0.0 { 0.0 } else { 1.0 });
    }
    if (ru - rw).abs() > 1e-9 * ru {
        return Ok(1.0);
    }
    let cos = (u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / (ru * rw)).clamp(-1.0, 1.0);
    Ok(cos.acos() / PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceScan {
    pub radius: f64,
    pub infimum: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
    /// `infimum > floor`.
    pub bounded_away: bool,
    pub floor: f64,
}

/// Minimizes `𝒟_K` over lattice points of `B_ρ(P) \ {P}` (`resolution` per
/// axis across the diameter).
pub fn distance_scan(
    system: &HamiltonianSystem,
    p: &[f64],
    radius: f64,
    resolution: usize,
    steps: usize,
) -> Result<DistanceScan, FlowError> {
    let d = p.len();
    let r = resolution.max(2);
    let mut best = f64::INFINITY;
    let mut argmin = p.to_vec();
    let mut count = 0;
    let total = (r + 1).pow(d as u32);
    for mut idx in 0..total {
        let mut x = vec![0.0; d];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = p[i] - radius + 2.0 * radius * (idx % (r + 1)) as f64 / r as f64;
            idx /= r + 1;
        }
        let u = chart_offset(system.domain(), p, &x);
        let s = norm2(&u).sqrt();
        if s == 0.0 || s >= radius {
            continue;
        }
        count += 1;
        let v = normalized_distance(system, p, &x, steps)?;
        if v < best {
            best = v;
            argmin = x;
        }
    }
    let floor = 1e-6;
    Ok(DistanceScan {
        radius,
        infimum: best,
        argmin,
        samples: count,
        bounded_away: best > floor,
        floor,
    })
}

// ---------------------------------------------------------- normalization

#[derive(Debug)]
struct MeanShifted {
    base: HamiltonianSystem,
    resolution: usize,
}

impl MeanShifted {
    fn mean(&self, t: f64) -> f64 {
        let dim = self.base.dim();
        let grid = SampleGrid {
            space: self.resolution,
            time: 1,
        };
        let pts = grid.points(dim, &vec![0.0; dim]);
        pts.iter().map(|x| self.base.value(t, x)).sum::<f64>() / pts.len() as f64
    }
}

impl Hamiltonian for MeanShifted {
    fn domain(&self) -> Domain {
        self.base.domain()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.base.value(t, x) - self.mean(t)
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.inner().gradient(t, x, out)
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.inner().hessian(t, x, out)
    }
    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }
    fn describe(&self) -> serde_json::Value {
        json!({"construction": "normalize", "resolution": self.resolution, "base": self.base.describe()})
    }
    fn structured_flow(
        &self,
        x0: &[f64],
        t0: f64,
        t1: f64,
        options: &FlowOptions,
    ) -> Option<Result<FlowResult, FlowError>> {
        Some(self.base.flow_with(x0, t0, t1, options))
    }
}

/// Subtracts the spatial mean at every time. Term systems lose their
/// constant and zero-frequency terms (exact); anything else is shifted by a
/// midpoint-rule mean on a `resolution^{2n}` grid, which is exact for
/// trigonometric polynomials of degree below `resolution`.
pub fn normalize(system: &HamiltonianSystem, resolution: usize) -> Result<HamiltonianSystem, SystemError> {
    if !system.domain().is_torus() {
        return Err(SystemError::NotTorus);
    }
    if let Some(terms) = system.inner().as_terms() {
        let config = terms.config();
        let kept: Vec<Term> = config
            .terms
            .iter()
            .filter(|t| match t {
                Term::Constant { .. } => false,
                Term::Fourier { wavevector, .. } => wavevector.iter().any(|&k| k != 0),
                Term::Monomial { .. } => true,
            })
            .cloned()
            .collect();
        let normalized = SystemConfig {
            terms: kept,
            normalized: true,
            ..config.clone()
        };
        return Ok(HamiltonianSystem::new(TermSystem::new(normalized)?));
    }
    Ok(HamiltonianSystem::new(MeanShifted {
        base: system.clone(),
        resolution: resolution.max(1),
    }))
}
