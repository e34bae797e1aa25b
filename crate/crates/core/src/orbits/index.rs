//! Linearized flows along orbits: Conley–Zehnder indices by crossing
//! counts, nondegeneracy, and the under-twisted tests at fixed points.

use std::fmt;

use nalgebra::DMatrix;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::dynamics::{FlowOptions, HamiltonianSystem};
use crate::linalg::standard_j;

use super::OrbitError;

/// Smallest singular value of `Φ(1) − I` below which an orbit counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-7;

/// Smallest singular value of `Φ(t) − I` below which an interior minimum
/// counts as a crossing.
const CROSSING_TOL: f64 = 1e-6;

/// Normalized under-twisting margin below which a fixed point is not
/// generically under-twisted.
pub const MARGIN_FLOOR: f64 = 1e-9;

/// Gradient size below which a point counts as fixed at a given time.
pub const FIXED_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CzIndex {
    Index(i64),
    Degenerate,
}

impl fmt::Display for CzIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CzIndex::Index(k) => write!(f, "{k}"),
            CzIndex::Degenerate => f.write_str("degenerate"),
        }
    }
}

impl Serialize for CzIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CzIndex::Index(k) => s.serialize_i64(*k),
            CzIndex::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

impl<'de> Deserialize<'de> for CzIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(CzIndex::Index(k)),
            Raw::Str(s) if s == "degenerate" => Ok(CzIndex::Degenerate),
            Raw::Str(s) => Err(de::Error::custom(format!("expected an integer or \"degenerate\", got {s:?}"))),
        }
    }
}

fn minus_identity(m: &DMatrix<f64>) -> DMatrix<f64> {
    m - DMatrix::identity(m.nrows(), m.ncols())
}

/// Smallest singular value of `Φ − I`.
pub fn sigma_min(phi: &DMatrix<f64>) -> f64 {
    minus_identity(phi).singular_values().min()
}

/// Uniform-grid quadratic interpolation of a sampled matrix path.
struct Interpolant<'a> {
    path: &'a [DMatrix<f64>],
    dt: f64,
}

impl Interpolant<'_> {
    /// Value and derivative at `t`, using the three samples centred at `k`.
    fn eval(&self, k: usize, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let (a, b, c) = (&self.path[k - 1], &self.path[k], &self.path[k + 1]);
        let s = t / self.dt - k as f64;
        // Lagrange basis on nodes −1, 0, 1
        let (la, lb, lc) = (0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0));
        let (da, db, dc) = (s - 0.5, -2.0 * s, s + 0.5);
        (a * la + b * lb + c * lc, (a * da + b * db + c * dc) / self.dt)
    }
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..60 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

fn sign_count(eigenvalues: impl Iterator<Item = f64>, scale: f64) -> i64 {
    let tol = 1e-9 * scale.max(1e-300);
    eigenvalues.map(|e| if e > tol { 1 } else if e < -tol { -1 } else { 0 }).sum()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `S = −J₀ Φ̇ Φ⁻¹`, the symmetric generator of a symplectic path.
fn generator(phi: &DMatrix<f64>, dphi: &DMatrix<f64>) -> DMatrix<f64> {
    let j = standard_j(phi.nrows());
    // Φ⁻¹ = −J₀ Φᵀ J₀ for symplectic Φ
    let inv = -(&j * phi.transpose() * &j);
    symmetrize(-(&j * dphi * inv))
}

/// Signature of the crossing form `v ↦ ⟨v, S v⟩` on `ker(Φ − I)`.
fn crossing_signature(phi: &DMatrix<f64>, dphi: &DMatrix<f64>) -> i64 {
    let s = generator(phi, dphi);
    let svd = minus_identity(phi).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let scale = phi.norm().max(1.0);
    let kernel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] < 1e-4 * scale)
        .collect();
    if kernel.is_empty() {
        return 0;
    }
    let k = DMatrix::from_fn(phi.nrows(), kernel.len(), |r, c| vt[(kernel[c], r)]);
    let form = symmetrize(k.transpose() * &s * &k);
    let norm = s.norm();
    sign_count(form.symmetric_eigen().eigenvalues.iter().copied(), norm)
}

/// Interior crossing times of a path sampled uniformly on `[0, 1]`.
pub fn crossing_times(path: &[DMatrix<f64>]) -> Vec<f64> {
    let n = path.len() - 1;
    if n < 2 {
        return Vec::new();
    }
    let dt = 1.0 / n as f64;
    let interp = Interpolant { path, dt };
    let sig: Vec<f64> = path.iter().map(sigma_min).collect();
    let mut out = Vec::new();
    for k in 1..n {
        if !(sig[k] <= sig[k - 1] && sig[k] < sig[k + 1]) {
            continue;
        }
        let t = golden_min((k - 1) as f64 * dt, (k + 1) as f64 * dt, |t| sigma_min(&interp.eval(k, t).0));
        if sigma_min(&interp.eval(k, t).0) < CROSSING_TOL && t > 0.01 * dt && t < 1.0 {
            out.push(t);
        }
    }
    out
}

/// Conley–Zehnder index of a symplectic path `Φ(0) = I, …, Φ(1)` sampled on
/// a uniform grid.
///
/// `μ = n − ½ sign S(0) − Σ sign Γ(tᵢ)` over interior crossings, so a
/// nondegenerate minimum of a C²-small autonomous Hamiltonian has index 0,
/// a saddle 1 and a maximum 2n.
pub fn cz_index(path: &[DMatrix<f64>]) -> CzIndex {
    assert!(path.len() >= 3, "a path needs at least three samples");
    let last = path.last().expect("nonempty");
    if sigma_min(last) < DEGENERACY_TOL {
        return CzIndex::Degenerate;
    }
    let dim = last.nrows() as i64;
    let n = path.len() - 1;
    let dt = 1.0 / n as f64;
    let d0 = (&path[1] * 4.0 - &path[0] * 3.0 - &path[2]) / (2.0 * dt);
    let s0 = generator(&path[0], &d0);
    let norm = s0.norm();
    let start = sign_count(s0.symmetric_eigen().eigenvalues.iter().copied(), norm);
    let interp = Interpolant { path, dt };
    let interior: i64 = crossing_times(path)
        .into_iter()
        .map(|t| {
            let k = ((t / dt).round() as usize).clamp(1, n - 1);
            let (phi, dphi) = interp.eval(k, t);
            crossing_signature(&phi, &dphi)
        })
        .sum();
    CzIndex::Index((dim - start - 2 * interior) / 2)
}

/// Linearized flow `Dφᵗ(x̂)` at a fixed point on the grid `t = k/samples`.
///
/// Autonomous systems use `exp(t J₀ ∇²H(x̂))`; otherwise the variational
/// equation is integrated with `steps` steps.
pub fn fixed_point_linearization(
    system: &HamiltonianSystem,
    x: &[f64],
    samples: usize,
    steps: usize,
) -> Result<Vec<DMatrix<f64>>, OrbitError> {
    let samples = samples.max(2);
    if system.is_autonomous() {
        let a = standard_j(x.len()) * system.hessian(0.0, x);
        return Ok((0..=samples).map(|k| (&a * (k as f64 / samples as f64)).exp()).collect());
    }
    let stride = steps.div_ceil(samples).max(1);
    let r = system.flow_with(x, 0.0, 1.0, &FlowOptions {
        steps: stride * samples,
        monodromy: true,
        samples: false,
        monodromy_path: true,
    })?;
    Ok(r.monodromy_path.into_iter().step_by(stride).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnderTwistedStatus {
    pub point: Vec<f64>,
    pub under_twisted: bool,
    pub generically: bool,
    /// `min_T σ_min(Dφᵀ − I) / (T · max_t ‖∇²H(t, x̂)‖)` over `(0, 1]`.
    pub margin: f64,
    /// Time at which the margin is attained.
    pub margin_time: f64,
    /// Periods in `(0, 1]` at which `Dφᵀ − I` is singular.
    pub return_times: Vec<f64>,
    /// First period carrying a nonconstant closed linear orbit, if any.
    pub twisting_time: Option<f64>,
    pub samples: usize,
}

fn check_fixed(system: &HamiltonianSystem, x: &[f64]) -> Result<f64, OrbitError> {
    let mut worst = 0.0f64;
    for k in 0..=64 {
        let t = k as f64 / 64.0;
        let g = system.gradient(t, x);
        worst = worst.max(g.iter().fold(0.0, |m, v| m.max(v.abs())));
        if !system.is_autonomous() || k == 0 {
            if worst > FIXED_TOL {
                return Err(OrbitError::NotFixed { point: x.to_vec(), time: t, gradient: worst });
            }
        }
        if system.is_autonomous() {
            break;
        }
    }
    let mut scale = 0.0f64;
    let times = if system.is_autonomous() { 1 } else { 65 };
    for k in 0..times {
        let t = k as f64 / 64.0;
        scale = scale.max(system.hessian(t, x).singular_values().max());
    }
    Ok(scale)
}

/// Under-twisted and generically under-twisted tests at a fixed point.
pub fn under_twisted_status(
    system: &HamiltonianSystem,
    x: &[f64],
    samples: usize,
    steps: usize,
) -> Result<UnderTwistedStatus, OrbitError> {
    let scale = check_fixed(system, x)?;
    let samples = samples.max(2);
    let path = fixed_point_linearization(system, x, samples, steps)?;
    let dt = 1.0 / samples as f64;
    let exact = system.is_autonomous().then(|| standard_j(x.len()) * system.hessian(0.0, x));
    let at = |k: usize, t: f64| -> DMatrix<f64> {
        match &exact {
            Some(a) => (a * t).exp(),
            None => Interpolant { path: &path, dt }.eval(k.clamp(1, samples - 1), t).0,
        }
    };
    let normalized = |sigma: f64, t: f64| if scale == 0.0 { 0.0 } else { sigma / (t * scale) };

    let sig: Vec<f64> = path.iter().map(sigma_min).collect();
    let mut margin = f64::INFINITY;
    let mut margin_time = 1.0;
    for k in 1..=samples {
        let m = normalized(sig[k], k as f64 * dt);
        if m < margin {
            margin = m;
            margin_time = k as f64 * dt;
        }
    }
    let mut return_times = Vec::new();
    for k in 1..=samples {
        let left = sig[k] <= sig[k - 1];
        let right = k == samples || sig[k] < sig[k + 1];
        if !(left && right) {
            continue;
        }
        let hi = if k == samples { 1.0 } else { (k + 1) as f64 * dt };
        let t = golden_min((k - 1) as f64 * dt, hi, |t| sigma_min(&at(k, t)));
        let t = if k == samples && sigma_min(&at(k, 1.0)) <= sigma_min(&at(k, t)) { 1.0 } else { t };
        let s = sigma_min(&at(k, t));
        let m = normalized(s, t);
        if m < margin {
            margin = m;
            margin_time = t;
        }
        if s < CROSSING_TOL {
            return_times.push(t);
        }
    }
    if scale == 0.0 {
        margin = 0.0;
        margin_time = dt;
    }

    // A closed linear orbit of period T is constant exactly when v is fixed
    // by every Dφᵗ with t ≤ T.
    let mut twisting_time = None;
    for &t in &return_times {
        let phi = at(((t / dt).round() as usize).max(1), t);
        let svd = minus_identity(&phi).svd(false, true);
        let vt = svd.v_t.expect("requested");
        let moving = (0..vt.nrows())
            .filter(|&i| svd.singular_values[i] < 1e-4 * phi.norm().max(1.0))
            .any(|i| {
                let v = vt.row(i).transpose();
                let last = ((t / dt + 1e-9).floor() as usize).min(samples);
                path[..=last].iter().any(|m| (m * &v - &v).norm() > 1e-6)
            });
        if moving {
            twisting_time = Some(t);
            break;
        }
    }
    Ok(UnderTwistedStatus {
        point: x.to_vec(),
        under_twisted: twisting_time.is_none(),
        generically: margin > MARGIN_FLOOR,
        margin,
        margin_time,
        return_times,
        twisting_time,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation_path(a: f64, samples: usize) -> Vec<DMatrix<f64>> {
        // flow of (a/2)(q² + p²): q̇ = ap, ṗ = −aq
        (0..=samples)
            .map(|k| {
                let (s, c) = (a * k as f64 / samples as f64).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
            })
            .collect()
    }

    fn rotation(a: f64) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"chart","n":1}},"terms":[
                {{"type":"monomial","coefficient":{h},"exponents":[2,0]}},
                {{"type":"monomial","coefficient":{h},"exponents":[0,2]}}]}}"#,
            h = a / 2.0
        ))
        .unwrap()
    }

    #[test]
    fn anchors() {
        assert_eq!(cz_index(&rotation_path(1.0, 2000)), CzIndex::Index(0));
        assert_eq!(cz_index(&rotation_path(-1.0, 2000)), CzIndex::Index(2));
        assert_eq!(cz_index(&rotation_path(2.0 * PI, 2000)), CzIndex::Degenerate);
    }

    #[test]
    fn hyperbolic_saddle_has_index_one() {
        // H = (a/2)(q² − p²)
        let a: f64 = 0.7;
        let path: Vec<_> = (0..=400)
            .map(|k| {
                let t = k as f64 / 400.0;
                let (ch, sh) = ((a * t).cosh(), (a * t).sinh());
                DMatrix::from_row_slice(2, 2, &[ch, -sh, -sh, ch])
            })
            .collect();
        assert_eq!(cz_index(&path), CzIndex::Index(1));
    }

    #[test]
    fn crossing_of_a_fast_rotation_is_located() {
        let t = crossing_times(&rotation_path(3.0 * PI, 2000));
        assert_eq!(t.len(), 1);
        assert!((t[0] - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn serde_of_indices() {
        assert_eq!(serde_json::to_string(&CzIndex::Index(-2)).unwrap(), "-2");
        assert_eq!(serde_json::to_string(&CzIndex::Degenerate).unwrap(), "\"degenerate\"");
        assert_eq!(serde_json::from_str::<CzIndex>("3").unwrap(), CzIndex::Index(3));
        assert!(serde_json::from_str::<CzIndex>("\"x\"").is_err());
    }

    #[test]
    fn rotation_status() {
        let s = under_twisted_status(&rotation(PI), &[0.0, 0.0], 2000, 2000).unwrap();
        assert!(s.under_twisted && s.generically);
        // |e^{iaT} − 1| / (aT) is smallest at T = 1
        assert!((s.margin - 2.0 / PI).abs() < 1e-9);
        let s = under_twisted_status(&rotation(2.0 * PI), &[0.0, 0.0], 2000, 2000).unwrap();
        assert!(!s.generically && !s.under_twisted);
        let s = under_twisted_status(&rotation(3.0 * PI), &[0.0, 0.0], 2000, 2000).unwrap();
        assert!(!s.generically && !s.under_twisted);
        assert!((s.twisting_time.unwrap() - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn shear_is_under_twisted_but_not_generically() {
        let shear = HamiltonianSystem::from_json(
            r#"{"domain":{"type":"chart","n":1},"terms":[{"type":"monomial","coefficient":0.5,"exponents":[0,2]}]}"#,
        )
        .unwrap();
        let s = under_twisted_status(&shear, &[0.0, 0.0], 200, 200).unwrap();
        assert!(s.under_twisted);
        assert!(!s.generically);
    }

    #[test]
    fn moving_points_are_rejected() {
        assert!(matches!(
            under_twisted_status(&rotation(1.0), &[0.1, 0.0], 100, 100),
            Err(OrbitError::NotFixed { .. })
        ));
    }
}
