//! Hofer norms, the pointwise hypothesis checks, and certificates that tie
//! the hypotheses of the length-minimality criteria to numerical evidence.
//!
//! A certificate is never a proof. Pointwise inequalities are checked on a
//! space-time grid and orbit nonexistence on a seeded search; both are
//! recorded in the report so the coverage can be judged.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::constructions::{cap_threshold, rescale, reverse, subordinate_cap, CapThreshold, SampleGrid};
use crate::dynamics::{HamiltonianSystem, SystemError, DEFAULT_STEPS};
use crate::linalg::max_norm;
use crate::orbits::{
    quadrature, scan_fixed_points, under_twisted_status, OrbitError, ScanOptions, ScanReport, ScanStatus,
    UnderTwistedStatus,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("{0}")]
    Invalid(String),
}

/// Absolute slack allowed in pointwise inequalities.
pub const INEQUALITY_TOL: f64 = 1e-12;

/// Allowed `|H(t,P) − K(t,P)|` for domination.
pub const EQUALITY_TOL: f64 = 1e-9;

fn require_torus(system: &HamiltonianSystem) -> Result<(), CertificateError> {
    if system.domain().is_torus() {
        Ok(())
    } else {
        Err(SystemError::NotTorus.into())
    }
}

// ----------------------------------------------------------------- Hofer

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoferOptions {
    /// Grid points per torus direction.
    pub space: usize,
    /// Time intervals on `[0, 1]`; Simpson's rule when even.
    pub time_intervals: usize,
    /// Polish each grid extremum by Newton's method on the gradient.
    pub refine: bool,
}

impl Default for HoferOptions {
    fn default() -> Self {
        Self {
            space: 32,
            time_intervals: 200,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t: f64,
    pub max: f64,
    pub argmax: Vec<f64>,
    pub min: f64,
    pub argmin: Vec<f64>,
    /// Grid mean of `H(t, ·)`.
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoferReport {
    /// `∫₀¹ max H(t, ·) dt`.
    pub positive: f64,
    /// `∫₀¹ −min H(t, ·) dt`.
    pub negative: f64,
    /// `positive + negative`.
    pub length: f64,
    /// `∫₀¹ (max − min) dt`, integrated separately.
    pub oscillation: f64,
    /// Largest grid mean; near zero for normalized systems.
    pub mean_defect: f64,
    /// Difference to the same rule on every other time sample, over 15.
    pub error_estimate: f64,
    pub options: HoferOptions,
    pub slices: Vec<TimeSlice>,
}

/// Newton's method on `∇H(t, ·) = 0` from a grid extremum, kept only if it
/// improves the value without leaving the neighbouring cells.
fn polish(system: &HamiltonianSystem, t: f64, x0: &[f64], v0: f64, maximize: bool, cell: f64) -> (Vec<f64>, f64) {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let (mut x, mut v) = (x0.to_vec(), v0);
    for _ in 0..10 {
        let g = DVector::from_vec(system.gradient(t, &x));
        if g.amax() < 1e-13 {
            break;
        }
        let Some(step) = system.hessian(t, &x).lu().solve(&g) else {
            break;
        };
        let y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        if y.iter().zip(x0).any(|(a, b)| (a - b).abs() > cell) {
            break;
        }
        let w = system.value(t, &y);
        if !better(w, v) && w != v {
            break;
        }
        let done = step.amax() < 1e-15;
        x = y;
        v = w;
        if done {
            break;
        }
    }
    (x, v)
}

fn simpson_or_trapezoid(values: &[f64]) -> (f64, f64) {
    let full = quadrature(values);
    let n = values.len() - 1;
    if n >= 4 && n % 2 == 0 {
        let half: Vec<f64> = values.iter().step_by(2).copied().collect();
        (full, (full - quadrature(&half)).abs() / 15.0)
    } else {
        (full, f64::NAN)
    }
}

/// Positive and negative Hofer norms by grid scan, local refinement, and
/// composite quadrature in time.
pub fn hofer_norms(system: &HamiltonianSystem, options: &HoferOptions) -> Result<HoferReport, CertificateError> {
    require_torus(system)?;
    if options.space == 0 || options.time_intervals == 0 {
        return Err(CertificateError::Invalid("Hofer grid needs space ≥ 1 and time intervals ≥ 1".into()));
    }
    let dim = system.dim();
    let grid = SampleGrid {
        space: options.space,
        time: options.time_intervals + 1,
    };
    let origin = vec![0.0; dim];
    let points = grid.points(dim, &origin);
    let values = grid.evaluate(system, &origin);
    let cell = 1.0 / options.space as f64;
    let slices: Vec<TimeSlice> = grid
        .times()
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let (mut imax, mut imin, mut sum) = (0, 0, 0.0);
            for (i, row) in values.iter().enumerate() {
                let v = row[j];
                sum += v;
                if v > values[imax][j] {
                    imax = i;
                }
                if v < values[imin][j] {
                    imin = i;
                }
            }
            let (mut argmax, mut max) = (points[imax].clone(), values[imax][j]);
            let (mut argmin, mut min) = (points[imin].clone(), values[imin][j]);
            if options.refine {
                (argmax, max) = polish(system, t, &argmax, max, true, cell);
                (argmin, min) = polish(system, t, &argmin, min, false, cell);
            }
            TimeSlice {
                t,
                max,
                argmax,
                min,
                argmin,
                mean: sum / points.len() as f64,
            }
        })
        .collect();
    let maxes: Vec<f64> = slices.iter().map(|s| s.max).collect();
    let neg_mins: Vec<f64> = slices.iter().map(|s| -s.min).collect();
    let osc: Vec<f64> = slices.iter().map(|s| s.max - s.min).collect();
    let (positive, e1) = simpson_or_trapezoid(&maxes);
    let (negative, e2) = simpson_or_trapezoid(&neg_mins);
    let negative = negative + 0.0;
    let (oscillation, _) = simpson_or_trapezoid(&osc);
    Ok(HoferReport {
        positive,
        negative,
        length: positive + negative,
        oscillation,
        mean_defect: slices.iter().fold(0.0, |m, s| m.max(s.mean.abs())),
        error_estimate: e1 + e2,
        options: options.clone(),
        slices,
    })
}

// -------------------------------------------------------- pointwise checks

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub reference: f64,
}

/// Whether `P` is a fixed global extremum of `H(t, ·)` for every sampled `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumReport {
    pub kind: ExtremumKind,
    pub point: Vec<f64>,
    pub holds: bool,
    /// Smallest `±(H(t,P) − H(t,x))` over grid points other than `P`.
    pub slack: f64,
    pub slack_at: Option<GridSample>,
    /// First grid sample violating the inequality.
    pub witness: Option<GridSample>,
    /// `max_t |∇H(t, P)|_∞`.
    pub gradient: f64,
    /// Extreme eigenvalue of `∓∇²H(t, P)` (must be ≥ 0).
    pub curvature: f64,
    pub grid: SampleGrid,
}

/// Checks `H(t,P) ≥ H(t,x)` (maximum) or `≤` (minimum) on the grid, plus
/// first- and second-order conditions at `P`.
pub fn extremum_check(
    system: &HamiltonianSystem,
    p: &[f64],
    kind: ExtremumKind,
    grid: &SampleGrid,
) -> Result<ExtremumReport, CertificateError> {
    require_torus(system)?;
    if p.len() != system.dim() {
        return Err(CertificateError::Invalid(format!("point has {} coordinates, expected {}", p.len(), system.dim())));
    }
    let sign = match kind {
        ExtremumKind::Maximum => 1.0,
        ExtremumKind::Minimum => -1.0,
    };
    let times = grid.times();
    let at_p: Vec<f64> = times.iter().map(|&t| system.value(t, p)).collect();
    let values = grid.evaluate(system, p);
    let mut slack = f64::INFINITY;
    let mut slack_at = None;
    let mut witness = None;
    for (x, row) in grid.points(system.dim(), p).into_iter().zip(&values) {
        if max_norm(&x.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12 {
            continue;
        }
        for ((&t, &hp), &h) in times.iter().zip(&at_p).zip(row) {
            let gap = sign * (hp - h);
            let sample = || GridSample { t, x: x.clone(), value: h, reference: hp };
            if gap < slack {
                slack = gap;
                slack_at = Some(sample());
            }
            if gap < -INEQUALITY_TOL * (1.0 + hp.abs()) && witness.is_none() {
                witness = Some(sample());
            }
        }
    }
    let mut gradient = 0.0f64;
    let mut curvature = f64::INFINITY;
    for &t in &times {
        gradient = gradient.max(max_norm(&system.gradient(t, p)));
        let s = system.hessian(t, p) * (-sign);
        curvature = curvature.min(s.symmetric_eigen().eigenvalues.min());
    }
    let scale = 1.0 + at_p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let holds = witness.is_none() && gradient < crate::orbits::index::FIXED_TOL && curvature >= -1e-9 * scale;
    Ok(ExtremumReport {
        kind,
        point: p.to_vec(),
        holds,
        slack,
        slack_at,
        witness,
        gradient,
        curvature,
        grid: *grid,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiAutonomousReport {
    pub holds: bool,
    pub maximum: ExtremumReport,
    pub minimum: ExtremumReport,
}

/// `H(t,P) ≥ H(t,x) ≥ H(t,Q)` on the space-time grid.
pub fn quasi_autonomous_check(
    system: &HamiltonianSystem,
    p: &[f64],
    q: &[f64],
    grid: &SampleGrid,
) -> Result<QuasiAutonomousReport, CertificateError> {
    let maximum = extremum_check(system, p, ExtremumKind::Maximum, grid)?;
    let minimum = extremum_check(system, q, ExtremumKind::Minimum, grid)?;
    Ok(QuasiAutonomousReport {
        holds: maximum.holds && minimum.holds,
        maximum,
        minimum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub holds: bool,
    pub point: Vec<f64>,
    /// `min (H − K)` over the grid.
    pub min_gap: f64,
    pub min_gap_at: Option<GridSample>,
    /// `max_t |H(t,P) − K(t,P)|`.
    pub equality_defect: f64,
    /// First violating sample: `value = H`, `reference = K`.
    pub witness: Option<GridSample>,
    pub grid: SampleGrid,
}

/// `H ≥ K` on the space-time grid with `H(t,P) = K(t,P)` at every sampled time.
pub fn dominates_check(
    h: &HamiltonianSystem,
    k: &HamiltonianSystem,
    p: &[f64],
    grid: &SampleGrid,
) -> Result<DominationReport, CertificateError> {
    require_torus(h)?;
    if h.domain() != k.domain() {
        return Err(CertificateError::Invalid("the two systems live on different domains".into()));
    }
    let times = grid.times();
    let hv = grid.evaluate(h, p);
    let kv = grid.evaluate(k, p);
    let mut min_gap = f64::INFINITY;
    let mut min_gap_at = None;
    let mut witness = None;
    for ((x, hr), kr) in grid.points(h.dim(), p).into_iter().zip(&hv).zip(&kv) {
        for ((&t, &a), &b) in times.iter().zip(hr).zip(kr) {
            let gap = a - b;
            let sample = || GridSample { t, x: x.clone(), value: a, reference: b };
            if gap < min_gap {
                min_gap = gap;
                min_gap_at = Some(sample());
            }
            if gap < -INEQUALITY_TOL * (1.0 + a.abs()) && witness.is_none() {
                witness = Some(sample());
            }
        }
    }
    let mut equality_defect = 0.0f64;
    for &t in &times {
        let (a, b) = (h.value(t, p), k.value(t, p));
        equality_defect = equality_defect.max((a - b).abs());
        if (a - b).abs() > EQUALITY_TOL && witness.is_none() {
            witness = Some(GridSample { t, x: p.to_vec(), value: a, reference: b });
        }
    }
    Ok(DominationReport {
        holds: witness.is_none(),
        point: p.to_vec(),
        min_gap,
        min_gap_at,
        equality_defect,
        witness,
        grid: *grid,
    })
}

/// Global maximum and minimum of `H(0, ·)`: grid scan plus Newton polish.
pub fn locate_extrema(system: &HamiltonianSystem, space: usize) -> Result<(Vec<f64>, Vec<f64>), CertificateError> {
    require_torus(system)?;
    let grid = SampleGrid { space, time: 1 };
    let origin = vec![0.0; system.dim()];
    let points = grid.points(system.dim(), &origin);
    let values: Vec<f64> = grid.evaluate(system, &origin).into_iter().map(|r| r[0]).collect();
    let imax = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let imin = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let cell = 1.0 / space.max(1) as f64;
    let (p, _) = polish(system, 0.0, &points[imax], values[imax], true, cell);
    let (q, _) = polish(system, 0.0, &points[imin], values[imin], false, cell);
    let snap = |x: Vec<f64>| x.into_iter().map(|v| if v.abs() < 1e-14 { 0.0 } else { v }).collect();
    Ok((snap(p), snap(q)))
}

// ------------------------------------------------------------ certificates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Quasi-autonomous with generically under-twisted extrema and every
    /// contractible orbit's action between them.
    Thm15,
    /// Domination of a Hamiltonian without orbits above the action of `P`.
    Thm16,
    /// The rescaled path `εH(εt, ·)` with a cosine cap, for small `ε`.
    ShortTime,
    /// The positive-length criterion applied to the reversed path.
    Negside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    RefutedHypothesis,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    /// A hypothesis of the criterion; failing it refutes the certificate.
    Hypothesis,
    /// The orbit scan found a continuum; nothing can be concluded.
    Isolation,
    /// Evidence quality (degenerate orbits, consistency identities).
    Coverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub id: String,
    pub kind: ItemKind,
    pub passed: bool,
    pub detail: String,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Extremum(ExtremumReport),
    QuasiAutonomous(QuasiAutonomousReport),
    UnderTwisted(UnderTwistedStatus),
    Domination(DominationReport),
    Scan(ScanReport),
    Hofer(HoferReport),
    Cap { scale: f64, threshold: CapThreshold },
    Actions { reference: BTreeMap<String, f64>, outside: Vec<Vec<f64>>, coincident: Vec<Vec<f64>> },
    Identity { left: f64, right: f64, tolerance: f64 },
    Certificate(Box<Certificate>),
    Failure { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub scan: ScanOptions,
    pub grid: SampleGrid,
    /// Samples of the linearized flow on `(0, 1]` for the under-twisted tests.
    pub twist_samples: usize,
    /// Closed-interval slack on action comparisons.
    pub action_tol: f64,
    /// Where the cap scale sits between the verified floor (0) and `1/(2π)` (1).
    pub cap_fraction: f64,
    /// Hofer options for the reversal identity.
    pub hofer: HoferOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            scan: ScanOptions::default(),
            grid: SampleGrid::default(),
            twist_samples: DEFAULT_STEPS,
            action_tol: 1e-7,
            cap_fraction: 0.5,
            hofer: HoferOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub points: BTreeMap<String, Vec<f64>>,
    pub checklist: Vec<ChecklistItem>,
    pub evidence: BTreeMap<String, Evidence>,
    pub notes: Vec<String>,
    pub caveat: String,
    pub options: CertifyOptions,
}

impl Certificate {
    fn new(criterion: Criterion, options: &CertifyOptions) -> Self {
        let s = &options.scan;
        Self {
            criterion,
            verdict: Verdict::Inconclusive,
            points: BTreeMap::new(),
            checklist: Vec::new(),
            evidence: BTreeMap::new(),
            notes: Vec::new(),
            caveat: format!(
                "Numerical evidence, not a proof: inequalities were checked on a {}-point-per-axis grid at {} times, \
                 and periodic orbits were searched by Newton's method from a {}-per-axis seed grid ({} coarse / {} fine \
                 steps, tolerance {:e}). Orbits missed by the search are not excluded.",
                options.grid.space, options.grid.time, s.resolution, s.coarse_steps, s.steps, s.tol
            ),
            options: options.clone(),
        }
    }

    fn item(&mut self, id: &str, kind: ItemKind, passed: bool, detail: String, evidence: &[&str]) {
        self.checklist.push(ChecklistItem {
            id: id.into(),
            kind,
            passed,
            detail,
            evidence: evidence.iter().map(|s| s.to_string()).collect(),
        });
    }

    fn finish(mut self) -> Self {
        let failed = |k: ItemKind| self.checklist.iter().any(|i| i.kind == k && !i.passed);
        self.verdict = if failed(ItemKind::Isolation) {
            Verdict::Inconclusive
        } else if failed(ItemKind::Hypothesis) {
            Verdict::RefutedHypothesis
        } else if failed(ItemKind::Coverage) {
            Verdict::Inconclusive
        } else {
            Verdict::Certified
        };
        self
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    /// One line per checklist item and a verdict line.
    pub fn summary(&self) -> String {
        let mut out = format!("criterion: {}\n", serde_json::to_value(self.criterion).unwrap().as_str().unwrap());
        for (name, p) in &self.points {
            out += &format!("{name} = {p:?}\n");
        }
        for i in &self.checklist {
            out += &format!("[{}] {}: {}\n", if i.passed { "pass" } else { "FAIL" }, i.id, i.detail);
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out += &format!("verdict: {}\n", serde_json::to_value(self.verdict).unwrap().as_str().unwrap());
        out
    }
}

fn twist_detail(s: &UnderTwistedStatus) -> String {
    format!(
        "under-twisted {}, generically {}, margin {:.3e} at T = {:.6}",
        s.under_twisted, s.generically, s.margin, s.margin_time
    )
}

/// Adds scan evidence and the isolation and nondegeneracy items; returns the
/// contractible actions.
fn record_scan(cert: &mut Certificate, key: &str, scan: ScanReport) -> Vec<(Vec<f64>, f64)> {
    let isolated = scan.is_complete();
    let detail = match &scan.status {
        ScanStatus::Complete => format!("{} orbits from {} seeds", scan.orbits.len(), scan.statistics.seeds),
        ScanStatus::NonIsolated { witness, reason } => format!("non-isolated fixed points near {witness:?}: {reason}"),
    };
    cert.item(&format!("{key}-isolated"), ItemKind::Isolation, isolated, detail, &[key]);
    let degenerate: Vec<Vec<f64>> = scan.degenerate().map(|o| o.start.clone()).collect();
    cert.item(
        &format!("{key}-nondegenerate"),
        ItemKind::Coverage,
        isolated && degenerate.is_empty(),
        if degenerate.is_empty() {
            "every orbit found is nondegenerate".into()
        } else {
            format!("degenerate orbits at {degenerate:?}")
        },
        &[key],
    );
    let actions = scan.contractible().filter_map(|o| o.action.map(|a| (o.start.clone(), a))).collect();
    cert.evidence.insert(key.into(), Evidence::Scan(scan));
    actions
}

/// Action of the constant loop at a fixed point: `∫₀¹ H(t, P) dt`.
pub fn fixed_point_action(system: &HamiltonianSystem, p: &[f64], steps: usize) -> f64 {
    let steps = steps.max(2) + steps % 2;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let samples = vec![p.to_vec(); times.len()];
    quadrature(&system.values_along(&times, &samples))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        let d = x - y;
        (d - d.round()).abs() < tol
    })
}

/// Quasi-autonomy, generically under-twisted extrema, and every contractible
/// 1-periodic orbit with action in `[A_H(Q), A_H(P)]`.
pub fn certify_thm15(
    h: &HamiltonianSystem,
    p: &[f64],
    q: &[f64],
    options: &CertifyOptions,
) -> Result<Certificate, CertificateError> {
    require_torus(h)?;
    let mut cert = Certificate::new(Criterion::Thm15, options);
    cert.points.insert("P".into(), p.to_vec());
    cert.points.insert("Q".into(), q.to_vec());

    let qa = quasi_autonomous_check(h, p, q, &options.grid)?;
    cert.item(
        "quasi-autonomous",
        ItemKind::Hypothesis,
        qa.holds,
        format!("slack off P {:.3e}, off Q {:.3e}", qa.maximum.slack, qa.minimum.slack),
        &["quasi-autonomous"],
    );
    cert.evidence.insert("quasi-autonomous".into(), Evidence::QuasiAutonomous(qa.clone()));

    for (name, point, fixed) in [("P", p, qa.maximum.gradient), ("Q", q, qa.minimum.gradient)] {
        let key = format!("under-twisted:{name}");
        match under_twisted_status(h, point, options.twist_samples, options.scan.steps) {
            Ok(s) => {
                cert.item(&format!("generically-under-twisted-{name}"), ItemKind::Hypothesis, s.generically, twist_detail(&s), &[&key]);
                cert.evidence.insert(key, Evidence::UnderTwisted(s));
            }
            Err(e) => {
                cert.item(
                    &format!("generically-under-twisted-{name}"),
                    ItemKind::Hypothesis,
                    false,
                    format!("{name} is not a fixed point (|∇H| up to {fixed:.3e}): {e}"),
                    &[&key],
                );
                cert.evidence.insert(key, Evidence::Failure { message: e.to_string() });
            }
        }
    }

    let scan = scan_fixed_points(h, &options.scan)?;
    let actions = record_scan(&mut cert, "scan", scan);
    let (ap, aq) = (fixed_point_action(h, p, options.scan.steps), fixed_point_action(h, q, options.scan.steps));
    let tol = options.action_tol;
    let outside: Vec<Vec<f64>> = actions
        .iter()
        .filter(|(_, a)| *a > ap + tol || *a < aq - tol)
        .map(|(x, a)| {
            let mut v = x.clone();
            v.push(*a);
            v
        })
        .collect();
    let coincident: Vec<Vec<f64>> = actions
        .iter()
        .filter(|(x, a)| {
            let at_end = (a - ap).abs() <= tol || (a - aq).abs() <= tol;
            at_end && !close(x, p, 1e-8) && !close(x, q, 1e-8)
        })
        .map(|(x, a)| {
            let mut v = x.clone();
            v.push(*a);
            v
        })
        .collect();
    for c in &coincident {
        cert.notes.push(format!(
            "orbit at {:?} has action {} on the boundary of [A(Q), A(P)]; admitted by closed containment",
            &c[..c.len() - 1],
            c[c.len() - 1]
        ));
    }
    cert.item(
        "actions-in-interval",
        ItemKind::Hypothesis,
        outside.is_empty(),
        format!(
            "{} contractible orbits, {} with action outside [{aq}, {ap}] ± {tol:e}",
            actions.len(),
            outside.len()
        ),
        &["scan", "actions"],
    );
    cert.evidence.insert(
        "actions".into(),
        Evidence::Actions {
            reference: BTreeMap::from([("A(P)".to_string(), ap), ("A(Q)".to_string(), aq)]),
            outside,
            coincident,
        },
    );
    Ok(cert.finish())
}

/// Under-twisted maximum of `H` at `P`, domination of `K` at `P`, a
/// generically under-twisted maximum of `K` at `P`, no contractible orbit of
/// `K` above `A_K(P)`, and `A_K(P) = A_H(P)`.
pub fn certify_thm16(
    h: &HamiltonianSystem,
    k: &HamiltonianSystem,
    p: &[f64],
    options: &CertifyOptions,
) -> Result<Certificate, CertificateError> {
    certify_domination(Criterion::Thm16, h, k, p, options)
}

fn certify_domination(
    criterion: Criterion,
    h: &HamiltonianSystem,
    k: &HamiltonianSystem,
    p: &[f64],
    options: &CertifyOptions,
) -> Result<Certificate, CertificateError> {
    require_torus(h)?;
    require_torus(k)?;
    let mut cert = Certificate::new(criterion, options);
    cert.points.insert("P".into(), p.to_vec());

    let max_h = extremum_check(h, p, ExtremumKind::Maximum, &options.grid)?;
    let twist_h = under_twisted_status(h, p, options.twist_samples, options.scan.steps);
    let (ok, detail) = match &twist_h {
        Ok(s) => (max_h.holds && s.under_twisted, format!("global maximum {}, {}", max_h.holds, twist_detail(s))),
        Err(e) => (false, format!("global maximum {}, {e}", max_h.holds)),
    };
    cert.item("under-twisted-maximum-H", ItemKind::Hypothesis, ok, detail, &["maximum:H", "under-twisted:H"]);
    cert.evidence.insert("maximum:H".into(), Evidence::Extremum(max_h));
    cert.evidence.insert(
        "under-twisted:H".into(),
        match twist_h {
            Ok(s) => Evidence::UnderTwisted(s),
            Err(e) => Evidence::Failure { message: e.to_string() },
        },
    );

    let dom = dominates_check(h, k, p, &options.grid)?;
    cert.item(
        "dominates",
        ItemKind::Hypothesis,
        dom.holds,
        match &dom.witness {
            None => format!("min(H − K) = {:.3e}, |H − K| at P ≤ {:.3e}", dom.min_gap, dom.equality_defect),
            Some(w) => format!("H = {} < K = {} at t = {}, x = {:?}", w.value, w.reference, w.t, w.x),
        },
        &["domination"],
    );
    cert.evidence.insert("domination".into(), Evidence::Domination(dom));

    let max_k = extremum_check(k, p, ExtremumKind::Maximum, &options.grid)?;
    let twist_k = under_twisted_status(k, p, options.twist_samples, options.scan.steps);
    let (ok, detail) = match &twist_k {
        Ok(s) => (max_k.holds && s.generically, format!("global maximum {}, {}", max_k.holds, twist_detail(s))),
        Err(e) => (false, format!("global maximum {}, {e}", max_k.holds)),
    };
    cert.item("generically-under-twisted-maximum-K", ItemKind::Hypothesis, ok, detail, &["maximum:K", "under-twisted:K"]);
    cert.evidence.insert("maximum:K".into(), Evidence::Extremum(max_k));
    cert.evidence.insert(
        "under-twisted:K".into(),
        match twist_k {
            Ok(s) => Evidence::UnderTwisted(s),
            Err(e) => Evidence::Failure { message: e.to_string() },
        },
    );

    let scan = scan_fixed_points(k, &options.scan)?;
    let actions = record_scan(&mut cert, "scan:K", scan);
    let akp = fixed_point_action(k, p, options.scan.steps);
    let ahp = fixed_point_action(h, p, options.scan.steps);
    let tol = options.action_tol;
    let above: Vec<Vec<f64>> = actions
        .iter()
        .filter(|(_, a)| *a > akp + tol)
        .map(|(x, a)| {
            let mut v = x.clone();
            v.push(*a);
            v
        })
        .collect();
    let coincident: Vec<Vec<f64>> = actions
        .iter()
        .filter(|(x, a)| (a - akp).abs() <= tol && !close(x, p, 1e-8))
        .map(|(x, a)| {
            let mut v = x.clone();
            v.push(*a);
            v
        })
        .collect();
    for c in &coincident {
        cert.notes.push(format!(
            "orbit of K at {:?} has action {} equal to A_K(P) within tolerance; admitted",
            &c[..c.len() - 1],
            c[c.len() - 1]
        ));
    }
    cert.item(
        "no-orbit-above-P",
        ItemKind::Hypothesis,
        above.is_empty(),
        format!("{} contractible orbits of K, {} with action above A_K(P) = {akp} + {tol:e}", actions.len(), above.len()),
        &["scan:K", "actions"],
    );
    cert.item(
        "action-at-P",
        ItemKind::Hypothesis,
        (akp - ahp).abs() <= tol,
        format!("A_K(P) = {akp}, A_H(P) = {ahp}"),
        &["actions"],
    );
    cert.evidence.insert(
        "actions".into(),
        Evidence::Actions {
            reference: BTreeMap::from([("A_H(P)".to_string(), ahp), ("A_K(P)".to_string(), akp)]),
            outside: above,
            coincident,
        },
    );
    Ok(cert.finish())
}

/// Cosine cap `K = H(t,P) + c f_P` lying below `H`, with `c` placed between
/// the verified floor and `1/(2π)`, the scale at which the linearized flow of
/// `c f_P` completes a full turn at `P` in unit time.
fn cap_at(
    h: &HamiltonianSystem,
    p: &[f64],
    options: &CertifyOptions,
) -> Result<(HamiltonianSystem, f64, CapThreshold), SystemError> {
    let threshold = cap_threshold(h, p, &options.grid)?;
    let ceiling = 1.0 / TAU;
    if threshold.floor >= ceiling {
        return Err(SystemError::Construction(format!(
            "no cap below H at {p:?}: the verified floor {} is not below 1/(2π)",
            threshold.floor
        )));
    }
    let scale = threshold.floor + options.cap_fraction * (ceiling - threshold.floor);
    let report = subordinate_cap(h, p, scale, &options.grid)?;
    Ok((report.system, scale, threshold))
}

/// The negative-length criterion: `H̄(t,x) = −H(t, φᵗ_H(x))` dominates a cap
/// `L` at `Q`, checked as in [`certify_thm16`], plus `‖H̄‖⁺ = ‖H‖⁻`.
pub fn certify_negside(h: &HamiltonianSystem, q: &[f64], options: &CertifyOptions) -> Result<Certificate, CertificateError> {
    require_torus(h)?;
    let hbar = reverse(h);
    let mut cert = match cap_at(&hbar, q, options) {
        Ok((l, scale, threshold)) => {
            let mut c = certify_domination(Criterion::Negside, &hbar, &l, q, options)?;
            c.evidence.insert("cap".into(), Evidence::Cap { scale, threshold });
            c.item("cap-construction", ItemKind::Hypothesis, true, format!("cap scale {scale:.6e}"), &["cap"]);
            c
        }
        Err(e) => {
            let mut c = Certificate::new(Criterion::Negside, options);
            c.item("cap-construction", ItemKind::Hypothesis, false, e.to_string(), &["cap"]);
            c.evidence.insert("cap".into(), Evidence::Failure { message: e.to_string() });
            c
        }
    };
    cert.points.insert("Q".into(), q.to_vec());
    cert.points.remove("P");

    let hofer_h = hofer_norms(h, &options.hofer)?;
    let hofer_bar = hofer_norms(&hbar, &options.hofer)?;
    let tol = 1e-6;
    cert.item(
        "reversal-hofer-identity",
        ItemKind::Coverage,
        (hofer_bar.positive - hofer_h.negative).abs() <= tol,
        format!("‖H̄‖⁺ = {}, ‖H‖⁻ = {}", hofer_bar.positive, hofer_h.negative),
        &["hofer:H", "hofer:reversed"],
    );
    cert.evidence.insert(
        "reversal-identity".into(),
        Evidence::Identity { left: hofer_bar.positive, right: hofer_h.negative, tolerance: tol },
    );
    cert.evidence.insert("hofer:H".into(), Evidence::Hofer(hofer_h));
    cert.evidence.insert("hofer:reversed".into(), Evidence::Hofer(hofer_bar));
    Ok(cert.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeAttempt {
    pub epsilon: f64,
    pub verdict: Verdict,
    pub failed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeReport {
    pub attempts: Vec<ShortTimeAttempt>,
    /// Largest `ε` tried at which the rescaled path was certified.
    pub epsilon: Option<f64>,
    pub certificate: Option<Certificate>,
}

/// Searches `ε = ε₀, ε₀/2, …, ≥ ε_min` for one at which `εH(εt, ·)`
/// dominates the cosine cap `εH(εt, P) + c f_P` with all hypotheses met.
pub fn short_time_search(
    h: &HamiltonianSystem,
    p: &[f64],
    eps_start: f64,
    eps_min: f64,
    options: &CertifyOptions,
) -> Result<ShortTimeReport, CertificateError> {
    require_torus(h)?;
    if !(eps_start > 0.0 && eps_start <= 1.0 && eps_min > 0.0) {
        return Err(CertificateError::Invalid("need 0 < ε_min and 0 < ε₀ ≤ 1".into()));
    }
    let mut attempts = Vec::new();
    let mut eps = eps_start;
    while eps >= eps_min {
        let he = rescale(h, eps)?;
        let cert = match cap_at(&he, p, options) {
            Ok((k, scale, threshold)) => {
                let mut c = certify_domination(Criterion::ShortTime, &he, &k, p, options)?;
                c.evidence.insert("cap".into(), Evidence::Cap { scale, threshold });
                c.points.insert("epsilon".into(), vec![eps]);
                c
            }
            Err(e) => {
                let mut c = Certificate::new(Criterion::ShortTime, options);
                c.item("cap-construction", ItemKind::Hypothesis, false, e.to_string(), &["cap"]);
                c.evidence.insert("cap".into(), Evidence::Failure { message: e.to_string() });
                c.finish()
            }
        };
        attempts.push(ShortTimeAttempt {
            epsilon: eps,
            verdict: cert.verdict,
            failed: cert.checklist.iter().filter(|i| !i.passed).map(|i| i.id.clone()).collect(),
        });
        if cert.is_certified() {
            return Ok(ShortTimeReport { attempts, epsilon: Some(eps), certificate: Some(cert) });
        }
        eps /= 2.0;
    }
    Ok(ShortTimeReport { attempts, epsilon: None, certificate: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::constructions::{dominating_cap, reparameterize, TimeMap};

    fn cos_cos(eps: f64) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"torus","n":1}},"terms":[
                {{"type":"fourier","amplitude":{eps},"wavevector":[1,0]}},
                {{"type":"fourier","amplitude":{eps},"wavevector":[0,1]}}]}}"#
        ))
        .unwrap()
    }

    fn pulsed(profile: &str) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"torus","n":1}},"terms":[
                {{"type":"fourier","amplitude":0.05,"wavevector":[1,0]}},
                {{"type":"fourier","amplitude":0.05,"wavevector":[0,1]}}],
                "time_profile":{profile}}}"#
        ))
        .unwrap()
    }

    fn fast() -> CertifyOptions {
        CertifyOptions {
            scan: ScanOptions { resolution: 8, steps: 400, coarse_steps: 100, record: 8, ..Default::default() },
            grid: SampleGrid { space: 16, time: 5 },
            twist_samples: 400,
            hofer: HoferOptions { space: 16, time_intervals: 20, refine: true },
            ..Default::default()
        }
    }

    #[test]
    fn hofer_of_cos_cos() {
        let r = hofer_norms(&cos_cos(0.05), &HoferOptions::default()).unwrap();
        assert!((r.positive - 0.1).abs() < 1e-12);
        assert!((r.negative - 0.1).abs() < 1e-12);
        assert!((r.length - 0.2).abs() < 1e-12);
        assert!(r.mean_defect < 1e-15);
        let zero = HamiltonianSystem::from_json(r#"{"domain":{"type":"torus","n":1},"terms":[]}"#).unwrap();
        let r = hofer_norms(&zero, &HoferOptions::default()).unwrap();
        assert_eq!((r.positive, r.negative, r.length), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hofer_refinement_finds_off_grid_extrema() {
        let h = HamiltonianSystem::from_json(
            r#"{"domain":{"type":"torus","n":1},"terms":[
                {"type":"fourier","amplitude":1,"wavevector":[1,0],"phase":0.1},
                {"type":"fourier","amplitude":1,"wavevector":[0,1],"phase":0.2}]}"#,
        )
        .unwrap();
        let r = hofer_norms(&h, &HoferOptions { space: 8, time_intervals: 4, refine: true }).unwrap();
        assert!((r.positive - 2.0).abs() < 1e-12, "{}", r.positive);
    }

    #[test]
    fn hofer_is_invariant_under_reparameterization() {
        let h = pulsed(r#"{"type":"fourier","mean":1,"cos":[0.3]}"#);
        let ha = reparameterize(&h, TimeMap::default()).unwrap();
        let a = hofer_norms(&h, &HoferOptions::default()).unwrap();
        let b = hofer_norms(&ha, &HoferOptions::default()).unwrap();
        assert!((a.positive - b.positive).abs() < 1e-6);
        assert!((a.negative - b.negative).abs() < 1e-6);
    }

    #[test]
    fn quasi_autonomy() {
        let grid = SampleGrid::default();
        let r = quasi_autonomous_check(&cos_cos(0.05), &[0.0, 0.0], &[0.5, 0.5], &grid).unwrap();
        assert!(r.holds);
        let r = quasi_autonomous_check(&pulsed(r#"{"type":"fourier","mean":1,"cos":[0.5]}"#), &[0.0, 0.0], &[0.5, 0.5], &grid)
            .unwrap();
        assert!(r.holds);
        let flips = pulsed(r#"{"type":"fourier","mean":0.2,"cos":[1]}"#);
        let r = quasi_autonomous_check(&flips, &[0.0, 0.0], &[0.5, 0.5], &grid).unwrap();
        assert!(!r.holds);
        let w = r.maximum.witness.unwrap();
        // c(t) = 0.2 + cos 2πt is negative on (0.28, 0.72)
        assert!(w.t > 0.28 && w.t < 0.72);
    }

    #[test]
    fn domination() {
        let h = cos_cos(0.05);
        let grid = SampleGrid::default();
        assert!(dominates_check(&h, &h, &[0.0, 0.0], &grid).unwrap().holds);
        let g = dominating_cap(&h, &[0.0, 0.0], 0.02, &grid).unwrap().system;
        assert!(dominates_check(&g, &h, &[0.0, 0.0], &grid).unwrap().holds);
        let r = dominates_check(&h, &g, &[0.0, 0.0], &grid).unwrap();
        assert!(!r.holds && r.witness.is_some());
    }

    #[test]
    fn extrema_are_located() {
        let (p, q) = locate_extrema(&cos_cos(0.05), 32).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
        assert!(max_norm(&[q[0] - 0.5, q[1] - 0.5]) < 1e-12);
    }

    #[test]
    fn thm15_on_small_cos_cos() {
        let c = certify_thm15(&cos_cos(0.05), &[0.0, 0.0], &[0.5, 0.5], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::Certified, "{}", c.summary());
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Certificate>(&text).unwrap(), c);
    }

    #[test]
    fn thm15_at_the_critical_amplitude_is_refuted() {
        let c = certify_thm15(&cos_cos(1.0 / TAU), &[0.0, 0.0], &[0.5, 0.5], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::RefutedHypothesis, "{}", c.summary());
        let failed: Vec<_> = c.checklist.iter().filter(|i| !i.passed).map(|i| i.id.as_str()).collect();
        assert!(failed.contains(&"generically-under-twisted-P"));
    }

    #[test]
    fn thm15_of_zero_is_inconclusive() {
        let zero = HamiltonianSystem::from_json(r#"{"domain":{"type":"torus","n":1},"terms":[]}"#).unwrap();
        let c = certify_thm15(&zero, &[0.0, 0.0], &[0.5, 0.5], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn thm16_with_k_equal_to_h_and_with_a_violated_domination() {
        let h = cos_cos(0.05);
        let c = certify_thm16(&h, &h, &[0.0, 0.0], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::Certified, "{}", c.summary());
        let bigger = cos_cos(0.06);
        let c = certify_thm16(&h, &bigger, &[0.0, 0.0], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::RefutedHypothesis);
    }

    #[test]
    fn negative_side_of_an_autonomous_system() {
        let c = certify_negside(&cos_cos(0.05), &[0.5, 0.5], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::Certified, "{}", c.summary());
        let c = certify_negside(&cos_cos(0.05), &[0.25, 0.5], &fast()).unwrap();
        assert_eq!(c.verdict, Verdict::RefutedHypothesis);
    }

    #[test]
    fn short_time_search_succeeds_on_a_pulsed_system() {
        let h = pulsed(r#"{"type":"fourier","mean":1,"cos":[0.3]}"#);
        let r = short_time_search(&h, &[0.0, 0.0], 0.05, 1e-3, &fast()).unwrap();
        assert!(r.epsilon.is_some(), "{:?}", r.attempts);
    }
}
