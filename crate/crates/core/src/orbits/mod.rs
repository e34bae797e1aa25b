//! Contractible 1-periodic orbits: a seeded shooting search for fixed
//! points of the time-1 map, and the data attached to each orbit.
//!
//! The search is evidence, not proof. Reports carry the seed grid and the
//! Newton statistics so that a reader can judge how complete it was.

pub mod index;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Domain, FlowError, FlowOptions, HamiltonianSystem, DEFAULT_STEPS};
use crate::linalg::max_norm;

pub use index::{
    cz_index, fixed_point_linearization, sigma_min, under_twisted_status, CzIndex, UnderTwistedStatus,
    DEGENERACY_TOL, MARGIN_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("the action is defined on contractible loops only; lift displacement is {0:?}")]
    NotContractible(Vec<i64>),
    #[error("{point:?} is not fixed: |∇H| = {gradient:e} at t = {time}")]
    NotFixed { point: Vec<f64>, time: f64, gradient: f64 },
    #[error("loop does not close: |x(1) − x(0) − m| = {0:e}")]
    NotClosed(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Guard band for rounding a lift displacement to an integer vector.
const LIFT_GUARD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// `x(0)`, reduced to `[0, 1)` on a torus.
    pub start: Vec<f64>,
    /// `x(tₖ)` at `tₖ = k / (samples.len() − 1)` in the lifted coordinates.
    pub samples: Vec<Vec<f64>>,
    pub lift_displacement: Vec<i64>,
    pub contractible: bool,
    /// `None` for non-contractible orbits.
    pub action: Option<f64>,
    pub cz_index: CzIndex,
    pub nondegenerate: bool,
    /// `σ_min(Dφ¹ − I)` along the orbit.
    pub nondegeneracy_margin: f64,
    /// `|φ¹(x) − x − m|_∞` at the reported start point.
    pub residual: f64,
    /// Whether the orbit is a rest point.
    pub constant: bool,
    /// Number of seeds whose Newton iteration ended here.
    pub basin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Seeds per phase-space direction.
    pub resolution: usize,
    /// Newton stops once `|φ¹(x) − x − m|_∞ < tol`; solutions closer than
    /// `10·tol` are merged.
    pub tol: f64,
    pub steps: usize,
    /// Step count for the cheap first Newton pass (at most `steps`).
    pub coarse_steps: usize,
    pub max_iterations: usize,
    /// Samples kept per reported orbit (intervals).
    pub record: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            resolution: 32,
            tol: 1e-10,
            steps: DEFAULT_STEPS,
            coarse_steps: 250,
            max_iterations: 40,
            record: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScanStatus {
    Complete,
    /// A continuum of fixed points was found; enumeration stopped.
    NonIsolated { witness: Vec<f64>, reason: String },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SeedStatistics {
    pub seeds: usize,
    pub converged: usize,
    pub diverged: usize,
    pub singular: usize,
    pub flow_failures: usize,
    pub max_iterations_used: usize,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub domain: Domain,
    pub options: ScanOptions,
    #[serde(flatten)]
    pub status: ScanStatus,
    pub statistics: SeedStatistics,
    pub orbits: Vec<PeriodicOrbit>,
}

impl ScanReport {
    pub fn is_complete(&self) -> bool {
        self.status == ScanStatus::Complete
    }

    pub fn contractible(&self) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(|o| o.contractible)
    }

    pub fn degenerate(&self) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(|o| !o.nondegenerate)
    }
}

enum SeedOutcome {
    Converged { x: Vec<f64>, iterations: usize, residual: f64 },
    Diverged,
    Singular,
    FlowFailed,
}

/// `φ¹(x) − x − m` with `m` the nearest lattice vector on a torus.
fn displacement(domain: Domain, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<i64>) {
    let mut f = Vec::with_capacity(x.len());
    let mut m = Vec::with_capacity(x.len());
    for (a, b) in x.iter().zip(y) {
        let d = b - a;
        let k = if domain.is_torus() { d.round() } else { 0.0 };
        f.push(d - k);
        m.push(k as i64);
    }
    (f, m)
}

fn newton(
    system: &HamiltonianSystem,
    x0: &[f64],
    steps: usize,
    tol: f64,
    max_iterations: usize,
    max_step: f64,
) -> SeedOutcome {
    let domain = system.domain();
    let d = x0.len();
    let mut x = x0.to_vec();
    for it in 0..=max_iterations {
        let Ok((y, m)) = system.time_map(&x, 1.0, steps) else {
            return SeedOutcome::FlowFailed;
        };
        let (f, _) = displacement(domain, &x, &y);
        let residual = max_norm(&f);
        if residual < tol {
            return SeedOutcome::Converged { x, iterations: it, residual };
        }
        if it == max_iterations {
            break;
        }
        let a = m - DMatrix::identity(d, d);
        let Some(dx) = a.lu().solve(&nalgebra::DVector::from_column_slice(&f)) else {
            return SeedOutcome::Singular;
        };
        let size = dx.amax();
        if !size.is_finite() {
            return SeedOutcome::Singular;
        }
        let damp = if size > max_step { max_step / size } else { 1.0 };
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi -= damp * di;
        }
    }
    SeedOutcome::Diverged
}

/// Reduces a torus point to `[0, 1)`, sending values within `1e-9` of 1 to 0.
fn canonical(domain: Domain, x: &[f64]) -> Vec<f64> {
    if !domain.is_torus() {
        return x.to_vec();
    }
    x.iter()
        .map(|v| {
            let w = v - v.floor();
            if w > 1.0 - 1e-9 {
                w - 1.0
            } else {
                w
            }
        })
        .collect()
}

fn point_distance(domain: Domain, a: &[f64], b: &[f64]) -> f64 {
    let (f, _) = displacement(domain, a, b);
    max_norm(&f)
}

fn seeds(domain: Domain, resolution: usize) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let r = resolution.max(1);
    let (lo, width) = match domain {
        Domain::Torus { .. } => (0.0, 1.0),
        Domain::Chart { radius, .. } => {
            let h = radius.unwrap_or(1.0);
            (-h, 2.0 * h)
        }
    };
    let offset = if domain.is_torus() { 0.0 } else { 0.5 };
    (0..r.pow(dim as u32))
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let i = idx % r;
                    idx /= r;
                    lo + width * (i as f64 + offset) / r as f64
                })
                .collect()
        })
        .collect()
}

fn domain_scale(domain: Domain) -> f64 {
    match domain {
        Domain::Torus { .. } => 1.0,
        Domain::Chart { radius, .. } => radius.unwrap_or(1.0),
    }
}

/// Greedy clustering in input order; returns representatives and counts.
fn cluster(domain: Domain, points: Vec<(Vec<f64>, usize)>, radius: f64) -> Vec<(Vec<f64>, usize)> {
    let mut out: Vec<(Vec<f64>, usize)> = Vec::new();
    for (x, w) in points {
        match out.iter_mut().find(|(c, _)| point_distance(domain, c, &x) < radius) {
            Some(c) => c.1 += w,
            None => out.push((x, w)),
        }
    }
    out
}

/// `∫₀¹ f` from uniform samples: Simpson when the interval count is even.
pub fn quadrature(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let h = 1.0 / n as f64;
    if n % 2 == 0 {
        let inner: f64 = values[1..n].iter().enumerate().map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v }).sum();
        h / 3.0 * (values[0] + values[n] + inner)
    } else {
        h * (0.5 * (values[0] + values[n]) + values[1..n].iter().sum::<f64>())
    }
}

/// `½ ∮ (p·dq − q·dp)` of the closed polygon through `samples`, which is
/// the symplectic area of any capping disk.
pub fn capping_area(samples: &[Vec<f64>]) -> f64 {
    let n = samples[0].len() / 2;
    let mut area = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for i in 0..n {
            area += a[n + i] * b[i] - a[i] * b[n + i];
        }
    }
    0.5 * area
}

/// `A_H(x) = ∫₀¹ H(t, x(t)) dt − ∫_{D²} x̄*ω` for a loop sampled uniformly on
/// `[0, 1]` in lifted coordinates, with `x(1) = x(0)`.
pub fn loop_action(system: &HamiltonianSystem, times: &[f64], samples: &[Vec<f64>]) -> Result<f64, OrbitError> {
    if samples.len() < 2 || times.len() != samples.len() {
        return Err(OrbitError::Invalid("a loop needs matching times and at least two samples".into()));
    }
    let (first, last) = (&samples[0], &samples[samples.len() - 1]);
    let gap: Vec<f64> = first.iter().zip(last).map(|(a, b)| b - a).collect();
    let m: Vec<i64> = gap.iter().map(|v| v.round() as i64).collect();
    if m.iter().any(|&k| k != 0) {
        return Err(OrbitError::NotContractible(m));
    }
    if max_norm(&gap) > 1e-6 {
        return Err(OrbitError::NotClosed(max_norm(&gap)));
    }
    let values = system.values_along(times, samples);
    Ok(quadrature(&values) - capping_area(samples))
}

/// Action of a scanned orbit, recomputed from its recorded samples.
pub fn action(system: &HamiltonianSystem, orbit: &PeriodicOrbit) -> Result<f64, OrbitError> {
    if !orbit.contractible {
        return Err(OrbitError::NotContractible(orbit.lift_displacement.clone()));
    }
    let steps = orbit.samples.len() - 1;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    loop_action(system, &times, &orbit.samples)
}

/// `det(Dφ¹ − I) ≠ 0` along the orbit, with margin `σ_min(Dφ¹ − I)`.
pub fn nondegenerate(system: &HamiltonianSystem, orbit: &PeriodicOrbit, steps: usize) -> Result<(bool, f64), OrbitError> {
    let margin = if orbit.constant && system.is_autonomous() {
        let path = fixed_point_linearization(system, &orbit.start, 2, steps)?;
        sigma_min(&path[2])
    } else {
        let (_, m) = system.time_map(&orbit.start, 1.0, steps)?;
        sigma_min(&m)
    };
    Ok((margin >= DEGENERACY_TOL, margin))
}

/// Builds the full orbit through a converged fixed point of `φ¹`.
pub fn complete_orbit(
    system: &HamiltonianSystem,
    x: &[f64],
    steps: usize,
    record: usize,
    basin: usize,
) -> Result<PeriodicOrbit, OrbitError> {
    let domain = system.domain();
    let start = canonical(domain, x);
    let record = record.clamp(1, steps);
    let stride = steps.div_ceil(record);
    let steps = stride * record;
    let full = system.flow_with(&start, 0.0, 1.0, &FlowOptions::full(steps))?;
    let (f, m) = displacement(domain, &start, &full.endpoint);
    let gap: Vec<f64> = start.iter().zip(&full.endpoint).map(|(a, b)| b - a).collect();
    if gap.iter().zip(&m).any(|(g, &k)| (g - k as f64).abs() > LIFT_GUARD) {
        return Err(OrbitError::NotClosed(max_norm(&f)));
    }
    let residual = max_norm(&f);
    let contractible = m.iter().all(|&k| k == 0);
    let grad = max_norm(&system.gradient(0.0, &start));
    let constant = system.is_autonomous() && grad < index::FIXED_TOL;

    let path = if constant {
        fixed_point_linearization(system, &start, steps, steps)?
    } else {
        full.monodromy_path.clone()
    };
    let margin = sigma_min(path.last().expect("nonempty"));
    let cz = cz_index(&path);

    let action = if contractible {
        // close the loop exactly; the gap is the Newton residual
        let mut samples = full.samples.clone();
        *samples.last_mut().expect("nonempty") = start.clone();
        Some(loop_action(system, &full.times, &samples)?)
    } else {
        None
    };
    Ok(PeriodicOrbit {
        start,
        samples: full.samples.into_iter().step_by(stride).collect(),
        lift_displacement: m,
        contractible,
        action,
        cz_index: cz,
        nondegenerate: margin >= DEGENERACY_TOL,
        nondegeneracy_margin: margin,
        residual,
        constant,
        basin,
    })
}

/// Newton search for fixed points of `φ¹` from every point of a seed grid.
pub fn scan_fixed_points(system: &HamiltonianSystem, options: &ScanOptions) -> Result<ScanReport, OrbitError> {
    if options.resolution == 0 || options.steps == 0 || !(options.tol > 0.0) {
        return Err(OrbitError::Invalid("scan needs resolution ≥ 1, steps ≥ 1 and tol > 0".into()));
    }
    let domain = system.domain();
    let max_step = match domain {
        Domain::Torus { .. } => 0.1,
        Domain::Chart { radius, .. } => 0.25 * radius.unwrap_or(1.0),
    };
    let coarse_steps = options.coarse_steps.clamp(1, options.steps);
    let coarse_tol = options.tol.max(1e-8);
    let seed_points = seeds(domain, options.resolution);

    let outcomes: Vec<SeedOutcome> = seed_points
        .par_iter()
        .map(|x| newton(system, x, coarse_steps, coarse_tol, options.max_iterations, max_step))
        .collect();

    let mut stats = SeedStatistics { seeds: seed_points.len(), ..Default::default() };
    let mut coarse = Vec::new();
    let mut total_iterations = 0usize;
    for o in outcomes {
        match o {
            SeedOutcome::Converged { x, iterations, residual } => {
                stats.converged += 1;
                total_iterations += iterations;
                stats.max_iterations_used = stats.max_iterations_used.max(iterations);
                coarse.push((residual, canonical(domain, &x)));
            }
            SeedOutcome::Diverged => stats.diverged += 1,
            SeedOutcome::Singular => stats.singular += 1,
            SeedOutcome::FlowFailed => stats.flow_failures += 1,
        }
    }
    if stats.converged > 0 {
        stats.mean_iterations = total_iterations as f64 / stats.converged as f64;
    }

    let report = |status, orbits| ScanReport {
        domain,
        options: options.clone(),
        status,
        statistics: stats.clone(),
        orbits,
    };

    // best solutions first, so that clusters are represented by them
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    let coarse = cluster(domain, coarse.into_iter().map(|(_, x)| (x, 1)).collect(), 1e-6);
    // A continuum of fixed points shows up as almost every seed being its own
    // solution. Counting at a fraction of the seed spacing keeps the slow
    // Newton spray around a degenerate point from looking like one.
    let spacing = domain_scale(domain) / options.resolution as f64;
    let separated = cluster(domain, coarse.clone(), (0.25 * spacing).min(1e-2 * domain_scale(domain)));
    if separated.len() > 16 && separated.len() * 4 > seed_points.len() {
        return Ok(report(
            ScanStatus::NonIsolated {
                witness: separated[0].0.clone(),
                reason: format!("{} separated solutions from {} seeds", separated.len(), seed_points.len()),
            },
            Vec::new(),
        ));
    }

    let polished: Vec<Option<(Vec<f64>, usize)>> = coarse
        .par_iter()
        .map(|(x, w)| match newton(system, x, options.steps, options.tol, options.max_iterations, max_step) {
            SeedOutcome::Converged { x, .. } => Some((canonical(domain, &x), *w)),
            _ => None,
        })
        .collect();
    let mut fixed = cluster(domain, polished.into_iter().flatten().collect(), 10.0 * options.tol);
    fixed.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let orbits: Vec<PeriodicOrbit> = fixed
        .par_iter()
        .map(|(x, w)| complete_orbit(system, x, options.steps, options.record, *w))
        .collect::<Result<_, _>>()?;
    let orbits = merge_degenerate(domain, orbits, options.tol);

    for o in orbits.iter().filter(|o| !o.nondegenerate) {
        if let Some(witness) = probe_continuum(system, o, options)? {
            return Ok(report(
                ScanStatus::NonIsolated {
                    witness,
                    reason: "fixed points accumulate along the kernel of Dφ¹ − I".into(),
                },
                Vec::new(),
            ));
        }
    }
    Ok(report(ScanStatus::Complete, orbits))
}

/// Newton converges slowly onto a degenerate fixed point and stops wherever
/// the residual first drops below `tol`, leaving a spray of nearby solutions.
/// Each orbit absorbs the others within `tol / σ_min(Dφ¹ − I)` (clamped to
/// `[10·tol, 1e-4]` in units of the domain scale), most degenerate first, so
/// the survivor of a group is its most degenerate member.
fn merge_degenerate(domain: Domain, orbits: Vec<PeriodicOrbit>, tol: f64) -> Vec<PeriodicOrbit> {
    let scale = domain_scale(domain);
    let radius = |o: &PeriodicOrbit| (tol / o.nondegeneracy_margin.max(1e-300)).clamp(10.0 * tol, 1e-4 * scale);
    let mut order: Vec<usize> = (0..orbits.len()).collect();
    order.sort_by(|&a, &b| orbits[a].nondegeneracy_margin.total_cmp(&orbits[b].nondegeneracy_margin).then(a.cmp(&b)));
    let mut absorbed = vec![false; orbits.len()];
    let mut keep = Vec::new();
    for &i in &order {
        if absorbed[i] {
            continue;
        }
        let r = radius(&orbits[i]);
        let group: Vec<usize> = (0..orbits.len())
            .filter(|&j| !absorbed[j] && point_distance(domain, &orbits[i].start, &orbits[j].start) < r)
            .collect();
        let basin = group.iter().map(|&j| orbits[j].basin).sum();
        group.iter().for_each(|&j| absorbed[j] = true);
        let mut o = orbits[i].clone();
        o.basin = basin;
        keep.push(o);
    }
    keep.sort_by(|a, b| {
        a.start
            .iter()
            .zip(&b.start)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    keep
}

/// Looks for a curve of fixed points through a degenerate one, tangent to
/// the kernel of `Dφ¹ − I`: from `x̂ ± δv` at every probe radius `δ`,
/// Gauss-Newton must land on a fixed point at least `δ/2` away from `x̂`.
/// An isolated degenerate point passes at tiny `δ` (its residual is of
/// higher order) but fails at the larger radii.
fn probe_continuum(
    system: &HamiltonianSystem,
    orbit: &PeriodicOrbit,
    options: &ScanOptions,
) -> Result<Option<Vec<f64>>, OrbitError> {
    let (_, m) = system.time_map(&orbit.start, 1.0, options.steps)?;
    let d = m.nrows();
    let svd = (m - DMatrix::identity(d, d)).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let k = svd.singular_values.imin();
    let domain = system.domain();
    let scale = domain_scale(domain);
    let tol = 100.0 * options.tol;
    let mut witness = None;
    for delta in [1e-4, 1e-3, 1e-2] {
        let mut found = None;
        for sign in [1.0, -1.0] {
            let mut x: Vec<f64> =
                orbit.start.iter().enumerate().map(|(i, v)| v + sign * delta * scale * vt[(k, i)]).collect();
            for _ in 0..12 {
                let Ok((y, m)) = system.time_map(&x, 1.0, options.steps) else {
                    break;
                };
                let (f, _) = displacement(domain, &x, &y);
                if max_norm(&f) < tol {
                    if point_distance(domain, &x, &orbit.start) > 0.5 * delta * scale {
                        found = Some(x.clone());
                    }
                    break;
                }
                let a = (m - DMatrix::identity(d, d)).svd(true, true);
                let cut = 1e-6 * a.singular_values.max();
                let Ok(dx) = a.solve(&nalgebra::DVector::from_column_slice(&f), cut) else {
                    break;
                };
                x.iter_mut().zip(dx.iter()).for_each(|(xi, di)| *xi -= di);
            }
            if found.is_some() {
                break;
            }
        }
        match found {
            Some(x) => witness = witness.or(Some(x)),
            None => return Ok(None),
        }
    }
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn cos_cos(eps: f64) -> HamiltonianSystem {
        HamiltonianSystem::from_json(&format!(
            r#"{{"domain":{{"type":"torus","n":1}},"terms":[
                {{"type":"fourier","amplitude":{eps},"wavevector":[1,0]}},
                {{"type":"fourier","amplitude":{eps},"wavevector":[0,1]}}]}}"#
        ))
        .unwrap()
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
    fn quadrature_rules() {
        let v: Vec<f64> = (0..=10).map(|k| (k as f64 / 10.0).powi(3)).collect();
        assert!((quadrature(&v) - 0.25).abs() < 1e-15);
        let v: Vec<f64> = (0..=3).map(|k| k as f64 / 3.0).collect();
        assert!((quadrature(&v) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn capping_area_of_a_circle() {
        // q = r cos 2πt, p = −r sin 2πt runs clockwise in the (q, p) plane
        let r = 0.3;
        let n = 4000;
        let s: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                vec![r * t.cos(), -r * t.sin()]
            })
            .collect();
        assert!((capping_area(&s) - PI * r * r).abs() < 1e-6);
    }

    #[test]
    fn circle_orbit_of_a_full_rotation_has_zero_action() {
        let h = rotation(TAU);
        let full = h.flow_with(&[0.2, 0.0], 0.0, 1.0, &FlowOptions::full(2000)).unwrap();
        let mut s = full.samples.clone();
        *s.last_mut().unwrap() = s[0].clone();
        // closes only up to the phase error of the discrete rotation
        assert!(max_norm(&displacement(h.domain(), &s[0], &full.endpoint).0) < 1e-5);
        let a = loop_action(&h, &full.times, &s).unwrap();
        assert!(a.abs() < 1e-5, "{a}");
    }

    #[test]
    fn non_contractible_loops_are_rejected() {
        let s = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]];
        assert!(matches!(
            loop_action(&cos_cos(0.05), &[0.0, 0.5, 1.0], &s),
            Err(OrbitError::NotContractible(_))
        ));
    }

    #[test]
    fn rotation_by_pi_has_one_fixed_point() {
        let r = scan_fixed_points(&rotation(PI), &ScanOptions { resolution: 6, ..Default::default() }).unwrap();
        assert!(r.is_complete());
        assert_eq!(r.orbits.len(), 1);
        let o = &r.orbits[0];
        assert!(max_norm(&o.start) < 1e-12);
        assert!(o.constant && o.nondegenerate);
        assert_eq!(o.cz_index, CzIndex::Index(0));
        assert_eq!(o.basin, 36);
    }

    #[test]
    fn zero_hamiltonian_is_non_isolated() {
        let zero = HamiltonianSystem::from_json(r#"{"domain":{"type":"torus","n":1},"terms":[]}"#).unwrap();
        let r = scan_fixed_points(&zero, &ScanOptions { resolution: 8, ..Default::default() }).unwrap();
        assert!(matches!(r.status, ScanStatus::NonIsolated { .. }));
        assert!(r.orbits.is_empty());
    }

    #[test]
    fn full_rotation_origin_is_degenerate() {
        let h = rotation(TAU);
        let o = complete_orbit(&h, &[0.0, 0.0], 2000, 16, 1).unwrap();
        assert!(!o.nondegenerate);
        assert_eq!(o.cz_index, CzIndex::Degenerate);
        assert_eq!(nondegenerate(&h, &o, 2000).unwrap().0, false);
    }

    #[test]
    fn report_round_trips() {
        let r = scan_fixed_points(&rotation(PI), &ScanOptions { resolution: 2, record: 4, ..Default::default() }).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ScanReport>(&text).unwrap(), r);
    }
}
