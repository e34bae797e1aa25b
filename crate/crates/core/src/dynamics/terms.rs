//! Hamiltonians given by finite sums of trigonometric and polynomial terms,
//! and the JSON configuration format that describes them.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Domain, Hamiltonian, SystemError};

/// Scalar coefficient `c(t)` multiplying a term or a whole system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant {
        value: f64,
    },
    /// `Σ cₖ tᵏ`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `from + (to − from)(3t² − 2t³)` on `[0,1]`, constant outside.
    Smoothstep {
        from: f64,
        to: f64,
    },
    /// `mean + Σ cosₖ cos(2πkt) + sinₖ sin(2πkt)`, `k ≥ 1`.
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Linear interpolation through `(knots[i], values[i])`, constant
    /// beyond the first and last knot.
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for TimeProfile {
    fn default() -> Self {
        TimeProfile::Constant { value: 1.0 }
    }
}

pub(crate) fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            TimeProfile::Smoothstep { from, to } => from + (to - from) * smoothstep(t),
            TimeProfile::Fourier { mean, cos, sin } => {
                let c: f64 = cos
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * (TAU * (k + 1) as f64 * t).cos())
                    .sum();
                let s: f64 = sin
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b * (TAU * (k + 1) as f64 * t).sin())
                    .sum();
                mean + c + s
            }
            TimeProfile::PiecewiseLinear { knots, values } => {
                if t <= knots[0] {
                    return values[0];
                }
                for w in 0..knots.len() - 1 {
                    if t <= knots[w + 1] {
                        let s = (t - knots[w]) / (knots[w + 1] - knots[w]);
                        return values[w] + s * (values[w + 1] - values[w]);
                    }
                }
                values[values.len() - 1]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeProfile::Constant { .. } => true,
            TimeProfile::Polynomial { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
            TimeProfile::Smoothstep { from, to } => from == to,
            TimeProfile::Fourier { cos, sin, .. } => cos.iter().chain(sin).all(|&c| c == 0.0),
            TimeProfile::PiecewiseLinear { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn validate(&self) -> Result<(), SystemError> {
        let bad = |msg: &str| Err(SystemError::Config(msg.to_string()));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            TimeProfile::Constant { value } if !value.is_finite() => bad("constant profile is not finite"),
            TimeProfile::Polynomial { coefficients } if !finite(coefficients) => {
                bad("polynomial profile has non-finite coefficients")
            }
            TimeProfile::Smoothstep { from, to } if !(from.is_finite() && to.is_finite()) => {
                bad("smoothstep profile is not finite")
            }
            TimeProfile::Fourier { mean, cos, sin } if !(mean.is_finite() && finite(cos) && finite(sin)) => {
                bad("fourier profile is not finite")
            }
            TimeProfile::PiecewiseLinear { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    bad("piecewise_linear profile needs matching, non-empty knots and values")
                } else if knots.windows(2).any(|w| !(w[0] < w[1])) {
                    bad("piecewise_linear knots must increase strictly")
                } else if !(finite(knots) && finite(values)) {
                    bad("piecewise_linear profile is not finite")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One summand of a [`TermSystem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    /// `amplitude · cos(2π⟨k, x⟩ + phase)`, with `k` indexed like `x`.
    Fourier {
        amplitude: f64,
        wavevector: Vec<i64>,
        #[serde(default)]
        phase: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<TimeProfile>,
    },
    Constant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<TimeProfile>,
    },
    /// `coefficient · Π xᵢ^eᵢ`; charts only.
    Monomial {
        coefficient: f64,
        exponents: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<TimeProfile>,
    },
}

impl Term {
    fn profile(&self) -> Option<&TimeProfile> {
        match self {
            Term::Fourier { profile, .. } | Term::Constant { profile, .. } | Term::Monomial { profile, .. } => {
                profile.as_ref()
            }
        }
    }

    /// Spatial mean over the unit cube, per unit profile.
    fn torus_mean(&self) -> f64 {
        match self {
            Term::Fourier {
                amplitude,
                wavevector,
                phase,
                ..
            } if wavevector.iter().all(|&k| k == 0) => amplitude * phase.cos(),
            Term::Fourier { .. } => 0.0,
            Term::Constant { value, .. } => *value,
            Term::Monomial { .. } => f64::NAN,
        }
    }
}

/// Top-level Hamiltonian configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub domain: Domain,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub time_profile: TimeProfile,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Clone, Debug)]
enum Compiled {
    Fourier { amplitude: f64, k: Vec<f64>, phase: f64 },
    Constant(f64),
    Monomial { coefficient: f64, exponents: Vec<u32> },
}

/// A validated [`SystemConfig`] ready for evaluation.
#[derive(Clone, Debug)]
pub struct TermSystem {
    config: SystemConfig,
    compiled: Vec<(Compiled, Option<TimeProfile>)>,
    autonomous: bool,
}

impl TermSystem {
    pub fn new(config: SystemConfig) -> Result<Self, SystemError> {
        let dim = config.domain.dim();
        if config.domain.n() == 0 {
            return Err(SystemError::Config("domain dimension n must be at least 1".into()));
        }
        config.time_profile.validate()?;
        let mut compiled = Vec::with_capacity(config.terms.len());
        for (i, term) in config.terms.iter().enumerate() {
            if let Some(p) = term.profile() {
                p.validate()?;
            }
            let c = match term {
                Term::Fourier {
                    amplitude,
                    wavevector,
                    phase,
                    ..
                } => {
                    if wavevector.len() != dim {
                        return Err(SystemError::Config(format!(
                            "term {i}: wavevector has {} entries, expected {dim}",
                            wavevector.len()
                        )));
                    }
                    if !amplitude.is_finite() || !phase.is_finite() {
                        return Err(SystemError::Config(format!("term {i}: non-finite amplitude or phase")));
                    }
                    Compiled::Fourier {
                        amplitude: *amplitude,
                        k: wavevector.iter().map(|&k| TAU * k as f64).collect(),
                        phase: *phase,
                    }
                }
                Term::Constant { value, .. } => {
                    if !value.is_finite() {
                        return Err(SystemError::Config(format!("term {i}: non-finite constant")));
                    }
                    Compiled::Constant(*value)
                }
                Term::Monomial {
                    coefficient,
                    exponents,
                    ..
                } => {
                    if matches!(config.domain, Domain::Torus { .. }) {
                        return Err(SystemError::Config(format!(
                            "term {i}: monomials are not periodic and cannot live on a torus"
                        )));
                    }
                    if exponents.len() != dim {
                        return Err(SystemError::Config(format!(
                            "term {i}: exponents have {} entries, expected {dim}",
                            exponents.len()
                        )));
                    }
                    if !coefficient.is_finite() {
                        return Err(SystemError::Config(format!("term {i}: non-finite coefficient")));
                    }
                    Compiled::Monomial {
                        coefficient: *coefficient,
                        exponents: exponents.clone(),
                    }
                }
            };
            compiled.push((c, term.profile().cloned()));
        }
        let autonomous = config.time_profile.is_constant()
            && config.terms.iter().all(|t| t.profile().is_none_or(TimeProfile::is_constant));

        let system = Self {
            config,
            compiled,
            autonomous,
        };
        if system.config.periodic {
            let profiles = std::iter::once(&system.config.time_profile).chain(system.config.terms.iter().filter_map(Term::profile));
            for p in profiles {
                if (p.value(0.0) - p.value(1.0)).abs() > 1e-12 {
                    return Err(SystemError::Config(format!(
                        "system is marked periodic but a time profile has c(0) = {} and c(1) = {}",
                        p.value(0.0),
                        p.value(1.0)
                    )));
                }
            }
        }
        if system.config.normalized {
            if !matches!(system.config.domain, Domain::Torus { .. }) {
                return Err(SystemError::Config("only torus systems can be normalized".into()));
            }
            for k in 0..=64 {
                let t = k as f64 / 64.0;
                let mean = system.torus_mean(t);
                if mean.abs() > 1e-12 {
                    return Err(SystemError::Config(format!(
                        "system is marked normalized but its spatial mean at t = {t} is {mean}"
                    )));
                }
            }
        }
        Ok(system)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// Exact spatial mean over the unit cube at time `t` (torus only).
    pub fn torus_mean(&self, t: f64) -> f64 {
        let g = self.config.time_profile.value(t);
        g * self
            .config
            .terms
            .iter()
            .map(|term| term.torus_mean() * term.profile().map_or(1.0, |p| p.value(t)))
            .sum::<f64>()
    }

    fn weight(&self, profile: &Option<TimeProfile>, t: f64) -> f64 {
        profile.as_ref().map_or(1.0, |p| p.value(t))
    }
}

fn phase_of(k: &[f64], x: &[f64], phase: f64) -> f64 {
    k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase
}

/// `Π xⱼ^eⱼ` differentiated once with respect to each index in `wrt`.
fn monomial(exponents: &[u32], x: &[f64], wrt: &[usize]) -> f64 {
    let mut prod = 1.0;
    for (j, (&e, &xj)) in exponents.iter().zip(x).enumerate() {
        let order = wrt.iter().filter(|&&w| w == j).count() as u32;
        if order > e {
            return 0.0;
        }
        let falling: f64 = (0..order).map(|i| (e - i) as f64).product();
        prod *= falling * xj.powi((e - order) as i32);
    }
    prod
}

impl Hamiltonian for TermSystem {
    fn domain(&self) -> Domain {
        self.config.domain
    }

    fn value(&self, t: f64, x: &[f64]) -> f64 {
        let g = self.config.time_profile.value(t);
        let mut sum = 0.0;
        for (c, p) in &self.compiled {
            let w = self.weight(p, t);
            sum += w * match c {
                Compiled::Fourier { amplitude, k, phase } => amplitude * phase_of(k, x, *phase).cos(),
                Compiled::Constant(v) => *v,
                Compiled::Monomial { coefficient, exponents } => coefficient * monomial(exponents, x, &[]),
            };
        }
        g * sum
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let g = self.config.time_profile.value(t);
        for (c, p) in &self.compiled {
            let w = g * self.weight(p, t);
            match c {
                Compiled::Fourier { amplitude, k, phase } => {
                    let s = -w * amplitude * phase_of(k, x, *phase).sin();
                    for (o, kj) in out.iter_mut().zip(k) {
                        *o += s * kj;
                    }
                }
                Compiled::Constant(_) => {}
                Compiled::Monomial { coefficient, exponents } => {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += w * coefficient * monomial(exponents, x, &[j]);
                    }
                }
            }
        }
    }

    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        out.fill(0.0);
        let g = self.config.time_profile.value(t);
        for (c, p) in &self.compiled {
            let w = g * self.weight(p, t);
            match c {
                Compiled::Fourier { amplitude, k, phase } => {
                    let s = -w * amplitude * phase_of(k, x, *phase).cos();
                    for i in 0..d {
                        if k[i] == 0.0 {
                            continue;
                        }
                        for j in 0..d {
                            out[i * d + j] += s * k[i] * k[j];
                        }
                    }
                }
                Compiled::Constant(_) => {}
                Compiled::Monomial { coefficient, exponents } => {
                    for i in 0..d {
                        for j in 0..d {
                            out[i * d + j] += w * coefficient * monomial(exponents, x, &[i, j]);
                        }
                    }
                }
            }
        }
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("configs serialize")
    }

    fn as_terms(&self) -> Option<&TermSystem> {
        Some(self)
    }
}
