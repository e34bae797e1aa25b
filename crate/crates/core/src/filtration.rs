//! Real-valued filtrations on a [`GradedComplex`], chain values, spectral
//! values and the two essentiality notions.
//!
//! Everything reduces to one trick: lay out a degree so that bit order agrees
//! with filtration order, then top-reduce against an echelon basis of the
//! boundaries. Distinct pivots mean the top bit of `r + Σβ` is at least the
//! top bit of the reduced `r`, so the reduced row has the smallest chain
//! value in its coset.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::complex::{Chain, Classification, ComplexError, GradedComplex, Layout};
use crate::gf2::{BitRow, Echelon, TaggedRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiltrationError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("no filtration value for basis id `{0}`")]
    Missing(String),
    #[error("filtration names `{0}`, which is not a basis id")]
    UnknownId(String),
    #[error("filtration value of `{0}` is not finite")]
    NonFinite(String),
    #[error("`{0}` is not a basis id")]
    UnknownElement(String),
    #[error("class must be a nontrivial cycle, got {0:?}")]
    NotAClass(Classification),
    #[error("filtration is not compatible with the boundary ({} violation(s))", .0.len())]
    Incompatible(Vec<FiltrationViolation>),
}

/// `element` has `face` in its boundary but not a strictly larger value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationViolation {
    pub element: String,
    pub face: String,
    pub element_value: f64,
    pub face_value: f64,
}

/// Value of a chain: the maximum over its support, or `Bottom` for the
/// zero chain. `Bottom` sorts below every real number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainValue {
    Bottom,
    Value(f64),
}

impl ChainValue {
    pub fn value(self) -> Option<f64> {
        match self {
            ChainValue::Bottom => None,
            ChainValue::Value(v) => Some(v),
        }
    }
}

impl PartialOrd for ChainValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ChainValue::Bottom, ChainValue::Bottom) => Some(Ordering::Equal),
            (ChainValue::Bottom, _) => Some(Ordering::Less),
            (_, ChainValue::Bottom) => Some(Ordering::Greater),
            (ChainValue::Value(a), ChainValue::Value(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ChainValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainValue::Bottom => f.write_str("bottom"),
            ChainValue::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ChainValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ChainValue::Bottom => serializer.serialize_str("bottom"),
            ChainValue::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ChainValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(ChainValue::Value(v)),
            Raw::Word(w) if w == "bottom" => Ok(ChainValue::Bottom),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a number or \"bottom\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationMap {
    values: BTreeMap<String, f64>,
}

impl FiltrationMap {
    pub fn new<I, S>(values: I) -> Result<Self, FiltrationError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let values: BTreeMap<String, f64> = values.into_iter().map(|(k, v)| (k.into(), v)).collect();
        if let Some((id, _)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(FiltrationError::NonFinite(id.clone()));
        }
        Ok(Self { values })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    fn value(&self, id: &str) -> Result<f64, FiltrationError> {
        self.get(id).ok_or_else(|| FiltrationError::Missing(id.to_string()))
    }

    /// Structural check: exactly one finite value per basis id.
    pub fn check_covers(&self, complex: &GradedComplex) -> Result<(), FiltrationError> {
        for b in complex.basis() {
            let v = self.value(&b.id)?;
            if !v.is_finite() {
                return Err(FiltrationError::NonFinite(b.id.clone()));
            }
        }
        if let Some(extra) = self.values.keys().find(|k| !complex.contains(k)) {
            return Err(FiltrationError::UnknownId(extra.clone()));
        }
        Ok(())
    }

    pub fn chain_value(&self, chain: &Chain) -> Result<ChainValue, FiltrationError> {
        let mut best = ChainValue::Bottom;
        for id in chain.ids() {
            let v = ChainValue::Value(self.value(id)?);
            if v > best {
                best = v;
            }
        }
        Ok(best)
    }
}

pub fn chain_value(chain: &Chain, filtration: &FiltrationMap) -> Result<ChainValue, FiltrationError> {
    filtration.chain_value(chain)
}

/// Incidences `b' ∈ ∂b` with `𝒱(b) ≤ 𝒱(b')`.
pub fn validate_filtration(
    complex: &GradedComplex,
    filtration: &FiltrationMap,
) -> Result<Vec<FiltrationViolation>, FiltrationError> {
    filtration.check_covers(complex)?;
    let mut out = Vec::new();
    for b in complex.basis() {
        let vb = filtration.value(&b.id)?;
        for face in complex.faces(&b.id).unwrap_or_default() {
            let vf = filtration.value(face)?;
            if vb <= vf {
                out.push(FiltrationViolation {
                    element: b.id.clone(),
                    face: face.to_string(),
                    element_value: vb,
                    face_value: vf,
                });
            }
        }
    }
    Ok(out)
}

/// Degree-`k` layout with bit order matching filtration order (ties by basis
/// index). With `top = Some(e)`, `e` is forced onto the highest bit.
fn filtered_layout(
    complex: &GradedComplex,
    filtration: &FiltrationMap,
    degree: i64,
    top: Option<usize>,
) -> Layout {
    let mut elements: Vec<usize> = complex
        .elements_of_degree(degree)
        .into_iter()
        .filter(|&e| Some(e) != top)
        .collect();
    let value = |e: usize| filtration.values[&complex.element(e).id];
    elements.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
    elements.extend(top);
    Layout::new(elements)
}

fn row_value(complex: &GradedComplex, filtration: &FiltrationMap, layout: &Layout, row: &BitRow) -> ChainValue {
    match row.top() {
        None => ChainValue::Bottom,
        Some(p) => ChainValue::Value(filtration.values[&complex.element(layout.elements[p]).id]),
    }
}

/// A nontrivial cycle plus its degree, after checking the preconditions
/// shared by every class-valued operation.
fn require_class(complex: &GradedComplex, class: &Chain) -> Result<i64, FiltrationError> {
    match complex.classify_chain(class)? {
        Classification::NontrivialCycle => Ok(complex
            .chain_degree(class)?
            .expect("nontrivial cycles are nonzero")),
        other => Err(FiltrationError::NotAClass(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    /// A representative attaining the minimum.
    pub representative: Chain,
}

/// Minimum chain value over `class + im ∂`.
pub fn spectral_value(
    complex: &GradedComplex,
    filtration: &FiltrationMap,
    class: &Chain,
) -> Result<SpectralValue, FiltrationError> {
    filtration.check_covers(complex)?;
    let degree = require_class(complex, class)?;
    let layout = filtered_layout(complex, filtration, degree, None);
    let (source, ech) = complex.boundary_echelon(degree, &layout);
    let z = TaggedRow::new(layout.row(complex.chain_indices(class)?), BitRow::zeros(source.width()));
    let reduced = ech.reduce(z);
    let value = row_value(complex, filtration, &layout, &reduced.value)
        .value()
        .expect("a nontrivial class has no zero representative");
    Ok(SpectralValue {
        value,
        representative: complex.chain_from_row(&layout, &reduced.value),
    })
}

/// Whether `element` appears in every representative of `class`.
///
/// `b ∈ z + β` for all boundaries `β` exactly when `⟨b, z⟩ = 1` and
/// `⟨b, β⟩ = 0` on the whole boundary space. With `b` placed on the top bit,
/// the second condition says no echelon row of the boundaries has pivot `b`.
pub fn is_essential(complex: &GradedComplex, element: &str, class: &Chain) -> Result<bool, FiltrationError> {
    let e = complex
        .index_of(element)
        .map_err(|_| FiltrationError::UnknownElement(element.to_string()))?;
    let degree = require_class(complex, class)?;
    if complex.element(e).degree != degree || !class.contains(element) {
        return Ok(false);
    }
    let mut elements: Vec<usize> = complex
        .elements_of_degree(degree)
        .into_iter()
        .filter(|&x| x != e)
        .collect();
    elements.push(e);
    let layout = Layout::new(elements);
    let (_, ech) = complex.boundary_echelon(degree, &layout);
    Ok(ech.row_with_pivot(layout.width() - 1).is_none())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeCondition {
    pub holds: bool,
    /// Representative `b + v` with the smallest value of `v`, if any
    /// representative contains `b`.
    pub witness: Option<Chain>,
    pub tail_value: Option<ChainValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub holds: bool,
    /// Chain `d` with `⟨b, ∂d⟩ = 1` minimising the value of `∂d − b`.
    pub extremal: Option<Chain>,
    pub residual: Option<Chain>,
    pub residual_value: Option<ChainValue>,
    /// Set to `extremal` when the condition fails.
    pub counterexample: Option<Chain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialityReport {
    pub element: String,
    pub element_value: f64,
    pub class: Chain,
    pub condition1: RepresentativeCondition,
    pub condition2: BoundaryCondition,
    pub verdict: bool,
}

/// Checks both conditions of essentiality with respect to `filtration`.
///
/// Place `b` on the top bit and the rest by value. In an echelon basis of
/// the boundaries at most one row `β₀` contains `b` (it must have pivot `b`);
/// the other rows span `B' = {β : ⟨b,β⟩ = 0}`. Then
///
/// * the boundaries meeting `b` form `β₀ + B'`, so condition 2 asks for the
///   least value of `β₀ + b + B'`;
/// * the representatives containing `b` form `z + B'` or `z + β₀ + B'`
///   (depending on `⟨b,z⟩`), so condition 1 asks for the least value of
///   that set plus `b`.
///
/// Both minima come from top-reduction against `B'`.
pub fn is_essential_filtered(
    complex: &GradedComplex,
    filtration: &FiltrationMap,
    element: &str,
    class: &Chain,
) -> Result<EssentialityReport, FiltrationError> {
    let e = complex
        .index_of(element)
        .map_err(|_| FiltrationError::UnknownElement(element.to_string()))?;
    filtration.check_covers(complex)?;
    let violations = validate_filtration(complex, filtration)?;
    if !violations.is_empty() {
        return Err(FiltrationError::Incompatible(violations));
    }
    let degree = require_class(complex, class)?;
    let element_value = filtration.value(element)?;
    let b = ChainValue::Value(element_value);

    if complex.element(e).degree != degree {
        // b cannot occur in any representative, nor in any boundary of this degree.
        return Ok(EssentialityReport {
            element: element.to_string(),
            element_value,
            class: class.clone(),
            condition1: RepresentativeCondition {
                holds: false,
                witness: None,
                tail_value: None,
            },
            condition2: BoundaryCondition {
                holds: true,
                extremal: None,
                residual: None,
                residual_value: None,
                counterexample: None,
            },
            verdict: false,
        });
    }

    let layout = filtered_layout(complex, filtration, degree, Some(e));
    let top = layout.width() - 1;
    let (source, full) = complex.boundary_echelon(degree, &layout);
    let beta0 = full.row_with_pivot(top).cloned();
    let mut rest = Echelon::new(layout.width());
    for row in full.rows().iter().filter(|r| r.value.top() != Some(top)) {
        rest.insert(row.clone());
    }
    let b_row = BitRow::from_positions(layout.width(), [top]);

    let condition2 = match &beta0 {
        None => BoundaryCondition {
            holds: true,
            extremal: None,
            residual: None,
            residual_value: None,
            counterexample: None,
        },
        Some(beta0) => {
            let mut start = beta0.clone();
            start.value.xor_assign(&b_row);
            let r = rest.reduce(start);
            let value = row_value(complex, filtration, &layout, &r.value);
            let holds = value >= b;
            let d = complex.chain_from_row(&source, &r.tag);
            BoundaryCondition {
                holds,
                extremal: Some(d.clone()),
                residual: Some(complex.chain_from_row(&layout, &r.value)),
                residual_value: Some(value),
                counterexample: (!holds).then_some(d),
            }
        }
    };

    let z = layout.row(complex.chain_indices(class)?);
    let start = if z.get(top) {
        Some(z)
    } else {
        beta0.as_ref().map(|beta0| {
            let mut s = z.clone();
            s.xor_assign(&beta0.value);
            s
        })
    };
    let condition1 = match start {
        None => RepresentativeCondition {
            holds: false,
            witness: None,
            tail_value: None,
        },
        Some(mut s) => {
            s.xor_assign(&b_row);
            let v = rest.reduce(TaggedRow::new(s, BitRow::zeros(source.width())));
            let tail = row_value(complex, filtration, &layout, &v.value);
            let mut witness = v.value.clone();
            witness.xor_assign(&b_row);
            RepresentativeCondition {
                holds: tail < b,
                witness: Some(complex.chain_from_row(&layout, &witness)),
                tail_value: Some(tail),
            }
        }
    };

    let verdict = condition1.holds && condition2.holds;
    Ok(EssentialityReport {
        element: element.to_string(),
        element_value,
        class: class.clone(),
        condition1,
        condition2,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityVerdict {
    pub element: String,
    pub element_value: f64,
    pub certified: bool,
    /// `"condition1"`, `"condition2"`, both joined by `+`, or
    /// `"spectral-mismatch"` when the recomputed minimum disagrees.
    pub failing_condition: Option<String>,
    pub spectral: Option<SpectralValue>,
    pub agrees: Option<bool>,
    pub essentiality: EssentialityReport,
}

/// Issues a certificate that every representative of `class` has value at
/// least `𝒱(element)`, re-deriving the minimum independently.
pub fn minimality_verdict(
    complex: &GradedComplex,
    filtration: &FiltrationMap,
    element: &str,
    class: &Chain,
) -> Result<MinimalityVerdict, FiltrationError> {
    let report = is_essential_filtered(complex, filtration, element, class)?;
    if !report.verdict {
        let failing: Vec<&str> = [
            (!report.condition1.holds).then_some("condition1"),
            (!report.condition2.holds).then_some("condition2"),
        ]
        .into_iter()
        .flatten()
        .collect();
        return Ok(MinimalityVerdict {
            element: element.to_string(),
            element_value: report.element_value,
            certified: false,
            failing_condition: Some(failing.join("+")),
            spectral: None,
            agrees: None,
            essentiality: report,
        });
    }
    let spectral = spectral_value(complex, filtration, class)?;
    let agrees = spectral.value == report.element_value;
    Ok(MinimalityVerdict {
        element: element.to_string(),
        element_value: report.element_value,
        certified: agrees,
        failing_condition: (!agrees).then(|| "spectral-mismatch".to_string()),
        spectral: Some(spectral),
        agrees: Some(agrees),
        essentiality: report,
    })
}
