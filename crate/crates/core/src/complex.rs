//! Finite graded chain complexes over GF(2).
//!
//! A complex is a list of named basis elements with integer degrees and, for
//! each element, the set of elements in its boundary. All linear algebra is
//! exact and happens one degree at a time on [`BitRow`]s.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::gf2::{BitRow, Echelon, TaggedRow};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub id: String,
    pub degree: i64,
}

/// Structural problems: the input does not describe a complex at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("duplicate basis id `{0}`")]
    DuplicateId(String),
    #[error("unknown basis id `{id}` in {context}")]
    UnknownId { id: String, context: String },
    #[error("boundary of `{id}` lists `{entry}` more than once")]
    RepeatedBoundaryEntry { id: String, entry: String },
    #[error("chain mixes degrees: `{first}` has degree {first_degree}, `{second}` has degree {second_degree}")]
    MixedDegrees {
        first: String,
        first_degree: i64,
        second: String,
        second_degree: i64,
    },
    #[error("complex fails validation ({} violation(s)); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

/// Mathematical defects found by [`GradedComplex::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    #[error("`{id}` (degree {degree}) has `{face}` of degree {face_degree} in its boundary")]
    Grading {
        id: String,
        degree: i64,
        face: String,
        face_degree: i64,
    },
    #[error("boundary of the boundary of `{id}` is {residue:?}, not zero")]
    BoundarySquared { id: String, residue: Vec<String> },
}

/// Element of the chain group: a finite set of basis ids (GF(2) coefficients).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chain(BTreeSet<String>);

impl Chain {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Sums the given ids mod 2, so an id listed twice cancels.
    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for id in ids {
            let id = id.into();
            if !set.remove(&id) {
                set.insert(id);
            }
        }
        Self(set)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn add(&self, other: &Chain) -> Chain {
        Chain(self.0.symmetric_difference(&other.0).cloned().collect())
    }
}

impl<S: Into<String>> FromIterator<S> for Chain {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Chain::from_ids(iter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    NotCycle { boundary: Chain },
    Boundary { witness: Chain },
    NontrivialCycle,
}

/// Basis elements of one degree laid out on bit positions.
///
/// `elements[pos]` is the basis index stored at bit `pos`.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub elements: Vec<usize>,
    position: HashMap<usize, usize>,
}

impl Layout {
    pub fn new(elements: Vec<usize>) -> Self {
        let position = elements.iter().enumerate().map(|(p, &e)| (e, p)).collect();
        Self { elements, position }
    }

    pub fn width(&self) -> usize {
        self.elements.len()
    }

    pub fn row<I: IntoIterator<Item = usize>>(&self, elements: I) -> BitRow {
        BitRow::from_positions(
            self.width(),
            elements.into_iter().map(|e| self.position[&e]),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(try_from = "ComplexFile")]
pub struct GradedComplex {
    basis: Vec<BasisElement>,
    index: HashMap<String, usize>,
    boundary: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexFile {
    basis: Vec<BasisElement>,
    #[serde(default)]
    boundary: BTreeMap<String, Vec<String>>,
}

impl TryFrom<ComplexFile> for GradedComplex {
    type Error = ComplexError;

    fn try_from(file: ComplexFile) -> Result<Self, Self::Error> {
        GradedComplex::new(file.basis, file.boundary)
    }
}

impl Serialize for GradedComplex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct BoundaryMap<'a>(&'a GradedComplex);
        impl Serialize for BoundaryMap<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let c = self.0;
                let entries = c.boundary.iter().enumerate().filter(|(_, b)| !b.is_empty());
                let mut map = serializer.serialize_map(None)?;
                for (i, faces) in entries {
                    let ids: Vec<&str> = faces.iter().map(|&f| c.basis[f].id.as_str()).collect();
                    map.serialize_entry(&c.basis[i].id, &ids)?;
                }
                map.end()
            }
        }

        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("basis", &self.basis)?;
        map.serialize_entry("boundary", &BoundaryMap(self))?;
        map.end()
    }
}

impl GradedComplex {
    /// Builds a complex, rejecting structural problems. Grading and
    /// `∂∘∂ = 0` are *not* checked here; see [`GradedComplex::validate`].
    pub fn new<I, K, V>(basis: Vec<BasisElement>, boundary: I) -> Result<Self, ComplexError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let mut index = HashMap::with_capacity(basis.len());
        for (i, b) in basis.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(ComplexError::DuplicateId(b.id.clone()));
            }
        }
        let mut faces = vec![Vec::new(); basis.len()];
        for (key, entries) in boundary {
            let key = key.into();
            let &i = index.get(&key).ok_or_else(|| ComplexError::UnknownId {
                id: key.clone(),
                context: "boundary keys".into(),
            })?;
            for entry in entries {
                let entry = entry.into();
                let &j = index.get(&entry).ok_or_else(|| ComplexError::UnknownId {
                    id: entry.clone(),
                    context: format!("boundary of `{key}`"),
                })?;
                if faces[i].contains(&j) {
                    return Err(ComplexError::RepeatedBoundaryEntry { id: key, entry });
                }
                faces[i].push(j);
            }
        }
        Ok(Self {
            basis,
            index,
            boundary: faces,
        })
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn degree(&self, id: &str) -> Option<i64> {
        self.index.get(id).map(|&i| self.basis[i].degree)
    }

    /// Boundary of a single basis element, in the order it was given.
    pub fn faces(&self, id: &str) -> Option<Vec<&str>> {
        self.index.get(id).map(|&i| {
            self.boundary[i]
                .iter()
                .map(|&f| self.basis[f].id.as_str())
                .collect()
        })
    }

    pub(crate) fn index_of(&self, id: &str) -> Result<usize, ComplexError> {
        self.index.get(id).copied().ok_or_else(|| ComplexError::UnknownId {
            id: id.to_string(),
            context: "chain".into(),
        })
    }

    pub(crate) fn element(&self, i: usize) -> &BasisElement {
        &self.basis[i]
    }

    /// Degrees that carry at least one basis element.
    pub fn degrees(&self) -> BTreeSet<i64> {
        self.basis.iter().map(|b| b.degree).collect()
    }

    /// Basis indices of one degree, in basis order.
    pub(crate) fn elements_of_degree(&self, degree: i64) -> Vec<usize> {
        (0..self.basis.len())
            .filter(|&i| self.basis[i].degree == degree)
            .collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (i, elem) in self.basis.iter().enumerate() {
            for &f in &self.boundary[i] {
                let face = &self.basis[f];
                if face.degree != elem.degree - 1 {
                    violations.push(Violation::Grading {
                        id: elem.id.clone(),
                        degree: elem.degree,
                        face: face.id.clone(),
                        face_degree: face.degree,
                    });
                }
            }
            let mut residue = BTreeSet::new();
            for &f in &self.boundary[i] {
                for &g in &self.boundary[f] {
                    if !residue.remove(&g) {
                        residue.insert(g);
                    }
                }
            }
            if !residue.is_empty() {
                violations.push(Violation::BoundarySquared {
                    id: elem.id.clone(),
                    residue: residue.into_iter().map(|g| self.basis[g].id.clone()).collect(),
                });
            }
        }
        violations
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), ComplexError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ComplexError::Invalid(violations))
        }
    }

    /// Degree shared by every element of `chain`; `None` for the zero chain.
    pub fn chain_degree(&self, chain: &Chain) -> Result<Option<i64>, ComplexError> {
        let mut found: Option<(&str, i64)> = None;
        for id in chain.ids() {
            let d = self.basis[self.index_of(id)?].degree;
            match found {
                None => found = Some((id, d)),
                Some((first, fd)) if fd != d => {
                    return Err(ComplexError::MixedDegrees {
                        first: first.to_string(),
                        first_degree: fd,
                        second: id.to_string(),
                        second_degree: d,
                    })
                }
                Some(_) => {}
            }
        }
        Ok(found.map(|(_, d)| d))
    }

    pub fn boundary_of(&self, chain: &Chain) -> Result<Chain, ComplexError> {
        let mut acc = BTreeSet::new();
        for id in chain.ids() {
            for &f in &self.boundary[self.index_of(id)?] {
                if !acc.remove(&f) {
                    acc.insert(f);
                }
            }
        }
        Ok(Chain(acc.into_iter().map(|f| self.basis[f].id.clone()).collect()))
    }

    pub(crate) fn chain_indices(&self, chain: &Chain) -> Result<Vec<usize>, ComplexError> {
        chain.ids().map(|id| self.index_of(id)).collect()
    }

    pub(crate) fn chain_from_indices<I: IntoIterator<Item = usize>>(&self, indices: I) -> Chain {
        Chain::from_ids(indices.into_iter().map(|i| self.basis[i].id.clone()))
    }

    pub(crate) fn chain_from_row(&self, layout: &Layout, row: &BitRow) -> Chain {
        self.chain_from_indices(row.ones().map(|p| layout.elements[p]))
    }

    /// Rows `∂e` for every `e` of degree `degree + 1`, written in `target`
    /// coordinates and tagged by `e`'s position in `source`.
    pub(crate) fn boundary_rows(&self, source: &Layout, target: &Layout) -> Vec<TaggedRow> {
        source
            .elements
            .iter()
            .enumerate()
            .map(|(pos, &e)| {
                TaggedRow::new(
                    target.row(self.boundary[e].iter().copied()),
                    BitRow::from_positions(source.width(), [pos]),
                )
            })
            .collect()
    }

    /// Echelon basis of the boundaries in `degree`, using `target` as the
    /// coordinate layout of that degree.
    pub(crate) fn boundary_echelon(&self, degree: i64, target: &Layout) -> (Layout, Echelon) {
        let source = Layout::new(self.elements_of_degree(degree + 1));
        let mut echelon = Echelon::new(target.width());
        for row in self.boundary_rows(&source, target) {
            echelon.insert(row);
        }
        (source, echelon)
    }

    /// `dim ker ∂_k − dim im ∂_{k+1}` for every populated degree.
    pub fn homology_ranks(&self) -> Result<BTreeMap<i64, usize>, ComplexError> {
        self.ensure_valid()?;
        let degrees = self.degrees();
        let mut boundary_rank = BTreeMap::new();
        for &k in &degrees {
            // rank of ∂_k : C_k → C_{k-1}
            let target = Layout::new(self.elements_of_degree(k - 1));
            let (_, ech) = self.boundary_echelon(k - 1, &target);
            boundary_rank.insert(k, ech.rank());
        }
        Ok(degrees
            .iter()
            .map(|&k| {
                let n = self.elements_of_degree(k).len();
                let out = boundary_rank[&k];
                let incoming = boundary_rank.get(&(k + 1)).copied().unwrap_or(0);
                (k, n - out - incoming)
            })
            .collect())
    }

    /// Kernel of `∂_k`, one vector per dependency found in basis order.
    fn cycle_basis(&self, degree: i64, layout: &Layout) -> Vec<BitRow> {
        let target = Layout::new(self.elements_of_degree(degree - 1));
        let mut ech = Echelon::new(target.width());
        let mut cycles = Vec::new();
        for row in self.boundary_rows(layout, &target) {
            if let Some(dep) = ech.insert(row) {
                cycles.push(dep.tag);
            }
        }
        cycles
    }

    /// Cycles whose classes form a basis of `H_degree`, deterministic in the
    /// basis order. Empty when the homology vanishes.
    pub fn homology_basis(&self, degree: i64) -> Result<Vec<Chain>, ComplexError> {
        self.ensure_valid()?;
        let layout = Layout::new(self.elements_of_degree(degree));
        let (source, mut ech) = self.boundary_echelon(degree, &layout);
        let mut reps = Vec::new();
        for z in self.cycle_basis(degree, &layout) {
            let tag = BitRow::zeros(source.width());
            if ech.insert(TaggedRow::new(z, tag)).is_none() {
                let stored = ech.rows().last().expect("row was just inserted");
                reps.push(self.chain_from_row(&layout, &stored.value));
            }
        }
        Ok(reps)
    }

    pub fn representative(&self, degree: i64, class_index: usize) -> Result<Option<Chain>, ComplexError> {
        Ok(self.homology_basis(degree)?.into_iter().nth(class_index))
    }

    /// Solves `∂d = chain` over GF(2).
    pub fn classify_chain(&self, chain: &Chain) -> Result<Classification, ComplexError> {
        self.ensure_valid()?;
        let Some(degree) = self.chain_degree(chain)? else {
            return Ok(Classification::Boundary {
                witness: Chain::zero(),
            });
        };
        let boundary = self.boundary_of(chain)?;
        if !boundary.is_zero() {
            return Ok(Classification::NotCycle { boundary });
        }
        let layout = Layout::new(self.elements_of_degree(degree));
        let (source, ech) = self.boundary_echelon(degree, &layout);
        let target = TaggedRow::new(
            layout.row(self.chain_indices(chain)?),
            BitRow::zeros(source.width()),
        );
        let reduced = ech.reduce(target);
        if reduced.value.is_zero() {
            Ok(Classification::Boundary {
                witness: self.chain_from_row(&source, &reduced.tag),
            })
        } else {
            Ok(Classification::NontrivialCycle)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn complex(basis: &[(&str, i64)], boundary: &[(&str, &[&str])]) -> GradedComplex {
        GradedComplex::new(
            basis
                .iter()
                .map(|&(id, degree)| BasisElement {
                    id: id.into(),
                    degree,
                })
                .collect(),
            boundary
                .iter()
                .map(|&(k, v)| (k, v.iter().copied().collect::<Vec<_>>())),
        )
        .unwrap()
    }

    fn edge() -> GradedComplex {
        complex(&[("a", 1), ("b", 0), ("c", 0)], &[("a", &["b", "c"])])
    }

    #[test]
    fn cycle_of_boundaries_is_valid() {
        assert!(edge().validate().is_empty());
    }

    #[test]
    fn boundary_squared_violation_names_the_element() {
        let c = complex(&[("a", 2), ("b", 1), ("c", 0)], &[("a", &["b"]), ("b", &["c"])]);
        let v = c.validate();
        assert_eq!(
            v,
            vec![Violation::BoundarySquared {
                id: "a".into(),
                residue: vec!["c".into()]
            }]
        );
    }

    #[test]
    fn grading_violation_is_reported() {
        let c = complex(&[("a", 2), ("b", 0)], &[("a", &["b"])]);
        assert!(matches!(c.validate()[0], Violation::Grading { .. }));
        assert!(matches!(c.homology_ranks(), Err(ComplexError::Invalid(_))));
    }

    #[test]
    fn duplicate_ids_are_structural() {
        let err = GradedComplex::new(
            vec![
                BasisElement { id: "a".into(), degree: 0 },
                BasisElement { id: "a".into(), degree: 1 },
            ],
            Vec::<(String, Vec<String>)>::new(),
        )
        .unwrap_err();
        assert_eq!(err, ComplexError::DuplicateId("a".into()));
    }

    #[test]
    fn unknown_boundary_entry_is_structural() {
        let err = GradedComplex::new(
            vec![BasisElement { id: "a".into(), degree: 1 }],
            vec![("a", vec!["zz"])],
        )
        .unwrap_err();
        assert!(matches!(err, ComplexError::UnknownId { .. }));
    }

    #[test]
    fn single_point_homology() {
        let c = complex(&[("P", 2)], &[]);
        assert_eq!(c.homology_ranks().unwrap(), BTreeMap::from([(2, 1)]));
        assert_eq!(c.homology_basis(2).unwrap(), vec![Chain::from_ids(["P"])]);
    }

    #[test]
    fn edge_homology_and_representative() {
        let c = edge();
        assert_eq!(c.homology_ranks().unwrap(), BTreeMap::from([(0, 1), (1, 0)]));
        // the earlier basis element survives reduction
        assert_eq!(c.representative(0, 0).unwrap(), Some(Chain::from_ids(["b"])));
        assert_eq!(c.representative(0, 1).unwrap(), None);
        assert!(c.homology_basis(1).unwrap().is_empty());
    }

    #[test]
    fn classify_examples() {
        let c = edge();
        assert_eq!(
            c.classify_chain(&Chain::zero()).unwrap(),
            Classification::Boundary { witness: Chain::zero() }
        );
        assert_eq!(
            c.classify_chain(&Chain::from_ids(["b", "c"])).unwrap(),
            Classification::Boundary {
                witness: Chain::from_ids(["a"])
            }
        );
        assert_eq!(
            c.classify_chain(&Chain::from_ids(["b"])).unwrap(),
            Classification::NontrivialCycle
        );
        assert_eq!(
            c.classify_chain(&Chain::from_ids(["a"])).unwrap(),
            Classification::NotCycle {
                boundary: Chain::from_ids(["b", "c"])
            }
        );
    }

    #[test]
    fn mixed_degree_chain_is_rejected() {
        let err = edge().classify_chain(&Chain::from_ids(["a", "b"])).unwrap_err();
        assert!(matches!(err, ComplexError::MixedDegrees { .. }));
    }

    #[test]
    fn negative_degrees_are_allowed() {
        let c = complex(&[("x", -1), ("y", -2)], &[("x", &["y"])]);
        assert_eq!(c.homology_ranks().unwrap(), BTreeMap::from([(-2, 0), (-1, 0)]));
    }

    #[test]
    fn json_is_canonical() {
        let json = r#"{"basis":[{"id":"a","degree":1},{"id":"b","degree":0},{"id":"c","degree":0}],"boundary":{"a":["c","b"]}}"#;
        let c: GradedComplex = serde_json::from_str(json).unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), json);
    }

    #[test]
    fn json_rejects_duplicates() {
        let json = r#"{"basis":[{"id":"a","degree":1},{"id":"a","degree":0}],"boundary":{}}"#;
        assert!(serde_json::from_str::<GradedComplex>(json).is_err());
    }
}
