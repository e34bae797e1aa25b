//! Filtered GF(2) complexes from sampled functions on the 2-torus.
//!
//! The sample grid is turned into the periodic cubical complex with
//! vertices at the samples. A discrete gradient is built by processing
//! lower stars (ties between equal samples are broken by grid index), and
//! the boundary of each critical cell counts gradient paths mod 2.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{BasisElement, Chain, ComplexError, GradedComplex};
use crate::dynamics::{Domain, HamiltonianSystem};
use crate::filtration::{validate_filtration, FiltrationError, FiltrationMap, FiltrationViolation};

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorseError {
    #[error("resolution {0} is below the minimum of {MIN_RESOLUTION}")]
    Resolution(usize),
    #[error("grid row {row} has {len} samples, expected {expected}")]
    Shape { row: usize, len: usize, expected: usize },
    #[error("sample ({i}, {j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("the oracle needs an autonomous system on the 2-torus, got {0}")]
    Unsupported(String),
    #[error(
        "critical {kind} at grid ({i}, {j}) ties with its neighbour ({ni}, {nj}) at value {value}; \
         critical points are not isolated at resolution {n}, try a finer grid"
    )]
    Plateau { kind: String, i: usize, j: usize, ni: usize, nj: usize, value: f64, n: usize },
    #[error("gradient paths from `{0}` form a cycle")]
    Cyclic(String),
    #[error("critical values do not filter the boundary: {0:?}")]
    Filtration(Vec<FiltrationViolation>),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    FiltrationMap(#[from] FiltrationError),
    #[error("the sum of the top-degree generators has boundary {0:?}")]
    NotACycle(Vec<String>),
    #[error("the complex has no generators")]
    Empty,
}

/// Samples `values[i][j] = f(i/N, j/N)` on the periodic `N × N` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledFunction {
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

impl SampledFunction {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, MorseError> {
        let f = Self { values, source: None };
        f.check()?;
        Ok(f)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self, MorseError> {
        let h = 1.0 / n as f64;
        Self::new((0..n).map(|i| (0..n).map(|j| f(i as f64 * h, j as f64 * h)).collect()).collect())
    }

    /// `H(0, ·)` of an autonomous system on `T²`.
    pub fn from_system(system: &HamiltonianSystem, n: usize) -> Result<Self, MorseError> {
        if system.domain() != (Domain::Torus { n: 1 }) || !system.is_autonomous() {
            return Err(MorseError::Unsupported(system.describe().to_string()));
        }
        let mut f = Self::from_fn(n, |q, p| system.value(0.0, &[q, p]))?;
        f.source = Some(system.describe());
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self, MorseError> {
        let f: Self = serde_json::from_str(text).map_err(|e| MorseError::Unsupported(format!("grid file: {e}")))?;
        f.check()?;
        Ok(f)
    }

    pub fn check(&self) -> Result<(), MorseError> {
        let n = self.values.len();
        if n < MIN_RESOLUTION {
            return Err(MorseError::Resolution(n));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != n {
                return Err(MorseError::Shape { row: i, len: row.len(), expected: n });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(MorseError::NonFinite { i, j });
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Vertex,
    /// Edge from `(i, j)` to `(i+1, j)`.
    EdgeQ,
    /// Edge from `(i, j)` to `(i, j+1)`.
    EdgeP,
    /// Square with lower corner `(i, j)`.
    Square,
}

impl CellKind {
    fn dim(self) -> i64 {
        match self {
            CellKind::Vertex => 0,
            CellKind::EdgeQ | CellKind::EdgeP => 1,
            CellKind::Square => 2,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            CellKind::Vertex => "v",
            CellKind::EdgeQ => "eq",
            CellKind::EdgeP => "ep",
            CellKind::Square => "s",
        }
    }
}

const KINDS: [CellKind; 4] = [CellKind::Vertex, CellKind::EdgeQ, CellKind::EdgeP, CellKind::Square];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalCell {
    pub id: String,
    pub kind: CellKind,
    pub degree: i64,
    /// Grid index of the cell's lower corner.
    pub cell: [usize; 2],
    /// Grid index of the vertex whose lower star contains the cell.
    pub vertex: [usize; 2],
    /// `vertex / N` on the unit torus.
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseComplex {
    pub resolution: usize,
    pub complex: GradedComplex,
    pub filtration: FiltrationMap,
    pub critical: Vec<CriticalCell>,
}

/// Cells of the periodic cubical grid, encoded as `kind·N² + i·N + j`.
struct Grid<'a> {
    n: usize,
    f: &'a SampledFunction,
    /// Position of each vertex in the order (value, grid index).
    rank: Vec<usize>,
}

impl<'a> Grid<'a> {
    fn new(f: &'a SampledFunction) -> Self {
        let n = f.resolution();
        let mut order: Vec<usize> = (0..n * n).collect();
        order.sort_by(|&a, &b| f.values[a / n][a % n].total_cmp(&f.values[b / n][b % n]).then(a.cmp(&b)));
        let mut rank = vec![0; n * n];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        Self { n, f, rank }
    }

    fn cell(&self, kind: CellKind, i: usize, j: usize) -> usize {
        let n = self.n;
        kind as usize * n * n + (i % n) * n + (j % n)
    }

    fn decode(&self, c: usize) -> (CellKind, usize, usize) {
        let nn = self.n * self.n;
        (KINDS[c / nn], (c % nn) / self.n, c % self.n)
    }

    fn vertices(&self, c: usize) -> Vec<usize> {
        let (kind, i, j) = self.decode(c);
        let n = self.n;
        let v = |a: usize, b: usize| (a % n) * n + (b % n);
        match kind {
            CellKind::Vertex => vec![v(i, j)],
            CellKind::EdgeQ => vec![v(i, j), v(i + 1, j)],
            CellKind::EdgeP => vec![v(i, j), v(i, j + 1)],
            CellKind::Square => vec![v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)],
        }
    }

    fn faces(&self, c: usize) -> Vec<usize> {
        let (kind, i, j) = self.decode(c);
        use CellKind::*;
        match kind {
            Vertex => vec![],
            EdgeQ => vec![self.cell(Vertex, i, j), self.cell(Vertex, i + 1, j)],
            EdgeP => vec![self.cell(Vertex, i, j), self.cell(Vertex, i, j + 1)],
            Square => vec![
                self.cell(EdgeQ, i, j),
                self.cell(EdgeQ, i, j + 1),
                self.cell(EdgeP, i, j),
                self.cell(EdgeP, i + 1, j),
            ],
        }
    }

    fn cofaces(&self, c: usize) -> Vec<usize> {
        let (kind, i, j) = self.decode(c);
        let n = self.n;
        let (im, jm) = ((i + n - 1) % n, (j + n - 1) % n);
        use CellKind::*;
        match kind {
            Vertex => vec![
                self.cell(EdgeQ, i, j),
                self.cell(EdgeQ, im, j),
                self.cell(EdgeP, i, j),
                self.cell(EdgeP, i, jm),
            ],
            EdgeQ => vec![self.cell(Square, i, j), self.cell(Square, i, jm)],
            EdgeP => vec![self.cell(Square, i, j), self.cell(Square, im, j)],
            Square => vec![],
        }
    }

    /// Vertex ranks in decreasing order; cells compare lexicographically.
    fn key(&self, c: usize) -> Vec<usize> {
        let mut r: Vec<usize> = self.vertices(c).into_iter().map(|v| self.rank[v]).collect();
        r.sort_unstable_by(|a, b| b.cmp(a));
        r
    }

    fn top_vertex(&self, c: usize) -> usize {
        self.vertices(c).into_iter().max_by_key(|&v| self.rank[v]).unwrap()
    }

    fn value(&self, v: usize) -> f64 {
        self.f.values[v / self.n][v % self.n]
    }
}

#[derive(Default)]
struct LocalGradient {
    pairs: Vec<(usize, usize)>,
    critical: Vec<usize>,
}

/// Pairs cells within the lower star of vertex `v`.
fn process_lower_star(grid: &Grid, v: usize) -> LocalGradient {
    let vc = grid.cell(CellKind::Vertex, v / grid.n, v % grid.n);
    let mut lower: Vec<usize> = Vec::new();
    for e in grid.cofaces(vc) {
        if grid.top_vertex(e) == v {
            lower.push(e);
            for s in grid.cofaces(e) {
                if grid.top_vertex(s) == v && !lower.contains(&s) {
                    lower.push(s);
                }
            }
        }
    }
    let mut out = LocalGradient::default();
    if lower.is_empty() {
        out.critical.push(vc);
        return out;
    }
    let keys: HashMap<usize, Vec<usize>> = lower.iter().map(|&c| (c, grid.key(c))).collect();
    let mut classified: Vec<usize> = Vec::new();
    let unclassified_faces = |c: usize, classified: &[usize]| -> Vec<usize> {
        grid.faces(c).into_iter().filter(|f| keys.contains_key(f) && !classified.contains(f)).collect()
    };
    let pop_min = |queue: &mut Vec<usize>| -> usize {
        let k = (0..queue.len()).min_by(|&a, &b| keys[&queue[a]].cmp(&keys[&queue[b]])).unwrap();
        queue.swap_remove(k)
    };
    let edges: Vec<usize> = lower.iter().copied().filter(|&c| grid.decode(c).0 != CellKind::Square).collect();
    let delta = *edges.iter().min_by(|a, b| keys[a].cmp(&keys[b])).unwrap();
    out.pairs.push((vc, delta));
    classified.push(delta);
    let mut zero: Vec<usize> = edges.iter().copied().filter(|&e| e != delta).collect();
    let mut one: Vec<usize> = Vec::new();
    let push_cofaces = |c: usize, classified: &[usize], one: &mut Vec<usize>| {
        for s in grid.cofaces(c) {
            if keys.contains_key(&s) && !classified.contains(&s) && !one.contains(&s) && unclassified_faces(s, classified).len() == 1 {
                one.push(s);
            }
        }
    };
    push_cofaces(delta, &classified, &mut one);
    while !one.is_empty() || !zero.is_empty() {
        while !one.is_empty() {
            let alpha = pop_min(&mut one);
            if classified.contains(&alpha) {
                continue;
            }
            let free = unclassified_faces(alpha, &classified);
            if free.is_empty() {
                zero.push(alpha);
            } else {
                let face = free[0];
                out.pairs.push((face, alpha));
                classified.push(face);
                classified.push(alpha);
                zero.retain(|&z| z != face);
                push_cofaces(alpha, &classified, &mut one);
                push_cofaces(face, &classified, &mut one);
            }
        }
        if !zero.is_empty() {
            let gamma = pop_min(&mut zero);
            if classified.contains(&gamma) {
                continue;
            }
            out.critical.push(gamma);
            classified.push(gamma);
            push_cofaces(gamma, &classified, &mut one);
        }
    }
    out
}

/// Critical cells whose value ties with an edge-adjacent sample are not
/// isolated at this resolution.
fn check_isolated(grid: &Grid, critical: &[usize]) -> Result<(), MorseError> {
    let n = grid.n;
    for &c in critical {
        let v = grid.top_vertex(c);
        let (i, j) = (v / n, v % n);
        let value = grid.value(v);
        let tol = 1e-12 * (1.0 + value.abs());
        for (ni, nj) in [((i + 1) % n, j), ((i + n - 1) % n, j), (i, (j + 1) % n), (i, (j + n - 1) % n)] {
            if (grid.value(ni * n + nj) - value).abs() <= tol {
                return Err(MorseError::Plateau {
                    kind: format!("{:?}", grid.decode(c).0),
                    i,
                    j,
                    ni,
                    nj,
                    value,
                    n,
                });
            }
        }
    }
    Ok(())
}

/// Mod-2 count of gradient paths from the faces of critical `sigma` to
/// critical cells one dimension down.
fn vpath_boundary(grid: &Grid, sigma: usize, up: &[Option<usize>], critical: &[bool], name: &str) -> Result<Vec<usize>, MorseError> {
    // successors in the path graph on (k−1)-cells
    let successors = |tau: usize| -> Vec<usize> {
        match up[tau] {
            Some(beta) if beta != sigma => grid.faces(beta).into_iter().filter(|&f| f != tau).collect(),
            _ => vec![],
        }
    };
    let mut reach: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut stack = grid.faces(sigma);
    while let Some(tau) = stack.pop() {
        if reach.contains_key(&tau) {
            continue;
        }
        let next = successors(tau);
        stack.extend(next.iter().copied());
        reach.insert(tau, next);
    }
    let mut indegree: HashMap<usize, usize> = reach.keys().map(|&t| (t, 0)).collect();
    for next in reach.values() {
        for t in next {
            *indegree.get_mut(t).unwrap() += 1;
        }
    }
    let mut parity: HashMap<usize, bool> = reach.keys().map(|&t| (t, false)).collect();
    for f in grid.faces(sigma) {
        let p = parity.get_mut(&f).unwrap();
        *p = !*p;
    }
    let mut ready: Vec<usize> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&t, _)| t).collect();
    ready.sort_unstable();
    let mut done = 0;
    let mut out = Vec::new();
    while let Some(tau) = ready.pop() {
        done += 1;
        let p = parity[&tau];
        if critical[tau] && p {
            out.push(tau);
        }
        for &t in &reach[&tau] {
            if p {
                let q = parity.get_mut(&t).unwrap();
                *q = !*q;
            }
            let d = indegree.get_mut(&t).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(t);
            }
        }
    }
    if done != reach.len() {
        return Err(MorseError::Cyclic(name.to_string()));
    }
    out.sort_unstable();
    Ok(out)
}

/// Discrete Morse complex of `f` with each generator filtered by its critical value.
pub fn build_morse_complex(f: &SampledFunction) -> Result<MorseComplex, MorseError> {
    f.check()?;
    let grid = Grid::new(f);
    let n = grid.n;
    let local: Vec<LocalGradient> = (0..n * n).into_par_iter().map(|v| process_lower_star(&grid, v)).collect();
    let cells = 4 * n * n;
    let mut up = vec![None; cells];
    let mut is_critical = vec![false; cells];
    let mut critical = Vec::new();
    for l in &local {
        for &(a, b) in &l.pairs {
            up[a] = Some(b);
        }
        for &c in &l.critical {
            is_critical[c] = true;
            critical.push(c);
        }
    }
    check_isolated(&grid, &critical)?;
    let width = (n - 1).to_string().len();
    let name = |c: usize| {
        let (kind, i, j) = grid.decode(c);
        format!("{}{:0w$}.{:0w$}", kind.prefix(), i, j, w = width)
    };
    let boundaries: Vec<(usize, Vec<usize>)> = critical
        .par_iter()
        .map(|&c| Ok((c, vpath_boundary(&grid, c, &up, &is_critical, &name(c))?)))
        .collect::<Result<_, MorseError>>()?;
    let mut cells_out: Vec<CriticalCell> = critical
        .iter()
        .map(|&c| {
            let (kind, i, j) = grid.decode(c);
            let v = grid.top_vertex(c);
            CriticalCell {
                id: name(c),
                kind,
                degree: kind.dim(),
                cell: [i, j],
                vertex: [v / n, v % n],
                point: [(v / n) as f64 / n as f64, (v % n) as f64 / n as f64],
                value: grid.value(v),
            }
        })
        .collect();
    cells_out.sort_by(|a, b| a.id.cmp(&b.id));
    let basis = cells_out.iter().map(|c| BasisElement { id: c.id.clone(), degree: c.degree }).collect();
    let boundary: BTreeMap<String, Vec<String>> = boundaries
        .into_iter()
        .filter(|(_, faces)| !faces.is_empty())
        .map(|(c, faces)| (name(c), faces.into_iter().map(|t| name(t)).collect()))
        .collect();
    let complex = GradedComplex::new(basis, boundary)?;
    let filtration = FiltrationMap::new(cells_out.iter().map(|c| (c.id.clone(), c.value)))?;
    let violations = complex.validate();
    if !violations.is_empty() {
        return Err(ComplexError::Invalid(violations).into());
    }
    let bad = validate_filtration(&complex, &filtration)?;
    if !bad.is_empty() {
        return Err(MorseError::Filtration(bad));
    }
    Ok(MorseComplex { resolution: n, complex, filtration, critical: cells_out })
}

/// Sum of all top-degree generators, checked to be a cycle.
pub fn fundamental_cycle(complex: &GradedComplex) -> Result<Chain, MorseError> {
    let top = *complex.degrees().iter().next_back().ok_or(MorseError::Empty)?;
    let chain: Chain = complex.basis().iter().filter(|b| b.degree == top).map(|b| b.id.clone()).collect();
    let residue = complex.boundary_of(&chain)?;
    if !residue.is_zero() {
        return Err(MorseError::NotACycle(residue.ids().map(String::from).collect()));
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::spectral_value;
    use std::f64::consts::TAU;

    fn cos_cos(n: usize, b: f64) -> SampledFunction {
        SampledFunction::from_fn(n, |q, p| (TAU * q).cos() + b * (TAU * p).cos()).unwrap()
    }

    #[test]
    fn torus_complex() {
        let m = build_morse_complex(&cos_cos(64, 1.0)).unwrap();
        let degrees: Vec<i64> = m.critical.iter().map(|c| c.degree).collect();
        assert_eq!(m.complex.len(), 4);
        let mut sorted = degrees.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 1, 2]);
        assert!(m.complex.basis().iter().all(|b| m.complex.faces(&b.id).unwrap().is_empty()));
        let ranks = m.complex.homology_ranks().unwrap();
        assert_eq!(ranks, BTreeMap::from([(0, 1), (1, 2), (2, 1)]));
        let mut values: Vec<f64> = m.critical.iter().map(|c| c.value).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        for (v, want) in values.iter().zip([2.0, 0.0, 0.0, -2.0]) {
            assert!((v - want).abs() < 1e-12);
        }
        let top = fundamental_cycle(&m.complex).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(spectral_value(&m.complex, &m.filtration, &top).unwrap().value, 2.0);
        let max = m.critical.iter().find(|c| c.degree == 2).unwrap();
        assert_eq!(max.vertex, [0, 0]);
    }

    #[test]
    fn anisotropic_values() {
        let m = build_morse_complex(&cos_cos(64, 0.5)).unwrap();
        let mut values: Vec<f64> = m.critical.iter().map(|c| c.value).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        for (v, want) in values.iter().zip([1.5, 0.5, -0.5, -1.5]) {
            assert!((v - want).abs() < 1e-12, "{values:?}");
        }
    }

    #[test]
    fn two_maxima_sum_to_a_cycle() {
        let f = SampledFunction::from_fn(32, |q, p| (2.0 * TAU * q).cos() + 0.7 * (TAU * p).cos() + 0.1 * (TAU * q).sin())
            .unwrap();
        let m = build_morse_complex(&f).unwrap();
        let top = fundamental_cycle(&m.complex).unwrap();
        assert_eq!(top.len(), 2);
        assert_eq!(m.complex.homology_ranks().unwrap(), BTreeMap::from([(0, 1), (1, 2), (2, 1)]));
        // no degree-3 cells, so the sum is the only representative
        let v = spectral_value(&m.complex, &m.filtration, &top).unwrap().value;
        assert_eq!(v, f.max());
    }

    #[test]
    fn constant_function_is_rejected() {
        let f = SampledFunction::from_fn(16, |_, _| 1.0).unwrap();
        assert!(matches!(build_morse_complex(&f), Err(MorseError::Plateau { .. })));
    }

    #[test]
    fn corrupted_complex_is_not_a_cycle() {
        let m = build_morse_complex(&cos_cos(16, 1.0)).unwrap();
        let text = serde_json::to_string(&m.complex).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let top = m.critical.iter().find(|c| c.degree == 2).unwrap().id.clone();
        let saddle = m.critical.iter().find(|c| c.degree == 1).unwrap().id.clone();
        v["boundary"][&top] = serde_json::json!([saddle]);
        let bad: GradedComplex = serde_json::from_value(v).unwrap();
        assert!(matches!(fundamental_cycle(&bad), Err(MorseError::NotACycle(_))));
    }

    #[test]
    fn small_or_ragged_grids_are_rejected() {
        assert!(matches!(SampledFunction::from_fn(4, |q, _| q), Err(MorseError::Resolution(4))));
        let mut rows = cos_cos(8, 1.0).values;
        rows[3].pop();
        assert!(matches!(SampledFunction::new(rows), Err(MorseError::Shape { row: 3, .. })));
    }

    #[test]
    fn from_system_and_round_trip() {
        let h = HamiltonianSystem::from_json(
            r#"{"domain":{"type":"torus","n":1},"terms":[
                {"type":"fourier","amplitude":1,"wavevector":[1,0]},
                {"type":"fourier","amplitude":1,"wavevector":[0,1]}]}"#,
        )
        .unwrap();
        let f = SampledFunction::from_system(&h, 32).unwrap();
        let m = build_morse_complex(&f).unwrap();
        assert_eq!(m.complex.len(), 4);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MorseComplex>(&text).unwrap(), m);
        let chart = HamiltonianSystem::from_json(r#"{"domain":{"type":"chart","n":1},"terms":[]}"#).unwrap();
        assert!(matches!(SampledFunction::from_system(&chart, 32), Err(MorseError::Unsupported(_))));
    }
}
