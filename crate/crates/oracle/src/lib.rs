//! Slow, obviously-correct reference computations for the test suites.
//!
//! Nothing here shares code with `hoferlab`: complexes are plain index
//! lists, chains are `u64` masks over the global basis, and every question
//! is answered by enumerating all chains of a degree.

pub mod crossings;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Complex with at most 64 generators; `boundary[i]` lists basis indices.
#[derive(Clone, Debug)]
pub struct RawComplex {
    pub ids: Vec<String>,
    pub degrees: Vec<i64>,
    pub boundary: Vec<Vec<usize>>,
}

impl RawComplex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn degree_mask(&self, degree: i64) -> u64 {
        (0..self.len())
            .filter(|&i| self.degrees[i] == degree)
            .fold(0, |m, i| m | 1 << i)
    }

    pub fn boundary_of(&self, chain: u64) -> u64 {
        bits(chain).fold(0, |acc, i| acc ^ self.boundary[i].iter().fold(0u64, |m, &j| m ^ (1 << j)))
    }

    /// Every chain supported on the basis elements in `mask`.
    pub fn chains_in(mask: u64) -> impl Iterator<Item = u64> {
        let positions: Vec<usize> = bits(mask).collect();
        (0u64..1 << positions.len()).map(move |k| {
            bits(k).fold(0, |m, b| m | 1 << positions[b])
        })
    }

    pub fn cycles(&self, degree: i64) -> Vec<u64> {
        Self::chains_in(self.degree_mask(degree))
            .filter(|&c| self.boundary_of(c) == 0)
            .collect()
    }

    /// The boundary space in `degree`, as a sorted set.
    pub fn boundaries(&self, degree: i64) -> Vec<u64> {
        let mut out: Vec<u64> = Self::chains_in(self.degree_mask(degree + 1))
            .map(|d| self.boundary_of(d))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn homology_rank(&self, degree: i64) -> usize {
        let z = self.cycles(degree).len();
        let b = self.boundaries(degree).len();
        (z / b).trailing_zeros() as usize
    }

    /// A chain `d` with `∂d = chain`, if one exists.
    pub fn preimage(&self, chain: u64, degree: i64) -> Option<u64> {
        Self::chains_in(self.degree_mask(degree + 1)).find(|&d| self.boundary_of(d) == chain)
    }

    pub fn representatives(&self, cycle: u64, degree: i64) -> Vec<u64> {
        self.boundaries(degree).into_iter().map(|b| b ^ cycle).collect()
    }

    pub fn mask_of(&self, ids: &[&str]) -> u64 {
        ids.iter().fold(0, |m, id| {
            m ^ 1 << self.ids.iter().position(|x| x == id).expect("unknown id")
        })
    }

    pub fn ids_of(&self, mask: u64) -> Vec<String> {
        bits(mask).map(|i| self.ids[i].clone()).collect()
    }

    pub fn is_valid(&self) -> bool {
        (0..self.len()).all(|i| {
            self.boundary[i].iter().all(|&j| self.degrees[j] == self.degrees[i] - 1)
                && self.boundary_of(self.boundary_of(1 << i)) == 0
        })
    }
}

pub fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

/// Maximum of `values` over the support; `None` for the zero chain.
pub fn chain_value(values: &[f64], chain: u64) -> Option<f64> {
    bits(chain).map(|i| values[i]).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// `None` (the zero chain) sorts below every value.
pub fn value_less(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => false,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x < y,
    }
}

#[derive(Clone, Debug)]
pub struct RawFiltered {
    pub complex: RawComplex,
    pub values: Vec<f64>,
}

impl RawFiltered {
    pub fn spectral_min(&self, cycle: u64, degree: i64) -> f64 {
        self.complex
            .representatives(cycle, degree)
            .into_iter()
            .filter_map(|r| chain_value(&self.values, r))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn essential(&self, element: usize, cycle: u64, degree: i64) -> bool {
        self.complex
            .representatives(cycle, degree)
            .into_iter()
            .all(|r| r >> element & 1 == 1)
    }

    /// Both conditions of filtered essentiality, by enumeration of all
    /// representatives and all chains one degree up.
    pub fn essential_filtered(&self, element: usize, cycle: u64, degree: i64) -> (bool, bool) {
        let vb = Some(self.values[element]);
        let bit = 1u64 << element;
        let cond1 = self
            .complex
            .representatives(cycle, degree)
            .into_iter()
            .any(|r| r & bit != 0 && value_less(chain_value(&self.values, r ^ bit), vb));
        let cond2 = RawComplex::chains_in(self.complex.degree_mask(degree + 1)).all(|d| {
            let bd = self.complex.boundary_of(d);
            bd & bit == 0 || !value_less(chain_value(&self.values, bd ^ bit), vb)
        });
        (cond1, cond2)
    }
}

/// Random valid complex with `generators` basis elements.
///
/// Built as a direct sum of single generators and acyclic pairs
/// `x ↦ y`, then disguised by a random invertible change of basis in every
/// degree and a random shuffle of the basis order. Filtration values are
/// small integers (so ties are common) pushed up where needed to make them
/// strictly decrease along the boundary.
pub fn random_filtered_complex(rng: &mut ChaCha8Rng, generators: usize) -> RawFiltered {
    assert!((1..=20).contains(&generators));
    let base_degree: i64 = rng.gen_range(-1..=1);
    let span = rng.gen_range(1..=3);
    let mut degrees = Vec::new();
    let mut pairs = Vec::new();
    while degrees.len() < generators {
        let k = base_degree + rng.gen_range(0..span);
        if degrees.len() + 2 <= generators && rng.gen_bool(0.5) {
            pairs.push((degrees.len(), degrees.len() + 1));
            degrees.push(k + 1);
            degrees.push(k);
        } else {
            degrees.push(k);
        }
    }
    let n = degrees.len();
    let mut boundary = vec![0u64; n];
    for &(x, y) in &pairs {
        boundary[x] = 1 << y;
    }

    // Change of basis: new generator i is the old chain rows[i]; a chain in
    // old coordinates converts back through the inverse.
    let mut rows = vec![0u64; n];
    let mut inverse = vec![0u64; n];
    let mut all_degrees: Vec<i64> = degrees.clone();
    all_degrees.sort_unstable();
    all_degrees.dedup();
    for &k in &all_degrees {
        let idx: Vec<usize> = (0..n).filter(|&i| degrees[i] == k).collect();
        let (a, a_inv) = random_invertible(rng, idx.len());
        for (r, &i) in idx.iter().enumerate() {
            rows[i] = bits(a[r]).fold(0, |m, c| m | 1 << idx[c]);
            inverse[i] = bits(a_inv[r]).fold(0, |m, c| m | 1 << idx[c]);
        }
    }
    // old chain v = Σ_i v_i e_i = Σ_i v_i Σ_l inv[i]_l e'_l
    let to_new = |v: u64| bits(v).fold(0u64, |m, i| m ^ inverse[i]);
    let new_boundary: Vec<u64> = (0..n)
        .map(|i| {
            let old = bits(rows[i]).fold(0u64, |m, j| m ^ boundary[j]);
            to_new(old)
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // order[new_pos] = old index
    let mut position = vec![0; n];
    for (p, &o) in order.iter().enumerate() {
        position[o] = p;
    }
    let complex = RawComplex {
        ids: (0..n).map(|p| format!("g{p}")).collect(),
        degrees: order.iter().map(|&o| degrees[o]).collect(),
        boundary: order
            .iter()
            .map(|&o| {
                let mut faces: Vec<usize> = bits(new_boundary[o]).map(|j| position[j]).collect();
                faces.shuffle(rng);
                faces
            })
            .collect(),
    };

    let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| complex.degrees[i]);
    for &i in &by_degree {
        let floor = complex.boundary[i]
            .iter()
            .map(|&j| values[j] + 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if values[i] < floor {
            values[i] = floor + rng.gen_range(0..2) as f64;
        }
    }
    if rng.gen_bool(0.3) {
        for v in &mut values {
            *v = *v * 0.25 - 0.5;
        }
    }
    RawFiltered { complex, values }
}

/// Random invertible `m×m` matrix over GF(2) (rows as masks) and its inverse.
fn random_invertible(rng: &mut ChaCha8Rng, m: usize) -> (Vec<u64>, Vec<u64>) {
    let mut a: Vec<u64> = (0..m).map(|i| 1 << i).collect();
    let mut inv = a.clone();
    for _ in 0..3 * m {
        if m < 2 {
            break;
        }
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        if i != j {
            // row_i += row_j  on A  ⇒  col_j += col_i on A⁻¹
            a[i] ^= a[j];
            for row in inv.iter_mut() {
                if *row >> i & 1 == 1 {
                    *row ^= 1 << j;
                }
            }
        }
    }
    (a, inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_complexes_are_valid_and_filtered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            for _ in 0..20 {
                let f = random_filtered_complex(&mut rng, n);
                assert!(f.complex.is_valid());
                for i in 0..n {
                    for &j in &f.complex.boundary[i] {
                        assert!(f.values[i] > f.values[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, inv) = random_invertible(&mut rng, 6);
        for i in 0..6 {
            let prod = bits(a[i]).fold(0u64, |m, j| m ^ inv[j]);
            assert_eq!(prod, 1 << i);
        }
    }

    #[test]
    fn edge_complex_by_enumeration() {
        let c = RawComplex {
            ids: vec!["a".into(), "b".into(), "c".into()],
            degrees: vec![1, 0, 0],
            boundary: vec![vec![1, 2], vec![], vec![]],
        };
        assert_eq!(c.homology_rank(0), 1);
        assert_eq!(c.homology_rank(1), 0);
        assert_eq!(c.preimage(0b110, 0), Some(0b001));
        assert_eq!(c.preimage(0b010, 0), None);
    }
}
