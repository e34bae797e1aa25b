//! Dense-grid crossing enumeration for paths of symplectic matrices.
//!
//! The path is sampled on a uniform grid, every local minimum of the
//! smallest singular value of `Φ(t) − I` that comes close to zero is
//! refined by golden-section search, and the crossing form `⟨v, S v⟩` is
//! evaluated on the numerical kernel with `S = −J₀ Φ̇ Φ⁻¹` taken from
//! central differences.

/// Symmetric eigenvalues by cyclic Jacobi rotations (small matrices only).
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    c
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

fn minus_identity(a: &[f64], n: usize) -> Vec<f64> {
    let mut b = a.to_vec();
    for i in 0..n {
        b[i * n + i] -= 1.0;
    }
    b
}

fn sigma_min(phi: &[f64], n: usize) -> f64 {
    let b = minus_identity(phi, n);
    let (ev, _) = symmetric_eigen(&matmul(&transpose(&b, n), &b, n), n);
    ev.into_iter().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

/// Symplectic inverse `Φ⁻¹ = −J₀ Φᵀ J₀`.
fn symplectic_inverse(phi: &[f64], n: usize) -> Vec<f64> {
    let j = j0(n);
    let mut r = matmul(&matmul(&j, &transpose(phi, n), n), &j, n);
    for x in &mut r {
        *x = -*x;
    }
    r
}

fn j0(dim: usize) -> Vec<f64> {
    let n = dim / 2;
    let mut j = vec![0.0; dim * dim];
    for i in 0..n {
        j[i * dim + n + i] = 1.0;
        j[(n + i) * dim + i] = -1.0;
    }
    j
}

/// Signature of the crossing form of `path` at `t`, restricted to the
/// numerical kernel of `Φ(t) − I`.
pub fn crossing_signature(path: &dyn Fn(f64) -> Vec<f64>, dim: usize, t: f64, h: f64) -> i64 {
    let phi = path(t);
    let dphi: Vec<f64> = path(t + h)
        .iter()
        .zip(path(t - h))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let j = j0(dim);
    let mut s = matmul(&matmul(&j, &dphi, dim), &symplectic_inverse(&phi, dim), dim);
    for x in &mut s {
        *x = -*x;
    }
    let s = {
        let st = transpose(&s, dim);
        s.iter().zip(&st).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>()
    };
    let b = minus_identity(&phi, dim);
    let (ev, vecs) = symmetric_eigen(&matmul(&transpose(&b, dim), &b, dim), dim);
    let kernel: Vec<Vec<f64>> = (0..dim)
        .filter(|&k| ev[k].max(0.0).sqrt() < 1e-5)
        .map(|k| (0..dim).map(|i| vecs[i * dim + k]).collect())
        .collect();
    let m = kernel.len();
    let mut form = vec![0.0; m * m];
    for a in 0..m {
        for c in 0..m {
            let mut acc = 0.0;
            for i in 0..dim {
                for k in 0..dim {
                    acc += kernel[a][i] * s[i * dim + k] * kernel[c][k];
                }
            }
            form[a * m + c] = acc;
        }
    }
    let (ev, _) = symmetric_eigen(&form, m);
    ev.iter().map(|&x| if x > 1e-9 { 1 } else if x < -1e-9 { -1 } else { 0 }).sum()
}

/// Crossing times found in `(0, 1)` on a grid of `samples` points.
pub fn interior_crossings(path: &dyn Fn(f64) -> Vec<f64>, dim: usize, samples: usize) -> Vec<f64> {
    let ts: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    let sig: Vec<f64> = ts.iter().map(|&t| sigma_min(&path(t), dim)).collect();
    let mut out = Vec::new();
    for k in 1..samples {
        if sig[k] <= sig[k - 1] && sig[k] < sig[k + 1] {
            let (mut lo, mut hi) = (ts[k - 1], ts[k + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if sigma_min(&path(a), dim) < sigma_min(&path(b), dim) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let t = 0.5 * (lo + hi);
            if sigma_min(&path(t), dim) < 1e-7 && t > 1e-6 && t < 1.0 - 1e-6 {
                out.push(t);
            }
        }
    }
    out
}

/// Index with the normalisation `μ = n − (½·sign Γ(0) + Σ interior signs)`,
/// where `Γ(0)` is the crossing form at the identity.
pub fn cz_by_enumeration(path: &dyn Fn(f64) -> Vec<f64>, dim: usize, samples: usize) -> i64 {
    let h = 1e-6;
    let start = {
        // one-sided difference at t = 0
        let phi1 = path(h);
        let j = j0(dim);
        let d: Vec<f64> = phi1
            .iter()
            .zip(path(0.0))
            .map(|(a, b)| (a - b) / h)
            .collect();
        let mut s = matmul(&j, &d, dim);
        for x in &mut s {
            *x = -*x;
        }
        let st = transpose(&s, dim);
        let s: Vec<f64> = s.iter().zip(&st).map(|(a, b)| 0.5 * (a + b)).collect();
        let (ev, _) = symmetric_eigen(&s, dim);
        ev.iter().map(|&x| if x > 1e-9 { 1 } else if x < -1e-9 { -1 } else { 0 }).sum::<i64>()
    };
    let interior: i64 = interior_crossings(path, dim, samples)
        .into_iter()
        .map(|t| crossing_signature(path, dim, t, h))
        .sum();
    // 2μ = dim − sign Γ(0) − 2Σ
    (dim as i64 - start - 2 * interior) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(a: f64) -> impl Fn(f64) -> Vec<f64> {
        // flow of (a/2)(q²+p²) with q̇ = ap, ṗ = −aq
        move |t| {
            let (s, c) = (a * t).sin_cos();
            vec![c, s, -s, c]
        }
    }

    #[test]
    fn small_rotation_has_index_zero() {
        assert_eq!(cz_by_enumeration(&rotation(1.0), 2, 2000), 0);
        assert_eq!(cz_by_enumeration(&rotation(-1.0), 2, 2000), 2);
    }

    #[test]
    fn one_full_turn_adds_a_crossing() {
        let path = rotation(3.0 * std::f64::consts::PI);
        let c = interior_crossings(&path, 2, 3000);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(cz_by_enumeration(&path, 2, 3000), -2);
    }
}
