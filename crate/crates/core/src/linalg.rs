//! Small dense routines on row-major slices, used in the integrator's inner
//! loop where nalgebra's allocating API would dominate the cost.

use nalgebra::DMatrix;

/// `out = a · b` with `a` of shape `n×k` and `b` of shape `k×m`.
pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    out[..n * m].fill(0.0);
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += ail * b[l * m + j];
            }
        }
    }
}

/// Writes `J₀ v`, where `J₀ = [[0, I], [−I, 0]]` in `(q, p)` coordinates.
pub(crate) fn apply_j(v: &[f64], out: &mut [f64]) {
    let n = v.len() / 2;
    for i in 0..n {
        out[i] = v[n + i];
        out[n + i] = -v[i];
    }
}

/// The `2n×2n` matrix `J₀`.
pub fn standard_j(dim: usize) -> DMatrix<f64> {
    let n = dim / 2;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i < n && j == i + n {
            1.0
        } else if i >= n && j + n == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// `‖MᵀJM − J‖_max`, the symplecticity defect of `M`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let j = standard_j(m.nrows());
    (m.transpose() * &j * m - j).amax()
}

/// Singular values in ascending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
