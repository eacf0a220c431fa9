//! Deterministic real SVD for small square matrices.

use nalgebra::DMatrix;

/// `a = u * diag(sigma) * vt` with `sigma` nonincreasing and each column of
/// `u` oriented so its first non-negligible component is positive (the
/// matching row of `vt` flips with it). Matrices are row-major `n x n`.
#[derive(Clone, Debug)]
pub(crate) struct Svd {
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub vt: Vec<f64>,
}

pub(crate) fn svd(a: &[f64], n: usize) -> Svd {
    assert_eq!(a.len(), n * n);
    let m = DMatrix::from_row_slice(n, n, a);
    let dec = m.svd(true, true);
    let u = dec.u.expect("requested U");
    let vt = dec.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..n).collect();
    // Stable sort keeps the decomposition's order among equal values.
    idx.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut out = Svd { u: vec![0.0; n * n], sigma: vec![0.0; n], vt: vec![0.0; n * n] };
    for (c, &k) in idx.iter().enumerate() {
        out.sigma[c] = dec.singular_values[k];
        let col: Vec<f64> = (0..n).map(|r| u[(r, k)]).collect();
        let lead = col.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            out.u[r * n + c] = sign * col[r];
            out.vt[c * n + r] = sign * vt[(k, r)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(s: &Svd) -> Vec<f64> {
        let n = s.sigma.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| s.u[i * n + k] * s.sigma[k] * s.vt[k * n + j]).sum();
            }
        }
        out
    }

    #[test]
    fn diagonal_sorts_and_orients() {
        let s = svd(&[3.0, 0.0, 0.0, -4.0], 2);
        assert!((s.sigma[0] - 4.0).abs() < 1e-12 && (s.sigma[1] - 3.0).abs() < 1e-12);
        assert!(s.u[0] >= 0.0 || s.u[0].abs() < 1e-12);
        assert!(s.u[2] > 0.0);
        for (x, y) in reconstruct(&s).iter().zip([3.0, 0.0, 0.0, -4.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_keeps_orthogonal_factors() {
        let a = [1.0, 0.0, 1.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0];
        let s = svd(&a, 3);
        assert!((s.sigma[0] - 2.0).abs() < 1e-12);
        assert!(s.sigma[1].abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| s.u[k * 3 + i] * s.u[k * 3 + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
        for (x, y) in reconstruct(&s).iter().zip(a) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
