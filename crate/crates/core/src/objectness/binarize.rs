//! Greedy binary-basis approximation of the linear filter.

use super::{cell_bit, BasisVector};

/// Fits `n_w` +/-1 basis vectors to `w` by greedy residual fitting: at each
/// step `a = sign(residual)` and `beta = <residual, a> / 64`, which is the
/// error-minimizing step for a single +/-1 pattern.
pub fn binarize_weights(w: &[f64], n_w: usize) -> Vec<BasisVector> {
    assert_eq!(w.len(), 64);
    assert!(n_w >= 1);
    let mut residual = w.to_vec();
    let mut basis = Vec::with_capacity(n_w);
    for _ in 0..n_w {
        let mut a_plus = 0u64;
        for (i, &r) in residual.iter().enumerate() {
            if r >= 0.0 {
                a_plus |= 1 << cell_bit(i);
            }
        }
        // a = sign(residual), so <residual, a> = sum |residual|
        let beta = residual.iter().map(|r| r.abs()).sum::<f64>() / 64.0;
        for (i, r) in residual.iter_mut().enumerate() {
            let sign = if a_plus >> cell_bit(i) & 1 == 1 { 1.0 } else { -1.0 };
            *r -= beta * sign;
        }
        basis.push(BasisVector { a_plus, beta });
    }
    basis
}

/// `w_hat = sum_j beta_j a_j`, the filter the fast score actually applies.
pub fn reconstruct_weights(basis: &[BasisVector]) -> Vec<f64> {
    let mut w = vec![0.0; 64];
    for b in basis {
        for (i, wi) in w.iter_mut().enumerate() {
            let sign = if b.a_plus >> cell_bit(i) & 1 == 1 { 1.0 } else { -1.0 };
            *wi += b.beta * sign;
        }
    }
    w
}
