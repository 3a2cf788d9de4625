//! Dense complex linear algebra written out by hand, for cross-checking
//! the beamformer.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Inverse by Gauss–Jordan elimination with partial pivoting. `None` when a
/// pivot falls below `1e-12` times the largest entry.
pub fn invert_gauss_jordan(m: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = m.len();
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 || scale == 0.0 {
        return None;
    }
    let mut aug: Vec<Vec<Complex64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|k| if k == i { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| aug[x][col].norm().total_cmp(&aug[y][col].norm()))?;
        if aug[pivot][col].norm() < 1e-12 * scale {
            return None;
        }
        aug.swap(col, pivot);
        let inv = Complex64::new(1.0, 0.0) / aug[col][col];
        for k in 0..2 * n {
            aug[col][k] *= inv;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != Complex64::new(0.0, 0.0) {
                    for k in 0..2 * n {
                        let sub = f * aug[col][k];
                        aug[row][k] -= sub;
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `W = H (H^H H)^{-1}` by explicit loops and Gauss–Jordan inversion.
pub fn zf_gauss_jordan(h: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let (r, u) = h.shape();
    if u == 0 || r < u {
        return None;
    }
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); u]; u];
    for a in 0..u {
        for b in 0..u {
            for j in 0..r {
                gram[a][b] += h[(j, a)].conj() * h[(j, b)];
            }
        }
    }
    let inv = invert_gauss_jordan(&gram)?;
    let mut w = DMatrix::from_element(r, u, Complex64::new(0.0, 0.0));
    for j in 0..r {
        for b in 0..u {
            for a in 0..u {
                w[(j, b)] += h[(j, a)] * inv[a][b];
            }
        }
    }
    Some(w)
}
