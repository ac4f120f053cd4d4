//! Pauli strings over qubit legs and the fast transform between a dense
//! matrix and its (real) Pauli coefficient vector.
//!
//! Strings are indexed base-4 with digit order matching the leg order of the
//! matrix (leg 0 = most significant factor) and digit values 0..3 = I,X,Y,Z.
//! Coefficients are unnormalised, c_s = Tr[P_s M], so that a Hermitian M
//! satisfies M = sum_s c_s P_s / 2^L.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat::CMat;

pub const PAULI_NAMES: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Single-qubit Pauli matrix by index 0..3 = I,X,Y,Z.
pub fn pauli_mat(p: u8) -> CMat {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match p {
        0 => CMat::from_rows(&[vec![o, z], vec![z, o]]),
        1 => CMat::from_rows(&[vec![z, o], vec![o, z]]),
        2 => CMat::from_rows(&[vec![z, -i], vec![i, z]]),
        3 => CMat::from_rows(&[vec![o, z], vec![z, -o]]),
        _ => panic!("pauli index {p} out of range"),
    }
}

/// Dense matrix of the Pauli string with the given per-leg digits.
pub fn string_mat(digits: &[u8]) -> CMat {
    let mut out = pauli_mat(digits[0]);
    for &d in &digits[1..] {
        out = out.kron(&pauli_mat(d));
    }
    out
}

pub fn string_index(digits: &[u8]) -> usize {
    digits.iter().fold(0usize, |acc, &d| acc * 4 + d as usize)
}

pub fn string_digits(mut idx: usize, legs: usize) -> Vec<u8> {
    let mut out = vec![0u8; legs];
    for l in (0..legs).rev() {
        out[l] = (idx % 4) as u8;
        idx /= 4;
    }
    out
}

pub fn string_name(digits: &[u8]) -> String {
    digits.iter().map(|&d| PAULI_NAMES[d as usize]).collect()
}

/// Number of qubit legs for a 2^L dimensional matrix.
pub fn leg_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimMismatch(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Interleave row/col bit indices into the pair-code index used by the
/// per-leg transforms: pair_l = 2*i_l + j_l, most significant leg first.
fn reindex_to_pairs(m: &CMat, legs: usize) -> Vec<C64> {
    let dim = 1usize << legs;
    let mut v = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut idx = 0usize;
            for l in 0..legs {
                let bi = (i >> (legs - 1 - l)) & 1;
                let bj = (j >> (legs - 1 - l)) & 1;
                idx = idx * 4 + 2 * bi + bj;
            }
            v[idx] = m.0[(i, j)];
        }
    }
    v
}

fn reindex_from_pairs(v: &[C64], legs: usize) -> CMat {
    let dim = 1usize << legs;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut idx = 0usize;
            for l in 0..legs {
                let bi = (i >> (legs - 1 - l)) & 1;
                let bj = (j >> (legs - 1 - l)) & 1;
                idx = idx * 4 + 2 * bi + bj;
            }
            m.0[(i, j)] = v[idx];
        }
    }
    m
}

/// Apply a 4x4 mixing matrix to axis `l` of a length-4^L tensor in place.
fn apply_axis(v: &mut [C64], legs: usize, l: usize, t: &[[C64; 4]; 4]) {
    let stride = 4usize.pow((legs - 1 - l) as u32);
    let block = stride * 4;
    let total = v.len();
    let mut scratch = [C64::new(0.0, 0.0); 4];
    let mut base = 0;
    while base < total {
        for off in 0..stride {
            let p = base + off;
            for (x, s) in scratch.iter_mut().enumerate() {
                *s = v[p + x * stride];
            }
            for x in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for (y, s) in scratch.iter().enumerate() {
                    acc += t[x][y] * s;
                }
                v[p + x * stride] = acc;
            }
        }
        base += block;
    }
}

fn fwd_table() -> [[C64; 4]; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    // rows I,X,Y,Z over pair codes (m00, m01, m10, m11)
    [[o, z, z, o], [z, o, o, z], [z, i, -i, z], [o, z, z, -o]]
}

fn inv_table() -> [[C64; 4]; 4] {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    // rows (m00, m01, m10, m11) over coefficients (I,X,Y,Z), i.e. T† / 2
    [[h, z, z, h], [z, h, -ih, z], [z, h, ih, z], [h, z, z, -h]]
}

/// Complex Pauli coefficients c_s = Tr[P_s M] for a 2^L x 2^L matrix.
pub fn matrix_to_pauli_c(m: &CMat, legs: usize) -> Result<Vec<C64>> {
    let dim = m.require_square()?;
    if dim != 1usize << legs {
        return Err(Error::DimMismatch(format!("matrix dim {dim} != 2^{legs}")));
    }
    let mut v = reindex_to_pairs(m, legs);
    let t = fwd_table();
    for l in 0..legs {
        apply_axis(&mut v, legs, l, &t);
    }
    Ok(v)
}

/// Real Pauli coefficients of a Hermitian matrix.
pub fn matrix_to_pauli(m: &CMat, legs: usize) -> Result<Vec<f64>> {
    Ok(matrix_to_pauli_c(m, legs)?.into_iter().map(|z| z.re).collect())
}

/// Inverse transform: M = sum_s c_s P_s / 2^L.
pub fn pauli_to_matrix(coeffs: &[f64], legs: usize) -> Result<CMat> {
    if coeffs.len() != 4usize.pow(legs as u32) {
        return Err(Error::DimMismatch(format!(
            "coefficient vector has length {} != 4^{legs}",
            coeffs.len()
        )));
    }
    // the per-leg inverse table already carries the 1/2 normalisation,
    // so the full 1/2^L factor accumulates across legs
    let mut v: Vec<C64> = coeffs.iter().map(|&c| C64::new(c, 0.0)).collect();
    let t = inv_table();
    for l in 0..legs {
        apply_axis(&mut v, legs, l, &t);
    }
    Ok(reindex_from_pairs(&v, legs))
}

/// Per-string sign of a partial transpose over the given qubit legs:
/// transposing a leg flips the sign of Y on that leg.
pub fn pt_sign(string: usize, legs: usize, flip: &[usize]) -> f64 {
    let digits = string_digits(string, legs);
    let ys = flip.iter().filter(|&&l| digits[l] == 2).count();
    if ys % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pauli_coefficients() {
        for p in 0..4u8 {
            let m = pauli_mat(p);
            let c = matrix_to_pauli(&m, 1).unwrap();
            for q in 0..4usize {
                let want = if q == p as usize { 2.0 } else { 0.0 };
                assert!((c[q] - want).abs() < 1e-12, "P{p} coeff {q}: {}", c[q]);
            }
        }
    }

    #[test]
    fn roundtrip_random_hermitian() {
        let legs = 3;
        let dim = 8;
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let raw = CMat::from_fn(dim, dim, |_, _| C64::new(next(), next()));
        let h = CMat((&raw.0 + &raw.dagger().0).mapv(|z| z * 0.5));
        let c = matrix_to_pauli(&h, legs).unwrap();
        let back = pauli_to_matrix(&c, legs).unwrap();
        assert!((&back - &h).max_abs() < 1e-12);
    }

    #[test]
    fn coefficients_match_direct_traces() {
        let legs = 2;
        let m = CMat::from_fn(4, 4, |i, j| C64::new((i * 7) as f64 * 0.1, (j as f64) - 1.5));
        let h = CMat((&m.0 + &m.dagger().0).mapv(|z| z * 0.5));
        let c = matrix_to_pauli(&h, legs).unwrap();
        for s in 0..16usize {
            let p = string_mat(&string_digits(s, legs));
            let direct = p.matmul(&h).trace().re;
            assert!((c[s] - direct).abs() < 1e-12, "string {s}");
        }
    }

    #[test]
    fn parseval_isometry() {
        // ||M||_F^2 = sum c_s^2 / 2^L for Hermitian M
        let legs = 2;
        let m = CMat::from_fn(4, 4, |i, j| C64::new((i + j) as f64, (i as f64 - j as f64) * 0.3));
        let h = CMat((&m.0 + &m.dagger().0).mapv(|z| z * 0.5));
        let c = matrix_to_pauli(&h, legs).unwrap();
        let lhs = h.fro_norm().powi(2);
        let rhs = c.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn pt_sign_counts_ys() {
        // string XYYZ over 4 legs
        let s = string_index(&[1, 2, 2, 3]);
        assert_eq!(pt_sign(s, 4, &[0]), 1.0);
        assert_eq!(pt_sign(s, 4, &[1]), -1.0);
        assert_eq!(pt_sign(s, 4, &[1, 2]), 1.0);
        assert_eq!(pt_sign(s, 4, &[1, 3]), -1.0);
    }

    #[test]
    fn partial_transpose_matches_sign_rule() {
        use crate::mat::partial_transpose;
        let legs = 2;
        let m = CMat::from_fn(4, 4, |i, j| C64::new((2 * i + j) as f64 * 0.2, 0.1 * i as f64 - 0.1 * j as f64));
        let h = CMat((&m.0 + &m.dagger().0).mapv(|z| z * 0.5));
        let pt = partial_transpose(&h, &[2, 2], &[1]).unwrap();
        let c = matrix_to_pauli(&h, legs).unwrap();
        let cpt = matrix_to_pauli(&pt, legs).unwrap();
        for s in 0..16usize {
            let want = c[s] * pt_sign(s, legs, &[1]);
            assert!((cpt[s] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn string_index_roundtrip() {
        for idx in [0usize, 5, 63, 200, 1023] {
            let d = string_digits(idx, 5);
            assert_eq!(string_index(&d), idx);
        }
        assert_eq!(string_name(&[0, 1, 2, 3]), "IXYZ");
    }
}
