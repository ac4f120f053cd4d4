//! Common single- and two-qubit gates used by the simulator and instrument
//! circuits.

use num_complex::Complex64 as C64;

use crate::mat::CMat;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hadamard() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]])
}

pub fn phase_s() -> CMat {
    CMat::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 1.0)]])
}

/// General single-qubit rotation with Euler angles (theta, phi, lambda):
/// U = [[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(l+p)} cos(t/2)]].
pub fn u3(theta: f64, phi: f64, lambda: f64) -> CMat {
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMat::from_rows(&[
        vec![c(ct, 0.0), -C64::from_polar(st, lambda)],
        vec![C64::from_polar(st, phi), C64::from_polar(ct, lambda + phi)],
    ])
}

/// Rotation about the x axis: exp(-i theta X / 2).
/// Recover (θ, φ, λ) such that `u3(θ, φ, λ)` equals `u` up to a global
/// phase. At θ = 0 or π only the sum (resp. difference) of φ and λ is
/// physical; the surplus angle is set to zero.
pub fn u3_angles(u: &CMat) -> (f64, f64, f64) {
    let (a, b) = (u.0[(0, 0)], u.0[(1, 0)]);
    let (c, d) = (u.0[(0, 1)], u.0[(1, 1)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    if b.norm() < 1e-12 {
        // diagonal: only φ + λ matters
        (0.0, 0.0, (d / a).arg())
    } else if a.norm() < 1e-12 {
        // anti-diagonal: only φ − λ matters
        (std::f64::consts::PI, (b / -c).arg() / 2.0, -(b / -c).arg() / 2.0)
    } else {
        (theta, (b / a).arg(), (-c / a).arg())
    }
}

pub fn rx(theta: f64) -> CMat {
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMat::from_rows(&[vec![c(ct, 0.0), c(0.0, -st)], vec![c(0.0, -st), c(ct, 0.0)]])
}

/// Rotation about the z axis: exp(-i theta Z / 2).
pub fn rz(theta: f64) -> CMat {
    CMat::from_rows(&[
        vec![C64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), C64::from_polar(1.0, theta / 2.0)],
    ])
}

/// Two-qubit SWAP.
pub fn swap() -> CMat {
    CMat::from_fn(4, 4, |i, j| {
        let (i0, i1) = (i / 2, i % 2);
        let (j0, j1) = (j / 2, j % 2);
        if i0 == j1 && i1 == j0 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Projector |b><b| on the computational basis of a single qubit.
pub fn ket_proj(b: usize) -> CMat {
    CMat::from_fn(2, 2, |i, j| if i == b && j == b { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// Column vector |psi> as a d x 1 matrix.
pub fn ket(amps: &[C64]) -> CMat {
    CMat::from_fn(amps.len(), 1, |i, _| amps[i])
}

/// Rank-one density matrix |psi><psi| from (unnormalised) amplitudes.
pub fn pure_state(amps: &[C64]) -> CMat {
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let d = amps.len();
    CMat::from_fn(d, d, |i, j| amps[i] * amps[j].conj() / norm)
}

pub fn plus_state() -> CMat {
    pure_state(&[c(1.0, 0.0), c(1.0, 0.0)])
}

pub fn plus_i_state() -> CMat {
    pure_state(&[c(1.0, 0.0), c(0.0, 1.0)])
}

pub fn maximally_mixed(d: usize) -> CMat {
    CMat::identity(d).scale_re(1.0 / d as f64)
}
