//! Quantum channels in Choi form, with conversions to and from Kraus
//! operators and the Pauli transfer matrix.
//!
//! The Choi matrix convention is output-major: for a map E acting on d_in,
//! Choi(E) = sum_{ij} E[|i><j|] (x) |i><j|, a d_out*d_in square matrix with
//! the output factor first. Under this convention E[rho] =
//! Tr_in[(I (x) rho^T) Choi(E)] and complete positivity reads Choi >= 0.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::mat::{partial_trace, CMat};
use crate::pauli::{leg_count, matrix_to_pauli, pauli_to_matrix};

#[derive(Clone, Debug)]
pub struct Channel {
    choi: CMat,
    d_in: usize,
    d_out: usize,
}

impl Channel {
    pub fn from_choi(choi: CMat, d_in: usize, d_out: usize) -> Result<Self> {
        let dim = choi.require_square()?;
        if dim != d_in * d_out {
            return Err(Error::DimMismatch(format!(
                "Choi dim {dim} != d_out {d_out} * d_in {d_in}"
            )));
        }
        let choi = choi.hermitize(1e-8)?;
        Ok(Channel { choi, d_in, d_out })
    }

    pub fn from_unitary(u: &CMat) -> Result<Self> {
        let d = u.require_square()?;
        let dev = (&u.dagger().matmul(u) - &CMat::identity(d)).max_abs();
        if dev > 1e-10 {
            return Err(Error::DimMismatch(format!("matrix is not unitary (deviation {dev:.2e})")));
        }
        Ok(Self::from_kraus(&[u.clone()], d, d))
    }

    /// Channel from Kraus operators: E[rho] = sum_k K rho K^dag.
    pub fn from_kraus(kraus: &[CMat], d_in: usize, d_out: usize) -> Self {
        let dim = d_in * d_out;
        let mut choi = CMat::zeros(dim, dim);
        for k in kraus {
            debug_assert_eq!((k.nrows(), k.ncols()), (d_out, d_in));
            // vec(K) with index (out, in): Choi += vec(K) vec(K)^dag
            for a in 0..d_out {
                for i in 0..d_in {
                    for b in 0..d_out {
                        for j in 0..d_in {
                            choi.0[(a * d_in + i, b * d_in + j)] +=
                                k.0[(a, i)] * k.0[(b, j)].conj();
                        }
                    }
                }
            }
        }
        Channel { choi, d_in, d_out }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(&[CMat::identity(d)], d, d)
    }

    /// Depolarising channel: rho -> (1-p) rho + p I/d.
    pub fn depolarizing(d: usize, p: f64) -> Self {
        let id = Self::identity(d).choi;
        let mut choi = id.scale_re(1.0 - p);
        // Choi of the replacer rho -> Tr[rho] I/d is I_{out} (x) I_{in} / d.
        for x in 0..d * d {
            choi.0[(x, x)] += C64::new(p / d as f64, 0.0);
        }
        Channel { choi, d_in: d, d_out: d }
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_in, self.d_out)
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.d_in || rho.ncols() != self.d_in {
            return Err(Error::DimMismatch(format!(
                "state dim {} != channel input dim {}",
                rho.nrows(),
                self.d_in
            )));
        }
        let lifted = CMat::identity(self.d_out).kron(&rho.t());
        partial_trace(&lifted.matmul(&self.choi), &[self.d_out, self.d_in], &[0])
    }

    /// Trace over the output: equals I_in for a trace-preserving map.
    pub fn input_marginal(&self) -> CMat {
        partial_trace(&self.choi, &[self.d_out, self.d_in], &[1]).expect("valid legs")
    }

    pub fn tp_deviation(&self) -> f64 {
        (&self.input_marginal() - &CMat::identity(self.d_in)).max_abs()
    }

    /// Smallest Choi eigenvalue; >= -tol means completely positive.
    pub fn cp_deviation(&self) -> Result<f64> {
        let (vals, _) = eigh(&self.choi)?;
        Ok(-vals.first().copied().unwrap_or(0.0))
    }

    /// Kraus operators recovered from the Choi eigendecomposition, dropping
    /// eigenvalues below `tol`.
    pub fn kraus(&self, tol: f64) -> Result<Vec<CMat>> {
        let (vals, vecs) = eigh(&self.choi)?;
        let mut out = Vec::new();
        for (idx, &v) in vals.iter().enumerate() {
            if v < -1e-9 {
                return Err(Error::Solve(format!("Choi not PSD: eigenvalue {v:.3e}")));
            }
            if v <= tol {
                continue;
            }
            let s = v.sqrt();
            out.push(CMat::from_fn(self.d_out, self.d_in, |a, i| {
                vecs.0[(a * self.d_in + i, idx)] * s
            }));
        }
        Ok(out)
    }

    /// Pauli transfer matrix over normalised Paulis: R_ij = Tr[P_i E[P_j]]/d,
    /// so a trace-preserving qubit channel has first row (1, 0, 0, 0).
    pub fn ptm(&self) -> Result<CMat> {
        if self.d_in != self.d_out {
            return Err(Error::DimMismatch("PTM requires equal in/out dims".into()));
        }
        let legs = leg_count(self.d_in)?;
        let n = self.d_in * self.d_in;
        // R_ij = Tr[Choi (P_i (x) P_j^T)] / d; expand Choi in the Pauli basis
        // of both legs. P_j^T has Pauli coefficients with a sign flip on Y.
        let c = matrix_to_pauli(&self.choi, 2 * legs)?;
        let mut r = CMat::zeros(n, n);
        let d = self.d_in as f64;
        for i in 0..n {
            for j in 0..n {
                // coefficient of P_i (x) P_j in Choi is c[i*n + j] / 2^{2 legs}
                // Tr[Choi (P_i (x) P_j^T)] = c[i*n + j_t] * sign, handled via
                // the Y flip on the input leg.
                let sign = y_parity(j, legs);
                r.0[(i, j)] = C64::new(sign * c[i * n + j] / d, 0.0);
            }
        }
        Ok(r)
    }

    /// Inverse of `ptm`.
    pub fn from_ptm(r: &CMat) -> Result<Self> {
        let n = r.require_square()?;
        let d2 = n; // d^2
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 {
            return Err(Error::DimMismatch(format!("PTM dim {n} is not a square")));
        }
        let legs = leg_count(d)?;
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let z = r.0[(i, j)];
                if z.im.abs() > 1e-9 {
                    return Err(Error::DimMismatch("PTM must be real".into()));
                }
                c[i * n + j] = z.re * d as f64 * y_parity(j, legs);
            }
        }
        let choi = pauli_to_matrix(&c, 2 * legs)?;
        Channel::from_choi(choi, d, d)
    }
}

/// (-1)^{number of Y digits} of a Pauli string index over `legs` legs.
fn y_parity(mut idx: usize, legs: usize) -> f64 {
    let mut ys = 0usize;
    for _ in 0..legs {
        if idx % 4 == 2 {
            ys += 1;
        }
        idx /= 4;
    }
    if ys % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{hadamard, pure_state};
    use crate::pauli::pauli_mat;

    fn random_density(seed: u64, d: usize) -> CMat {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let g = CMat::from_fn(d, d, |_, _| C64::new(next(), next()));
        let p = g.matmul(&g.dagger());
        let tr = p.trace().re;
        p.scale_re(1.0 / tr)
    }

    #[test]
    fn unitary_apply_matches_conjugation() {
        let u = hadamard();
        let ch = Channel::from_unitary(&u).unwrap();
        let rho = random_density(7, 2);
        let got = ch.apply(&rho).unwrap();
        let want = u.matmul(&rho).matmul(&u.dagger());
        assert!((&got - &want).max_abs() < 1e-12);
    }

    #[test]
    fn kraus_roundtrip() {
        // amplitude damping
        let g: f64 = 0.3;
        let k0 = CMat::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new((1.0 - g).sqrt(), 0.0)],
        ]);
        let k1 = CMat::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(g.sqrt(), 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ]);
        let ch = Channel::from_kraus(&[k0.clone(), k1.clone()], 2, 2);
        assert!(ch.tp_deviation() < 1e-12);
        assert!(ch.cp_deviation().unwrap() < 1e-12);

        let rho = random_density(11, 2);
        let direct = {
            let a = k0.matmul(&rho).matmul(&k0.dagger());
            let b = k1.matmul(&rho).matmul(&k1.dagger());
            &a + &b
        };
        assert!((&ch.apply(&rho).unwrap() - &direct).max_abs() < 1e-12);

        // recover Kraus operators and re-build: same Choi
        let ks = ch.kraus(1e-12).unwrap();
        let back = Channel::from_kraus(&ks, 2, 2);
        assert!((&back.choi - &ch.choi).max_abs() < 1e-10);
    }

    #[test]
    fn ptm_of_named_channels() {
        let id = Channel::identity(2).ptm().unwrap();
        assert!((&id - &CMat::identity(4)).max_abs() < 1e-12);

        // X conjugation: diag(1, 1, -1, -1)
        let x = Channel::from_unitary(&pauli_mat(1)).unwrap().ptm().unwrap();
        let want = CMat::diag(&[1.0, 1.0, -1.0, -1.0].map(|v| C64::new(v, 0.0)));
        assert!((&x - &want).max_abs() < 1e-12);

        // depolarising: diag(1, 1-p, 1-p, 1-p)
        let p = 0.25;
        let dep = Channel::depolarizing(2, p).ptm().unwrap();
        let want = CMat::diag(&[1.0, 1.0 - p, 1.0 - p, 1.0 - p].map(|v| C64::new(v, 0.0)));
        assert!((&dep - &want).max_abs() < 1e-12);
    }

    #[test]
    fn ptm_roundtrip() {
        let ch = Channel::from_unitary(&crate::gates::u3(0.8, 0.3, 1.9)).unwrap();
        let r = ch.ptm().unwrap();
        let back = Channel::from_ptm(&r).unwrap();
        assert!((back.choi() - ch.choi()).max_abs() < 1e-10);
    }

    #[test]
    fn ptm_action_on_bloch_vector() {
        // For any channel, applying it to a state must agree with acting on
        // normalised-Pauli coefficients by the PTM.
        let ch = Channel::depolarizing(2, 0.4);
        let rho = pure_state(&[C64::new(0.8, 0.0), C64::new(0.0, 0.6)]);
        let r = ch.ptm().unwrap();
        let cin = matrix_to_pauli(&rho, 1).unwrap();
        // normalised coefficients: <P_i>/sqrt(2) -> vector; PTM acts there.
        let mut cout = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                cout[i] += r.0[(i, j)].re * cin[j];
            }
        }
        let want = ch.apply(&rho).unwrap();
        let got = pauli_to_matrix(&cout, 1).unwrap();
        assert!((&got - &want).max_abs() < 1e-12);
    }

    #[test]
    fn trace_decreasing_choi_is_flagged() {
        // half-strength measurement effect: K = |0><0| only
        let k = crate::gates::ket_proj(0);
        let ch = Channel::from_kraus(&[k], 2, 2);
        assert!(ch.tp_deviation() > 0.5);
    }
}
