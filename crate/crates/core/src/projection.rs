//! Projection onto the intersection of the PSD cone with an affine subspace.
//!
//! Constraints are stored in the Pauli coefficient frame, where an operator
//! M on L qubit legs becomes the real vector c with c_s = Tr[P_s M] and the
//! Hilbert–Schmidt inner product is ⟨A, B⟩ = (c_A · c_B)/2^L. Two row shapes
//! cover everything needed here: single Pauli strings (one-hot vectors, used
//! for the causality hyperplanes and the normalisation) and Kronecker
//! products of small Hermitian blocks (measurement operators Π ⊗ Aᵀ ⊗ … ⊗
//! Aᵀ), kept factored so a row never materialises its 4^L entries.
//!
//! The projection itself follows the dual approach: minimise
//! θ(κ) = ½‖Proj₊(v₀ + A†κ)‖² − b·κ over the multipliers κ, whose gradient
//! A·Proj₊(v₀ + A†κ) − b is exactly the constraint residual, so the
//! unconstrained minimiser hands back the projected point Proj₊(v₀ + A†κ*).

use crate::error::{Error, Result};
use crate::layout::{Leg, LegLayout};
use crate::linalg::eigh;
use crate::mat::CMat;
use crate::opt::{lbfgs_minimize, LbfgsConfig};
use crate::pauli::{matrix_to_pauli, pauli_to_matrix, string_index};

/// A Hermitian operator stored as a Kronecker product of per-group Pauli
/// coefficient blocks, ordered to match the leg layout (latest first).
/// Group sizes must multiply to 4^L.
#[derive(Debug, Clone)]
pub struct ProductOperator {
    pub factors: Vec<Vec<f64>>,
}

impl ProductOperator {
    /// Factored form of Π ⊗ A_{k−1}ᵀ ⊗ … ⊗ A_0ᵀ for a final effect and a
    /// chronological operation sequence — the operator whose expectation
    /// against the process state is the outcome probability.
    pub fn from_sequence(effect: &CMat, ops: &[&CMat]) -> Result<Self> {
        let mut factors = Vec::with_capacity(ops.len() + 1);
        let eff_legs = effect.require_square()?.trailing_zeros() as usize;
        factors.push(matrix_to_pauli(effect, eff_legs)?);
        for op in ops.iter().rev() {
            factors.push(matrix_to_pauli(&op.t(), 2)?);
        }
        Ok(ProductOperator { factors })
    }

    /// Π_g (Σ f²): the squared coefficient-vector norm of the full product.
    fn raw_norm_sq(&self) -> f64 {
        self.factors.iter().map(|f| f.iter().map(|v| v * v).sum::<f64>()).product()
    }

    fn len(&self) -> usize {
        self.factors.iter().map(|f| f.len()).product()
    }

    /// Coefficient-vector dot product against `c`, contracting one factor at
    /// a time from the innermost group so nothing of size 4^L is built.
    pub fn raw_dot(&self, c: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(c);
        let mut len = c.len();
        for f in self.factors.iter().rev() {
            let w = f.len();
            let rows = len / w;
            for r in 0..rows {
                scratch[r] = (0..w).map(|j| scratch[r * w + j] * f[j]).sum();
            }
            len = rows;
        }
        scratch[0]
    }

    /// acc += w · (⊗ factors), expanded recursively with zero-skipping.
    pub fn scatter(&self, w: f64, acc: &mut [f64]) {
        fn rec(factors: &[Vec<f64>], w: f64, acc: &mut [f64]) {
            match factors.first() {
                None => acc[0] += w,
                Some(f) => {
                    let chunk = acc.len() / f.len();
                    for (j, &fj) in f.iter().enumerate() {
                        if fj != 0.0 {
                            rec(&factors[1..], w * fj, &mut acc[j * chunk..(j + 1) * chunk]);
                        }
                    }
                }
            }
        }
        rec(&self.factors, w, acc);
    }
}

#[derive(Debug, Clone)]
enum Row {
    /// coeff · e_index: a single Pauli string.
    Unit { index: usize, coeff: f64 },
    /// scale · (⊗ factors).
    Factored { op: ProductOperator, scale: f64 },
}

impl Row {
    fn dot_hs(&self, c: &[f64], dim: f64, scratch: &mut Vec<f64>) -> f64 {
        match self {
            Row::Unit { index, coeff } => coeff * c[*index] / dim,
            Row::Factored { op, scale } => scale * op.raw_dot(c, scratch) / dim,
        }
    }

    fn scatter(&self, w: f64, acc: &mut [f64]) {
        match self {
            Row::Unit { index, coeff } => acc[*index] += w * coeff,
            Row::Factored { op, scale } => op.scatter(w * scale, acc),
        }
    }
}

/// The affine constraint set {x Hermitian : ⟨V_r, x⟩ = b_r}, rows held in
/// unit Hilbert–Schmidt norm.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    rows: Vec<Row>,
    rhs: Vec<f64>,
    legs: usize,
    dim: usize,
}

impl AffineSystem {
    /// Empty system over `legs` qubit legs.
    pub fn empty(legs: usize) -> Self {
        AffineSystem { rows: Vec::new(), rhs: Vec::new(), legs, dim: 1 << legs }
    }

    /// The hyperplanes every physical process state satisfies: the trace
    /// fixed to dᵏ, and one zero-expectation Pauli row per (step j, Pauli Q
    /// on the step-j input leg, Pauli string R on everything earlier) — the
    /// statement that a process cannot signal from an input back to its own
    /// past. Row count: Σ_{j=1..k} (d²−1)·d^{4j−2}, plus one.
    pub fn causality(layout: &LegLayout) -> Result<Self> {
        if layout.d != 2 || layout.final_out_dim != 2 {
            return Err(Error::Config("Pauli-frame constraints need qubit legs".into()));
        }
        let legs = 2 * layout.k + 1;
        let dim = layout.total_dim();
        let root = (dim as f64).sqrt();
        let mut rows = vec![Row::Unit { index: 0, coeff: root }];
        let mut rhs = vec![layout.expected_trace() / root];
        for j in 1..=layout.k {
            let p_in = layout.pos(Leg::In(j))?;
            let past = legs - 1 - p_in;
            for q in 1..=3u8 {
                for r in 0..(4usize.pow(past as u32)) {
                    let mut digits = vec![0u8; legs];
                    digits[p_in] = q;
                    let mut rest = r;
                    for l in (p_in + 1..legs).rev() {
                        digits[l] = (rest % 4) as u8;
                        rest /= 4;
                    }
                    rows.push(Row::Unit { index: string_index(&digits), coeff: root });
                    rhs.push(0.0);
                }
            }
        }
        Ok(AffineSystem { rows, rhs, legs, dim })
    }

    /// Append ⟨V, x⟩ = p for a factored measurement operator; the row is
    /// rescaled to unit norm internally.
    pub fn push_measurement(&mut self, op: ProductOperator, p: f64) -> Result<()> {
        if op.len() != self.dim * self.dim {
            return Err(Error::DimMismatch(format!(
                "measurement row covers {} coefficients, system has {}",
                op.len(),
                self.dim * self.dim
            )));
        }
        let norm = (op.raw_norm_sq() / self.dim as f64).sqrt();
        if norm < 1e-14 {
            return Err(Error::Data("zero measurement operator".into()));
        }
        self.rows.push(Row::Factored { op, scale: 1.0 / norm });
        self.rhs.push(p / norm);
        Ok(())
    }

    /// Append ⟨P_s, x⟩/√dim = value/√dim for a bare Pauli string.
    pub fn push_pauli(&mut self, digits: &[u8], value: f64) -> Result<()> {
        if digits.len() != self.legs {
            return Err(Error::DimMismatch(format!(
                "string has {} legs, system has {}",
                digits.len(),
                self.legs
            )));
        }
        let root = (self.dim as f64).sqrt();
        self.rows.push(Row::Unit { index: string_index(digits), coeff: root });
        self.rhs.push(value / root);
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A·c: per-row Hilbert–Schmidt expectations of the coefficient vector.
    pub fn forward(&self, c: &[f64]) -> Vec<f64> {
        let mut scratch = Vec::new();
        let d = self.dim as f64;
        self.rows.iter().map(|r| r.dot_hs(c, d, &mut scratch)).collect()
    }

    /// acc += A†κ.
    pub fn adjoint_into(&self, kappa: &[f64], acc: &mut [f64]) {
        for (row, &k) in self.rows.iter().zip(kappa) {
            if k != 0.0 {
                row.scatter(k, acc);
            }
        }
    }

    /// ‖A·c − b‖∞: how far the coefficient vector is from the subspace.
    pub fn residual_inf(&self, c: &[f64]) -> f64 {
        self.forward(c)
            .iter()
            .zip(&self.rhs)
            .fold(0.0f64, |m, (ax, b)| m.max((ax - b).abs()))
    }

    /// Dense row matrix (rows × 4^legs), for conditioning diagnostics and
    /// small-instance cross-checks.
    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![0.0; self.dim * self.dim];
                r.scatter(1.0, &mut v);
                v
            })
            .collect()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionReport {
    /// ‖A·x − b‖∞ at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Reusable projector onto S⁺ ∩ {A·x = b}; keeps the previous multipliers
/// as a warm start, which matters inside iterative callers where successive
/// inputs are close.
#[derive(Debug, Clone)]
pub struct Projector<'a> {
    sys: &'a AffineSystem,
    kappa: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl<'a> Projector<'a> {
    pub fn new(sys: &'a AffineSystem, tol: f64) -> Self {
        Projector { sys, kappa: vec![0.0; sys.num_rows()], tol, max_iters: 600 }
    }

    pub fn reset(&mut self) {
        self.kappa.iter_mut().for_each(|k| *k = 0.0);
    }

    /// Project a Hermitian matrix onto the feasible set.
    pub fn project(&mut self, m: &CMat) -> Result<(CMat, ProjectionReport)> {
        let legs = self.sys.legs;
        let dim = self.sys.dim;
        if m.require_square()? != dim {
            return Err(Error::DimMismatch(format!(
                "matrix dim {} != system dim {dim}",
                m.nrows()
            )));
        }
        let v0 = matrix_to_pauli(m, legs)?;
        let cfg = LbfgsConfig {
            memory: 10,
            max_iters: self.max_iters,
            grad_tol: self.tol,
            ..Default::default()
        };
        let sys = self.sys;
        let attempt = |kappa0: Vec<f64>| -> Result<(Vec<f64>, Vec<f64>, usize)> {
            let mut fail: Option<Error> = None;
            let objective = |kappa: &[f64], grad: &mut [f64]| -> f64 {
                let mut c = v0.clone();
                sys.adjoint_into(kappa, &mut c);
                let (value, proj) = match clamp_psd(&c, legs) {
                    Ok(v) => v,
                    Err(e) => {
                        fail.get_or_insert(e);
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        return f64::INFINITY;
                    }
                };
                let ax = sys.forward(&proj);
                for ((g, ax_r), b_r) in grad.iter_mut().zip(&ax).zip(&sys.rhs) {
                    *g = ax_r - b_r;
                }
                value - kappa.iter().zip(&sys.rhs).map(|(k, b)| k * b).sum::<f64>()
            };
            let (kappa, rep) = lbfgs_minimize(objective, kappa0, &cfg);
            if let Some(e) = fail {
                return Err(e);
            }
            let mut c = v0.clone();
            sys.adjoint_into(&kappa, &mut c);
            let (_, proj) = clamp_psd(&c, legs)?;
            Ok((kappa, proj, rep.iterations))
        };

        let warm = self.kappa.iter().any(|k| *k != 0.0);
        let (mut kappa, mut proj, mut iterations) =
            attempt(std::mem::take(&mut self.kappa))?;
        let mut residual = self.sys.residual_inf(&proj);
        if residual > self.tol && warm {
            // a warm start tuned to a very different input can strand the
            // dual; a cold start from the multiplier origin is reliable
            let (k2, p2, it2) = attempt(vec![0.0; self.sys.num_rows()])?;
            let r2 = self.sys.residual_inf(&p2);
            if r2 < residual {
                (kappa, proj, residual) = (k2, p2, r2);
                iterations += it2;
            }
        }
        self.kappa = kappa;
        let out = pauli_to_matrix(&proj, legs)?;
        Ok((out, ProjectionReport { residual, iterations, converged: residual <= self.tol }))
    }
}

/// PSD part of the coefficient vector: (½‖Proj₊‖²_F, coefficients of Proj₊).
fn clamp_psd(c: &[f64], legs: usize) -> Result<(f64, Vec<f64>)> {
    let m = pauli_to_matrix(c, legs)?;
    let (vals, vecs) = eigh(&m)?;
    let value = vals.iter().map(|v| 0.5 * v.max(0.0) * v.max(0.0)).sum();
    let proj = crate::linalg::rebuild_re(&vals, &vecs, |v| v.max(0.0));
    Ok((value, matrix_to_pauli(&proj, legs)?))
}

/// One-call projection with cold-started multipliers.
pub fn project_affine_psd(m: &CMat, sys: &AffineSystem, tol: f64) -> Result<(CMat, ProjectionReport)> {
    Projector::new(sys, tol).project(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{pauli_povm, unitary_basis};
    use crate::channel::Channel;
    use crate::gates::{hadamard, ket_proj};
    use crate::linalg::{project_psd, singular_values};
    use crate::pauli::string_mat;
    use crate::process::ProcessTensor;
    use num_complex::Complex64 as C64;
    use rand::{Rng, SeedableRng};

    fn coeffs(m: &CMat, legs: usize) -> Vec<f64> {
        matrix_to_pauli(m, legs).unwrap()
    }

    fn hs_inner(a: &[f64], b: &[f64], dim: usize) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / dim as f64
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
        let g = CMat::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&g + &g.dagger()).scale_re(0.5)
    }

    #[test]
    fn causality_row_counts_match_formula() {
        let k1 = AffineSystem::causality(&LegLayout::new(1, 2)).unwrap();
        assert_eq!(k1.num_rows(), 12 + 1);
        let k2 = AffineSystem::causality(&LegLayout::new(2, 2)).unwrap();
        assert_eq!(k2.num_rows(), 204 + 1);
    }

    #[test]
    fn valid_processes_satisfy_every_causality_row() {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let dep = Channel::depolarizing(2, 0.3);
        let pt = ProcessTensor::markov(&[h, dep], &ket_proj(0)).unwrap();
        let sys = AffineSystem::causality(&pt.layout).unwrap();
        let c = coeffs(&pt.mat, 5);
        assert!(sys.residual_inf(&c) < 1e-10);

        // a perturbation along a causality row is flagged by both routes
        let bad = string_mat(&[0, 1, 0, 0, 2]); // X on leg i_2, Y in its past
        let perturbed = &pt.mat + &bad.scale_re(0.05);
        let cp = coeffs(&perturbed, 5);
        assert!(sys.residual_inf(&cp) > 1e-3);
        let bad_pt = ProcessTensor::new(pt.layout, perturbed).unwrap();
        assert!(bad_pt.max_causality_residual().unwrap() > 1e-3);
    }

    #[test]
    fn projection_removes_causality_violation() {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let pt = ProcessTensor::markov(&[h.clone(), h], &ket_proj(0)).unwrap();
        let sys = AffineSystem::causality(&pt.layout).unwrap();
        let bad = string_mat(&[0, 0, 0, 3, 1]); // Z on leg i_1, X on leg o_0
        let perturbed = &pt.mat + &bad.scale_re(0.02);
        let (fixed, rep) = project_affine_psd(&perturbed, &sys, 1e-8).unwrap();
        assert!(rep.converged && rep.residual <= 1e-8, "residual {}", rep.residual);
        let fixed_pt = ProcessTensor::new(LegLayout::new(2, 2), fixed.clone()).unwrap();
        assert!(fixed_pt.max_causality_residual().unwrap() < 1e-6);
        assert!(fixed_pt.trace_deviation() < 1e-7);
        // the perturbation was orthogonal to the feasible set, so the
        // projection lands back on the unperturbed process
        assert!((&fixed - &pt.mat).max_abs() < 1e-6);
    }

    #[test]
    fn feasible_point_is_a_fixed_point_and_projection_is_idempotent() {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let pt = ProcessTensor::markov(&[h], &ket_proj(0)).unwrap();
        let sys = AffineSystem::causality(&pt.layout).unwrap();
        let (same, rep) = project_affine_psd(&pt.mat, &sys, 1e-9).unwrap();
        assert!(rep.converged);
        assert!((&same - &pt.mat).max_abs() < 1e-7);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noisy = &pt.mat + &random_hermitian(8, &mut rng).scale_re(0.3);
        let (once, _) = project_affine_psd(&noisy, &sys, 1e-10).unwrap();
        let (twice, _) = project_affine_psd(&once, &sys, 1e-10).unwrap();
        assert!((&twice - &once).max_abs() < 1e-7);
    }

    #[test]
    fn projection_satisfies_obtuse_angle_inequality() {
        let layout = LegLayout::new(1, 2);
        let sys = AffineSystem::causality(&layout).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let v0 = random_hermitian(8, &mut rng).scale_re(2.0);
        let (px, _) = project_affine_psd(&v0, &sys, 1e-10).unwrap();
        let cv0 = coeffs(&v0, 3);
        let cpx = coeffs(&px, 3);
        for _ in 0..20 {
            let z = random_hermitian(8, &mut rng);
            let (fz, _) = project_affine_psd(&z, &sys, 1e-10).unwrap();
            let cfz = coeffs(&fz, 3);
            let lhs: Vec<f64> = cv0.iter().zip(&cpx).map(|(a, b)| a - b).collect();
            let rhs: Vec<f64> = cfz.iter().zip(&cpx).map(|(a, b)| a - b).collect();
            assert!(hs_inner(&lhs, &rhs, 8) <= 1e-6);
        }
    }

    /// Alternating-projection oracle (Boyle–Dykstra) on a dense small
    /// instance: an entirely different algorithm with the affine step done
    /// by explicit Gram-matrix solve.
    fn dykstra_oracle(v0: &CMat, sys: &AffineSystem, sweeps: usize) -> CMat {
        let legs = sys.legs();
        let dim = sys.dim();
        let rows = sys.dense_rows();
        let m = rows.len();
        let gram = CMat::from_fn(m, m, |i, j| C64::new(hs_inner(&rows[i], &rows[j], dim), 0.0));
        let ginv = crate::linalg::pinv(&gram, 1e-12).unwrap();
        let proj_affine = |c: &[f64]| -> Vec<f64> {
            let ax: Vec<f64> = rows.iter().map(|r| hs_inner(r, c, dim)).collect();
            let mut out = c.to_vec();
            for i in 0..m {
                let mut corr = 0.0;
                for j in 0..m {
                    corr += ginv.0[(i, j)].re * (sys.rhs()[j] - ax[j]);
                }
                for (o, r) in out.iter_mut().zip(&rows[i]) {
                    *o += corr * r;
                }
            }
            out
        };
        let mut x = coeffs(v0, legs);
        let mut p = vec![0.0; x.len()];
        let mut q = vec![0.0; x.len()];
        for _ in 0..sweeps {
            let y_in: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            let y = {
                let mat = pauli_to_matrix(&y_in, legs).unwrap();
                coeffs(&project_psd(&mat).unwrap(), legs)
            };
            for i in 0..p.len() {
                p[i] = y_in[i] - y[i];
            }
            let z_in: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
            let z = proj_affine(&z_in);
            for i in 0..q.len() {
                q[i] = z_in[i] - z[i];
            }
            x = z;
        }
        pauli_to_matrix(&x, legs).unwrap()
    }

    #[test]
    fn small_instance_matches_alternating_projection_oracle() {
        // 4×4 Hermitian, trace pinned to 1 plus one expectation row
        let mut sys = AffineSystem::empty(2);
        sys.push_pauli(&[0, 0], 1.0).unwrap();
        let obs = &string_mat(&[3, 3]) + &string_mat(&[1, 0]).scale_re(0.5);
        sys.push_measurement(ProductOperator { factors: vec![coeffs(&obs, 2)] }, 0.3).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let v0 = random_hermitian(4, &mut rng);
            let (fast, rep) = project_affine_psd(&v0, &sys, 1e-10).unwrap();
            assert!(rep.converged);
            let slow = dykstra_oracle(&v0, &sys, 4000);
            assert!((&fast - &slow).max_abs() < 1e-6, "gap {}", (&fast - &slow).max_abs());
        }
    }

    #[test]
    fn factored_row_expectation_matches_born_rule() {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let dep = Channel::depolarizing(2, 0.25);
        let pt = ProcessTensor::markov(&[h, dep], &ket_proj(0)).unwrap();
        let basis = unitary_basis(10).unwrap();
        let povm = pauli_povm();
        let c = coeffs(&pt.mat, 5);
        let mut scratch = Vec::new();
        for (mu1, mu2, eff) in [(0usize, 3usize, 0usize), (7, 2, 4), (9, 9, 5)] {
            let ops = [basis.element(mu1), basis.element(mu2)];
            let row = ProductOperator::from_sequence(&povm.effects()[eff], &ops).unwrap();
            let got = row.raw_dot(&c, &mut scratch) / 32.0;
            let seq = crate::process::OpSequence::new(vec![ops[0].clone(), ops[1].clone()]);
            let want = pt.born_rule(&seq, &povm.effects()[eff]).unwrap();
            assert!((got - want).abs() < 1e-10, "({mu1},{mu2},{eff}): {got} vs {want}");
        }
        // scatter is the exact adjoint of raw_dot
        let row = ProductOperator::from_sequence(
            &povm.effects()[1],
            &[basis.element(4), basis.element(6)],
        )
        .unwrap();
        let mut dense = vec![0.0; 1024];
        row.scatter(1.0, &mut dense);
        let direct: f64 = dense.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!((direct - row.raw_dot(&c, &mut scratch)).abs() < 1e-9);
    }

    #[test]
    fn stacked_system_is_well_conditioned_for_two_steps() {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let pt = ProcessTensor::markov(&[h.clone(), h], &ket_proj(0)).unwrap();
        let mut sys = AffineSystem::causality(&pt.layout).unwrap();
        let basis = unitary_basis(10).unwrap();
        let povm = pauli_povm();
        for mu1 in 0..basis.len() {
            for mu2 in 0..basis.len() {
                for eff in 0..povm.num_effects() {
                    let row = ProductOperator::from_sequence(
                        &povm.effects()[eff],
                        &[basis.element(mu1), basis.element(mu2)],
                    )
                    .unwrap();
                    sys.push_measurement(row, 0.1).unwrap();
                }
            }
        }
        assert_eq!(sys.num_rows(), 205 + 600);
        let rows = sys.dense_rows();
        let dense = CMat::from_fn(rows.len(), 1024, |i, j| {
            C64::new(rows[i][j] / (1024.0f64).sqrt(), 0.0)
        });
        let sv = singular_values(&dense).unwrap();
        let nonzero: Vec<f64> = sv.iter().copied().filter(|v| *v > 1e-9).collect();
        let cond = nonzero[0] / nonzero.last().unwrap();
        assert!(cond < 1e3, "condition number {cond}");
    }
}
