//! The multi-time process state: construction from channels, the multi-time
//! Born rule, causality diagnostics, marginals and conditioning.
//!
//! A k-step process over system dimension d is a positive matrix on 2k+1
//! legs ordered latest-first (see [`LegLayout`]). Operations the experimenter
//! performs at slot l (between the output of step l and the input of step
//! l+1) enter as Choi matrices; probabilities follow from
//! p = Tr[Y (Pi (x) A_{k-1}^T (x) ... (x) A_0^T)].


use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::layout::{Leg, LegLayout};
use crate::linalg::eigh_vals;
use crate::mat::{kron_all, lift, partial_trace, CMat};

#[derive(Clone, Debug)]
pub struct ProcessTensor {
    pub layout: LegLayout,
    pub mat: CMat,
}

/// Operations applied at the k slots of a k-step process, chronological
/// (index 0 = the slot right after preparation). Each entry is a Choi matrix
/// of a completely positive, trace-non-increasing map on the system.
#[derive(Clone, Debug)]
pub struct OpSequence {
    pub ops: Vec<CMat>,
}

impl OpSequence {
    pub fn new(ops: Vec<CMat>) -> Self {
        OpSequence { ops }
    }

    /// Do-nothing sequence: the identity map at every slot.
    pub fn identity(k: usize, d: usize) -> Self {
        let id = Channel::identity(d).choi().clone();
        OpSequence { ops: vec![id; k] }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Complete positivity check: every Choi PSD to the given tolerance.
    pub fn validate_cp(&self, tol: f64) -> Result<()> {
        for (l, op) in self.ops.iter().enumerate() {
            let vals = eigh_vals(op)?;
            if vals.first().copied().unwrap_or(0.0) < -tol {
                return Err(Error::Solve(format!(
                    "slot {l} operation is not CP (min eigenvalue {:.3e})",
                    vals[0]
                )));
            }
        }
        Ok(())
    }
}

impl ProcessTensor {
    /// Wrap a matrix as a process state, enforcing shape and Hermiticity.
    /// Positivity and trace are *not* enforced here: linear-inversion
    /// estimates are legitimately non-PSD and carry statistical trace error.
    pub fn new(layout: LegLayout, mat: CMat) -> Result<Self> {
        let dim = mat.require_square()?;
        if dim != layout.total_dim() {
            return Err(Error::DimMismatch(format!(
                "matrix dim {dim} != layout dim {}",
                layout.total_dim()
            )));
        }
        let mat = mat.hermitize(1e-7)?;
        Ok(ProcessTensor { layout, mat })
    }

    /// The Markov process state: channel Chois in chronological order
    /// tensored latest-first onto the initial state.
    pub fn markov(channels: &[Channel], rho0: &CMat) -> Result<Self> {
        let d = rho0.require_square()?;
        if (rho0.trace().re - 1.0).abs() > 1e-9 {
            return Err(Error::DimMismatch(format!(
                "initial state trace {} != 1",
                rho0.trace().re
            )));
        }
        for (j, ch) in channels.iter().enumerate() {
            let (d_in, d_out) = ch.dims();
            if d_in != d || d_out != d {
                return Err(Error::DimMismatch(format!(
                    "channel {} dims ({d_in},{d_out}) != system dim {d}",
                    j + 1
                )));
            }
            let dev = ch.tp_deviation();
            if dev > 1e-8 {
                return Err(Error::Solve(format!(
                    "channel {} is not trace preserving (deviation {dev:.3e})",
                    j + 1
                )));
            }
        }
        let k = channels.len();
        let mut factors: Vec<&CMat> = channels.iter().rev().map(|c| c.choi()).collect();
        factors.push(rho0);
        let mat = kron_all(factors);
        Self::new(LegLayout::new(k, d), mat)
    }

    pub fn k(&self) -> usize {
        self.layout.k
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Trace-normalised copy of the matrix, Y / d^k.
    pub fn normalized(&self) -> CMat {
        self.mat.scale_re(1.0 / self.layout.expected_trace())
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.mat.trace().re - self.layout.expected_trace()).abs()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh_vals(&self.mat)?.first().copied().unwrap_or(0.0))
    }

    /// The dual operator of a measured sequence: Pi (x) A_{k-1}^T ... A_0^T.
    pub fn sequence_operator(&self, seq: &OpSequence, effect: &CMat) -> Result<CMat> {
        if seq.len() != self.layout.k {
            return Err(Error::DimMismatch(format!(
                "sequence has {} slots, process has {}",
                seq.len(),
                self.layout.k
            )));
        }
        if effect.require_square()? != self.layout.final_out_dim {
            return Err(Error::DimMismatch(format!(
                "effect dim {} != final output dim {}",
                effect.nrows(),
                self.layout.final_out_dim
            )));
        }
        let d2 = self.layout.d * self.layout.d;
        for op in &seq.ops {
            if op.require_square()? != d2 {
                return Err(Error::DimMismatch(format!(
                    "slot operation dim {} != d^2 = {d2}",
                    op.nrows()
                )));
            }
        }
        let transposed: Vec<CMat> = seq.ops.iter().rev().map(|a| a.t()).collect();
        let mut factors: Vec<&CMat> = vec![effect];
        factors.extend(transposed.iter());
        Ok(kron_all(factors))
    }

    /// Multi-time Born rule. Returns the probability clamped to [0, 1];
    /// values outside [-1e-9, 1 + 1e-9] are an error.
    pub fn born_rule(&self, seq: &OpSequence, effect: &CMat) -> Result<f64> {
        let dual = self.sequence_operator(seq, effect)?;
        let p = self.mat.inner_re(&dual);
        if !(-1e-9..=1.0 + 1e-9).contains(&p) {
            return Err(Error::Solve(format!("Born probability {p} outside [0,1]")));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Output state after feeding the slot operations through the process.
    pub fn apply(&self, seq: &OpSequence) -> Result<CMat> {
        if seq.len() != self.layout.k {
            return Err(Error::DimMismatch(format!(
                "sequence has {} slots, process has {}",
                seq.len(),
                self.layout.k
            )));
        }
        if seq.is_empty() {
            return Ok(self.mat.clone());
        }
        let transposed: Vec<CMat> = seq.ops.iter().rev().map(|a| a.t()).collect();
        let refs: Vec<&CMat> = transposed.iter().collect();
        let low = kron_all(refs);
        let lifted = CMat::identity(self.layout.final_out_dim).kron(&low);
        partial_trace(&self.mat.matmul(&lifted), &self.layout.dims(), &[0])
    }

    /// Partial trace keeping the listed legs (result in layout order).
    pub fn marginal(&self, legs: &[Leg]) -> Result<CMat> {
        let mut keep: Vec<usize> = legs.iter().map(|&l| self.layout.pos(l)).collect::<Result<_>>()?;
        keep.sort_unstable();
        keep.dedup();
        partial_trace(&self.mat, &self.layout.dims(), &keep)
    }

    /// Marginal dynamical map of step j, normalised so that a Markov process
    /// returns exactly that step's channel Choi.
    pub fn step_channel(&self, j: usize) -> Result<CMat> {
        let m = self.marginal(&[Leg::Out(j), Leg::In(j)])?;
        let scale = self.layout.expected_trace() / self.layout.d as f64;
        Ok(m.scale_re(1.0 / scale))
    }

    /// Per-step causality residuals, chronological (entry j-1 for step j):
    /// || Tr_out_j [Y_{j:0}] - I (x) Y_{j-1:0} ||_F after tracing away all
    /// later legs. A trace-preserving causal process has all entries ~ 0.
    pub fn causality_residual(&self) -> Result<Vec<f64>> {
        let d = self.layout.d;
        let mut residuals = vec![0.0; self.layout.k];
        let mut cur = self.mat.clone();
        let mut dims = self.layout.dims();
        for j in (1..=self.layout.k).rev() {
            // cur = Y_{j:0} over legs (out_j, in_j, ..., out_0)
            let keep_a: Vec<usize> = (1..dims.len()).collect();
            let a = partial_trace(&cur, &dims, &keep_a)?; // trace out_j
            let keep_b: Vec<usize> = (2..dims.len()).collect();
            let b = partial_trace(&cur, &dims, &keep_b)?.scale_re(1.0 / d as f64);
            let model = CMat::identity(d).kron(&b);
            residuals[j - 1] = (&a - &model).fro_norm();
            cur = b;
            dims = dims[2..].to_vec();
        }
        Ok(residuals)
    }

    pub fn max_causality_residual(&self) -> Result<f64> {
        Ok(self.causality_residual()?.into_iter().fold(0.0, f64::max))
    }

    /// Contract a fixed operation into slot `step`, producing the conditional
    /// process on the remaining k-1 slots (no renormalisation: for a
    /// trace-decreasing op the result is subnormalised).
    pub fn condition_on_operation(&self, step: usize, op: &CMat) -> Result<ProcessTensor> {
        if step >= self.layout.k {
            return Err(Error::BadLeg { leg: step, num_legs: self.layout.k });
        }
        let d2 = self.layout.d * self.layout.d;
        if op.require_square()? != d2 {
            return Err(Error::DimMismatch(format!("op dim {} != d^2 = {d2}", op.nrows())));
        }
        let vals = eigh_vals(op)?;
        if vals.first().copied().unwrap_or(0.0) < -1e-10 {
            return Err(Error::Solve(format!(
                "conditioning operation is not CP (min eigenvalue {:.3e})",
                vals[0]
            )));
        }
        let dims = self.layout.dims();
        let (p_in, p_out) = self.layout.slot_positions(step)?;
        // op legs are (output = in_{step+1}, input = out_step) = (p_in, p_out)
        let lifted = lift(&op.t(), &dims, &[p_in, p_out])?;
        let keep: Vec<usize> =
            (0..dims.len()).filter(|&p| p != p_in && p != p_out).collect();
        let contracted = partial_trace(&lifted.matmul(&self.mat), &dims, &keep)?;
        let layout = LegLayout {
            k: self.layout.k - 1,
            d: self.layout.d,
            final_out_dim: self.layout.final_out_dim,
        };
        ProcessTensor::new(layout, contracted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{hadamard, ket_proj, maximally_mixed, pure_state, u3};
    use crate::pauli::string_mat;
    use num_complex::Complex64 as C64;

    fn zero_state() -> CMat {
        ket_proj(0)
    }

    fn random_unitary(seed: u64) -> CMat {
        u3(1.1 + seed as f64 * 0.37, 0.4 + seed as f64, 1.7 - seed as f64 * 0.21)
    }

    #[test]
    fn markov_identity_is_bell_pair_product() {
        let pt = ProcessTensor::markov(&[Channel::identity(2)], &zero_state()).unwrap();
        assert_eq!(pt.dim(), 8);
        assert!((pt.mat.trace().re - 2.0).abs() < 1e-12);
        // Choi of identity = 2 |Phi+><Phi+|
        let bell = pure_state(&[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .scale_re(2.0);
        let want = bell.kron(&zero_state());
        assert!((&pt.mat - &want).max_abs() < 1e-12);
    }

    #[test]
    fn markov_purity_and_causality() {
        let chans = vec![
            Channel::from_unitary(&random_unitary(1)).unwrap(),
            Channel::from_unitary(&random_unitary(2)).unwrap(),
        ];
        let pt = ProcessTensor::markov(&chans, &zero_state()).unwrap();
        let norm = pt.normalized();
        let purity = norm.matmul(&norm).trace().re;
        assert!((purity - 1.0).abs() < 1e-10, "purity {purity}");
        for r in pt.causality_residual().unwrap() {
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn born_rule_identity_process() {
        let pt = ProcessTensor::markov(&[Channel::identity(2)], &zero_state()).unwrap();
        // op that replaces with |0><0|: Choi = |0><0| (x) I (trace over input)
        let prep0 = Channel::from_kraus(
            &[ket_proj(0), {
                // |0><1|
                CMat::from_fn(2, 2, |i, j| {
                    if i == 0 && j == 1 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }],
            2,
            2,
        );
        let seq = OpSequence::new(vec![prep0.choi().clone()]);
        let p = pt.born_rule(&seq, &ket_proj(0)).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        // identity op, effect |1><1| on |0> input: 0
        let idseq = OpSequence::identity(1, 2);
        let p1 = pt.born_rule(&idseq, &ket_proj(1)).unwrap();
        assert!(p1.abs() < 1e-12);
    }

    #[test]
    fn born_rule_depolarising() {
        let pt = ProcessTensor::markov(&[Channel::depolarizing(2, 1.0)], &zero_state()).unwrap();
        let seq = OpSequence::identity(1, 2);
        for b in 0..2 {
            let p = pt.born_rule(&seq, &ket_proj(b)).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn born_rule_matches_sequential_evolution() {
        // Markov chain: p from born_rule equals applying ops and channels in turn
        let u1 = random_unitary(3);
        let u2 = random_unitary(4);
        let chans =
            vec![Channel::from_unitary(&u1).unwrap(), Channel::from_unitary(&u2).unwrap()];
        let rho0 = pure_state(&[C64::new(0.8, 0.1), C64::new(0.3, -0.5)]);
        let pt = ProcessTensor::markov(&chans, &rho0).unwrap();

        let a0 = Channel::from_unitary(&hadamard()).unwrap();
        let a1 = Channel::depolarizing(2, 0.3);
        let effect = pure_state(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);

        let seq = OpSequence::new(vec![a0.choi().clone(), a1.choi().clone()]);
        let p = pt.born_rule(&seq, &effect).unwrap();

        let mut rho = rho0.clone();
        rho = a0.apply(&rho).unwrap();
        rho = chans[0].apply(&rho).unwrap();
        rho = a1.apply(&rho).unwrap();
        rho = chans[1].apply(&rho).unwrap();
        let want = effect.matmul(&rho).trace().re;
        assert!((p - want).abs() < 1e-12, "{p} vs {want}");

        // apply_process consistency
        let out = pt.apply(&seq).unwrap();
        assert!((&out - &rho).max_abs() < 1e-12);
        assert!((effect.matmul(&out).trace().re - p).abs() < 1e-12);
    }

    #[test]
    fn apply_process_trace_halving() {
        let pt = ProcessTensor::markov(&[Channel::identity(2)], &zero_state()).unwrap();
        // CPTNI op: project onto |0>, keep (trace-halving on maximally mixed,
        // trace-preserving on |0>): use measurement of |+> on input |0> -> 1/2
        let proj_plus = Channel::from_kraus(&[crate::gates::plus_state()], 2, 2);
        let seq = OpSequence::new(vec![proj_plus.choi().clone()]);
        let out = pt.apply(&seq).unwrap();
        assert!((out.trace().re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn povm_completeness_sums_to_one() {
        let chans = vec![
            Channel::from_unitary(&random_unitary(5)).unwrap(),
            Channel::from_unitary(&random_unitary(6)).unwrap(),
        ];
        let pt = ProcessTensor::markov(&chans, &maximally_mixed(2)).unwrap();
        let seq = OpSequence::new(vec![
            Channel::depolarizing(2, 0.2).choi().clone(),
            Channel::from_unitary(&hadamard()).unwrap().choi().clone(),
        ]);
        let total: f64 =
            (0..2).map(|b| pt.born_rule(&seq, &ket_proj(b)).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn causality_detects_explicit_violation() {
        let pt = ProcessTensor::markov(
            &[Channel::identity(2), Channel::identity(2)],
            &zero_state(),
        )
        .unwrap();
        // a string with identity on and above out_1 but X on in_1 survives
        // the future trace yet cannot come from I (x) (earlier process):
        // exactly a step-1 causality violation
        let eps = 1e-3;
        let viol = string_mat(&[0, 0, 0, 1, 0]).scale_re(eps);
        let bad = ProcessTensor::new(pt.layout, &pt.mat + &viol).unwrap();
        let res = bad.causality_residual().unwrap();
        assert!(res[0] > eps / 2.0, "step-1 residual {:?}", res);
        // the step-2 check traces over legs 0..2 entirely, so only the step-1
        // entry moves
        assert!(res[1] < 1e-10);
    }

    #[test]
    fn marginals_recover_channels() {
        let chans = vec![
            Channel::from_unitary(&random_unitary(7)).unwrap(),
            Channel::depolarizing(2, 0.35),
        ];
        let pt = ProcessTensor::markov(&chans, &zero_state()).unwrap();
        for j in 1..=2 {
            let got = pt.step_channel(j).unwrap();
            assert!((&got - chans[j - 1].choi()).max_abs() < 1e-12);
        }
        // full trace
        let all = pt.marginal(&[]).unwrap();
        assert!((all.0[(0, 0)].re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn conditioning_composes_channels() {
        let u1 = random_unitary(8);
        let u2 = random_unitary(9);
        let v = random_unitary(10);
        let rho0 = pure_state(&[C64::new(0.28, -0.4), C64::new(0.87, 0.0)]);
        let chans =
            vec![Channel::from_unitary(&u1).unwrap(), Channel::from_unitary(&u2).unwrap()];
        let pt = ProcessTensor::markov(&chans, &rho0).unwrap();

        let vch = Channel::from_unitary(&v).unwrap();
        let cond = pt.condition_on_operation(1, vch.choi()).unwrap();
        assert_eq!(cond.k(), 1);

        // should equal the one-step Markov process with channel U2 V U1
        let composed = Channel::from_unitary(&u2.matmul(&v).matmul(&u1)).unwrap();
        let rho1 = rho0.clone();
        let want = ProcessTensor::markov(&[composed], &rho1).unwrap();
        assert!((&cond.mat - &want.mat).max_abs() < 1e-10);
    }

    #[test]
    fn conditioning_commutes_with_born_rule() {
        let chans = vec![
            Channel::from_unitary(&random_unitary(11)).unwrap(),
            Channel::depolarizing(2, 0.15),
        ];
        let pt = ProcessTensor::markov(&chans, &zero_state()).unwrap();
        let v = Channel::from_unitary(&random_unitary(12)).unwrap();
        let a0 = Channel::from_unitary(&random_unitary(13)).unwrap();
        let effect = ket_proj(0);

        let full_seq = OpSequence::new(vec![a0.choi().clone(), v.choi().clone()]);
        let p_full = pt.born_rule(&full_seq, &effect).unwrap();

        let cond = pt.condition_on_operation(1, v.choi()).unwrap();
        let p_cond =
            cond.born_rule(&OpSequence::new(vec![a0.choi().clone()]), &effect).unwrap();
        assert!((p_full - p_cond).abs() < 1e-12);
    }
}
