//! Ground-truth generation for multi-time processes.
//!
//! A closed system–environment model fixes everything the experimenter does
//! not control: the joint initial state and the joint unitary applied during
//! each step. This module evolves such models exactly, extracts the process
//! state they induce (by feeding one half of a fresh Bell pair through every
//! step), and provides the two concrete physical scenarios exercised across
//! the workspace — a dynamically decoupled spin sensor and an
//! ancilla-mediated instrument factory — plus seeded multinomial shot noise.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::gates::{ket, ket_proj, maximally_mixed, phase_s, plus_i_state, rx, u3};
use crate::layout::{Leg, LegLayout};
use crate::linalg::{eigh_vals, expm_i_h};
use crate::mat::{conjugate_on_legs, partial_trace, permute_legs, CMat};
use crate::pauli::pauli_mat;
use crate::process::{OpSequence, ProcessTensor};

/// Hard cap on any Hilbert-space dimension the exact constructions will
/// build (the equivalent of 14 qubits).
const MAX_TOTAL_DIM: usize = 1 << 14;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Closed system–environment dynamics: a joint initial state (system factor
/// first) and one joint unitary per step.
#[derive(Clone, Debug)]
pub struct SEModel {
    d_s: usize,
    d_e: usize,
    rho0_se: CMat,
    step_unitaries: Vec<CMat>,
}

impl SEModel {
    /// Validates the initial state (Hermitian, PSD, unit trace) and every
    /// step unitary (square on the joint space, unitary to 1e-10).
    pub fn new(
        d_s: usize,
        d_e: usize,
        rho0_se: CMat,
        step_unitaries: Vec<CMat>,
    ) -> Result<Self> {
        if d_s < 2 || d_e < 1 {
            return Err(Error::Config("system dim must be >= 2 and env dim >= 1".into()));
        }
        let dim = d_s * d_e;
        if rho0_se.nrows() != dim || rho0_se.ncols() != dim {
            return Err(Error::DimMismatch(format!(
                "initial state is {}x{} but dS*dE = {dim}",
                rho0_se.nrows(),
                rho0_se.ncols()
            )));
        }
        let rho0_se = rho0_se.hermitize(1e-8)?;
        if (rho0_se.trace().re - 1.0).abs() > 1e-8 {
            return Err(Error::Data(format!(
                "initial state trace {} != 1",
                rho0_se.trace().re
            )));
        }
        let min = eigh_vals(&rho0_se)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::Data(format!(
                "initial state has negative eigenvalue {min:.3e}"
            )));
        }
        let eye = CMat::identity(dim);
        for (j, u) in step_unitaries.iter().enumerate() {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimMismatch(format!(
                    "step {j} unitary is {}x{} but dS*dE = {dim}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let dev = (&u.dagger().matmul(u) - &eye).max_abs();
            if dev > 1e-10 {
                return Err(Error::Data(format!(
                    "step {j} deviates from unitarity by {dev:.3e}"
                )));
            }
        }
        Ok(SEModel { d_s, d_e, rho0_se, step_unitaries })
    }

    /// Same joint unitary repeated for `k` steps.
    pub fn uniform(d_s: usize, d_e: usize, rho0_se: CMat, u: CMat, k: usize) -> Result<Self> {
        SEModel::new(d_s, d_e, rho0_se, vec![u; k])
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn rho0(&self) -> &CMat {
        &self.rho0_se
    }

    pub fn steps(&self) -> &[CMat] {
        &self.step_unitaries
    }

    pub fn num_steps(&self) -> usize {
        self.step_unitaries.len()
    }
}

/// Exchange coupling exp(−i(θ/2)(XX + YY + ZZ)) between two qubits: the
/// identity at θ = 0, √SWAP at θ = π/4 and SWAP at θ = π/2, each up to a
/// global phase.
pub fn heisenberg_interaction(theta: f64) -> CMat {
    // XX + YY + ZZ = 2·SWAP − I and SWAP² = I, so the exponential closes in
    // span{I, SWAP}: V(θ) = e^{iθ/2}(cos θ · I − i sin θ · SWAP).
    let phase = C64::from_polar(1.0, theta / 2.0);
    let eye = CMat::identity(4).scale(phase * c(theta.cos(), 0.0));
    let sw = crate::gates::swap().scale(phase * c(0.0, -theta.sin()));
    &eye + &sw
}

/// Unnormalised maximally entangled pair Σ_ab |aa><bb| on two d-dim legs.
fn bell_pair(d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |r, s| {
        if r % (d + 1) == 0 && s % (d + 1) == 0 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Evolve the Bell-pair construction chronologically. Returns the joint state
/// on legs [out_0, env, in_1, out_1, ..., in_k, out_k] with the system factor
/// of each step written into the trailing leg.
fn evolve_cji(model: &SEModel, k: usize) -> Result<(CMat, Vec<usize>)> {
    if model.num_steps() < k {
        return Err(Error::Config(format!(
            "model has {} step unitaries but {k} steps requested",
            model.num_steps()
        )));
    }
    let total = model
        .d_s
        .checked_pow(2 * k as u32 + 1)
        .and_then(|p| p.checked_mul(model.d_e));
    if !matches!(total, Some(t) if t <= MAX_TOTAL_DIM) {
        return Err(Error::Config(format!(
            "construction dimension dS^(2k+1)·dE exceeds the cap of {MAX_TOTAL_DIM}"
        )));
    }
    let mut state = model.rho0_se.clone();
    let mut dims = vec![model.d_s, model.d_e];
    let pair = bell_pair(model.d_s);
    for u in model.step_unitaries.iter().take(k) {
        state = state.kron(&pair);
        dims.push(model.d_s);
        dims.push(model.d_s);
        let live = dims.len() - 1;
        state = conjugate_on_legs(&state, u, &dims, &[live, 1])?;
    }
    Ok((state, dims))
}

/// Exact process state of `model` over `k` steps: each step input is the
/// retained half of a fresh Bell pair, each step output the evolved half, and
/// the environment is traced once the last step has acted.
pub fn exact_process_tensor(model: &SEModel, k: usize) -> Result<ProcessTensor> {
    let (state, dims) = evolve_cji(model, k)?;
    let keep: Vec<usize> = (0..dims.len()).filter(|&p| p != 1).collect();
    let traced = partial_trace(&state, &dims, &keep)?;
    let tdims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let perm: Vec<usize> = (0..tdims.len()).rev().collect();
    let mat = permute_legs(&traced, &tdims, &perm)?;
    ProcessTensor::new(LegLayout::new(k, model.d_s), mat)
}

/// Variant of [`exact_process_tensor`] that keeps the environment glued to
/// the final output, which then carries dimension dS·dE (system factor
/// first within the leg).
pub fn exact_process_tensor_keep_env(model: &SEModel, k: usize) -> Result<ProcessTensor> {
    if k == 0 {
        return Err(Error::Config("keep-env construction needs at least one step".into()));
    }
    let (state, dims) = evolve_cji(model, k)?;
    let n = dims.len(); // 2k + 2 legs, chronological
    let mut perm = Vec::with_capacity(n);
    perm.push(n - 1); // final system output
    perm.push(1); // environment, glued directly behind it
    perm.extend((2..n - 1).rev());
    perm.push(0);
    let mat = permute_legs(&state, &dims, &perm)?;
    let layout = LegLayout { k, d: model.d_s, final_out_dim: model.d_s * model.d_e };
    ProcessTensor::new(layout, mat)
}

/// Marginal of the exact process state on the legs in `keep` (returned in
/// layout order, latest first), computed without materialising the full
/// state: every leg outside the window is traced out as soon as the dynamics
/// can no longer touch it.
pub fn exact_marginal(model: &SEModel, k: usize, keep: &[Leg]) -> Result<CMat> {
    let layout = LegLayout::new(k, model.d_s);
    for (i, leg) in keep.iter().enumerate() {
        layout.pos(*leg)?;
        if keep[..i].contains(leg) {
            return Err(Error::Config(format!("duplicate leg {leg:?} in marginal window")));
        }
    }
    if model.num_steps() < k {
        return Err(Error::Config(format!(
            "model has {} step unitaries but {k} steps requested",
            model.num_steps()
        )));
    }
    let wanted = |leg: Leg| keep.contains(&leg);
    let mut state = model.rho0_se.clone();
    // legs stay in chronological order; frozen legs outside the window are
    // traced immediately, so only (window so far) + system + environment live
    let mut dims = vec![model.d_s, model.d_e];
    let mut sys = 0usize;
    let mut env = 1usize;
    let drop_leg = |state: &mut CMat,
                    dims: &mut Vec<usize>,
                    sys: &mut usize,
                    env: &mut usize,
                    at: usize|
     -> Result<()> {
        let hold: Vec<usize> = (0..dims.len()).filter(|&p| p != at).collect();
        *state = partial_trace(state, dims, &hold)?;
        dims.remove(at);
        if *sys > at {
            *sys -= 1;
        }
        if *env > at {
            *env -= 1;
        }
        Ok(())
    };
    for j in 1..=k {
        // the previous live system leg freezes as out_{j-1}
        if !wanted(Leg::Out(j - 1)) {
            let at = sys;
            drop_leg(&mut state, &mut dims, &mut sys, &mut env, at)?;
        }
        // swap in the next input: a Bell half if the input leg is retained,
        // otherwise its trace (the identity) directly
        if wanted(Leg::In(j)) {
            state = state.kron(&bell_pair(model.d_s));
            dims.extend([model.d_s, model.d_s]);
        } else {
            state = state.kron(&CMat::identity(model.d_s));
            dims.push(model.d_s);
        }
        sys = dims.len() - 1;
        let total: usize = dims.iter().product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::Config(format!(
                "marginal window grows past the dimension cap of {MAX_TOTAL_DIM}"
            )));
        }
        state = conjugate_on_legs(&state, &model.step_unitaries[j - 1], &dims, &[sys, env])?;
    }
    if !wanted(Leg::Out(k)) {
        let at = sys;
        drop_leg(&mut state, &mut dims, &mut sys, &mut env, at)?;
    }
    let at = env;
    drop_leg(&mut state, &mut dims, &mut sys, &mut env, at)?;
    // remaining legs are chronological; layout order is the exact reverse
    let perm: Vec<usize> = (0..dims.len()).rev().collect();
    permute_legs(&state, &dims, &perm)
}

/// Evolve the joint state through interleaved control operations (given as
/// Choi states on the system) and the model's step unitaries; returns the
/// joint state after the last step.
pub fn run_to_state(model: &SEModel, seq: &OpSequence) -> Result<CMat> {
    let k = seq.len();
    if model.num_steps() < k {
        return Err(Error::Config(format!(
            "model has {} step unitaries but the sequence has {k} slots",
            model.num_steps()
        )));
    }
    seq.validate_cp(1e-8)?;
    let dim = model.d_s * model.d_e;
    let eye_e = CMat::identity(model.d_e);
    let mut rho = model.rho0_se.clone();
    for (j, op) in seq.ops.iter().enumerate() {
        let ch = Channel::from_choi(op.clone(), model.d_s, model.d_s)?;
        let mut next = CMat::zeros(dim, dim);
        for kr in ch.kraus(1e-12)? {
            let lifted = kr.kron(&eye_e);
            next = &next + &lifted.matmul(&rho).matmul(&lifted.dagger());
        }
        let u = &model.step_unitaries[j];
        rho = u.matmul(&next).matmul(&u.dagger());
    }
    Ok(rho)
}

/// Probability of the system effect after running `seq` through the model:
/// Tr[(Π ⊗ I_E) ρ_final].
pub fn run_sequence(model: &SEModel, seq: &OpSequence, effect: &CMat) -> Result<f64> {
    if effect.nrows() != model.d_s || effect.ncols() != model.d_s {
        return Err(Error::DimMismatch(format!(
            "effect is {}x{} but the system dim is {}",
            effect.nrows(),
            effect.ncols(),
            model.d_s
        )));
    }
    let rho = run_to_state(model, seq)?;
    let lifted = effect.hermitize(1e-8)?.kron(&CMat::identity(model.d_e));
    Ok(lifted.inner_re(&rho))
}

/// Multinomial draw from `dist`, reproducible for a given (seed, stream) key;
/// parallel callers should key the stream by circuit index so evaluation
/// order never changes results.
pub fn sample_counts_keyed(dist: &[f64], shots: u64, seed: u64, stream: u64) -> Result<Vec<u64>> {
    if dist.is_empty() {
        return Err(Error::Data("empty distribution".into()));
    }
    let mut sum = 0.0;
    for &p in dist {
        if p < -1e-9 {
            return Err(Error::Data(format!("negative probability {p:.3e}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::Data(format!("distribution sums to {sum}, not 1")));
    }
    let mut cum = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    let clamped_total: f64 = dist.iter().map(|p| p.max(0.0)).sum();
    for &p in dist {
        acc += p.max(0.0) / clamped_total;
        cum.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; dist.len()];
    for _ in 0..shots {
        let x: f64 = rng.gen();
        let idx = cum.partition_point(|&q| q <= x).min(dist.len() - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// [`sample_counts_keyed`] on the default stream.
pub fn sample_counts(dist: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    sample_counts_keyed(dist, shots, seed, 0)
}

/// Axis of an instantaneous π pulse in a decoupling sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PulseAxis {
    X,
    Y,
}

impl PulseAxis {
    fn matrix(self) -> CMat {
        match self {
            PulseAxis::X => pauli_mat(1),
            PulseAxis::Y => pauli_mat(2),
        }
    }
}

/// Instantaneous π pulses placed at given fractions of one sequence block.
#[derive(Clone, Debug)]
pub struct PulseSchedule {
    fractions: Vec<f64>,
    axes: Vec<PulseAxis>,
}

impl PulseSchedule {
    pub fn new(fractions: Vec<f64>, axes: Vec<PulseAxis>) -> Result<Self> {
        if fractions.is_empty() || fractions.len() != axes.len() {
            return Err(Error::Config(
                "pulse fractions and axes must be non-empty and equal length".into(),
            ));
        }
        let mut prev = 0.0;
        for &f in &fractions {
            if f <= prev || f > 1.0 {
                return Err(Error::Config(format!(
                    "pulse fractions must increase strictly within (0, 1], got {fractions:?}"
                )));
            }
            prev = f;
        }
        Ok(PulseSchedule { fractions, axes })
    }

    /// X–Y–X–Y at quarter spacings, the standard four-pulse block.
    pub fn xy4() -> Self {
        PulseSchedule {
            fractions: vec![0.25, 0.5, 0.75, 1.0],
            axes: vec![PulseAxis::X, PulseAxis::Y, PulseAxis::X, PulseAxis::Y],
        }
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn axes(&self) -> &[PulseAxis] {
        &self.axes
    }
}

/// A single-qubit sensor coupled to one environment spin: H = ω_L·(I ⊗ σz)
/// + H_int with the system factor first, driven by a π-pulse schedule.
#[derive(Clone, Debug)]
pub struct SensingModel {
    omega_l: f64,
    g: f64,
    h_int: CMat,
    dd: PulseSchedule,
}

impl SensingModel {
    pub fn new(omega_l: f64, g: f64, h_int: CMat, dd: PulseSchedule) -> Result<Self> {
        if h_int.nrows() != 4 || h_int.ncols() != 4 {
            return Err(Error::DimMismatch(format!(
                "interaction must be 4x4, got {}x{}",
                h_int.nrows(),
                h_int.ncols()
            )));
        }
        let h_int = h_int.hermitize(1e-9)?;
        Ok(SensingModel { omega_l, g, h_int, dd })
    }

    /// Commuting coupling g·σy ⊗ σz: the environment spin only imprints a
    /// correlated classical ±g field on the sensor.
    pub fn classical_field(omega_l: f64, g: f64) -> Self {
        let h_int = pauli_mat(2).kron(&pauli_mat(3)).scale_re(g);
        SensingModel { omega_l, g, h_int, dd: PulseSchedule::xy4() }
    }

    /// Non-commuting coupling (g/2)(σz + σx) ⊗ (σz + σy), which lets the
    /// precessing environment build up genuine quantum correlations.
    pub fn quantum_field(omega_l: f64, g: f64) -> Self {
        let s = &pauli_mat(3) + &pauli_mat(1);
        let e = &pauli_mat(3) + &pauli_mat(2);
        let h_int = s.kron(&e).scale_re(g / 2.0);
        SensingModel { omega_l, g, h_int, dd: PulseSchedule::xy4() }
    }

    /// Full joint Hamiltonian in the sensor's rotating frame.
    pub fn hamiltonian(&self) -> CMat {
        let zeeman = CMat::identity(2).kron(&pauli_mat(3)).scale_re(self.omega_l);
        &zeeman + &self.h_int
    }

    pub fn omega_l(&self) -> f64 {
        self.omega_l
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.dd
    }
}

fn prep_state() -> CMat {
    let v = rx(std::f64::consts::FRAC_PI_2).matmul(&ket(&[c(1.0, 0.0), c(0.0, 0.0)]));
    v.matmul(&v.dagger())
}

/// Compose one decoupling block of duration `tau` into a two-step model:
/// free evolution segments under the joint Hamiltonian with the π pulses
/// folded in, split at the block midpoint. The sensor starts transverse
/// (rotated out of the pole by a π/2 pulse) and the environment spin is
/// maximally mixed.
pub fn sensing_step_unitaries(model: &SensingModel, tau: f64) -> Result<SEModel> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("block duration must be positive, got {tau}")));
    }
    let n = model.dd.len();
    if n % 2 != 0 {
        return Err(Error::Config(
            "pulse schedule must have an even pulse count to split into two steps".into(),
        ));
    }
    let h = model.hamiltonian();
    let eye_e = CMat::identity(2);
    let mut halves = Vec::with_capacity(2);
    let mut acc = CMat::identity(4);
    let mut prev = 0.0;
    for i in 0..n {
        let seg = (model.dd.fractions[i] - prev) * tau;
        prev = model.dd.fractions[i];
        let free = expm_i_h(&h, seg)?;
        let pulse = model.dd.axes[i].matrix().kron(&eye_e);
        acc = pulse.matmul(&free).matmul(&acc);
        if i == n / 2 - 1 {
            halves.push(acc);
            acc = CMat::identity(4);
        }
    }
    halves.push(acc);
    let rho0 = prep_state().kron(&maximally_mixed(2));
    SEModel::new(2, 2, rho0, halves)
}

/// Ground-state population of the sensor after `blocks` repetitions of the
/// decoupling block, swept over the pulse-train filter frequency
/// f = 1/(2Δt) where Δt is the inter-pulse spacing.
pub fn coherence_sweep(
    model: &SensingModel,
    frequencies: &[f64],
    blocks: usize,
) -> Result<Vec<f64>> {
    let mut curve = Vec::with_capacity(frequencies.len());
    let unprep = rx(-std::f64::consts::FRAC_PI_2).kron(&CMat::identity(2));
    let ground = ket_proj(0).kron(&CMat::identity(2));
    for &f in frequencies {
        if f <= 0.0 {
            return Err(Error::Config(format!("filter frequency must be positive, got {f}")));
        }
        let dt = 1.0 / (2.0 * f);
        let tau = dt * model.dd.len() as f64;
        let se = sensing_step_unitaries(model, tau)?;
        let block = se.steps()[1].matmul(&se.steps()[0]);
        let mut rho = se.rho0().clone();
        for _ in 0..blocks {
            rho = block.matmul(&rho).matmul(&block.dagger());
        }
        rho = unprep.matmul(&rho).matmul(&unprep.dagger());
        curve.push(ground.inner_re(&rho));
    }
    Ok(curve)
}

/// The two conditional system maps of the ancilla-mediated instrument,
/// labelled by the ancilla Z outcome.
#[derive(Clone, Debug)]
pub struct InstrumentPair {
    maps: [Channel; 2],
    theta: f64,
    phi: f64,
    lambda: f64,
    gamma: f64,
}

impl InstrumentPair {
    pub fn outcome(&self, x: usize) -> Result<&Channel> {
        self.maps.get(x).ok_or(Error::BadLeg { leg: x, num_legs: 2 })
    }

    /// (θ, φ, λ, γ) the pair was built from.
    pub fn params(&self) -> (f64, f64, f64, f64) {
        (self.theta, self.phi, self.lambda, self.gamma)
    }

    /// Choi state of the outcome-summed (deterministic) map.
    pub fn sum_choi(&self) -> CMat {
        self.maps[0].choi() + self.maps[1].choi()
    }
}

/// Cross-resonance chirp exp(−i(γ/2)·Z_S ⊗ X_A), system factor first.
fn cross_resonance(gamma: f64) -> CMat {
    // (Z ⊗ X)² = I, so the exponential closes in span{I, Z ⊗ X}.
    let half = gamma / 2.0;
    let eye = CMat::identity(4).scale(c(half.cos(), 0.0));
    let zx = pauli_mat(3).kron(&pauli_mat(1)).scale(c(0.0, -half.sin()));
    &eye + &zx
}

/// Ideal instrument circuit: ancilla prepared in (|0> + i|1>)/√2, a
/// cross-resonance chirp, an S gate on the ancilla together with U(θ, φ, λ)
/// on the system, a second chirp, and a projective Z measurement on the
/// ancilla. Returns the two conditional system maps.
pub fn instrument_circuit(theta: f64, phi: f64, lambda: f64, gamma: f64) -> Result<InstrumentPair> {
    let chirp = cross_resonance(gamma);
    let local = u3(theta, phi, lambda).kron(&phase_s());
    let w = chirp.matmul(&local).matmul(&chirp);
    let a0 = [c(1.0, 0.0) / c(2.0, 0.0).sqrt(), c(0.0, 1.0) / c(2.0, 0.0).sqrt()];
    let kraus_for = |x: usize| {
        CMat::from_fn(2, 2, |i, j| {
            (0..2).map(|b| w.0[(2 * i + x, 2 * j + b)] * a0[b]).sum()
        })
    };
    let maps = [
        Channel::from_kraus(&[kraus_for(0)], 2, 2),
        Channel::from_kraus(&[kraus_for(1)], 2, 2),
    ];
    let sum = Channel::from_choi(maps[0].choi() + maps[1].choi(), 2, 2)?;
    if sum.tp_deviation() > 1e-8 {
        return Err(Error::Data(format!(
            "instrument outcomes do not sum to a trace-preserving map (dev {:.3e})",
            sum.tp_deviation()
        )));
    }
    Ok(InstrumentPair { maps, theta, phi, lambda, gamma })
}

/// Reference transfer-matrix elements of the outcome-0 map at γ = π/4: the
/// three non-unital entries (x0, y0, z0) followed by the three
/// trace-decreasing entries (0x, 0y, 0z).
pub fn instrument_ptm_closed_form(theta: f64, phi: f64, lambda: f64) -> [f64; 6] {
    let rt2 = std::f64::consts::SQRT_2;
    let (st, ct) = theta.sin_cos();
    let (sh, chf) = (theta / 2.0).sin_cos();
    let (sq, cq) = (theta / 4.0).sin_cos();
    let x0 = rt2 / 2.0 * phi.cos() * st - 2.0 * cq * sq.powi(3) * phi.sin();
    let y0 = 0.25 * phi.cos() * (2.0 * sh - st) + rt2 / 2.0 * st * phi.sin();
    let z0 = (-1.0 + 5.0 * ct) / 8.0;
    let ox = sh * (rt2 * lambda.cos() * sq * sq + cq * cq * lambda.sin());
    let oy = 0.5 * sh * ((1.0 + chf) * lambda.cos() - rt2 * (1.0 - chf) * lambda.sin());
    let oz = (3.0 + ct) / 8.0;
    [x0, y0, z0, ox, oy, oz]
}

/// Characterisation state for the instrument circuit: a two-step process
/// state whose first slot takes the system preparation, whose second slot
/// takes the local unitary, and whose final output keeps the ancilla
/// (system ⊗ ancilla).
pub fn instrument_upsilon(gamma: f64) -> Result<ProcessTensor> {
    let chirp = cross_resonance(gamma);
    let u1 = CMat::identity(2).kron(&phase_s()).matmul(&chirp);
    let rho0 = ket_proj(0).kron(&plus_i_state());
    let model = SEModel::new(2, 2, rho0, vec![u1, chirp])?;
    exact_process_tensor_keep_env(&model, 2)
}

/// Reconstruct the outcome-`x` map for an arbitrary local unitary `u` from a
/// characterisation state: slot each preparation unitary and `u` in, project
/// the ancilla onto |x>, and resum the conditional outputs against the dual
/// operators of the prepared states.
pub fn bootstrap_instrument(
    upsilon_i: &ProcessTensor,
    x: usize,
    u: &CMat,
    preps: &[CMat],
    duals: &[CMat],
) -> Result<CMat> {
    if preps.is_empty() || preps.len() != duals.len() {
        return Err(Error::Config(
            "need equally many preparation unitaries and dual operators".into(),
        ));
    }
    if upsilon_i.k() != 2 {
        return Err(Error::Config(format!(
            "characterisation state must have two steps, got {}",
            upsilon_i.k()
        )));
    }
    let d = u.nrows();
    let final_dim = upsilon_i.layout.final_out_dim;
    if final_dim % d != 0 {
        return Err(Error::DimMismatch(format!(
            "final output dim {final_dim} does not factor over the system dim {d}"
        )));
    }
    let d_a = final_dim / d;
    if x >= d_a {
        return Err(Error::BadLeg { leg: x, num_legs: d_a });
    }
    // frame check: the duals must reconstruct operators prepared by `preps`
    let e0 = CMat::from_fn(d, 1, |i, _| if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let states: Vec<CMat> = preps
        .iter()
        .map(|p| {
            let v = p.matmul(&e0);
            v.matmul(&v.dagger())
        })
        .collect();
    let mut gram = CMat::zeros(d * d, d * d);
    for (rho, w) in states.iter().zip(duals) {
        for m in 0..d * d {
            for nn in 0..d * d {
                gram.0[(m, nn)] +=
                    rho.0[(m / d, m % d)] * w.0[(nn / d, nn % d)].conj();
            }
        }
    }
    if (&gram - &CMat::identity(d * d)).max_abs() > 1e-6 {
        return Err(Error::Config(
            "preparation set and duals do not form a reconstructing frame".into(),
        ));
    }
    let u_choi = Channel::from_unitary(u)?.choi().clone();
    let ancilla_proj = CMat::from_fn(d_a, d_a, |i, j| {
        if i == x && j == x {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let project = CMat::identity(d).kron(&ancilla_proj);
    let mut lam = CMat::zeros(d * d, d * d);
    for (p, w) in preps.iter().zip(duals) {
        let p_choi = Channel::from_unitary(p)?.choi().clone();
        let seq = OpSequence::new(vec![p_choi, u_choi.clone()]);
        let out = upsilon_i.apply(&seq)?;
        let cond = partial_trace(&out.matmul(&project), &[d, d_a], &[0])?;
        lam = &lam + &cond.kron(&w.t());
    }
    Ok(lam)
}
