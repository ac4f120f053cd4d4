//! Temporal entanglement witnesses restricted to the unitary-accessible
//! observable space, with an entanglement-monotone variant.
//!
//! Sequences of unitaries with one terminating measurement only reveal a
//! process state on the span of weight-2 Pauli strings per intervention
//! pair plus an arbitrary Pauli on the final output leg. A witness
//! constrained to that span evaluates identically on every member of the
//! family consistent with the data, so a negative expectation certifies
//! temporal entanglement without complete tomography. The witness is the
//! minimiser of <W, Y> over all W admitting a decomposition
//! W = P_M + Q_M^(G_M) with P_M, Q_M PSD for every partition M, found by
//! projected subgradient descent with a Dykstra feasibility stage.

use crate::error::{Error, Result};
use crate::layout::{Leg, LegLayout};
use crate::linalg::{eigh, rebuild_re};
use crate::mat::{partial_transpose, CMat};
use crate::measures::Bipartition;
use crate::pauli::{matrix_to_pauli, pauli_to_matrix, string_digits};
use crate::process::ProcessTensor;
use crate::simulator::{
    coherence_sweep, exact_process_tensor, sensing_step_unitaries, SensingModel,
};

/// Expectation below which a witness counts as having detected entanglement.
pub const DETECTION_LEVEL: f64 = -1e-6;

/// The observable span reachable with unitary probes: every intervention
/// pair carries identity-identity or a weight-2 Pauli pair, and the final
/// output leg carries any single Pauli.
#[derive(Clone, Debug)]
pub struct RestrictedSpace {
    legs: usize,
    mask: Vec<bool>,
    members: usize,
}

impl RestrictedSpace {
    pub fn new(layout: &LegLayout) -> Result<Self> {
        if layout.d != 2 || layout.final_out_dim != 2 {
            return Err(Error::Config("restricted span is defined for qubit legs".into()));
        }
        let legs = 2 * layout.k + 1;
        if legs > 9 {
            return Err(Error::Config(format!(
                "restricted span mask over {legs} legs is out of scope"
            )));
        }
        let total = 1usize << (2 * legs);
        let mut mask = vec![false; total];
        let mut members = 0;
        for (idx, slot) in mask.iter_mut().enumerate() {
            let digits = string_digits(idx, legs);
            let ok = (0..layout.k).all(|m| {
                let a = digits[2 * m + 1];
                let b = digits[2 * m + 2];
                (a == 0) == (b == 0)
            });
            if ok {
                *slot = true;
                members += 1;
            }
        }
        Ok(RestrictedSpace { legs, mask, members })
    }

    /// Number of member strings: 4·(d⁴−2d²+2)^k.
    pub fn dim(&self) -> usize {
        self.members
    }

    pub fn contains(&self, digits: &[u8]) -> bool {
        digits.len() == self.legs && self.mask[crate::pauli::string_index(digits)]
    }

    /// Zero every coefficient outside the span.
    fn keep(&self, c: &mut [f64]) {
        for (v, &m) in c.iter_mut().zip(&self.mask) {
            if !m {
                *v = 0.0;
            }
        }
    }

    /// Zero every coefficient inside the span (complement projection).
    fn kill(&self, c: &mut [f64]) {
        for (v, &m) in c.iter_mut().zip(&self.mask) {
            if m {
                *v = 0.0;
            }
        }
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, m: &CMat) -> Result<CMat> {
        let mut c = matrix_to_pauli(m, self.legs)?;
        self.keep(&mut c);
        pauli_to_matrix(&c, self.legs)
    }

    /// Frobenius distance to the span.
    pub fn residual(&self, m: &CMat) -> Result<f64> {
        Ok((&self.project(m)? - m).fro_norm())
    }
}

/// Orthogonal projection of an observable onto the unitary-accessible span.
pub fn restricted_projection(o: &CMat, layout: &LegLayout) -> Result<CMat> {
    RestrictedSpace::new(layout)?.project(o)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessMode {
    /// Normalised witness, Tr W = 1: sign-level detection.
    Witness,
    /// Box-bounded decomposition, P, Q ⪯ I: −value lower-bounds the
    /// negativity across the partition in the bipartite case.
    Monotone,
}

/// A minimisation target: the restricted expectations of a process, the
/// partitions whose partial transposes the witness must decompose across,
/// and the normalisation convention.
#[derive(Clone, Debug)]
pub struct WitnessProblem {
    target: CMat,
    layout: LegLayout,
    space: RestrictedSpace,
    partitions: Vec<Bipartition>,
    flips: Vec<Vec<usize>>,
    mode: WitnessMode,
}

impl WitnessProblem {
    /// Restrict the trace-normalised process state and record the
    /// partitions. More partitions mean a stricter witness: detection then
    /// certifies entanglement across every listed split at once.
    pub fn new(
        pt: &ProcessTensor,
        partitions: Vec<Bipartition>,
        mode: WitnessMode,
    ) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::Config("witness needs at least one partition".into()));
        }
        let space = RestrictedSpace::new(&pt.layout)?;
        let target = space.project(&pt.normalized())?;
        let flips = partitions
            .iter()
            .map(|p| p.flip_positions(&pt.layout))
            .collect::<Result<Vec<_>>>()?;
        Ok(WitnessProblem { target, layout: pt.layout, space, partitions, flips, mode })
    }

    pub fn partitions(&self) -> &[Bipartition] {
        &self.partitions
    }

    pub fn mode(&self) -> WitnessMode {
        self.mode
    }

    /// The restricted expectation data the witness is optimised against.
    pub fn target(&self) -> &CMat {
        &self.target
    }
}

/// Every unordered bipartition of the given leg groups (each group stays
/// whole), as needed for a genuinely-multipartite witness: 2^(n−1) − 1
/// splits for n groups.
pub fn gme_partitions(parties: &[Vec<Leg>]) -> Result<Vec<Bipartition>> {
    let n = parties.len();
    if n < 2 {
        return Err(Error::Config("need at least two leg groups".into()));
    }
    let mut out = Vec::new();
    for mask in 0..(1usize << n) {
        if mask & 1 == 0 || mask == (1 << n) - 1 {
            continue;
        }
        let legs: Vec<Leg> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .flat_map(|i| parties[i].iter().copied())
            .collect();
        out.push(Bipartition::Legs(legs));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct WitnessConfig {
    /// Total Dykstra sweep budget across the whole minimisation.
    pub max_sweeps: usize,
    /// Feasibility tolerance on PSD constraints of the returned witness.
    pub tol: f64,
    /// Tolerance on membership of the returned witness in the span.
    pub subspace_tol: f64,
    /// Base gradient step, relative to the target's Frobenius norm.
    pub step: f64,
    /// Dykstra sweeps spent per gradient step.
    pub inner_sweeps: usize,
    /// Supergradient ascent steps for the dual certificate; 0 skips it.
    pub dual_steps: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            max_sweeps: 5000,
            tol: 1e-6,
            subspace_tol: 1e-8,
            step: 1.0,
            inner_sweeps: 110,
            dual_steps: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WitnessOutcome {
    /// Minimised expectation <W, Y>; negative beyond [`DETECTION_LEVEL`]
    /// certifies entanglement across every partition of the problem.
    pub value: f64,
    pub witness: CMat,
    pub detected: bool,
    /// Worst PSD violation over all decomposition constraints.
    pub psd_residual: f64,
    /// Frobenius distance of the witness from the restricted span.
    pub subspace_residual: f64,
    /// Deviation from the mode's normalisation (trace in witness mode).
    pub norm_residual: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Lagrangian lower bound on the optimal value, when requested; the
    /// gap `value − dual_bound` certifies near-optimality.
    pub dual_bound: Option<f64>,
}

fn clamp_spectrum(m: &CMat, lo: f64, hi: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild_re(&vals, &vecs, |v| v.clamp(lo, hi)))
}

fn min_eig(m: &CMat) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
}

fn max_eig(m: &CMat) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    Ok(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Solver state: the witness candidate and one auxiliary PSD factor per
/// partition, with Dykstra correction terms for each constraint set.
struct Splitter<'a> {
    problem: &'a WitnessProblem,
    dims: Vec<usize>,
    upper: f64,
    w: CMat,
    q: Vec<CMat>,
    corr_aff: CMat,
    corr_joint: Vec<(CMat, CMat)>,
    corr_box: Vec<CMat>,
}

impl<'a> Splitter<'a> {
    fn new(problem: &'a WitnessProblem) -> Self {
        let dim = problem.layout.total_dim();
        let m = problem.flips.len();
        let upper = match problem.mode {
            WitnessMode::Witness => f64::INFINITY,
            WitnessMode::Monotone => 1.0,
        };
        Splitter {
            problem,
            dims: problem.layout.dims(),
            upper,
            w: CMat::identity(dim).scale_re(1.0 / dim as f64),
            q: vec![CMat::zeros(dim, dim); m],
            corr_aff: CMat::zeros(dim, dim),
            corr_joint: vec![(CMat::zeros(dim, dim), CMat::zeros(dim, dim)); m],
            corr_box: vec![CMat::zeros(dim, dim); m],
        }
    }

    /// Exact projection onto {W in the span} (+ unit trace in witness
    /// mode): the trace direction lies inside the span, so fixing the
    /// identity coefficient after masking is still orthogonal.
    fn affine(&self, m: &CMat) -> Result<CMat> {
        let mut c = matrix_to_pauli(m, self.problem.space.legs)?;
        self.problem.space.keep(&mut c);
        if self.problem.mode == WitnessMode::Witness {
            c[0] = 1.0;
        }
        pauli_to_matrix(&c, self.problem.space.legs)
    }

    /// One Dykstra cycle over all constraint sets, ending on the affine
    /// set so the witness leaves every sweep exactly inside the span.
    /// Returns how far the variables moved.
    fn sweep(&mut self) -> Result<f64> {
        let w_before = self.w.clone();
        let mut moved = 0.0f64;
        for (m, flip) in self.problem.flips.iter().enumerate() {
            // joint set {(W, Q): clamp bounds on W − Q^G}: the defect map
            // A(W,Q) = W − Q^G has AA† = 2·id, so the lifted projection is
            // closed-form in the clamped residual
            let uw = &self.w + &self.corr_joint[m].0;
            let uq = &self.q[m] + &self.corr_joint[m].1;
            let r = &uw - &partial_transpose(&uq, &self.dims, flip)?;
            let delta = &clamp_spectrum(&r, 0.0, self.upper)? - &r;
            let half = delta.scale_re(0.5);
            let half_t = partial_transpose(&half, &self.dims, flip)?;
            self.w = &uw + &half;
            self.q[m] = &uq - &half_t;
            self.corr_joint[m] = (half.scale_re(-1.0), half_t);

            // box set on the auxiliary factor alone
            let u = &self.q[m] + &self.corr_box[m];
            let y = clamp_spectrum(&u, 0.0, self.upper)?;
            self.corr_box[m] = &u - &y;
            moved = moved.max((&y - &self.q[m]).fro_norm());
            self.q[m] = y;
        }
        let u = &self.w + &self.corr_aff;
        let y = self.affine(&u)?;
        self.corr_aff = &u - &y;
        self.w = y;
        Ok(moved.max((&self.w - &w_before).fro_norm()))
    }

    /// Run sweeps until the variables stall or the budget is spent.
    fn settle(&mut self, budget: usize, tol: f64) -> Result<usize> {
        for used in 1..=budget {
            if self.sweep()? < tol {
                return Ok(used);
            }
        }
        Ok(budget)
    }

    /// Drop all Dykstra corrections, so the next [`Splitter::settle`] is a
    /// fresh projection of the current variables.
    fn clear_corrections(&mut self) {
        let dim = self.w.nrows();
        self.corr_aff = CMat::zeros(dim, dim);
        for c in &mut self.corr_joint {
            *c = (CMat::zeros(dim, dim), CMat::zeros(dim, dim));
        }
        for c in &mut self.corr_box {
            *c = CMat::zeros(dim, dim);
        }
    }

    /// Worst violations of the certificate: (PSD/box residual, norm
    /// residual). The subspace residual is measured separately.
    fn residuals(&self) -> Result<(f64, f64)> {
        let mut psd = 0.0f64;
        for (m, flip) in self.problem.flips.iter().enumerate() {
            let p = &self.w - &partial_transpose(&self.q[m], &self.dims, flip)?;
            psd = psd.max(-min_eig(&p)?).max(-min_eig(&self.q[m])?);
            if self.problem.mode == WitnessMode::Monotone {
                psd = psd.max(max_eig(&p)? - 1.0).max(max_eig(&self.q[m])? - 1.0);
            }
        }
        let norm = match self.problem.mode {
            WitnessMode::Witness => (self.w.trace().re - 1.0).abs(),
            WitnessMode::Monotone => 0.0,
        };
        Ok((psd.max(0.0), norm))
    }
}

/// Minimise the restricted witness expectation over all certified
/// decompositions. Always returns the best feasible iterate found; when
/// the feasibility stage cannot reach tolerance the outcome carries
/// `converged = false` and the measured residuals.
pub fn witness_bound(problem: &WitnessProblem, cfg: &WitnessConfig) -> Result<WitnessOutcome> {
    let target = &problem.target;
    let gnorm = target.fro_norm().max(1e-12);
    let polish_reserve = (cfg.max_sweeps / 8).max(200).min(cfg.max_sweeps);
    let mut budget = cfg.max_sweeps.saturating_sub(polish_reserve);

    // the start (W = I/dim, Q = 0) is feasible in both modes, so a best
    // iterate always exists
    let mut state = Splitter::new(problem);
    let mut best_w = state.w.clone();
    let mut best_q = state.q.clone();
    let mut best_value = state.w.inner_re(target);

    // iterates join the incumbent at a loose working tolerance; the final
    // polish re-projects the winner and the residuals are measured after
    let accept = (cfg.tol * 10.0).max(2e-5);
    for &eta in &[0.7, 0.28, 0.11, 0.045, 0.018, 0.007] {
        let eta = cfg.step * eta / gnorm;
        for _ in 0..6 {
            if budget == 0 {
                break;
            }
            state.w = &state.w - &target.scale_re(eta);
            state.clear_corrections();
            let used = state.settle(budget.min(cfg.inner_sweeps), 1e-11)?;
            budget = budget.saturating_sub(used);
            let value = state.w.inner_re(target);
            if value < best_value - 1e-12 {
                let (psd, norm) = state.residuals()?;
                if psd <= accept && norm <= accept {
                    best_value = value;
                    best_w = state.w.clone();
                    best_q = state.q.clone();
                }
            }
        }
    }
    let mut sweeps = cfg.max_sweeps.saturating_sub(polish_reserve) - budget;

    // feasibility polish of the selected iterate: plain Dykstra, no
    // gradient, so the certificate tightens while the value barely moves
    state.w = best_w;
    state.q = best_q;
    state.clear_corrections();
    sweeps += state.settle(polish_reserve, 1e-13)?;

    let value = state.w.inner_re(target);
    let (psd_residual, norm_residual) = state.residuals()?;
    let subspace_residual = problem.space.residual(&state.w)?;
    let converged = psd_residual <= cfg.tol
        && norm_residual <= cfg.subspace_tol.max(1e-9)
        && subspace_residual <= cfg.subspace_tol;
    let dual_bound =
        if cfg.dual_steps > 0 { Some(dual_bound(problem, value, cfg.dual_steps)?) } else { None };
    Ok(WitnessOutcome {
        value,
        witness: state.w,
        detected: value < DETECTION_LEVEL,
        psd_residual,
        subspace_residual,
        norm_residual,
        sweeps,
        converged,
        dual_bound,
    })
}

/// Lagrangian lower bound on the witness optimum: for any multiplier L in
/// the span's orthogonal complement, H = Y_R + L gives the dual value
/// min(λ_min(H), λ_min(H^G)) in witness mode, or the summed negative parts
/// −Tr[H_−] − Tr[(H^G)_−] in monotone mode. Ascent uses Polyak steps
/// against the primal value; the bound stays valid at any accuracy. With
/// several partitions this relaxes to the best single-partition bound.
fn dual_bound(problem: &WitnessProblem, primal: f64, steps: usize) -> Result<f64> {
    let legs = problem.space.legs;
    let dims = problem.layout.dims();
    let complement = |m: &CMat| -> Result<CMat> {
        let mut c = matrix_to_pauli(m, legs)?;
        problem.space.kill(&mut c);
        pauli_to_matrix(&c, legs)
    };
    let mut best_overall = f64::NEG_INFINITY;
    for flip in &problem.flips {
        let mut lambda = CMat::zeros(problem.target.nrows(), problem.target.nrows());
        let mut best = f64::NEG_INFINITY;
        for _ in 0..steps {
            let h = &problem.target + &lambda;
            let hg = partial_transpose(&h, &dims, flip)?;
            let (vh, uh) = eigh(&h)?;
            let (vg, ug) = eigh(&hg)?;
            let (value, grad) = match problem.mode {
                WitnessMode::Witness => {
                    let (mh, mg) = (vh[0], vg[0]);
                    let g = if mh <= mg {
                        rebuild_re(&vh, &uh, |v| if v <= vh[0] + 1e-12 { 1.0 } else { 0.0 })
                    } else {
                        let pi =
                            rebuild_re(&vg, &ug, |v| if v <= vg[0] + 1e-12 { 1.0 } else { 0.0 });
                        partial_transpose(&pi, &dims, flip)?
                    };
                    (mh.min(mg), g)
                }
                WitnessMode::Monotone => {
                    let neg: f64 = vh.iter().chain(vg.iter()).filter(|v| **v < 0.0).sum();
                    let ph = rebuild_re(&vh, &uh, |v| if v < 0.0 { 1.0 } else { 0.0 });
                    let pg = rebuild_re(&vg, &ug, |v| if v < 0.0 { 1.0 } else { 0.0 });
                    (neg, &ph + &partial_transpose(&pg, &dims, flip)?)
                }
            };
            best = best.max(value);
            let g = complement(&grad)?;
            let gn = g.inner_re(&g);
            if gn < 1e-18 {
                break;
            }
            let step = ((primal - value) / gn).clamp(0.0, 10.0);
            if step == 0.0 {
                break;
            }
            lambda = &lambda + &g.scale_re(step);
        }
        best_overall = best_overall.max(best);
    }
    Ok(best_overall)
}

/// One probed split of the sensing report.
#[derive(Clone, Debug)]
pub struct SensingSplit {
    pub partition: Bipartition,
    pub negativity: f64,
    pub outcome: WitnessOutcome,
}

/// Witness interrogation of a decoupling-embedded process: did the
/// environment produce genuinely quantum temporal correlations?
#[derive(Clone, Debug)]
pub struct SensingReport {
    /// Filter frequency the block was tuned to.
    pub frequency: f64,
    /// Block duration implied by the filter frequency.
    pub tau: f64,
    /// Ground-state population of the plain coherence experiment there.
    pub coherence: f64,
    /// Largest certified entanglement over the probed splits.
    pub bound: f64,
    pub detected: bool,
    pub splits: Vec<SensingSplit>,
}

/// Probe the sensing model at the decoupling sequence's resonance with the
/// environment spin, where the filter amplifies the interaction.
pub fn sensing_quantumness(model: &SensingModel) -> Result<SensingReport> {
    sensing_quantumness_at(model, model.omega_l() / (2.0 * std::f64::consts::PI))
}

/// Probe at an explicit filter frequency: build the two-step process
/// around one decoupling block, then witness each temporal split of its
/// restricted data.
///
/// Only step-boundary cuts are probed. A cut that isolates one half of a
/// single step, such as the final output alone, is crossed by the Choi
/// correlations of any near-unitary step — entanglement that says nothing
/// about memory — and chained expectations make that visible even to
/// restricted witnesses when the intermediate steps are clean.
pub fn sensing_quantumness_at(model: &SensingModel, frequency: f64) -> Result<SensingReport> {
    let dt = 1.0 / (2.0 * frequency);
    let tau = dt * model.schedule().len() as f64;
    let se = sensing_step_unitaries(model, tau)?;
    let pt = exact_process_tensor(&se, 2)?;
    let partitions = [Bipartition::TemporalCut(2), Bipartition::TemporalCut(1)];
    let cfg = WitnessConfig { dual_steps: 0, ..Default::default() };
    let mut splits = Vec::with_capacity(partitions.len());
    let mut bound = 0.0f64;
    for partition in partitions {
        let neg = crate::measures::negativity(&pt, &partition)?;
        let problem = WitnessProblem::new(&pt, vec![partition.clone()], WitnessMode::Monotone)?;
        let outcome = witness_bound(&problem, &cfg)?;
        bound = bound.max(-outcome.value);
        splits.push(SensingSplit { partition, negativity: neg, outcome });
    }
    let coherence = coherence_sweep(model, &[frequency], 1)?[0];
    Ok(SensingReport {
        frequency,
        tau,
        coherence,
        bound: bound.max(0.0),
        detected: splits.iter().any(|s| s.outcome.detected),
        splits,
    })
}
