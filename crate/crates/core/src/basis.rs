//! Operation bases, dual frames, and measurement sets for tomography.
//!
//! A tomography experiment slots one operation per step, drawn from a fixed
//! set of Choi states, and terminates in a POVM. Reconstruction needs the
//! *duals* of those sets: operators Δ_μ with Tr[B_μ Δ_ν] = δ_μν on linearly
//! independent sets, or more generally the canonical pseudoinverse frame
//! satisfying A = Σ_μ Tr[Δ_μ A]·B_μ for every A in the span.

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::gates::{hadamard, ket, ket_proj, phase_s, plus_i_state, plus_state, u3, u3_angles};
use crate::linalg::pinv;
use crate::mat::CMat;
use crate::simulator::InstrumentPair;
use num_complex::Complex64 as C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Stack ⟨⟨B_μ| rows: S·vec(A) = [Tr[B_μ A]] for Hermitian A.
fn stacked_rows(elements: &[CMat]) -> CMat {
    let d2 = elements[0].nrows() * elements[0].ncols();
    CMat::from_fn(elements.len(), d2, |mu, m| {
        let (n, _) = elements[mu].0.dim();
        elements[mu].0[(m / n, m % n)].conj()
    })
}

/// An operator set with its canonical dual frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub elements: Vec<CMat>,
    pub duals: Vec<CMat>,
    rank: usize,
}

impl Frame {
    /// Build duals as the columns of the pseudoinverse of the stacked
    /// element rows. For a linearly independent set this gives
    /// Tr[B_μ Δ_ν] = δ_μν; for an overcomplete set, the canonical frame.
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Config("frame needs at least one element".into()));
        }
        let (r0, c0) = elements[0].0.dim();
        if elements.iter().any(|e| e.0.dim() != (r0, c0)) {
            return Err(Error::DimMismatch("frame elements differ in shape".into()));
        }
        let s = stacked_rows(&elements);
        let sp = pinv(&s, 1e-10)?;
        let rank = {
            // numerical rank of S via the product S·S⁺ (a projector)
            let proj = s.matmul(&sp);
            proj.trace().re.round() as usize
        };
        let duals = (0..elements.len())
            .map(|mu| CMat::from_fn(r0, c0, |i, j| sp.0[(i * c0 + j, mu)]))
            .collect();
        Ok(Frame { elements, duals, rank })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Dimension of the operator span.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Expansion coefficients Tr[Δ_μ A].
    pub fn coefficients(&self, a: &CMat) -> Vec<C64> {
        self.duals.iter().map(|d| d.inner(a)).collect()
    }

    /// Max |Tr[B_μ Δ_ν] − δ_μν|; zero only for linearly independent sets.
    pub fn dual_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, b) in self.elements.iter().enumerate() {
            for (j, d) in self.duals.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((b.inner(d) - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Max reconstruction error ‖Σ_ν Tr[Δ_ν B_μ]·B_ν − B_μ‖∞ over elements:
    /// the frame identity restricted to the span.
    pub fn frame_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in &self.elements {
            let mut rec = CMat::zeros(b.nrows(), b.ncols());
            for (d, e) in self.duals.iter().zip(self.elements.iter()) {
                rec = &rec + &e.scale(d.inner(b));
            }
            worst = worst.max((&rec - b).max_abs());
        }
        worst
    }
}

/// A POVM with dual states for linear inversion, grouped into measurement
/// settings (effects acquired in the same circuit).
#[derive(Debug, Clone)]
pub struct Povm {
    pub frame: Frame,
    pub settings: Vec<Vec<usize>>,
}

impl Povm {
    pub fn new(effects: Vec<CMat>, settings: Vec<Vec<usize>>) -> Result<Self> {
        let d = effects[0].require_square()?;
        let mut sum = CMat::zeros(d, d);
        for e in &effects {
            sum = &sum + e;
        }
        if (&sum - &CMat::identity(d)).max_abs() > 1e-9 {
            return Err(Error::Data("POVM effects do not sum to the identity".into()));
        }
        let mut seen = vec![false; effects.len()];
        for s in &settings {
            for &i in s {
                if i >= effects.len() || seen[i] {
                    return Err(Error::Config("settings must partition the effect list".into()));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Config("settings must cover every effect".into()));
        }
        Ok(Povm { frame: Frame::new(effects)?, settings })
    }

    pub fn effects(&self) -> &[CMat] {
        &self.frame.elements
    }

    pub fn num_effects(&self) -> usize {
        self.frame.len()
    }

    pub fn is_ic(&self) -> bool {
        let d = self.frame.elements[0].nrows();
        self.frame.rank() == d * d
    }
}

/// The six-outcome Pauli POVM {(I ± P)/6 : P ∈ X, Y, Z} in three settings.
pub fn pauli_povm() -> Povm {
    let mut effects = Vec::with_capacity(6);
    for p in 1..=3u8 {
        for sign in [1.0, -1.0] {
            let e = &CMat::identity(2) + &crate::pauli::pauli_mat(p).scale_re(sign);
            effects.push(e.scale_re(1.0 / 6.0));
        }
    }
    let settings = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    Povm::new(effects, settings).expect("static POVM is well-formed")
}

/// A per-step operation basis: elements are Choi states of CPTNI maps,
/// grouped into settings whose outcome maps sum to a deterministic channel.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub frame: Frame,
    pub settings: Vec<Vec<usize>>,
    pub unitary_only: bool,
    pub ic: bool,
    pub d: usize,
}

impl BasisSet {
    fn assemble(elements: Vec<CMat>, settings: Vec<Vec<usize>>, d: usize, unitary_only: bool) -> Result<Self> {
        for s in &settings {
            let mut sum = CMat::zeros(d * d, d * d);
            for &i in s {
                sum = &sum + &elements[i];
            }
            let ch = Channel::from_choi(sum, d, d)?;
            if ch.tp_deviation() > 1e-8 {
                return Err(Error::Data(format!(
                    "basis setting does not sum to a trace-preserving map (dev {:.3e})",
                    ch.tp_deviation()
                )));
            }
        }
        let frame = Frame::new(elements)?;
        let ic = frame.rank() == d.pow(4);
        Ok(BasisSet { frame, settings, unitary_only, ic, d })
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn element(&self, mu: usize) -> &CMat {
        &self.frame.elements[mu]
    }

    /// Number of distinct element sequences of length `k` (data rows per
    /// final measurement setting).
    pub fn sequence_count(&self, k: usize) -> usize {
        self.len().pow(k as u32)
    }
}

/// Deterministically scattered parameter triples from a Halton sequence.
fn halton_triples(count: usize) -> Vec<(f64, f64, f64)> {
    fn halton(mut i: usize, base: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    (1..=count)
        .map(|i| {
            (
                halton(i, 2) * std::f64::consts::PI,
                halton(i, 3) * 2.0 * std::f64::consts::PI,
                halton(i, 5) * 2.0 * std::f64::consts::PI,
            )
        })
        .collect()
}

/// Greedy selection score: numerical rank first, then the smallest nonzero
/// singular value (the lower frame bound on the spanned subspace). Rank
/// dominates so a new direction always beats better conditioning of old
/// ones; the frame bound breaks ties once the span is saturated.
fn frame_score(elements: &[CMat]) -> Result<(usize, f64)> {
    let s = stacked_rows(elements);
    let vals = crate::linalg::singular_values(&s)?;
    let rank = vals.iter().filter(|v| **v > 1e-9).count();
    let floor = vals.into_iter().filter(|v| *v > 1e-9).fold(f64::INFINITY, f64::min);
    Ok((rank, floor))
}

/// A well-conditioned basis of `n` unitary Choi states, spanning the
/// unitary-accessible operator subspace (dimension d⁴ − 2d² + 2, i.e. 10 for
/// qubits). Candidates come from a deterministic low-discrepancy scan;
/// elements are chosen greedily to maximise the frame's smallest singular
/// value.
pub fn unitary_basis(n: usize) -> Result<BasisSet> {
    const SPAN: usize = 10;
    if n < SPAN {
        return Err(Error::Config(format!(
            "{n} unitaries cannot span the {SPAN}-dimensional unitary-accessible subspace"
        )));
    }
    let mut pool: Vec<CMat> = vec![Channel::identity(2).choi().clone()];
    for (th, ph, la) in halton_triples(120) {
        pool.push(Channel::from_unitary(&u3(th, ph, la))?.choi().clone());
    }
    let mut chosen: Vec<CMat> = vec![pool[0].clone()];
    let mut used = vec![false; pool.len()];
    used[0] = true;
    while chosen.len() < n {
        let mut best: Option<((usize, f64), usize)> = None;
        for (i, cand) in pool.iter().enumerate() {
            if used[i] {
                continue;
            }
            chosen.push(cand.clone());
            let score = frame_score(&chosen)?;
            chosen.pop();
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, i));
            }
        }
        let (_, idx) = best.expect("candidate pool exhausted");
        used[idx] = true;
        chosen.push(pool[idx].clone());
    }
    let settings = (0..n).map(|i| vec![i]).collect();
    BasisSet::assemble(chosen, settings, 2, true)
}

/// Tetrahedrally arranged rank-one POVM on a qubit: 4 sub-normalised
/// projectors summing to the identity, spanning the full operator space.
fn sic_effects() -> Vec<CMat> {
    let rt2 = 2.0f64.sqrt();
    let kets = [
        ket(&[c(1.0, 0.0), c(0.0, 0.0)]),
        ket(&[c(1.0, 0.0) / c(3.0, 0.0).sqrt(), c(rt2 / 3.0f64.sqrt(), 0.0)]),
        ket(&[
            c(1.0, 0.0) / c(3.0, 0.0).sqrt(),
            C64::from_polar(rt2 / 3.0f64.sqrt(), 2.0 * std::f64::consts::PI / 3.0),
        ]),
        ket(&[
            c(1.0, 0.0) / c(3.0, 0.0).sqrt(),
            C64::from_polar(rt2 / 3.0f64.sqrt(), -2.0 * std::f64::consts::PI / 3.0),
        ]),
    ];
    kets.iter().map(|k| k.matmul(&k.dagger()).scale_re(0.5)).collect()
}

/// Informationally complete causal-break basis: measure the tetrahedral
/// POVM and re-prepare one of {|0⟩, |1⟩, |+⟩, |i+⟩}. Four 4-outcome
/// settings, 16 rank-one elements spanning all d⁴ = 16 directions.
pub fn causal_break_basis() -> Result<BasisSet> {
    let preps = [ket_proj(0), ket_proj(1), plus_state(), plus_i_state()];
    let effects = sic_effects();
    let mut elements = Vec::with_capacity(16);
    let mut settings = Vec::with_capacity(4);
    for (t, prep) in preps.iter().enumerate() {
        settings.push((4 * t..4 * t + 4).collect());
        for e in &effects {
            elements.push(prep.kron(&e.t()));
        }
    }
    BasisSet::assemble(elements, settings, 2, false)
}

/// The 24 single-qubit Clifford unitaries, generated as the closure of
/// {H, S} with a deterministic breadth-first ordering and canonical global
/// phase (first nonzero entry real positive).
pub fn cliffords_1q() -> Vec<CMat> {
    fn canonical(u: &CMat) -> CMat {
        let mut phase = c(1.0, 0.0);
        'outer: for i in 0..u.nrows() {
            for j in 0..u.ncols() {
                if u.0[(i, j)].norm() > 1e-9 {
                    phase = u.0[(i, j)] / u.0[(i, j)].norm();
                    break 'outer;
                }
            }
        }
        u.scale(phase.conj())
    }
    fn key(u: &CMat) -> Vec<(i64, i64)> {
        u.0.iter().map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64)).collect()
    }
    let gens = [hadamard(), phase_s()];
    let mut group = vec![canonical(&CMat::identity(2))];
    let mut keys = vec![key(&group[0])];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for u in &frontier {
            for g in &gens {
                let cand = canonical(&g.matmul(u));
                let k = key(&cand);
                if !keys.contains(&k) {
                    keys.push(k);
                    group.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    group
}

/// Instrument pairs for every single-qubit Clifford as the local unitary,
/// at interaction angle `gamma`.
pub fn clifford_instrument_pairs(gamma: f64) -> Result<Vec<InstrumentPair>> {
    cliffords_1q()
        .iter()
        .map(|u| {
            let (th, ph, la) = u3_angles(u);
            crate::simulator::instrument_circuit(th, ph, la, gamma)
        })
        .collect()
}

/// Basis of conditional instrument maps: one setting per pair, two outcome
/// elements each. Informationally complete exactly when the outcome
/// back-action spreads the span to all d⁴ directions.
pub fn instrument_basis(pairs: &[InstrumentPair]) -> Result<BasisSet> {
    if pairs.is_empty() {
        return Err(Error::Config("need at least one instrument pair".into()));
    }
    let mut elements = Vec::with_capacity(2 * pairs.len());
    let mut settings = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        settings.push(vec![2 * i, 2 * i + 1]);
        for x in 0..2 {
            elements.push(pair.outcome(x)?.choi().clone());
        }
    }
    BasisSet::assemble(elements, settings, 2, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;
    use rand::SeedableRng;

    #[test]
    fn pauli_povm_duals_reconstruct_states() {
        let povm = pauli_povm();
        assert_eq!(povm.num_effects(), 6);
        assert!(povm.is_ic());
        assert!(povm.frame.frame_residual() < 1e-10);
        // reconstruct an arbitrary state from its outcome probabilities
        let rho = CMat::from_rows(&[
            vec![C64::new(0.7, 0.0), C64::new(0.1, 0.2)],
            vec![C64::new(0.1, -0.2), C64::new(0.3, 0.0)],
        ]);
        let mut rec = CMat::zeros(2, 2);
        for (e, d) in povm.effects().iter().zip(povm.frame.duals.iter()) {
            rec = &rec + &d.scale(e.inner(&rho));
        }
        assert!((&rec - &rho).max_abs() < 1e-10);
    }

    #[test]
    fn unitary_basis_spans_ten_dimensions() {
        let basis = unitary_basis(10).unwrap();
        assert_eq!(basis.frame.rank(), 10);
        assert!(basis.unitary_only);
        assert!(!basis.ic);
        assert!(basis.frame.dual_residual() < 1e-8);
        for b in &basis.frame.elements {
            let ch = Channel::from_choi(b.clone(), 2, 2).unwrap();
            let r = ch.ptm().unwrap();
            // trace-preserving and unital: trivial first row and column
            for i in 1..4 {
                assert!(r.0[(0, i)].norm() < 1e-10);
                assert!(r.0[(i, 0)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_basis_rejects_too_few() {
        assert!(unitary_basis(9).is_err());
    }

    #[test]
    fn causal_break_basis_is_ic() {
        let basis = causal_break_basis().unwrap();
        assert_eq!(basis.len(), 16);
        assert!(basis.ic);
        assert!(!basis.unitary_only);
        assert!(basis.frame.dual_residual() < 1e-8);
        assert_eq!(basis.sequence_count(3), 4096);
    }

    #[test]
    fn clifford_group_has_24_elements() {
        let group = cliffords_1q();
        assert_eq!(group.len(), 24);
        for u in &group {
            assert!((&u.matmul(&u.dagger()) - &CMat::identity(2)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn u3_angles_roundtrip_on_haar_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = haar_unitary(2, &mut rng).unwrap();
            let (th, ph, la) = u3_angles(&u);
            let v = u3(th, ph, la);
            // equal up to global phase
            let phase = v.inner(&u) / C64::new(v.inner(&v).re, 0.0);
            assert!((&u - &v.scale(phase)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn instrument_basis_ic_at_quarter_pi_but_not_at_zero() {
        let pairs = clifford_instrument_pairs(std::f64::consts::FRAC_PI_4).unwrap();
        let basis = instrument_basis(&pairs).unwrap();
        assert_eq!(basis.len(), 48);
        assert!(basis.ic, "rank {}", basis.frame.rank());
        assert!(basis.frame.frame_residual() < 1e-8);

        let degenerate = instrument_basis(&clifford_instrument_pairs(0.0).unwrap()).unwrap();
        assert!(!degenerate.ic, "rank {}", degenerate.frame.rank());
    }

    #[test]
    fn overcomplete_frame_reconstructs_maps_in_span() {
        let pairs = clifford_instrument_pairs(std::f64::consts::FRAC_PI_4).unwrap();
        let basis = instrument_basis(&pairs).unwrap();
        // a CP map inside the span (the basis is IC, so any map qualifies)
        let target = Channel::depolarizing(2, 0.3).choi().clone();
        let mut rec = CMat::zeros(4, 4);
        for (d, e) in basis.frame.duals.iter().zip(basis.frame.elements.iter()) {
            rec = &rec + &e.scale(d.inner(&target));
        }
        assert!((&rec - &target).max_abs() < 1e-8);
    }
}
