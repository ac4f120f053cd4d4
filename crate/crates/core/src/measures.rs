//! Information measures on process states — multi-time mutual information,
//! temporal entanglement negativity, purity, and fidelity to an ideal
//! process — together with their gradients.
//!
//! All measures act on the trace-normalised state and all gradients are
//! taken with respect to the raw (unnormalised) matrix under the real inner
//! product <A,B> = Re Tr[A^dag B], which is what the constrained optimisers
//! consume. Matrix logarithms floor eigenvalues at 1e-12 so rank-deficient
//! estimates stay finite.

use crate::error::{Error, Result};
use crate::layout::{Leg, LegLayout};
use crate::linalg::{eigh, rebuild_re};
use crate::mat::{lift, partial_trace, partial_transpose, CMat};
use crate::process::ProcessTensor;

const LOG_FLOOR: f64 = 1e-12;

/// A split of the process legs into two groups for negativity. The temporal
/// cut before step j puts legs out_k .. in_j on one side and the rest on the
/// other; an explicit leg list names one side directly.
#[derive(Clone, Debug)]
pub enum Bipartition {
    TemporalCut(usize),
    Legs(Vec<Leg>),
}

impl Bipartition {
    /// The default split: the temporal cut closest to the middle of the
    /// process, before step ceil((k+1)/2).
    pub fn middle_cut(layout: &LegLayout) -> Self {
        Bipartition::TemporalCut((layout.k + 2) / 2)
    }

    /// Positions of the legs on the transposed side.
    pub fn flip_positions(&self, layout: &LegLayout) -> Result<Vec<usize>> {
        match self {
            Bipartition::TemporalCut(j) => {
                if *j == 0 || *j > layout.k {
                    return Err(Error::BadLeg { leg: *j, num_legs: layout.k });
                }
                layout.cut_before(*j)
            }
            Bipartition::Legs(legs) => {
                let mut pos: Vec<usize> =
                    legs.iter().map(|&l| layout.pos(l)).collect::<Result<_>>()?;
                pos.sort_unstable();
                pos.dedup();
                if pos.is_empty() || pos.len() == layout.num_legs() {
                    return Err(Error::DimMismatch(
                        "bipartition must leave legs on both sides".into(),
                    ));
                }
                Ok(pos)
            }
        }
    }
}

fn floored_log(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild_re(&vals, &vecs, |v| v.max(LOG_FLOOR).ln()))
}

/// Entropy term Tr[rho log rho] with floored eigenvalues (natural log).
fn tr_rho_log_rho(m: &CMat) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    Ok(vals.iter().map(|&v| if v > LOG_FLOOR { v * v.ln() } else { 0.0 }).sum())
}

/// Marginal factors of the product reference state: one per step pair
/// (out_j, in_j), chronologically last first, plus the initial-state leg.
/// Each factor is normalised to unit trace.
fn marginal_factors(pt: &ProcessTensor) -> Result<Vec<(CMat, Vec<usize>)>> {
    let lay = &pt.layout;
    let dims = lay.dims();
    let mut out = Vec::with_capacity(lay.k + 1);
    for j in (1..=lay.k).rev() {
        let p = lay.pos(Leg::Out(j))?;
        let m = partial_trace(&pt.mat, &dims, &[p, p + 1])?;
        let t = m.trace().re;
        out.push((m.scale_re(1.0 / t), vec![p, p + 1]));
    }
    let p0 = lay.pos(Leg::Out(0))?;
    let m0 = partial_trace(&pt.mat, &dims, &[p0])?;
    let t0 = m0.trace().re;
    out.push((m0.scale_re(1.0 / t0), vec![p0]));
    Ok(out)
}

fn log_reference(pt: &ProcessTensor) -> Result<CMat> {
    let dims = pt.layout.dims();
    let dim = pt.layout.total_dim();
    let mut acc = CMat::zeros(dim, dim);
    for (factor, at) in marginal_factors(pt)? {
        let lg = floored_log(&factor)?;
        acc = &acc + &lift(&lg, &dims, &at)?;
    }
    Ok(acc)
}

/// Multi-time mutual information: the relative entropy (nats) between the
/// normalised process state and the product of its step marginals.
pub fn qmi(pt: &ProcessTensor) -> Result<f64> {
    let norm = pt.normalized();
    let log_sigma = log_reference(pt)?;
    Ok(tr_rho_log_rho(&norm)? - norm.inner_re(&log_sigma))
}

pub fn qmi_gradient(pt: &ProcessTensor) -> Result<CMat> {
    let scale = pt.layout.expected_trace();
    let norm = pt.normalized();
    let log_rho = floored_log(&norm)?;
    let log_sigma = log_reference(pt)?;
    let dim = pt.layout.total_dim();
    let mut g = &log_rho - &log_sigma;
    g = &g + &CMat::identity(dim);
    Ok(g.scale_re(1.0 / scale))
}

/// Entanglement negativity of the normalised state across the given split:
/// (||Y^Gamma||_1 - Tr Y)/2. Zero on every separable state.
pub fn negativity(pt: &ProcessTensor, split: &Bipartition) -> Result<f64> {
    let dims = pt.layout.dims();
    let flip = split.flip_positions(&pt.layout)?;
    let norm = pt.normalized();
    let gamma = partial_transpose(&norm, &dims, &flip)?;
    let (vals, _) = eigh(&gamma)?;
    let tn: f64 = vals.iter().map(|v| v.abs()).sum();
    Ok((tn - norm.trace().re) / 2.0)
}

pub fn negativity_gradient(pt: &ProcessTensor, split: &Bipartition) -> Result<CMat> {
    let dims = pt.layout.dims();
    let flip = split.flip_positions(&pt.layout)?;
    let scale = pt.layout.expected_trace();
    let norm = pt.normalized();
    let gamma = partial_transpose(&norm, &dims, &flip)?;
    let (vals, vecs) = eigh(&gamma)?;
    let sgn = rebuild_re(&vals, &vecs, |v| if v >= 0.0 { 1.0 } else { -1.0 });
    let back = partial_transpose(&sgn, &dims, &flip)?;
    let dim = pt.layout.total_dim();
    Ok((&back - &CMat::identity(dim)).scale_re(1.0 / (2.0 * scale)))
}

/// Purity Tr[(Y/d^k)^2] of the normalised state.
pub fn purity(pt: &ProcessTensor) -> f64 {
    let norm = pt.normalized();
    norm.inner_re(&norm)
}

pub fn purity_gradient(pt: &ProcessTensor) -> CMat {
    let scale = pt.layout.expected_trace();
    pt.normalized().scale_re(2.0 / scale)
}

/// Overlap fidelity Tr[(Y/d^k)(Y_ideal/d^k)]; equals 1 exactly when both
/// are the same pure (e.g. unitary Markov) process.
pub fn fidelity(pt: &ProcessTensor, ideal: &ProcessTensor) -> Result<f64> {
    if pt.layout != ideal.layout {
        return Err(Error::DimMismatch("fidelity requires matching layouts".into()));
    }
    Ok(pt.normalized().inner_re(&ideal.normalized()))
}

pub fn fidelity_gradient(pt: &ProcessTensor, ideal: &ProcessTensor) -> Result<CMat> {
    if pt.layout != ideal.layout {
        return Err(Error::DimMismatch("fidelity requires matching layouts".into()));
    }
    let scale = pt.layout.expected_trace();
    Ok(ideal.normalized().scale_re(1.0 / scale))
}

/// A property functional with its gradient, the interface the bounding
/// optimiser drives.
#[derive(Clone, Debug)]
pub enum Measure {
    Qmi,
    Negativity(Bipartition),
    Purity,
    Fidelity(Box<ProcessTensor>),
}

impl Measure {
    pub fn eval(&self, pt: &ProcessTensor) -> Result<f64> {
        match self {
            Measure::Qmi => qmi(pt),
            Measure::Negativity(split) => negativity(pt, split),
            Measure::Purity => Ok(purity(pt)),
            Measure::Fidelity(ideal) => fidelity(pt, ideal),
        }
    }

    pub fn gradient(&self, pt: &ProcessTensor) -> Result<CMat> {
        match self {
            Measure::Qmi => qmi_gradient(pt),
            Measure::Negativity(split) => negativity_gradient(pt, split),
            Measure::Purity => Ok(purity_gradient(pt)),
            Measure::Fidelity(ideal) => fidelity_gradient(pt, ideal),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Qmi => "qmi",
            Measure::Negativity(_) => "negativity",
            Measure::Purity => "purity",
            Measure::Fidelity(_) => "fidelity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Channel;
    use crate::gates::{ket_proj, u3};
    use crate::mat::{kron_all, permute_legs};
    use crate::process::ProcessTensor;
    use num_complex::Complex64 as C64;

    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        }
        fn cmat(&mut self, r: usize, c: usize) -> CMat {
            let mut m = CMat::zeros(r, c);
            for i in 0..r {
                for j in 0..c {
                    m.0[(i, j)] = C64::new(self.next(), self.next());
                }
            }
            m
        }
        fn density(&mut self, d: usize) -> CMat {
            let g = self.cmat(d, d);
            let p = g.matmul(&g.dagger());
            let t = p.trace().re;
            p.scale_re(1.0 / t)
        }
    }

    fn random_psd_process(seed: u64, k: usize) -> ProcessTensor {
        let lay = LegLayout::qubits(k);
        let dim = lay.total_dim();
        let mut rng = Lcg(seed);
        let g = rng.cmat(dim, dim);
        let p = g.matmul(&g.dagger());
        let t = p.trace().re;
        // mix in a fifth of the maximally mixed state so eigenvalues stay
        // well away from the log floor under finite-difference probes
        let tr = lay.expected_trace();
        let mat = &p.scale_re(0.8 * tr / t) + &CMat::identity(dim).scale_re(0.2 * tr / dim as f64);
        ProcessTensor::new(lay, mat).unwrap()
    }

    fn markov_process(seed: u64, k: usize) -> ProcessTensor {
        let mut rng = Lcg(seed);
        let chans: Vec<Channel> = (0..k)
            .map(|_| {
                Channel::from_unitary(&u3(rng.next() * 3.0, rng.next() * 3.0, rng.next() * 3.0))
                    .unwrap()
            })
            .collect();
        let rho0 = rng.density(2);
        ProcessTensor::markov(&chans, &rho0).unwrap()
    }

    /// Two-step process from a full-SWAP system-environment interaction:
    /// the step-2 output is the step-1 input (a Bell pair across the cut),
    /// the step-1 output is the initial environment state.
    fn swap_interaction_process() -> ProcessTensor {
        let lay = LegLayout::qubits(2);
        let bell = Channel::identity(2).choi().clone(); // 2 |Phi+><Phi+|
        let eye = CMat::identity(2);
        let e0 = ket_proj(0);
        let rho0 = ket_proj(0);
        let raw = kron_all([&bell, &eye, &e0, &rho0]);
        // factor legs (a=out_2, b=in_1, c=in_2, d=out_1, e=out_0)
        // target order (out_2, in_2, out_1, in_1, out_0) = (a, c, d, b, e)
        let mat = permute_legs(&raw, &[2, 2, 2, 2, 2], &[0, 2, 3, 1, 4]).unwrap();
        ProcessTensor::new(lay, mat).unwrap()
    }

    #[test]
    fn qmi_vanishes_on_markov() {
        for seed in [1, 2, 3] {
            let pt = markov_process(seed, 2);
            let v = qmi(&pt).unwrap();
            assert!(v.abs() < 1e-8, "qmi {v}");
        }
    }

    #[test]
    fn qmi_of_swap_process_is_two_bits() {
        let pt = swap_interaction_process();
        let v = qmi(&pt).unwrap();
        let want = 2.0 * std::f64::consts::LN_2;
        assert!((v - want).abs() < 1e-8, "qmi {v} want {want}");
    }

    #[test]
    fn qmi_invariant_under_single_leg_unitary() {
        let pt = random_psd_process(42, 2);
        let base = qmi(&pt).unwrap();
        let u = u3(0.9, 0.2, 1.4);
        let dims = pt.layout.dims();
        for leg in 0..dims.len() {
            let big = lift(&u, &dims, &[leg]).unwrap();
            let rotated = big.matmul(&pt.mat).matmul(&big.dagger());
            let rot = ProcessTensor::new(pt.layout, rotated).unwrap();
            let v = qmi(&rot).unwrap();
            assert!((v - base).abs() < 1e-8, "leg {leg}: {v} vs {base}");
        }
    }

    #[test]
    fn negativity_of_bell_across_choi_legs() {
        let pt = ProcessTensor::markov(&[Channel::identity(2)], &ket_proj(0)).unwrap();
        // across the temporal cut the Bell pair sits on one side: zero
        let cut = negativity(&pt, &Bipartition::TemporalCut(1)).unwrap();
        assert!(cut.abs() < 1e-10);
        // splitting the Choi pair itself: textbook 1/2
        let n = negativity(&pt, &Bipartition::Legs(vec![Leg::Out(1)])).unwrap();
        assert!((n - 0.5).abs() < 1e-10, "negativity {n}");
    }

    #[test]
    fn negativity_of_swap_process_across_middle_cut() {
        let pt = swap_interaction_process();
        let split = Bipartition::middle_cut(&pt.layout);
        let n = negativity(&pt, &split).unwrap();
        assert!((n - 0.5).abs() < 1e-10, "negativity {n}");
    }

    #[test]
    fn negativity_zero_on_separable_mixtures() {
        let lay = LegLayout::qubits(1);
        let mut rng = Lcg(777);
        for _ in 0..100 {
            let terms = 2 + (rng.next().abs() * 4.0) as usize;
            let mut mat = CMat::zeros(8, 8);
            for _ in 0..terms {
                let w = rng.next().abs() + 0.05;
                // product across the tested cut: (out_1, in_1) x (out_0)
                let a = rng.density(4);
                let b = rng.density(2);
                mat = &mat + &a.kron(&b).scale_re(w);
            }
            let t = mat.trace().re;
            let pt = ProcessTensor::new(lay, mat.scale_re(2.0 / t)).unwrap();
            let n = negativity(&pt, &Bipartition::TemporalCut(1)).unwrap();
            assert!(n.abs() < 1e-9, "separable negativity {n}");
        }
    }

    #[test]
    fn purity_and_fidelity_basics() {
        // unitary channels on a pure initial state: a pure process
        let mut rng = Lcg(5);
        let chans: Vec<Channel> = (0..2)
            .map(|_| {
                Channel::from_unitary(&u3(rng.next() * 3.0, rng.next() * 3.0, rng.next() * 3.0))
                    .unwrap()
            })
            .collect();
        let pt = ProcessTensor::markov(&chans, &ket_proj(0)).unwrap();
        assert!((purity(&pt) - 1.0).abs() < 1e-10);
        assert!((fidelity(&pt, &pt).unwrap() - 1.0).abs() < 1e-10);

        // global depolarisation: purity of (1-p) Y + p tr(Y) I/dim
        let p = 0.3;
        let dim = pt.dim() as f64;
        let mixed = &pt.mat.scale_re(1.0 - p)
            + &CMat::identity(pt.dim()).scale_re(p * 4.0 / dim);
        let ptm = ProcessTensor::new(pt.layout, mixed.clone()).unwrap();
        let direct = {
            let n = mixed.scale_re(1.0 / 4.0);
            n.inner_re(&n)
        };
        assert!((purity(&ptm) - direct).abs() < 1e-12);
        let expect = (1.0 - p) * (1.0 - p) * purity(&pt)
            + 2.0 * p * (1.0 - p) / dim
            + p * p / dim;
        assert!((purity(&ptm) - expect).abs() < 1e-12);
    }

    fn fd_check(m: &Measure, pt: &ProcessTensor, seed: u64) {
        let dim = pt.dim();
        let mut rng = Lcg(seed);
        let g = m.gradient(pt).unwrap();
        for _ in 0..4 {
            let raw = rng.cmat(dim, dim);
            let h = CMat((&raw.0 + &raw.dagger().0).mapv(|z| z * 0.5));
            let eps = 1e-5;
            let plus =
                ProcessTensor::new(pt.layout, &pt.mat + &h.scale_re(eps)).unwrap();
            let minus =
                ProcessTensor::new(pt.layout, &pt.mat - &h.scale_re(eps)).unwrap();
            let fd = (m.eval(&plus).unwrap() - m.eval(&minus).unwrap()) / (2.0 * eps);
            let an = g.inner_re(&h);
            let denom = fd.abs().max(an.abs()).max(1e-6);
            assert!(
                ((fd - an) / denom).abs() < 1e-4,
                "{}: fd {fd} vs analytic {an}",
                m.name()
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pt = random_psd_process(99, 3);
        let ideal = markov_process(98, 3);
        fd_check(&Measure::Qmi, &pt, 11);
        fd_check(&Measure::Negativity(Bipartition::middle_cut(&pt.layout)), &pt, 12);
        fd_check(&Measure::Purity, &pt, 13);
        fd_check(&Measure::Fidelity(Box::new(ideal)), &pt, 14);
    }
}
