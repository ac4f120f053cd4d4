//! Process reconstruction from counted data: linear inversion and the
//! projected-gradient maximum-likelihood solver.
//!
//! Linear inversion expands the process state in the dual frame of the
//! probed operations and measured effects; at exact frequencies with an
//! informationally complete basis it is exact, at finite shots it is the
//! statistically unbiased but usually non-physical (non-PSD) starting point.
//! The likelihood solver then minimises f(Υ) = −Σ n·ln p(Υ) by projected
//! gradient descent with backtracking, every iterate kept inside the
//! physical set (PSD, unit-trace-per-step, causal) by the dual projection.

use crate::basis::{BasisSet, Povm};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::layout::LegLayout;
use crate::linalg::project_psd;
use crate::pauli::{matrix_to_pauli, pauli_to_matrix};
use crate::process::ProcessTensor;
use crate::projection::{AffineSystem, ProductOperator, Projector};

#[derive(Debug, Clone)]
pub struct MleConfig {
    /// Sufficient-decrease constant of the backtracking search.
    pub gamma: f64,
    /// Gradient pre-step length fed to the projection.
    pub mu: f64,
    /// Stop when consecutive objective improvement falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Constraint tolerance handed to the inner projection.
    pub projection_tol: f64,
    /// Scaling constant quoted alongside the algorithm but never consumed
    /// by it; kept so configurations can carry it through unchanged.
    pub alpha: Option<f64>,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            gamma: 0.3,
            mu: 1e-3,
            tol: 1e-6,
            max_iters: 500,
            projection_tol: 1e-7,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleReport {
    /// Objective value after each accepted iterate, starting at the initial
    /// point. Non-increasing by construction.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Cells whose predicted probability hit the 1e-12 floor inside the
    /// logarithm at the final iterate.
    pub clamped_cells: usize,
}

/// Probability floor inside logarithms and divisions.
const P_FLOOR: f64 = 1e-12;

/// One measured cell: the factored operator whose expectation is its
/// probability, and the count observed.
pub(crate) struct CellTable {
    pub ops: Vec<ProductOperator>,
    pub counts: Vec<f64>,
}

impl CellTable {
    /// Cells with nonzero counts only — zero-count outcomes contribute
    /// nothing to the likelihood.
    pub fn from_dataset(ds: &Dataset, basis: &BasisSet, povm: &Povm) -> Result<Self> {
        let elem: Vec<Vec<f64>> = basis
            .frame
            .elements
            .iter()
            .map(|b| matrix_to_pauli(&b.t(), 2))
            .collect::<Result<_>>()?;
        let eff: Vec<Vec<f64>> = povm
            .effects()
            .iter()
            .map(|e| matrix_to_pauli(e, 1))
            .collect::<Result<_>>()?;
        let mut ops = Vec::new();
        let mut counts = Vec::new();
        for rec in &ds.records {
            for (&i, &n) in &rec.counts {
                if n <= 0.0 {
                    continue;
                }
                if i >= eff.len() {
                    return Err(Error::Data(format!("effect index {i} out of range")));
                }
                let mut factors = Vec::with_capacity(ds.steps + 1);
                factors.push(eff[i].clone());
                for &mu in rec.mu.iter().rev() {
                    factors.push(
                        elem.get(mu)
                            .ok_or_else(|| Error::Data(format!("element index {mu} out of range")))?
                            .clone(),
                    );
                }
                ops.push(ProductOperator { factors });
                counts.push(n);
            }
        }
        if ops.is_empty() {
            return Err(Error::Data("dataset has no nonzero counts".into()));
        }
        Ok(CellTable { ops, counts })
    }

    pub fn probabilities(&self, coeffs: &[f64], dim: usize) -> Vec<f64> {
        let mut scratch = Vec::new();
        self.ops.iter().map(|op| op.raw_dot(coeffs, &mut scratch) / dim as f64).collect()
    }
}

fn neg_log_likelihood(counts: &[f64], probs: &[f64]) -> f64 {
    counts.iter().zip(probs).map(|(n, p)| -n * p.max(P_FLOOR).ln()).sum()
}

/// Dual-frame estimate Υ = Σ f_{i,μ⃗} · D_i ⊗ Δᵀ_{μ_k} ⊗ … ⊗ Δᵀ_{μ_1}, with
/// f the observed frequency within each experimental configuration. Exact
/// for informationally complete bases at exact frequencies; restricted to
/// the basis span otherwise. The output is Hermitian by construction but
/// deliberately not forced positive.
pub fn linear_inversion(ds: &Dataset, basis: &BasisSet, povm: &Povm) -> Result<ProcessTensor> {
    let layout = LegLayout::new(ds.steps, 2);
    let legs = 2 * ds.steps + 1;
    let setting_of: Vec<usize> = {
        let mut v = vec![usize::MAX; basis.len()];
        for (s, members) in basis.settings.iter().enumerate() {
            for &m in members {
                v[m] = s;
            }
        }
        v
    };
    // shots per experimental configuration (= per setting sequence)
    let mut config_shots: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    for rec in &ds.records {
        let config: Vec<usize> = rec.mu.iter().map(|&m| setting_of[m]).collect();
        *config_shots.entry(config).or_insert(0.0) += rec.shots;
    }

    let elem_dual: Vec<Vec<f64>> = basis
        .frame
        .duals
        .iter()
        .map(|d| matrix_to_pauli(&d.t(), 2))
        .collect::<Result<_>>()?;
    let eff_dual: Vec<Vec<f64>> = povm
        .frame
        .duals
        .iter()
        .map(|d| matrix_to_pauli(d, 1))
        .collect::<Result<_>>()?;

    let mut coeffs = vec![0.0; 1usize << (2 * legs)];
    for rec in &ds.records {
        let config: Vec<usize> = rec.mu.iter().map(|&m| setting_of[m]).collect();
        let total = config_shots[&config];
        if total <= 0.0 {
            continue;
        }
        for (&i, &n) in &rec.counts {
            if n == 0.0 {
                continue;
            }
            let mut factors = Vec::with_capacity(ds.steps + 1);
            factors.push(eff_dual[i].clone());
            for &mu in rec.mu.iter().rev() {
                factors.push(elem_dual[mu].clone());
            }
            ProductOperator { factors }.scatter(n / total, &mut coeffs);
        }
    }
    ProcessTensor::new(layout, pauli_to_matrix(&coeffs, legs)?)
}

/// Maximum-likelihood process reconstruction by projected gradient descent.
///
/// Each iteration takes a fixed-length gradient pre-step, projects it back
/// onto the physical set, and moves along the resulting feasible direction
/// as far as the sufficient-decrease test allows (step halving). Terminates
/// when an accepted step improves the objective by less than `cfg.tol`.
pub fn mle_pgdb(
    ds: &Dataset,
    basis: &BasisSet,
    povm: &Povm,
    cfg: &MleConfig,
) -> Result<(ProcessTensor, MleReport)> {
    let layout = LegLayout::new(ds.steps, 2);
    let legs = 2 * ds.steps + 1;
    let dim = layout.total_dim();
    let cells = CellTable::from_dataset(ds, basis, povm)?;
    let sys = AffineSystem::causality(&layout)?;
    let mut projector = Projector::new(&sys, cfg.projection_tol);

    // cold start: positive part of the linear-inversion estimate, pulled
    // onto the constraint set
    let li = linear_inversion(ds, basis, povm)?;
    let (init, _) = projector.project(&project_psd(&li.mat)?)?;
    let mut c = matrix_to_pauli(&init, legs)?;

    let mut probs = cells.probabilities(&c, dim);
    let mut f = neg_log_likelihood(&cells.counts, &probs);
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        // ∇f = −Σ (n/p)·V, assembled in the coefficient frame
        let mut grad = vec![0.0; c.len()];
        for ((op, &n), &p) in cells.ops.iter().zip(&cells.counts).zip(&probs) {
            op.scatter(-n / p.max(P_FLOOR), &mut grad);
        }
        let pre: Vec<f64> = c.iter().zip(&grad).map(|(ci, gi)| ci - cfg.mu * gi).collect();
        let (proj, _) = projector.project(&pauli_to_matrix(&pre, legs)?)?;
        let pc = matrix_to_pauli(&proj, legs)?;
        let dir: Vec<f64> = pc.iter().zip(&c).map(|(a, b)| a - b).collect();
        let slope = dir.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>() / dim as f64;
        if slope >= -1e-15 {
            converged = true;
            break;
        }
        // probabilities are affine along the feasible segment
        let dir_probs = cells.probabilities(&dir, dim);
        let mut beta = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> =
                probs.iter().zip(&dir_probs).map(|(p, dp)| p + beta * dp).collect();
            let f_trial = neg_log_likelihood(&cells.counts, &trial);
            if f_trial <= f + cfg.gamma * beta * slope {
                for (ci, di) in c.iter_mut().zip(&dir) {
                    *ci += beta * di;
                }
                probs = trial;
                let improvement = f - f_trial;
                f = f_trial;
                trace.push(f);
                accepted = true;
                if improvement < cfg.tol {
                    converged = true;
                }
                break;
            }
            beta *= 0.5;
        }
        if !accepted || converged {
            converged = converged || !accepted;
            break;
        }
    }

    let clamped = probs.iter().filter(|p| **p < P_FLOOR).count();
    // final polish: pull the returned point onto the constraint set more
    // tightly than the per-iterate tolerance, warm-started so it is cheap
    projector.tol = cfg.projection_tol.min(1e-8);
    let (polished, _) = projector.project(&pauli_to_matrix(&c, legs)?)?;
    let out = ProcessTensor::new(layout, polished)?;
    Ok((out, MleReport { objective_trace: trace, iterations, converged, clamped_cells: clamped }))
}
