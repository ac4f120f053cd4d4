//! Certified extremisation of process properties over the family of states
//! consistent with a dataset.
//!
//! When the probed operations do not span the full operator space, the data
//! pins the process only on a subspace; any property of interest then takes
//! a range of values across the compatible family. This module fits the
//! data first, replaces raw frequencies with the fitted probabilities (so
//! the constraint set is guaranteed non-empty), and runs projected gradient
//! ascent and descent of the chosen measure inside the feasible set, from
//! several starts.

use crate::basis::{BasisSet, Povm};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::layout::LegLayout;
use crate::mat::CMat;
use crate::measures::Measure;
use crate::mle::{mle_pgdb, MleConfig};
use crate::pauli::matrix_to_pauli;
use crate::process::ProcessTensor;
use crate::projection::{AffineSystem, ProductOperator, Projector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct BoundConfig {
    pub mle: MleConfig,
    /// Initial ascent step; adapted multiplicatively during the climb.
    pub step: f64,
    /// Stop a climb when the objective improves less than this.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of perturbed feasible starting points beyond the fit itself.
    pub extra_starts: usize,
    /// Random feasible hops allowed per climb once progress stalls.
    pub restarts: usize,
    pub seed: u64,
    pub projection_tol: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            mle: MleConfig::default(),
            step: 0.5,
            tol: 1e-7,
            max_iters: 220,
            extra_starts: 2,
            restarts: 3,
            seed: 99,
            projection_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundOutcome {
    pub value: f64,
    pub argmax: ProcessTensor,
    pub iterations: usize,
    /// Constraint residual of the returned extremiser.
    pub residual: f64,
}

/// The data-consistency constraint set: causality and normalisation, plus
/// one expectation row per (probed sequence, final effect) with the fitted
/// probability on the right-hand side.
fn consistency_system(
    ds: &Dataset,
    basis: &BasisSet,
    povm: &Povm,
    fit: &ProcessTensor,
) -> Result<AffineSystem> {
    let layout = LegLayout::new(ds.steps, 2);
    let legs = 2 * ds.steps + 1;
    let mut sys = AffineSystem::causality(&layout)?;
    let fit_coeffs = matrix_to_pauli(&fit.mat, legs)?;
    let mut scratch = Vec::new();
    // several records can share a sequence (one per final setting); one set
    // of rows per distinct sequence keeps the system free of duplicates
    let sequences: BTreeSet<&[usize]> = ds.records.iter().map(|r| r.mu.as_slice()).collect();
    for mu in sequences {
        let ops: Vec<&CMat> = mu.iter().map(|&m| basis.element(m)).collect();
        for effect in povm.effects() {
            let row = ProductOperator::from_sequence(effect, &ops)?;
            let p = row.raw_dot(&fit_coeffs, &mut scratch) / layout.total_dim() as f64;
            sys.push_measurement(row, p)?;
        }
    }
    Ok(sys)
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    (&g + &g.dagger()).scale_re(0.5)
}

/// Projected gradient climb of `measure` from one feasible start. When the
/// climb stalls on a face of the feasible set it hops to a random nearby
/// feasible point and continues, keeping the best certified iterate seen.
fn climb(
    start: &ProcessTensor,
    measure: &Measure,
    direction: Direction,
    projector: &mut Projector,
    cfg: &BoundConfig,
    rng: &mut impl Rng,
) -> Result<(ProcessTensor, usize)> {
    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    let mut current = start.clone();
    let mut value = measure.eval(&current)?;
    let mut best = (value, current.clone());
    let mut step = cfg.step;
    let mut stall = 0usize;
    let mut hops = cfg.restarts;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let grad = measure.gradient(&current)?;
        let scale = grad.fro_norm().max(1e-12);
        let trial_mat = &current.mat + &grad.scale_re(sign * step / scale);
        let (proj, rep) = projector.project(&trial_mat)?;
        let mut progressed = false;
        // an iterate is only admissible once it is certified feasible
        if rep.converged {
            let trial = ProcessTensor::new(current.layout, proj)?;
            let trial_value = measure.eval(&trial)?;
            if sign * (trial_value - value) > 0.0 {
                progressed = sign * (trial_value - value) >= cfg.tol;
                current = trial;
                value = trial_value;
                if sign * (value - best.0) > 0.0 {
                    best = (value, current.clone());
                }
                step = (step * 1.3).min(cfg.step * 8.0);
            }
        }
        if progressed {
            stall = 0;
            continue;
        }
        step *= 0.4;
        stall += 1;
        if stall < 6 && step > 1e-9 {
            continue;
        }
        if hops == 0 {
            break;
        }
        hops -= 1;
        let mut kick_size = 0.3 * best.1.mat.fro_norm();
        let mut moved = false;
        for _ in 0..4 {
            let dir = random_hermitian(current.dim(), rng);
            let kick = dir.scale_re(kick_size / dir.fro_norm().max(1e-12));
            projector.reset();
            let (proj, rep) = projector.project(&(&best.1.mat + &kick))?;
            if rep.converged {
                current = ProcessTensor::new(current.layout, proj)?;
                value = measure.eval(&current)?;
                moved = true;
                break;
            }
            kick_size *= 0.5;
        }
        if !moved {
            break;
        }
        step = cfg.step;
        stall = 0;
    }
    Ok((best.1, iterations))
}

/// Extremise `measure` over all processes consistent with the dataset.
/// Returns the certified endpoint in the requested direction together with
/// the process achieving it.
pub fn bound_property(
    ds: &Dataset,
    basis: &BasisSet,
    povm: &Povm,
    measure: &Measure,
    direction: Direction,
    cfg: &BoundConfig,
) -> Result<BoundOutcome> {
    let (fit, _) = mle_pgdb(ds, basis, povm, &cfg.mle)?;
    bound_property_from_fit(ds, basis, povm, &fit, measure, direction, cfg)
}

/// Same as [`bound_property`] but reusing an existing fit — lets callers
/// bound several measures over one family without refitting.
pub fn bound_property_from_fit(
    ds: &Dataset,
    basis: &BasisSet,
    povm: &Povm,
    fit: &ProcessTensor,
    measure: &Measure,
    direction: Direction,
    cfg: &BoundConfig,
) -> Result<BoundOutcome> {
    let sys = consistency_system(ds, basis, povm, fit)?;
    let mut projector = Projector::new(&sys, cfg.projection_tol);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut starts = vec![fit.clone()];
    for _ in 0..cfg.extra_starts {
        let mut kick = random_hermitian(fit.dim(), &mut rng).scale_re(0.5);
        for _ in 0..4 {
            projector.reset();
            let (proj, rep) = projector.project(&(&fit.mat + &kick))?;
            if rep.converged {
                starts.push(ProcessTensor::new(fit.layout, proj)?);
                break;
            }
            kick = kick.scale_re(0.25);
        }
    }

    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    let mut best: Option<(f64, ProcessTensor)> = None;
    let mut total_iters = 0;
    for start in &starts {
        projector.reset();
        let (end, iters) = climb(start, measure, direction, &mut projector, cfg, &mut rng)?;
        total_iters += iters;
        let v = measure.eval(&end)?;
        if best.as_ref().map_or(true, |(bv, _)| sign * (v - bv) > 0.0) {
            best = Some((v, end));
        }
    }
    let (value, argmax) = best.expect("at least one start");
    let legs = 2 * ds.steps + 1;
    let residual = sys.residual_inf(&matrix_to_pauli(&argmax.mat, legs)?);
    Ok(BoundOutcome { value, argmax, iterations: total_iters, residual })
}

/// Both endpoints of the property interval, run in parallel.
pub fn bound_interval(
    ds: &Dataset,
    basis: &BasisSet,
    povm: &Povm,
    measure: &Measure,
    cfg: &BoundConfig,
) -> Result<(BoundOutcome, BoundOutcome)> {
    let (fit, _) = mle_pgdb(ds, basis, povm, &cfg.mle)?;
    let (lo, hi) = rayon::join(
        || bound_property_from_fit(ds, basis, povm, &fit, measure, Direction::Min, cfg),
        || bound_property_from_fit(ds, basis, povm, &fit, measure, Direction::Max, cfg),
    );
    Ok((lo?, hi?))
}
