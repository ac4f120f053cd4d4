//! Experiment records: which operations were slotted, what was counted.
//!
//! One record per operation sequence μ⃗ (chronological element indices, one
//! per step), holding the final-measurement counts observed together with
//! that sequence. For stochastic elements — instrument outcomes, causal
//! breaks — the element index is itself an outcome, so a record's `shots`
//! is whatever landed on that sequence, not an experimenter's choice.
//!
//! Files are JSON lines, one record per line:
//! `{"mu":[2,0,1],"counts":{"0":312,"4":117},"shots":429}`.

use crate::basis::{BasisSet, Povm};
use crate::error::{Error, Result};
use crate::process::ProcessTensor;
use crate::simulator::sample_counts_keyed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Record {
    /// Element index per step, earliest first.
    pub mu: Vec<usize>,
    /// Final-effect index → observed count. Fractional counts appear in
    /// exact (infinite-shot) datasets.
    pub counts: BTreeMap<usize, f64>,
    /// Total count landing on this sequence; equals the sum of `counts`.
    pub shots: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub steps: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>, steps: usize) -> Result<Self> {
        let ds = Dataset { records, steps };
        ds.validate()?;
        Ok(ds)
    }

    /// Shape and bookkeeping checks: sequence lengths, non-negative counts,
    /// per-record count totals.
    pub fn validate(&self) -> Result<()> {
        for (r, rec) in self.records.iter().enumerate() {
            if rec.mu.len() != self.steps {
                return Err(Error::Data(format!(
                    "record {r}: sequence length {} != {} steps",
                    rec.mu.len(),
                    self.steps
                )));
            }
            let mut sum = 0.0;
            for (&i, &n) in &rec.counts {
                if n < 0.0 {
                    return Err(Error::Data(format!("record {r}: negative count for effect {i}")));
                }
                sum += n;
            }
            if (sum - rec.shots).abs() > 1e-6 * rec.shots.max(1.0) {
                return Err(Error::Data(format!(
                    "record {r}: counts sum to {sum}, shots field says {}",
                    rec.shots
                )));
            }
        }
        Ok(())
    }

    pub fn total_shots(&self) -> f64 {
        self.records.iter().map(|r| r.shots).sum()
    }

    pub fn num_records(&self) -> usize {
        self.records.len()
    }

    /// Observed frequency of effect `i` with sequence `mu`, as a fraction of
    /// the whole dataset.
    pub fn frequency(&self, rec: &Record, effect: usize) -> f64 {
        let total = self.total_shots();
        if total == 0.0 {
            return 0.0;
        }
        rec.counts.get(&effect).copied().unwrap_or(0.0) / total
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str, steps: usize) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect::<Result<Vec<Record>>>()?;
        Dataset::new(records, steps)
    }

    pub fn write_jsonl(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn read_jsonl(path: &std::path::Path, steps: usize) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut text = String::new();
        for line in f.lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Self::from_jsonl(&text, steps)
    }
}

/// Number of distinct circuits behind a `steps`-long experiment: element
/// sequences times final measurement settings.
pub fn circuit_count(basis: &BasisSet, povm: &Povm, steps: usize) -> usize {
    basis.sequence_count(steps) * povm.settings.len()
}

/// Every experimenter-chosen configuration: one setting index per step.
fn setting_sequences(num_settings: usize, steps: usize) -> Vec<Vec<usize>> {
    let mut seqs = vec![vec![]];
    for _ in 0..steps {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                (0..num_settings).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    seqs
}

/// Joint outcome table for one configuration: every element sequence
/// compatible with the chosen settings, with its final-effect probability
/// row. Computed by conditioning the process slot by slot, earliest first.
fn config_table(
    pt: &ProcessTensor,
    basis: &BasisSet,
    povm: &Povm,
    config: &[usize],
) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    fn recurse(
        pt: &ProcessTensor,
        basis: &BasisSet,
        povm: &Povm,
        remaining: &[usize],
        prefix: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, Vec<f64>)>,
    ) -> Result<()> {
        if remaining.is_empty() {
            let rho = &pt.mat;
            let probs = povm.effects().iter().map(|e| e.inner_re(rho).max(0.0)).collect();
            out.push((prefix.clone(), probs));
            return Ok(());
        }
        for &mu in &basis.settings[remaining[0]] {
            let conditioned = pt.condition_on_operation(0, basis.element(mu))?;
            prefix.push(mu);
            recurse(&conditioned, basis, povm, &remaining[1..], prefix, out)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    recurse(pt, basis, povm, config, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn gather(cells: Vec<(Vec<usize>, Vec<f64>)>, records: &mut Vec<Record>) {
    for (mu, row) in cells {
        let counts: BTreeMap<usize, f64> =
            row.iter().enumerate().filter(|(_, n)| **n > 0.0).map(|(i, n)| (i, *n)).collect();
        let shots = counts.values().sum();
        records.push(Record { mu, counts, shots });
    }
}

/// Infinite-shot dataset: counts are `shots_per_config` times the joint Born
/// probabilities, so frequencies equal probabilities exactly.
pub fn exact_dataset(
    pt: &ProcessTensor,
    basis: &BasisSet,
    povm: &Povm,
    shots_per_config: f64,
) -> Result<Dataset> {
    let mut records = Vec::new();
    for config in setting_sequences(basis.settings.len(), pt.k()) {
        let cells = config_table(pt, basis, povm, &config)?
            .into_iter()
            .map(|(mu, row)| (mu, row.iter().map(|p| p * shots_per_config).collect()))
            .collect();
        gather(cells, &mut records);
    }
    Dataset::new(records, pt.k())
}

/// Finite-shot dataset: for each configuration, `shots_per_config` draws
/// from the joint distribution over element realisations and final effects.
/// Reproducible: the RNG stream is keyed by the configuration index.
pub fn sampled_dataset(
    pt: &ProcessTensor,
    basis: &BasisSet,
    povm: &Povm,
    shots_per_config: u64,
    seed: u64,
) -> Result<Dataset> {
    let mut records = Vec::new();
    for (c, config) in setting_sequences(basis.settings.len(), pt.k()).iter().enumerate() {
        let table = config_table(pt, basis, povm, config)?;
        let mut dist: Vec<f64> = Vec::new();
        for (_, row) in &table {
            dist.extend_from_slice(row);
        }
        let norm: f64 = dist.iter().sum();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Solve(format!(
                "configuration {c}: joint probabilities sum to {norm}, not 1"
            )));
        }
        for p in &mut dist {
            *p /= norm;
        }
        let draws = sample_counts_keyed(&dist, shots_per_config, seed, c as u64)?;
        let width = povm.num_effects();
        let cells = table
            .into_iter()
            .enumerate()
            .map(|(r, (mu, _))| {
                let row = draws[r * width..(r + 1) * width].iter().map(|&n| n as f64).collect();
                (mu, row)
            })
            .collect();
        gather(cells, &mut records);
    }
    Dataset::new(records, pt.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{causal_break_basis, pauli_povm, unitary_basis};
    use crate::channel::Channel;
    use crate::gates::{hadamard, ket_proj};
    use crate::process::{OpSequence, ProcessTensor};

    fn two_step_process() -> ProcessTensor {
        let h = Channel::from_unitary(&hadamard()).unwrap();
        let dep = Channel::depolarizing(2, 0.25);
        ProcessTensor::markov(&[h, dep], &ket_proj(0)).unwrap()
    }

    #[test]
    fn exact_counts_match_direct_born_rule() {
        let pt = two_step_process();
        let basis = unitary_basis(10).unwrap();
        let povm = pauli_povm();
        let ds = exact_dataset(&pt, &basis, &povm, 1.0).unwrap();
        assert_eq!(ds.num_records(), 100);
        for rec in ds.records.iter().step_by(17) {
            let seq = OpSequence::new(
                rec.mu.iter().map(|&m| basis.element(m).clone()).collect(),
            );
            for (&i, &n) in &rec.counts {
                let p = pt.born_rule(&seq, &povm.effects()[i]).unwrap();
                assert!((p - n).abs() < 1e-10, "cell ({:?},{i}): {p} vs {n}", rec.mu);
            }
        }
    }

    #[test]
    fn exact_dataset_shots_are_consistent() {
        let pt = two_step_process();
        let basis = causal_break_basis().unwrap();
        let povm = pauli_povm();
        let ds = exact_dataset(&pt, &basis, &povm, 100.0).unwrap();
        assert_eq!(ds.num_records(), 256);
        // per configuration the joint distribution is normalised, and there
        // are 4^2 configurations of 100 shots each
        assert!((ds.total_shots() - 1600.0).abs() < 1e-6);
        assert_eq!(circuit_count(&basis, &povm, 2), 768);
    }

    #[test]
    fn sampled_dataset_is_reproducible_and_converges() {
        let pt = two_step_process();
        let basis = unitary_basis(10).unwrap();
        let povm = pauli_povm();
        let a = sampled_dataset(&pt, &basis, &povm, 2000, 7).unwrap();
        let b = sampled_dataset(&pt, &basis, &povm, 2000, 7).unwrap();
        assert_eq!(a, b);
        let c = sampled_dataset(&pt, &basis, &povm, 2000, 8).unwrap();
        assert_ne!(a, c);

        let exact = exact_dataset(&pt, &basis, &povm, 1.0).unwrap();
        // aggregate statistical error at 2000 shots/config should be small
        let mut worst = 0.0f64;
        for (s, e) in a.records.iter().zip(exact.records.iter()) {
            assert_eq!(s.mu, e.mu);
            for i in 0..povm.num_effects() {
                let fs = s.counts.get(&i).copied().unwrap_or(0.0) / 2000.0;
                let fe = e.counts.get(&i).copied().unwrap_or(0.0);
                worst = worst.max((fs - fe).abs());
            }
        }
        assert!(worst < 0.05, "worst frequency deviation {worst}");
    }

    #[test]
    fn jsonl_roundtrip() {
        let pt = two_step_process();
        let basis = unitary_basis(10).unwrap();
        let povm = pauli_povm();
        let ds = sampled_dataset(&pt, &basis, &povm, 128, 3).unwrap();
        let text = ds.to_jsonl().unwrap();
        let back = Dataset::from_jsonl(&text, 2).unwrap();
        assert_eq!(ds, back);
        assert!(text.lines().next().unwrap().starts_with("{\"mu\":["));
    }

    #[test]
    fn validation_rejects_inconsistent_records() {
        let bad = Record { mu: vec![0], counts: BTreeMap::from([(0, 3.0)]), shots: 5.0 };
        assert!(Dataset::new(vec![bad], 1).is_err());
        let wrong_len = Record { mu: vec![0, 1], counts: BTreeMap::new(), shots: 0.0 };
        assert!(Dataset::new(vec![wrong_len], 1).is_err());
    }
}
