//! Leg bookkeeping for multi-time process states.
//!
//! A k-step process state lives on 2k+1 legs ordered latest-first:
//! (out_k, in_k, out_{k-1}, in_{k-1}, ..., in_1, out_0). Leg 0 is the final
//! output; the output of step 0 (the initial state slot) is last. The final
//! output leg may carry a larger dimension than the system when an ancilla
//! is kept alongside it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One leg of a process state: the input to step j (j >= 1) or the output of
/// step j (j >= 0, where step 0 is the initial preparation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    In(usize),
    Out(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegLayout {
    /// Number of steps (intermediate operation slots + final output).
    pub k: usize,
    /// System dimension carried by every leg except possibly the final output.
    pub d: usize,
    /// Dimension of the final output leg (equals `d` unless an ancilla is
    /// retained with the system).
    pub final_out_dim: usize,
}

impl LegLayout {
    pub fn qubits(k: usize) -> Self {
        LegLayout { k, d: 2, final_out_dim: 2 }
    }

    pub fn new(k: usize, d: usize) -> Self {
        LegLayout { k, d, final_out_dim: d }
    }

    pub fn num_legs(&self) -> usize {
        2 * self.k + 1
    }

    /// Leg dimensions, position 0 first.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.d; self.num_legs()];
        dims[0] = self.final_out_dim;
        dims
    }

    /// Total Hilbert-space dimension of the process state.
    pub fn total_dim(&self) -> usize {
        self.final_out_dim * self.d.pow(2 * self.k as u32)
    }

    /// Trace of a trace-preserving process state on this layout.
    pub fn expected_trace(&self) -> f64 {
        (self.d as f64).powi(self.k as i32)
    }

    pub fn pos(&self, leg: Leg) -> Result<usize> {
        match leg {
            Leg::Out(j) if j <= self.k => Ok(2 * (self.k - j)),
            Leg::In(j) if (1..=self.k).contains(&j) => Ok(2 * (self.k - j) + 1),
            Leg::Out(j) | Leg::In(j) => Err(Error::BadLeg { leg: j, num_legs: self.num_legs() }),
        }
    }

    /// Leg at a given position (inverse of `pos`).
    pub fn leg_at(&self, pos: usize) -> Result<Leg> {
        if pos >= self.num_legs() {
            return Err(Error::BadLeg { leg: pos, num_legs: self.num_legs() });
        }
        let j = self.k - pos / 2;
        Ok(if pos % 2 == 0 { Leg::Out(j) } else { Leg::In(j) })
    }

    /// Positions of the operation slot between steps: (in_{l+1}, out_l),
    /// the pair a step-l instrument acts on. Valid for l in 0..k.
    pub fn slot_positions(&self, l: usize) -> Result<(usize, usize)> {
        Ok((self.pos(Leg::In(l + 1))?, self.pos(Leg::Out(l))?))
    }

    /// Positions on the "late" side of the temporal cut before step j:
    /// all legs from out_k down to in_j. Complement = the "early" side.
    pub fn cut_before(&self, j: usize) -> Result<Vec<usize>> {
        let last = self.pos(Leg::In(j))?;
        Ok((0..=last).collect())
    }

    /// Number of qubit legs when every leg is a power-of-two dimension,
    /// for Pauli-frame bookkeeping.
    pub fn qubit_legs(&self) -> Result<usize> {
        if self.d != 2 {
            return Err(Error::DimMismatch(format!(
                "Pauli frame requires qubit legs, got d = {}",
                self.d
            )));
        }
        if !self.final_out_dim.is_power_of_two() {
            return Err(Error::DimMismatch(format!(
                "final output dim {} is not a power of two",
                self.final_out_dim
            )));
        }
        Ok(2 * self.k + self.final_out_dim.trailing_zeros() as usize)
    }
}
