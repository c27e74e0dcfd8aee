//! Small state-vector circuit simulator.
//!
//! Qubit 0 is the most significant bit of a basis index. Circuits are lists
//! of operations, each acting on a few target qubits with optional
//! computational-basis controls. Oracle operations are counted into a
//! [`QueryLedger`] every time they run; plain matrix gates are not.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_qubit_budget, ComplexMatrix, StateVector, C64, ZERO};

/// Which oracle an application is charged to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OracleTag {
    #[serde(rename = "U_H")]
    UH,
    #[serde(rename = "U_I")]
    UI,
    #[serde(rename = "other")]
    Other,
}

/// Application counts of a single oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    pub fwd: u64,
    pub inv: u64,
    /// Applications (either direction) that carried at least one control.
    pub ctrl: u64,
}

impl OracleCounts {
    pub fn total(&self) -> u64 {
        self.fwd + self.inv
    }
}

/// Oracle query counters plus an analytic estimate of other gates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    #[serde(rename = "U_H")]
    pub u_h: OracleCounts,
    #[serde(rename = "U_I")]
    pub u_i: OracleCounts,
    #[serde(default, skip_serializing_if = "is_zero_counts")]
    pub other: OracleCounts,
    pub gates_estimate: u64,
}

fn is_zero_counts(c: &OracleCounts) -> bool {
    *c == OracleCounts::default()
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counts(&self, tag: OracleTag) -> &OracleCounts {
        match tag {
            OracleTag::UH => &self.u_h,
            OracleTag::UI => &self.u_i,
            OracleTag::Other => &self.other,
        }
    }

    fn counts_mut(&mut self, tag: OracleTag) -> &mut OracleCounts {
        match tag {
            OracleTag::UH => &mut self.u_h,
            OracleTag::UI => &mut self.u_i,
            OracleTag::Other => &mut self.other,
        }
    }

    pub fn record(&mut self, tag: OracleTag, adjoint: bool, controlled: bool, times: u64) {
        let c = self.counts_mut(tag);
        if adjoint {
            c.inv += times;
        } else {
            c.fwd += times;
        }
        if controlled {
            c.ctrl += times;
        }
    }

    /// Total applications of `tag` in either direction.
    pub fn total(&self, tag: OracleTag) -> u64 {
        self.counts(tag).total()
    }

    /// Adds `times` copies of `other` into `self`.
    pub fn add_scaled(&mut self, other: &QueryLedger, times: u64) {
        for tag in [OracleTag::UH, OracleTag::UI, OracleTag::Other] {
            let src = *other.counts(tag);
            let dst = self.counts_mut(tag);
            dst.fwd += src.fwd * times;
            dst.inv += src.inv * times;
            dst.ctrl += src.ctrl * times;
        }
        self.gates_estimate += other.gates_estimate * times;
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        self.add_scaled(other, 1);
    }

    /// Counts for the inverse circuit: directions swap.
    pub fn inverted(&self) -> QueryLedger {
        let swap = |c: &OracleCounts| OracleCounts {
            fwd: c.inv,
            inv: c.fwd,
            ctrl: c.ctrl,
        };
        QueryLedger {
            u_h: swap(&self.u_h),
            u_i: swap(&self.u_i),
            other: swap(&self.other),
            gates_estimate: self.gates_estimate,
        }
    }

    /// Counts when every application gains an extra control.
    pub fn all_controlled(&self) -> QueryLedger {
        let ctl = |c: &OracleCounts| OracleCounts {
            ctrl: c.fwd + c.inv,
            ..*c
        };
        QueryLedger {
            u_h: ctl(&self.u_h),
            u_i: ctl(&self.u_i),
            other: ctl(&self.other),
            gates_estimate: self.gates_estimate,
        }
    }
}

/// What an operation does to its targets.
#[derive(Clone, Debug)]
pub enum Gate {
    /// An uncounted unitary.
    Matrix(Arc<ComplexMatrix>),
    /// A counted oracle unitary.
    Oracle {
        tag: OracleTag,
        matrix: Arc<ComplexMatrix>,
    },
    /// A nested circuit; its qubit `i` maps to the op's `targets[i]`.
    Sub(Arc<Circuit>),
}

#[derive(Clone, Debug)]
pub struct Op {
    pub gate: Gate,
    pub targets: Vec<usize>,
    /// `(qubit, required value)` pairs.
    pub controls: Vec<(usize, bool)>,
    pub adjoint: bool,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Op>,
    /// Analytic count of non-oracle gates attributed to this circuit body.
    gate_estimate: u64,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        check_qubit_budget(num_qubits)?;
        Ok(Self {
            num_qubits,
            ops: Vec::new(),
            gate_estimate: 0,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn set_gate_estimate(&mut self, n: u64) {
        self.gate_estimate = n;
    }

    fn check_wires(
        &self,
        targets: &[usize],
        controls: &[(usize, bool)],
        width: usize,
    ) -> Result<()> {
        if targets.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "gate acts on {width} qubits but {} targets given",
                targets.len()
            )));
        }
        let mut seen = vec![false; self.num_qubits];
        for q in targets.iter().copied().chain(controls.iter().map(|c| c.0)) {
            if q >= self.num_qubits || seen[q] {
                return Err(Error::DimensionMismatch(format!(
                    "qubit {q} out of range or repeated in a {}-qubit circuit",
                    self.num_qubits
                )));
            }
            seen[q] = true;
        }
        Ok(())
    }

    fn matrix_width(m: &ComplexMatrix) -> Result<usize> {
        if !m.is_square() || !m.rows().is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "gate matrix {}x{} is not a square power of two",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m.rows().trailing_zeros() as usize)
    }

    /// Appends an uncounted gate.
    pub fn gate(
        &mut self,
        m: ComplexMatrix,
        targets: &[usize],
        controls: &[(usize, bool)],
    ) -> Result<&mut Self> {
        self.check_wires(targets, controls, Self::matrix_width(&m)?)?;
        self.ops.push(Op {
            gate: Gate::Matrix(Arc::new(m)),
            targets: targets.to_vec(),
            controls: controls.to_vec(),
            adjoint: false,
        });
        Ok(self)
    }

    /// Appends a counted oracle call.
    pub fn oracle(
        &mut self,
        tag: OracleTag,
        m: Arc<ComplexMatrix>,
        targets: &[usize],
        controls: &[(usize, bool)],
        adjoint: bool,
    ) -> Result<&mut Self> {
        self.check_wires(targets, controls, Self::matrix_width(&m)?)?;
        self.ops.push(Op {
            gate: Gate::Oracle { tag, matrix: m },
            targets: targets.to_vec(),
            controls: controls.to_vec(),
            adjoint,
        });
        Ok(self)
    }

    /// Appends a nested circuit (or its inverse).
    pub fn sub(
        &mut self,
        c: Arc<Circuit>,
        targets: &[usize],
        controls: &[(usize, bool)],
        adjoint: bool,
    ) -> Result<&mut Self> {
        self.check_wires(targets, controls, c.num_qubits)?;
        self.ops.push(Op {
            gate: Gate::Sub(c),
            targets: targets.to_vec(),
            controls: controls.to_vec(),
            adjoint,
        });
        Ok(self)
    }

    /// Oracle counts and gate estimate for one application.
    pub fn cost(&self) -> QueryLedger {
        let mut l = QueryLedger {
            gates_estimate: self.gate_estimate,
            ..QueryLedger::default()
        };
        for op in &self.ops {
            let controlled = !op.controls.is_empty();
            match &op.gate {
                Gate::Matrix(_) => {}
                Gate::Oracle { tag, .. } => l.record(*tag, op.adjoint, controlled, 1),
                Gate::Sub(c) => {
                    let mut inner = c.cost();
                    if op.adjoint {
                        inner = inner.inverted();
                    }
                    if controlled {
                        inner = inner.all_controlled();
                    }
                    l.merge(&inner);
                }
            }
        }
        l
    }

    /// Runs the circuit on a full-register state in place.
    pub fn apply_in_place(&self, state: &mut StateVector, ledger: &mut QueryLedger) -> Result<()> {
        if state.dim() != 1usize << self.num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} on a {}-qubit circuit",
                state.dim(),
                self.num_qubits
            )));
        }
        let map: Vec<usize> = (0..self.num_qubits).collect();
        let mut scratch = Vec::new();
        self.run(
            state.amplitudes_mut(),
            self.num_qubits,
            &map,
            &[],
            false,
            ledger,
            &mut scratch,
        );
        ledger.gates_estimate += self.cost().gates_estimate;
        Ok(())
    }

    pub fn apply(&self, state: &StateVector, ledger: &mut QueryLedger) -> Result<StateVector> {
        let mut s = state.clone();
        self.apply_in_place(&mut s, ledger)?;
        Ok(s)
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        amps: &mut [C64],
        total: usize,
        map: &[usize],
        outer: &[(usize, bool)],
        adjoint: bool,
        ledger: &mut QueryLedger,
        scratch: &mut Vec<C64>,
    ) {
        let step = |op: &Op, amps: &mut [C64], ledger: &mut QueryLedger, scratch: &mut Vec<C64>| {
            let targets: Vec<usize> = op.targets.iter().map(|&t| map[t]).collect();
            let mut controls: Vec<(usize, bool)> = outer.to_vec();
            controls.extend(op.controls.iter().map(|&(q, v)| (map[q], v)));
            let adj = adjoint ^ op.adjoint;
            match &op.gate {
                Gate::Matrix(m) => apply_dense(amps, total, m, &targets, &controls, adj, scratch),
                Gate::Oracle { tag, matrix } => {
                    ledger.record(*tag, adj, !controls.is_empty(), 1);
                    apply_dense(amps, total, matrix, &targets, &controls, adj, scratch);
                }
                Gate::Sub(c) => c.run(amps, total, &targets, &controls, adj, ledger, scratch),
            }
        };
        if adjoint {
            for op in self.ops.iter().rev() {
                step(op, amps, ledger, scratch);
            }
        } else {
            for op in &self.ops {
                step(op, amps, ledger, scratch);
            }
        }
    }

    /// Dense unitary, one column per basis state.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.num_qubits;
        let mut u = ComplexMatrix::zeros(dim, dim);
        let mut sink = QueryLedger::new();
        for j in 0..dim {
            let col = self.apply(&StateVector::basis(dim, j), &mut sink)?;
            u.set_column(j, &col);
        }
        Ok(u)
    }

    /// The block `(⟨0^m| ⊗ I) U (|0^m⟩ ⊗ I)` where the first `num_ancilla`
    /// qubits are the ancillas.
    pub fn top_left_block(&self, num_ancilla: usize) -> Result<ComplexMatrix> {
        if num_ancilla > self.num_qubits {
            return Err(Error::DimensionMismatch("more ancillas than qubits".into()));
        }
        let dim = 1usize << self.num_qubits;
        let sys = 1usize << (self.num_qubits - num_ancilla);
        let mut b = ComplexMatrix::zeros(sys, sys);
        let mut sink = QueryLedger::new();
        for j in 0..sys {
            let col = self.apply(&StateVector::basis(dim, j), &mut sink)?;
            b.set_column(j, &col.leading_block(sys));
        }
        Ok(b)
    }
}

/// Applies a `2^k x 2^k` matrix (or its adjoint) to the given targets of a
/// `total`-qubit register, on the subspace selected by `controls`.
fn apply_dense(
    amps: &mut [C64],
    total: usize,
    m: &ComplexMatrix,
    targets: &[usize],
    controls: &[(usize, bool)],
    adjoint: bool,
    scratch: &mut Vec<C64>,
) {
    let k = targets.len();
    let local = 1usize << k;
    let bit = |q: usize| 1usize << (total - 1 - q);
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            (0..k)
                .filter(|&b| (l >> (k - 1 - b)) & 1 == 1)
                .map(|b| bit(targets[b]))
                .sum()
        })
        .collect();
    let tmask: usize = targets.iter().map(|&q| bit(q)).sum();
    let cmask: usize = controls.iter().map(|&(q, _)| bit(q)).sum();
    let cval: usize = controls.iter().filter(|c| c.1).map(|&(q, _)| bit(q)).sum();
    let data = m.data();
    scratch.resize(2 * local, ZERO);
    let (input, output) = scratch.split_at_mut(local);

    // Enumerate bases with all target bits clear and controls satisfied by
    // walking the free bits only.
    let fixed = tmask | cmask;
    let free = !fixed & ((1usize << total) - 1);
    let mut sub = 0usize;
    loop {
        let base = sub | cval;
        for (l, &o) in offsets.iter().enumerate() {
            input[l] = amps[base + o];
        }
        for (r, out) in output.iter_mut().enumerate() {
            let mut acc = ZERO;
            if adjoint {
                for (c, x) in input.iter().enumerate() {
                    acc += data[c * local + r].conj() * x;
                }
            } else {
                let row = &data[r * local..(r + 1) * local];
                for (a, x) in row.iter().zip(input.iter()) {
                    acc += a * x;
                }
            }
            *out = acc;
        }
        for (l, &o) in offsets.iter().enumerate() {
            amps[base + o] = output[l];
        }
        if sub == free {
            break;
        }
        sub = (sub.wrapping_sub(free)) & free;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hadamard, kron, operator_norm_diff, pauli_x, pauli_z, ONE};

    fn cnot_matrix() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
    }

    #[test]
    fn controlled_x_matches_cnot() {
        let mut c = Circuit::new(2).unwrap();
        c.gate(pauli_x(), &[1], &[(0, true)]).unwrap();
        let u = c.unitary().unwrap();
        assert!(operator_norm_diff(&u, &cnot_matrix()).unwrap() < 1e-15);
    }

    #[test]
    fn single_qubit_gate_is_kron_embedding() {
        let mut c = Circuit::new(3).unwrap();
        c.gate(hadamard(), &[1], &[]).unwrap();
        let want = kron(
            &kron(&ComplexMatrix::identity(2), &hadamard()),
            &ComplexMatrix::identity(2),
        );
        assert!(operator_norm_diff(&c.unitary().unwrap(), &want).unwrap() < 1e-14);
    }

    #[test]
    fn two_qubit_gate_on_permuted_targets() {
        // CNOT with control 2 and target 0, given as a 2-qubit matrix on (2, 0).
        let mut a = Circuit::new(3).unwrap();
        a.gate(cnot_matrix(), &[2, 0], &[]).unwrap();
        let mut b = Circuit::new(3).unwrap();
        b.gate(pauli_x(), &[0], &[(2, true)]).unwrap();
        assert!(operator_norm_diff(&a.unitary().unwrap(), &b.unitary().unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn zero_controls_and_subcircuits() {
        let mut inner = Circuit::new(2).unwrap();
        inner.gate(hadamard(), &[0], &[]).unwrap();
        inner
            .oracle(OracleTag::UH, Arc::new(cnot_matrix()), &[0, 1], &[], false)
            .unwrap();
        let inner = Arc::new(inner);

        let mut c = Circuit::new(3).unwrap();
        c.sub(inner.clone(), &[1, 2], &[(0, false)], false).unwrap();
        c.sub(inner.clone(), &[1, 2], &[(0, false)], true).unwrap();
        // Running U then U† under the same control is the identity.
        let u = c.unitary().unwrap();
        assert!(operator_norm_diff(&u, &ComplexMatrix::identity(8)).unwrap() < 1e-14);

        let cost = c.cost();
        assert_eq!(
            cost.u_h,
            OracleCounts {
                fwd: 1,
                inv: 1,
                ctrl: 2
            }
        );

        let mut ledger = QueryLedger::new();
        let s = StateVector::zero_state(3);
        c.apply(&s, &mut ledger).unwrap();
        assert_eq!(ledger, cost);
    }

    #[test]
    fn controlled_sub_only_acts_on_selected_branch() {
        let mut inner = Circuit::new(1).unwrap();
        inner.gate(pauli_z(), &[0], &[]).unwrap();
        let mut c = Circuit::new(2).unwrap();
        c.sub(Arc::new(inner), &[1], &[(0, true)], false).unwrap();
        let u = c.unitary().unwrap();
        let want = ComplexMatrix::from_diag(&[1.0, 1.0, 1.0, -1.0]);
        assert!(operator_norm_diff(&u, &want).unwrap() < 1e-15);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn top_left_block_extracts_block() {
        let mut c = Circuit::new(2).unwrap();
        let u = kron(&hadamard(), &pauli_x());
        c.gate(u.clone(), &[0, 1], &[]).unwrap();
        let b = c.top_left_block(1).unwrap();
        assert!(operator_norm_diff(&b, &u.top_left(2)).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_bad_wiring() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.gate(pauli_x(), &[2], &[]).is_err());
        assert!(c.gate(pauli_x(), &[0], &[(0, true)]).is_err());
        assert!(c.gate(cnot_matrix(), &[0], &[]).is_err());
        assert!(matches!(Circuit::new(64), Err(Error::QubitBudget { .. })));
        let s = StateVector::from_amplitudes(vec![ONE; 2]);
        assert!(c.apply(&s, &mut QueryLedger::new()).is_err());
    }

    #[test]
    fn ledger_json_layout() {
        let mut l = QueryLedger::new();
        l.record(OracleTag::UH, false, true, 3);
        l.record(OracleTag::UI, true, false, 2);
        l.gates_estimate = 7;
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["U_H"]["fwd"], 3);
        assert_eq!(v["U_H"]["ctrl"], 3);
        assert_eq!(v["U_I"]["inv"], 2);
        assert_eq!(v["gates_estimate"], 7);
        assert!(v.get("other").is_none());
        let back: QueryLedger = serde_json::from_value(v).unwrap();
        assert_eq!(back, l);
    }
}
