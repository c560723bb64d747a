//! Pure classical-quantum states `|x⟩⟨x| ⊗ |ψ⟩⟨ψ|` with gates, qubit resets
//! and computational-basis measurements.
//!
//! Qubit `q1` is the most significant bit of an amplitude index. Channels
//! that produce mixtures (measurement, reset) are represented by their
//! computational-basis branch decomposition: one pure state per outcome,
//! weighted by the outcome probability.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::hash::{Hash, Hasher};

use log::warn;
use num::{BigInt, BigRational, One};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{eval_condition, Backend, BackendError};
use crate::syntax::{Atomic, Condition, Header};
use crate::valuation::{Rational, Valuation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a norm from 1, and of `U·U†` from the identity.
    pub norm: f64,
    /// Grid width used to key amplitudes.
    pub key: f64,
    /// Maximum distance for snapping a probability to a small-denominator rational.
    pub prob: f64,
    /// Largest denominator considered when snapping.
    pub max_den: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { norm: 1e-9, key: 1e-6, prob: 1e-9, max_den: 1 << 20 }
    }
}

/// A `2^k × 2^k` unitary, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    qubits: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    pub fn new(qubits: usize, data: Vec<Complex64>, tol: f64) -> Result<Self, String> {
        let dim = 1usize << qubits;
        if data.len() != dim * dim {
            return Err(format!("expected {} entries for a {dim}x{dim} matrix, got {}", dim * dim, data.len()));
        }
        let u = Unitary { qubits, data };
        let err = u.unitarity_error();
        if err > tol {
            return Err(format!("matrix is not unitary (max |U·U† - I| entry {err:e})"));
        }
        Ok(u)
    }

    fn real(qubits: usize, rows: &[f64]) -> Self {
        Unitary { qubits, data: rows.iter().map(|&r| Complex64::new(r, 0.0)).collect() }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    /// Largest entry of `|U·U† − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.entry(r, k) * self.entry(c, k).conj();
                }
                if r == c {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

#[derive(Deserialize)]
struct GateFileEntry {
    name: String,
    size: usize,
    matrix: Vec<[f64; 2]>,
}

/// Named unitaries: the built-in library plus user-supplied matrices.
#[derive(Clone, Debug)]
pub struct GateRegistry {
    gates: BTreeMap<String, Unitary>,
}

impl Default for GateRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl GateRegistry {
    pub fn builtin() -> Self {
        let h = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let mut gates = BTreeMap::new();
        gates.insert("I".into(), Unitary::real(1, &[1.0, 0.0, 0.0, 1.0]));
        gates.insert("X".into(), Unitary::real(1, &[0.0, 1.0, 1.0, 0.0]));
        gates.insert("Y".into(), Unitary { qubits: 1, data: vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)] });
        gates.insert("Z".into(), Unitary::real(1, &[1.0, 0.0, 0.0, -1.0]));
        gates.insert("H".into(), Unitary::real(1, &[h, h, h, -h]));
        gates.insert("S".into(), Unitary { qubits: 1, data: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)] });
        gates.insert("T".into(), Unitary { qubits: 1, data: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, h)] });
        #[rustfmt::skip]
        gates.insert("CNOT".into(), Unitary::real(2, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]));
        #[rustfmt::skip]
        gates.insert("CZ".into(), Unitary::real(2, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
        ]));
        #[rustfmt::skip]
        gates.insert("SWAP".into(), Unitary::real(2, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ]));
        GateRegistry { gates }
    }

    /// Adds the gates of a JSON sidecar: an array (or a single object) of
    /// `{name, size, matrix}` where `size` is the matrix dimension and
    /// `matrix` lists `[re, im]` entries row-major.
    pub fn load_json(&mut self, text: &str, tol: f64) -> Result<(), String> {
        let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid gate file: {e}"))?;
        let entries: Vec<GateFileEntry> = match value {
            Value::Array(_) => serde_json::from_value(value),
            _ => serde_json::from_value(value).map(|e| vec![e]),
        }
        .map_err(|e| format!("invalid gate file: {e}"))?;
        for e in entries {
            if e.size == 0 || !e.size.is_power_of_two() {
                return Err(format!("gate `{}`: size {} is not a power of two", e.name, e.size));
            }
            let qubits = e.size.trailing_zeros() as usize;
            let data = e.matrix.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            let u = Unitary::new(qubits, data, tol).map_err(|msg| format!("gate `{}`: {msg}", e.name))?;
            self.gates.insert(e.name, u);
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Unitary> {
        self.gates.get(name)
    }

    /// Gate names with their arity, for the parser.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        self.gates.iter().map(|(n, u)| (n.clone(), u.qubits)).collect()
    }
}

/// A gate application: a unitary together with its target qubits (1-based).
#[derive(Clone, Debug)]
pub struct GateSpec {
    pub name: String,
    pub unitary: Unitary,
    pub targets: Vec<usize>,
}

/// Pure classical-quantum state. Equality, ordering and hashing go through
/// the canonical key: the bits plus the phase-normalized amplitudes rounded
/// to the key grid.
#[derive(Clone, Debug)]
pub struct CQState {
    bits: Vec<bool>,
    amps: Vec<Complex64>,
    key: Vec<i64>,
    grid: f64,
}

impl CQState {
    /// Validates the norm, fixes the global phase and computes the key.
    pub fn new(bits: Vec<bool>, amps: Vec<Complex64>, tol: &Tolerances) -> Result<Self, BackendError> {
        if !amps.len().is_power_of_two() {
            return Err(BackendError::Amplitude(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > tol.norm {
            return Err(BackendError::Amplitude(format!("state norm² {norm} differs from 1")));
        }
        let mut amps = amps;
        if let Some(lead) = amps.iter().find(|a| a.norm() > tol.key).copied() {
            let phase = lead.conj() / lead.norm();
            for a in &mut amps {
                *a *= phase;
            }
        }
        let key = amps
            .iter()
            .flat_map(|a| [grid_round(a.re, tol.key), grid_round(a.im, tol.key)])
            .collect();
        Ok(CQState { bits, amps, key, grid: tol.key })
    }

    /// All bits 0, all qubits `|0⟩`.
    pub fn zero(bits: usize, qubits: usize, tol: &Tolerances) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        CQState::new(vec![false; bits], amps, tol).expect("basis state is normalized")
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    /// Canonical key: bit string and rounded `(re, im)` grid coordinates.
    pub fn canonical_key(&self) -> (String, &[i64]) {
        (self.bits_string(), &self.key)
    }

    pub fn bits_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Probability of reading `value` on qubit `q` (1-based).
    pub fn prob_of(&self, q: usize, value: bool) -> f64 {
        let m = self.num_qubits();
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| qubit_bit(*k, q, m) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

impl PartialEq for CQState {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && self.key == other.key
    }
}

impl Eq for CQState {}

impl PartialOrd for CQState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CQState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits.cmp(&other.bits).then_with(|| self.key.cmp(&other.key))
    }
}

impl Hash for CQState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
        self.key.hash(state);
    }
}

fn grid_round(x: f64, grid: f64) -> i64 {
    let v = (x / grid).round() as i64;
    if v == 0 {
        0
    } else {
        v
    }
}

fn qubit_bit(index: usize, q: usize, m: usize) -> bool {
    (index >> (m - q)) & 1 == 1
}

/// Applies `u` to the `targets` (1-based, first target most significant) of
/// an `m`-qubit amplitude vector.
pub fn apply_unitary(amps: &[Complex64], m: usize, u: &Unitary, targets: &[usize]) -> Vec<Complex64> {
    let k = targets.len();
    let dim = 1usize << k;
    let shifts: Vec<usize> = targets.iter().map(|&t| m - t).collect();
    let mask: usize = shifts.iter().map(|s| 1usize << s).sum();
    let mut out = amps.to_vec();
    let mut idx = vec![0usize; dim];
    for base in (0..amps.len()).filter(|b| b & mask == 0) {
        for (l, slot) in idx.iter_mut().enumerate() {
            *slot = base
                | shifts.iter().enumerate().map(|(a, s)| ((l >> (k - 1 - a)) & 1) << s).sum::<usize>();
        }
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..dim {
                acc += u.entry(r, c) * amps[idx[c]];
            }
            out[idx[r]] = acc;
        }
    }
    out
}

/// Best rational approximation of `x` with denominator at most `max_den`.
pub fn best_rational(x: f64, max_den: u64) -> BigRational {
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (0, 1, 1, 0);
    let max_den = max_den as i128;
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_den {
            let k = (max_den - q0) / q1;
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            let semi = ps as f64 / qs as f64;
            let conv = p1 as f64 / q1 as f64;
            let (p, q) = if (semi - x).abs() < (conv - x).abs() { (ps, qs) } else { (p1, q1) };
            return BigRational::new(BigInt::from(p), BigInt::from(q));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    BigRational::new(BigInt::from(p1), BigInt::from(q1))
}

/// Converts branch probabilities to exact rationals summing to 1.
///
/// Each probability is snapped to a rational with denominator at most
/// `max_den` when one lies within `prob`; otherwise its exact binary value
/// is kept and a warning is logged. The last branch absorbs the rounding
/// residue.
pub fn rationalize(probs: &[f64], tol: &Tolerances) -> Vec<Rational> {
    let n = probs.len();
    let mut out: Vec<Rational> = Vec::with_capacity(n);
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == n {
            let rest: Rational = out.iter().sum();
            let last = Rational::one() - rest;
            if (rational_to_f64(&last) - p).abs() > tol.prob.max(1e-12) * 10.0 {
                warn!("branch probability {p} adjusted to {last} so the weights sum to 1");
            }
            out.push(last);
        } else {
            let snapped = best_rational(p, tol.max_den);
            if (rational_to_f64(&snapped) - p).abs() <= tol.prob {
                out.push(snapped);
            } else {
                warn!("probability {p} has no rational within {} with denominator <= {}", tol.prob, tol.max_den);
                out.push(BigRational::from_float(p).expect("finite probability"));
            }
        }
    }
    out
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug)]
pub struct QuantumBackend {
    bits: usize,
    qubits: usize,
    gates: GateRegistry,
    tol: Tolerances,
}

impl QuantumBackend {
    pub fn new(bits: usize, qubits: usize) -> Self {
        QuantumBackend { bits, qubits, gates: GateRegistry::builtin(), tol: Tolerances::default() }
    }

    pub fn from_header(h: &Header) -> Option<Self> {
        match h {
            Header::Quantum { bits, qubits } => Some(Self::new(*bits, *qubits)),
            Header::Classical { .. } => None,
        }
    }

    pub fn with_gates(mut self, gates: GateRegistry) -> Self {
        self.gates = gates;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn gates(&self) -> &GateRegistry {
        &self.gates
    }

    pub fn num_bits(&self) -> usize {
        self.bits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn zero_state(&self) -> CQState {
        CQState::zero(self.bits, self.qubits, &self.tol)
    }

    /// State with the given bits and amplitudes, checked against the register sizes.
    pub fn state(&self, bits: Vec<bool>, amps: Vec<Complex64>) -> Result<CQState, BackendError> {
        if bits.len() != self.bits || amps.len() != 1 << self.qubits {
            return Err(BackendError::Amplitude(format!(
                "expected {} bits and {} amplitudes",
                self.bits,
                1usize << self.qubits
            )));
        }
        CQState::new(bits, amps, &self.tol)
    }

    fn check_qubit(&self, q: usize) -> Result<(), BackendError> {
        if q == 0 || q > self.qubits {
            return Err(BackendError::IndexOutOfRange { what: "qubit", index: q });
        }
        Ok(())
    }

    pub fn interp_gate(&self, g: &GateSpec, s: &CQState) -> Result<Valuation<CQState>, BackendError> {
        for &q in &g.targets {
            self.check_qubit(q)?;
        }
        if g.targets.len() != g.unitary.qubits() {
            return Err(BackendError::Amplitude(format!(
                "gate `{}` acts on {} qubits, {} targets given",
                g.name,
                g.unitary.qubits(),
                g.targets.len()
            )));
        }
        let amps = apply_unitary(&s.amps, self.qubits, &g.unitary, &g.targets);
        Ok(Valuation::point(CQState::new(s.bits.clone(), amps, &self.tol)?))
    }

    /// Branches `(b, p_b, collapsed amplitudes)` of a computational-basis
    /// measurement of qubit `q`. Zero-probability branches are dropped.
    fn branches(&self, q: usize, s: &CQState) -> Result<Vec<(bool, f64, Vec<Complex64>)>, BackendError> {
        let m = self.qubits;
        let mut out = Vec::with_capacity(2);
        for b in [false, true] {
            let p = s.prob_of(q, b);
            if p < self.tol.norm {
                continue;
            }
            let scale = 1.0 / p.sqrt();
            let amps = s
                .amps
                .iter()
                .enumerate()
                .map(|(k, a)| if qubit_bit(k, q, m) == b { a * scale } else { Complex64::new(0.0, 0.0) })
                .collect();
            out.push((b, p, amps));
        }
        if out.is_empty() {
            return Err(BackendError::Amplitude(format!("both outcomes of measuring q{q} have negligible probability")));
        }
        Ok(out)
    }

    fn weighted(&self, states: Vec<(f64, CQState)>) -> Result<Valuation<CQState>, BackendError> {
        let probs: Vec<f64> = states.iter().map(|(p, _)| *p).collect();
        let weights = rationalize(&probs, &self.tol);
        Ok(Valuation::from_pairs(states.into_iter().map(|(_, s)| s).zip(weights))?)
    }

    /// `M[x_bit ← q_qubit]`: record the outcome in the bit, collapse the qubit.
    pub fn interp_measure(&self, bit: usize, qubit: usize, s: &CQState) -> Result<Valuation<CQState>, BackendError> {
        if bit == 0 || bit > self.bits {
            return Err(BackendError::IndexOutOfRange { what: "bit", index: bit });
        }
        self.check_qubit(qubit)?;
        let mut states = Vec::with_capacity(2);
        for (b, p, amps) in self.branches(qubit, s)? {
            let mut bits = s.bits.clone();
            bits[bit - 1] = b;
            states.push((p, CQState::new(bits, amps, &self.tol)?));
        }
        self.weighted(states)
    }

    /// `q ← |0⟩`: discard the qubit and replace it by `|0⟩`, decomposed along
    /// the computational basis of the discarded qubit.
    pub fn interp_reset(&self, qubit: usize, s: &CQState) -> Result<Valuation<CQState>, BackendError> {
        self.check_qubit(qubit)?;
        let m = self.qubits;
        let shift = 1usize << (m - qubit);
        let mut states = Vec::with_capacity(2);
        for (b, p, amps) in self.branches(qubit, s)? {
            let amps = if b {
                let mut moved = vec![Complex64::new(0.0, 0.0); amps.len()];
                for (k, a) in amps.iter().enumerate() {
                    if k & shift != 0 {
                        moved[k & !shift] = *a;
                    }
                }
                moved
            } else {
                amps
            };
            states.push((p, CQState::new(s.bits.clone(), amps, &self.tol)?));
        }
        self.weighted(states)
    }
}

impl Backend for QuantumBackend {
    type State = CQState;

    fn name(&self) -> &'static str {
        "quantum"
    }

    fn interp_atomic(&self, a: &Atomic, s: &CQState) -> Result<Valuation<CQState>, BackendError> {
        match a {
            Atomic::Gate { name, qubits } => {
                let unitary = self.gates.get(name).ok_or_else(|| BackendError::UnknownGate(name.clone()))?;
                let spec = GateSpec { name: name.clone(), unitary: unitary.clone(), targets: qubits.clone() };
                self.interp_gate(&spec, s)
            }
            Atomic::Reset { qubit } => self.interp_reset(*qubit, s),
            Atomic::Measure { bit, qubit } => self.interp_measure(*bit, *qubit, s),
            Atomic::Assign { .. } | Atomic::RandAssign { .. } => {
                Err(BackendError::WrongBackend("classical assignment".into(), "quantum"))
            }
        }
    }

    fn interp_cond(&self, b: &Condition, s: &CQState) -> Result<bool, BackendError> {
        eval_condition(b, &|atom| match atom {
            Condition::Bit { bit, value } => {
                let v = s.bits.get(bit.wrapping_sub(1)).ok_or(BackendError::IndexOutOfRange { what: "bit", index: *bit })?;
                Ok(*v == *value)
            }
            Condition::Cmp(..) => Err(BackendError::WrongBackend("integer comparison".into(), "quantum")),
            _ => unreachable!("eval_condition only passes atoms"),
        })
    }

    fn state_json(&self, s: &CQState) -> Value {
        let amps: Vec<Value> = s
            .key
            .chunks(2)
            .map(|c| json!([c[0] as f64 * s.grid, c[1] as f64 * s.grid]))
            .collect();
        json!({ "bits": s.bits_string(), "amps": amps })
    }
}
