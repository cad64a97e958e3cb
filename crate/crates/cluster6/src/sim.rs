//! Exact dense simulation of small qubit registers.
//!
//! States are immutable: every operation returns a new state. Pure states are
//! kept as 2^n amplitude vectors and only become density matrices when a
//! channel is applied. Basis indices are big-endian bit strings with qubit 1
//! on the most significant bit, matching the 1-based labels used everywhere
//! else in the crate.
//!
//! After a partial trace the remaining qubits keep their original labels, so
//! Pauli strings written against the full register can still be evaluated on
//! the reduced state as long as they act trivially on the traced-out qubits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::pauli::{Pauli, PauliString};

/// Dense simulation cap: 4096 amplitudes, 16M density-matrix entries.
pub const MAX_SIM_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A gate to apply to a state. Qubits are addressed by label.
#[derive(Clone, Debug)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    /// An arbitrary single-qubit unitary, row-major.
    Unitary { qubit: usize, matrix: [[Complex64; 2]; 2] },
    Cz(usize, usize),
    Cx { control: usize, target: usize },
}

/// White noise plus independent per-qubit phase flips.
///
/// The white-noise weight `p` is the weight kept on the input state; the
/// remainder is replaced by the maximally mixed state. Each dephasing entry
/// `q` applies the channel `rho -> (1-q) rho + q Z rho Z` on its qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    white_noise_p: f64,
    dephasing: BTreeMap<usize, f64>,
}

impl NoiseSpec {
    pub fn new(white_noise_p: f64, dephasing: BTreeMap<usize, f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&white_noise_p) {
            return Err(Error::NoiseRange {
                name: "white_noise_p",
                value: white_noise_p,
                lo: 0.0,
                hi: 1.0,
            });
        }
        for (&qubit, &q) in &dephasing {
            if qubit == 0 {
                return Err(Error::QubitIndex { index: 0, n: MAX_SIM_QUBITS });
            }
            if !(0.0..=0.5).contains(&q) {
                return Err(Error::NoiseRange {
                    name: "dephasing",
                    value: q,
                    lo: 0.0,
                    hi: 0.5,
                });
            }
        }
        Ok(NoiseSpec { white_noise_p, dephasing })
    }

    pub fn white(p: f64) -> Result<Self> {
        Self::new(p, BTreeMap::new())
    }

    pub fn white_noise_p(&self) -> f64 {
        self.white_noise_p
    }

    pub fn dephasing(&self) -> &BTreeMap<usize, f64> {
        &self.dephasing
    }
}

/// Built-in states of the two-photon experiment, in the lab (tilde) frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    /// Product of the three entangled qubit pairs (1,4), (2,5), (3,6).
    He6Tilde,
    /// `He6Tilde` after CX on (1 -> 2) and CZ on (6, 5).
    Lc6Tilde,
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "he6-tilde" => Ok(NamedState::He6Tilde),
            "lc6-tilde" => Ok(NamedState::Lc6Tilde),
            _ => Err(Error::Parse(format!(
                "unknown state name {s:?} (expected he6-tilde or lc6-tilde)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
enum Form {
    Vector(Vec<Complex64>),
    Density(Vec<Complex64>),
}

/// A dense quantum state: amplitude vector or density matrix.
#[derive(Clone, Debug)]
pub struct QuantumState {
    labels: Vec<usize>,
    form: Form,
}

impl QuantumState {
    /// The all-|+> product state on `n` qubits.
    pub fn all_plus(n: usize) -> Result<Self> {
        check_cap(n)?;
        let dim = 1usize << n;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(QuantumState {
            labels: (1..=n).collect(),
            form: Form::Vector(vec![amp; dim]),
        })
    }

    /// Build a pure state from explicit amplitudes (must be normalized).
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_cap(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes for {n} qubits, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm^2 = {norm}, expected 1")));
        }
        Ok(QuantumState {
            labels: (1..=n).collect(),
            form: Form::Vector(amplitudes),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    /// Labels of the live qubits, ascending. `1..=n` unless qubits were
    /// traced out.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_density(&self) -> bool {
        matches!(self.form, Form::Density(_))
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match &self.form {
            Form::Vector(v) => Some(v),
            Form::Density(_) => None,
        }
    }

    /// Row-major density matrix entries, if in density form.
    pub fn density(&self) -> Option<&[Complex64]> {
        match &self.form {
            Form::Density(d) => Some(d),
            Form::Vector(_) => None,
        }
    }

    fn dim(&self) -> usize {
        1usize << self.labels.len()
    }

    fn position(&self, label: usize) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::QubitIndex {
                index: label,
                n: *self.labels.last().unwrap_or(&0),
            })
    }

    // Shift of a qubit position within a dense index of `bits` total bits,
    // position 0 being the most significant.
    fn shift(&self, pos: usize) -> usize {
        self.labels.len() - 1 - pos
    }

    /// Apply a gate and return the new state.
    pub fn apply_gate(&self, gate: &Gate) -> Result<QuantumState> {
        let k = self.labels.len();
        let mut out = self.clone();
        match gate {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) => {
                let u = fixed_gate_matrix(gate);
                out.apply_single(self.position(*q)?, &u);
            }
            Gate::Unitary { qubit, matrix } => {
                check_unitary(matrix)?;
                out.apply_single(self.position(*qubit)?, matrix);
            }
            Gate::Cz(a, b) => {
                let (pa, pb) = (self.position(*a)?, self.position(*b)?);
                if pa == pb {
                    return Err(Error::InvalidState(format!("CZ needs two distinct qubits, got {a}")));
                }
                out.apply_cz(pa, pb);
            }
            Gate::Cx { control, target } => {
                let (pc, pt) = (self.position(*control)?, self.position(*target)?);
                if pc == pt {
                    return Err(Error::InvalidState(format!(
                        "CX needs two distinct qubits, got {control}"
                    )));
                }
                out.apply_cx(pc, pt);
            }
        }
        debug_assert_eq!(out.labels.len(), k);
        Ok(out)
    }

    fn apply_single(&mut self, pos: usize, u: &[[Complex64; 2]; 2]) {
        let k = self.labels.len();
        let shift = self.shift(pos);
        match &mut self.form {
            Form::Vector(v) => apply_u2(v, shift, u),
            Form::Density(d) => {
                // rho -> U rho U^dag, with the matrix stored as a 2k-bit vector:
                // row bits high, column bits low.
                apply_u2(d, k + shift, u);
                let conj = [
                    [u[0][0].conj(), u[0][1].conj()],
                    [u[1][0].conj(), u[1][1].conj()],
                ];
                apply_u2(d, shift, &conj);
            }
        }
    }

    fn apply_cz(&mut self, pa: usize, pb: usize) {
        let k = self.labels.len();
        let (sa, sb) = (self.shift(pa), self.shift(pb));
        match &mut self.form {
            Form::Vector(v) => apply_cz_bits(v, sa, sb),
            Form::Density(d) => {
                apply_cz_bits(d, k + sa, k + sb);
                apply_cz_bits(d, sa, sb);
            }
        }
    }

    fn apply_cx(&mut self, pc: usize, pt: usize) {
        let k = self.labels.len();
        let (sc, st) = (self.shift(pc), self.shift(pt));
        match &mut self.form {
            Form::Vector(v) => apply_cx_bits(v, sc, st),
            Form::Density(d) => {
                apply_cx_bits(d, k + sc, k + st);
                apply_cx_bits(d, sc, st);
            }
        }
    }

    /// Density-matrix form of this state (outer product for pure states).
    pub fn to_density(&self) -> QuantumState {
        match &self.form {
            Form::Density(_) => self.clone(),
            Form::Vector(v) => {
                let dim = v.len();
                let mut d = vec![ZERO; dim * dim];
                for r in 0..dim {
                    for c in 0..dim {
                        d[r * dim + c] = v[r] * v[c].conj();
                    }
                }
                QuantumState {
                    labels: self.labels.clone(),
                    form: Form::Density(d),
                }
            }
        }
    }

    /// Mix in white noise, then apply the per-qubit dephasing channels.
    /// Always returns a density matrix.
    pub fn apply_noise(&self, spec: &NoiseSpec) -> Result<QuantumState> {
        for &qubit in spec.dephasing().keys() {
            self.position(qubit)?;
        }
        let mut out = self.to_density();
        let dim = out.dim();
        let p = spec.white_noise_p();
        if let Form::Density(d) = &mut out.form {
            let mixed = Complex64::new((1.0 - p) / dim as f64, 0.0);
            for (idx, entry) in d.iter_mut().enumerate() {
                *entry *= p;
                if idx % dim == idx / dim {
                    *entry += mixed;
                }
            }
        }
        for (&qubit, &q) in spec.dephasing() {
            let shift = out.shift(out.position(qubit)?);
            let factor = Complex64::new(1.0 - 2.0 * q, 0.0);
            if let Form::Density(d) = &mut out.form {
                for r in 0..dim {
                    for c in 0..dim {
                        if (r >> shift) & 1 != (c >> shift) & 1 {
                            d[r * dim + c] *= factor;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Expectation value of a Hermitian Pauli string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        let (xmask, zmask, factor) = self.pauli_masks(p)?;
        let dim = self.dim();
        let mut total = ZERO;
        match &self.form {
            Form::Vector(v) => {
                for b in 0..dim {
                    let sign = if ((b as u64 & zmask).count_ones() & 1) == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    total += v[b ^ xmask as usize].conj() * v[b] * factor * sign;
                }
            }
            Form::Density(d) => {
                for b in 0..dim {
                    let sign = if ((b as u64 & zmask).count_ones() & 1) == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    total += d[b * dim + (b ^ xmask as usize)] * factor * sign;
                }
            }
        }
        debug_assert!(total.im.abs() < 1e-9, "imaginary expectation {total}");
        Ok(total.re)
    }

    // Bit masks of a Pauli string in this state's dense index convention,
    // plus the scalar factor (global phase times one i per Y letter).
    fn pauli_masks(&self, p: &PauliString) -> Result<(u64, u64, Complex64)> {
        let contiguous = self.labels.iter().enumerate().all(|(i, &l)| l == i + 1);
        if contiguous && p.n() != self.labels.len() {
            return Err(Error::DimensionMismatch(p.n(), self.labels.len()));
        }
        let mut xmask = 0u64;
        let mut zmask = 0u64;
        let mut ys = 0u32;
        for q in p.support() {
            let pos = self.position(q)?;
            let bit = 1u64 << self.shift(pos);
            match p.letter(q) {
                Pauli::X => xmask |= bit,
                Pauli::Z => zmask |= bit,
                Pauli::Y => {
                    xmask |= bit;
                    zmask |= bit;
                    ys += 1;
                }
                Pauli::I => unreachable!("support is non-identity"),
            }
        }
        let i = Complex64::new(0.0, 1.0);
        let factor = p.phase().as_complex() * i.powu(ys);
        Ok((xmask, zmask, factor))
    }

    /// Trace out the given qubits, keeping original labels on the rest.
    pub fn partial_trace(&self, drop: &[usize]) -> Result<QuantumState> {
        if drop.is_empty() {
            return Err(Error::InvalidState("partial trace needs at least one qubit".into()));
        }
        let mut drop_sorted = drop.to_vec();
        drop_sorted.sort_unstable();
        drop_sorted.dedup();
        if drop_sorted.len() != drop.len() {
            return Err(Error::InvalidState("duplicate qubit in partial trace".into()));
        }
        for &q in &drop_sorted {
            self.position(q)?;
        }
        if drop_sorted.len() == self.labels.len() {
            return Err(Error::InvalidState("cannot trace out every qubit".into()));
        }

        let keep: Vec<usize> = self
            .labels
            .iter()
            .copied()
            .filter(|l| !drop_sorted.contains(l))
            .collect();
        let keep_shifts: Vec<usize> = keep.iter().map(|&l| self.shift(self.position(l).unwrap())).collect();
        let drop_shifts: Vec<usize> = drop_sorted
            .iter()
            .map(|&l| self.shift(self.position(l).unwrap()))
            .collect();

        let kd = 1usize << keep.len();
        let dd = 1usize << drop_shifts.len();
        let expand = |bits: usize, shifts: &[usize]| -> usize {
            // bit 0 of `bits` is the least significant kept/dropped qubit
            shifts
                .iter()
                .rev()
                .enumerate()
                .fold(0usize, |acc, (i, &s)| acc | (((bits >> i) & 1) << s))
        };

        let mut rho = vec![ZERO; kd * kd];
        match &self.form {
            Form::Vector(v) => {
                for r in 0..kd {
                    let er = expand(r, &keep_shifts);
                    for c in 0..kd {
                        let ec = expand(c, &keep_shifts);
                        let mut acc = ZERO;
                        for d in 0..dd {
                            let ed = expand(d, &drop_shifts);
                            acc += v[er | ed] * v[ec | ed].conj();
                        }
                        rho[r * kd + c] = acc;
                    }
                }
            }
            Form::Density(m) => {
                let dim = self.dim();
                for r in 0..kd {
                    let er = expand(r, &keep_shifts);
                    for c in 0..kd {
                        let ec = expand(c, &keep_shifts);
                        let mut acc = ZERO;
                        for d in 0..dd {
                            let ed = expand(d, &drop_shifts);
                            acc += m[(er | ed) * dim + (ec | ed)];
                        }
                        rho[r * kd + c] = acc;
                    }
                }
            }
        }
        Ok(QuantumState {
            labels: keep,
            form: Form::Density(rho),
        })
    }

    /// Sample joint local-Pauli measurement outcomes from the Born
    /// distribution. Deterministic for a fixed seed.
    ///
    /// `setting` must assign one of X, Y, Z to every live qubit.
    pub fn sample_setting(
        &self,
        setting: &BTreeMap<usize, Pauli>,
        shots: u64,
        seed: u64,
    ) -> Result<SampleCounts> {
        if shots == 0 {
            return Err(Error::Setting("shots must be at least 1".into()));
        }
        for &q in setting.keys() {
            self.position(q)?;
        }
        let mut basis = Vec::with_capacity(self.labels.len());
        for &label in &self.labels {
            let letter = *setting.get(&label).ok_or_else(|| {
                Error::Setting(format!("setting does not cover qubit {label}"))
            })?;
            if letter == Pauli::I {
                return Err(Error::Setting(format!(
                    "qubit {label}: a measurement basis must be X, Y, or Z"
                )));
            }
            basis.push(letter);
        }

        // Rotate each qubit's eigenbasis onto the computational basis.
        let mut rotated = self.clone();
        let s_dagger = [[ONE, ZERO], [ZERO, Complex64::new(0.0, -1.0)]];
        let h = hadamard();
        for (pos, letter) in basis.iter().enumerate() {
            match letter {
                Pauli::X => rotated.apply_single(pos, &h),
                Pauli::Y => {
                    rotated.apply_single(pos, &s_dagger);
                    rotated.apply_single(pos, &h);
                }
                Pauli::Z => {}
                Pauli::I => unreachable!(),
            }
        }

        let dim = rotated.dim();
        let mut probs = vec![0.0f64; dim];
        match &rotated.form {
            Form::Vector(v) => {
                for (i, a) in v.iter().enumerate() {
                    probs[i] = a.norm_sqr();
                }
            }
            Form::Density(d) => {
                for i in 0..dim {
                    probs[i] = d[i * dim + i].re.max(0.0);
                }
            }
        }
        let total: f64 = probs.iter().sum();
        let mut cumulative = Vec::with_capacity(dim);
        let mut acc = 0.0;
        for p in &probs {
            acc += p / total;
            cumulative.push(acc);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random();
            let idx = cumulative.partition_point(|&c| c <= u).min(dim - 1);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        Ok(SampleCounts {
            labels: self.labels.clone(),
            setting: basis,
            shots,
            counts,
        })
    }

    /// For a pure `psi`: overlap probability |<psi|self>|^2 or <psi|rho|psi>.
    pub fn overlap_probability(&self, psi: &QuantumState) -> Result<f64> {
        let target = psi
            .amplitudes()
            .ok_or_else(|| Error::InvalidState("overlap target must be a pure state".into()))?;
        if psi.labels != self.labels {
            return Err(Error::DimensionMismatch(psi.num_qubits(), self.num_qubits()));
        }
        match &self.form {
            Form::Vector(v) => {
                let inner: Complex64 = target
                    .iter()
                    .zip(v.iter())
                    .map(|(t, a)| t.conj() * a)
                    .sum();
                Ok(inner.norm_sqr())
            }
            Form::Density(d) => {
                let dim = self.dim();
                let mut acc = ZERO;
                for r in 0..dim {
                    for c in 0..dim {
                        acc += target[r].conj() * d[r * dim + c] * target[c];
                    }
                }
                debug_assert!(acc.im.abs() < 1e-9);
                Ok(acc.re)
            }
        }
    }

    /// Check the state invariants: unit norm for vectors; Hermitian, unit
    /// trace, positive semidefinite for density matrices.
    pub fn validate(&self) -> Result<()> {
        match &self.form {
            Form::Vector(v) => {
                let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidState(format!("norm^2 = {norm}")));
                }
            }
            Form::Density(d) => {
                let dim = self.dim();
                let mut trace = ZERO;
                for r in 0..dim {
                    trace += d[r * dim + r];
                    for c in 0..dim {
                        let delta = (d[r * dim + c] - d[c * dim + r].conj()).norm();
                        if delta > 1e-10 {
                            return Err(Error::InvalidState(format!(
                                "density matrix not Hermitian at ({r}, {c}): deviation {delta:.3e}"
                            )));
                        }
                    }
                }
                if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
                    return Err(Error::InvalidState(format!("trace = {trace}")));
                }
                let m = DMatrix::from_fn(dim, dim, |r, c| d[r * dim + c]);
                let eigen = m.symmetric_eigen();
                if let Some(min) = eigen
                    .eigenvalues
                    .iter()
                    .cloned()
                    .min_by(|a, b| a.partial_cmp(b).unwrap())
                {
                    if min < -1e-10 {
                        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Text dump: header "n=<count> form=vector|density", then one
    /// "index re im" line per entry. Traced states are re-labelled 1..=n.
    pub fn to_dump_text(&self) -> String {
        let (form, entries): (&str, &[Complex64]) = match &self.form {
            Form::Vector(v) => ("vector", v),
            Form::Density(d) => ("density", d),
        };
        let mut out = format!("n={} form={form}\n", self.labels.len());
        for (idx, a) in entries.iter().enumerate() {
            writeln!(out, "{idx} {} {}", a.re, a.im).expect("string write");
        }
        out
    }

    pub fn from_dump_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty state dump".into()))?;
        let mut n = None;
        let mut form = None;
        for token in header.split_whitespace() {
            if let Some(v) = token.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            } else if let Some(v) = token.strip_prefix("form=") {
                form = Some(v.to_string());
            }
        }
        let n = n.ok_or_else(|| Error::Parse(format!("line 1: bad header {header:?}")))?;
        check_cap(n)?;
        let form = form.ok_or_else(|| Error::Parse(format!("line 1: bad header {header:?}")))?;
        let expected = match form.as_str() {
            "vector" => 1usize << n,
            "density" => (1usize << n) * (1usize << n),
            _ => return Err(Error::Parse(format!("line 1: unknown form {form:?}"))),
        };
        let mut entries = vec![ZERO; expected];
        let mut seen = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let fail = || Error::Parse(format!("line {}: expected \"index re im\"", lineno + 2));
            let idx: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(fail)?;
            let re: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(fail)?;
            let im: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(fail)?;
            if idx >= expected {
                return Err(Error::Parse(format!(
                    "line {}: index {idx} out of range for {expected} entries",
                    lineno + 2
                )));
            }
            entries[idx] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != expected {
            return Err(Error::Parse(format!(
                "state dump has {seen} entries, expected {expected}"
            )));
        }
        let state = QuantumState {
            labels: (1..=n).collect(),
            form: if form == "vector" {
                Form::Vector(entries)
            } else {
                Form::Density(entries)
            },
        };
        state.validate()?;
        Ok(state)
    }
}

/// Outcome counts of a sampled joint Pauli measurement.
///
/// Outcome keys are dense basis indices of the rotated register: bit set
/// means the qubit at that position gave the -1 eigenvalue.
#[derive(Clone, Debug)]
pub struct SampleCounts {
    labels: Vec<usize>,
    setting: Vec<Pauli>,
    shots: u64,
    counts: BTreeMap<u64, u64>,
}

impl SampleCounts {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Basis letters in label order.
    pub fn setting(&self) -> &[Pauli] {
        &self.setting
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    /// Outcomes (+1/-1 per qubit, label order) for a dense outcome index.
    pub fn outcomes(&self, index: u64) -> Vec<i8> {
        let k = self.labels.len();
        (0..k)
            .map(|pos| {
                if (index >> (k - 1 - pos)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect()
    }
}

/// Graph state: CZ over every edge applied to the all-|+> state.
pub fn build_graph_state(graph: &GraphSpec) -> Result<QuantumState> {
    check_cap(graph.n())?;
    let mut state = QuantumState::all_plus(graph.n())?;
    for &(a, b) in graph.edges() {
        state = state.apply_gate(&Gate::Cz(a, b))?;
    }
    Ok(state)
}

/// The lab-frame states of the experiment, built from the three entangled
/// qubit pairs: (1,4) in (|00>+|11>)/sqrt2, (2,5) in (|00>-|11>)/sqrt2, and
/// (3,6) in (|10>+|01>)/sqrt2.
pub fn build_named_state(name: NamedState) -> QuantumState {
    let pair_14 = |a: usize, b: usize| match (a, b) {
        (0, 0) | (1, 1) => 1.0,
        _ => 0.0,
    };
    let pair_25 = |a: usize, b: usize| match (a, b) {
        (0, 0) => 1.0,
        (1, 1) => -1.0,
        _ => 0.0,
    };
    let pair_36 = |a: usize, b: usize| match (a, b) {
        (1, 0) | (0, 1) => 1.0,
        _ => 0.0,
    };
    let norm = 1.0 / (2.0 * 2.0_f64.sqrt());
    let mut amps = vec![ZERO; 64];
    for idx in 0..64usize {
        let bit = |q: usize| (idx >> (6 - q)) & 1;
        let value = pair_14(bit(1), bit(4)) * pair_25(bit(2), bit(5)) * pair_36(bit(3), bit(6));
        amps[idx] = Complex64::new(value * norm, 0.0);
    }
    let he6 = QuantumState::from_amplitudes(6, amps).expect("normalized by construction");
    match name {
        NamedState::He6Tilde => he6,
        NamedState::Lc6Tilde => he6
            .apply_gate(&Gate::Cx { control: 1, target: 2 })
            .and_then(|s| s.apply_gate(&Gate::Cz(6, 5)))
            .expect("static gates on valid qubits"),
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SIM_QUBITS {
        return Err(Error::CapExceeded {
            requested: n,
            cap: MAX_SIM_QUBITS,
        });
    }
    Ok(())
}

fn hadamard() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn fixed_gate_matrix(gate: &Gate) -> [[Complex64; 2]; 2] {
    let i = Complex64::new(0.0, 1.0);
    match gate {
        Gate::H(_) => hadamard(),
        Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
        Gate::Y(_) => [[ZERO, -i], [i, ZERO]],
        Gate::Z(_) => [[ONE, ZERO], [ZERO, -ONE]],
        Gate::S(_) => [[ONE, ZERO], [ZERO, i]],
        _ => unreachable!("fixed_gate_matrix called on a non-fixed gate"),
    }
}

fn check_unitary(u: &[[Complex64; 2]; 2]) -> Result<()> {
    // U^dag U = I
    let mut max_dev = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = ZERO;
            for k in 0..2 {
                acc += u[k][r].conj() * u[k][c];
            }
            let target = if r == c { ONE } else { ZERO };
            max_dev = max_dev.max((acc - target).norm());
        }
    }
    if max_dev > 1e-8 {
        return Err(Error::NonUnitary(max_dev));
    }
    Ok(())
}

fn apply_u2(data: &mut [Complex64], shift: usize, u: &[[Complex64; 2]; 2]) {
    let stride = 1usize << shift;
    let mut base = 0usize;
    while base < data.len() {
        for offset in 0..stride {
            let i0 = base + offset;
            let i1 = i0 + stride;
            let a0 = data[i0];
            let a1 = data[i1];
            data[i0] = u[0][0] * a0 + u[0][1] * a1;
            data[i1] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * stride;
    }
}

fn apply_cz_bits(data: &mut [Complex64], sa: usize, sb: usize) {
    let mask = (1usize << sa) | (1usize << sb);
    for (idx, entry) in data.iter_mut().enumerate() {
        if idx & mask == mask {
            *entry = -*entry;
        }
    }
}

fn apply_cx_bits(data: &mut [Complex64], sc: usize, st: usize) {
    let control = 1usize << sc;
    let target = 1usize << st;
    for idx in 0..data.len() {
        if idx & control != 0 && idx & target == 0 {
            data.swap(idx, idx | target);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{builtin_graph, generators, lc6_tilde, NamedGraph};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_vertex_graph_state_expands_correctly() {
        let g = GraphSpec::new(2, [(1, 2)]).unwrap();
        let state = build_graph_state(&g).unwrap();
        let amps = state.amplitudes().unwrap();
        let half = c(0.5);
        assert!((amps[0] - half).norm() < 1e-12);
        assert!((amps[1] - half).norm() < 1e-12);
        assert!((amps[2] - half).norm() < 1e-12);
        assert!((amps[3] + half).norm() < 1e-12);
    }

    #[test]
    fn empty_graph_state_is_all_plus() {
        let g = GraphSpec::new(3, []).unwrap();
        let state = build_graph_state(&g).unwrap();
        let expect = QuantumState::all_plus(3).unwrap();
        for (a, b) in state
            .amplitudes()
            .unwrap()
            .iter()
            .zip(expect.amplitudes().unwrap())
        {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn graph_state_is_stabilized_by_its_generators() {
        let graph = builtin_graph(NamedGraph::Lc6);
        let state = build_graph_state(&graph).unwrap();
        for g in generators(&graph) {
            assert!((state.expectation(&g).unwrap() - 1.0).abs() < 1e-10, "{g}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = GraphSpec::new(13, []).unwrap();
        assert!(matches!(
            build_graph_state(&g),
            Err(Error::CapExceeded { requested: 13, cap: 12 })
        ));
    }

    #[test]
    fn named_state_amplitudes() {
        let he6 = build_named_state(NamedState::He6Tilde);
        let amps = he6.amplitudes().unwrap();
        let a = 1.0 / (2.0 * 2.0_f64.sqrt());
        // |001000> = qubits (1..6) = 0,0,1,0,0,0
        assert!((amps[0b001000] - c(a)).norm() < 1e-12);
        // |011010> picks up the minus sign of the polarization pair
        assert!((amps[0b011010] - c(-a)).norm() < 1e-12);
        // |000000> has no momentum-2 support
        assert!(amps[0].norm() < 1e-12);
    }

    #[test]
    fn lc6_tilde_state_is_stabilized_by_all_64_tilde_elements() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let stabs = lc6_tilde();
        for (subset, element) in stabs.iter() {
            let e = state.expectation(element).unwrap();
            assert!((e - 1.0).abs() < 1e-10, "{subset}: {e}");
        }
    }

    #[test]
    fn cz_is_an_involution_and_h_acts_on_zero() {
        let state = build_named_state(NamedState::He6Tilde);
        let twice = state
            .apply_gate(&Gate::Cz(2, 5))
            .unwrap()
            .apply_gate(&Gate::Cz(2, 5))
            .unwrap();
        for (a, b) in state
            .amplitudes()
            .unwrap()
            .iter()
            .zip(twice.amplitudes().unwrap())
        {
            assert!((a - b).norm() < 1e-12);
        }

        let zero = QuantumState::from_amplitudes(1, vec![ONE, ZERO]).unwrap();
        let plus = zero.apply_gate(&Gate::H(1)).unwrap();
        let amps = plus.amplitudes().unwrap();
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        assert!((amps[0] - h).norm() < 1e-12 && (amps[1] - h).norm() < 1e-12);
    }

    #[test]
    fn random_gate_sequences_preserve_norm() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut state = QuantumState::all_plus(4).unwrap();
        for _ in 0..200 {
            let q = rng.random_range(1..=4);
            let gate = match rng.random_range(0..7) {
                0 => Gate::H(q),
                1 => Gate::X(q),
                2 => Gate::Y(q),
                3 => Gate::Z(q),
                4 => Gate::S(q),
                5 => {
                    let r = rng.random_range(1..=4);
                    if r == q {
                        Gate::H(q)
                    } else {
                        Gate::Cz(q, r)
                    }
                }
                _ => {
                    let r = rng.random_range(1..=4);
                    if r == q {
                        Gate::S(q)
                    } else {
                        Gate::Cx { control: q, target: r }
                    }
                }
            };
            state = state.apply_gate(&gate).unwrap();
        }
        let norm: f64 = state
            .amplitudes()
            .unwrap()
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_matrices_are_rejected() {
        let bad = [[ONE, ONE], [ZERO, ONE]];
        let state = QuantumState::all_plus(2).unwrap();
        assert!(matches!(
            state.apply_gate(&Gate::Unitary { qubit: 1, matrix: bad }),
            Err(Error::NonUnitary(_))
        ));
        assert!(state.apply_gate(&Gate::H(3)).is_err());
    }

    #[test]
    fn white_noise_scales_stabilizer_expectations() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let stabs = lc6_tilde();

        let pure = state.apply_noise(&NoiseSpec::white(1.0).unwrap()).unwrap();
        assert!(pure.is_density());
        let g16 = crate::graph::Subset::from_indices(&[1, 6]).unwrap();
        assert!((pure.expectation(stabs.element(&g16).unwrap()).unwrap() - 1.0).abs() < 1e-10);

        let mixed = state.apply_noise(&NoiseSpec::white(0.0).unwrap()).unwrap();
        for (subset, element) in stabs.iter() {
            let expect = if subset.is_empty() { 1.0 } else { 0.0 };
            assert!((mixed.expectation(element).unwrap() - expect).abs() < 1e-10);
        }

        let half = state.apply_noise(&NoiseSpec::white(0.5).unwrap()).unwrap();
        for (subset, element) in stabs.iter() {
            let expect = if subset.is_empty() { 1.0 } else { 0.5 };
            assert!((half.expectation(element).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn dephasing_damps_off_diagonal_observables() {
        let plus = QuantumState::all_plus(1).unwrap();
        let x1 = PauliString::parse(1, "X1").unwrap();
        let mut dephasing = BTreeMap::new();
        dephasing.insert(1, 0.1);
        let spec = NoiseSpec::new(1.0, dephasing).unwrap();
        let damped = plus.apply_noise(&spec).unwrap();
        assert!((damped.expectation(&x1).unwrap() - 0.8).abs() < 1e-12);

        let mut full = BTreeMap::new();
        full.insert(1, 0.5);
        let spec = NoiseSpec::new(1.0, full).unwrap();
        let dead = plus.apply_noise(&spec).unwrap();
        assert!(dead.expectation(&x1).unwrap().abs() < 1e-12);
        let z1 = PauliString::parse(1, "Z1").unwrap();
        assert!(dead.expectation(&z1).unwrap().abs() < 1e-12); // <Z> was 0 already
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::white(-0.1).is_err());
        assert!(NoiseSpec::white(1.1).is_err());
        let mut dephasing = BTreeMap::new();
        dephasing.insert(1, 0.6);
        assert!(NoiseSpec::new(0.5, dephasing).is_err());
    }

    #[test]
    fn single_qubit_marginals_of_the_cluster_state_are_mixed() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let z1 = PauliString::parse(6, "Z1").unwrap();
        assert!(state.expectation(&z1).unwrap().abs() < 1e-10);
    }

    #[test]
    fn expectation_rejects_bad_observables() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let wrong_n = PauliString::parse(5, "Z1").unwrap();
        assert!(state.expectation(&wrong_n).is_err());
        let x = PauliString::parse(1, "X1").unwrap();
        let z = PauliString::parse(1, "Z1").unwrap();
        let xz = x.multiply(&z).unwrap(); // phase -i, not Hermitian
        let plus = QuantumState::all_plus(1).unwrap();
        assert!(matches!(plus.expectation(&xz), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn partial_trace_of_a_product_state_keeps_the_other_factor() {
        // |+>|0>: tracing qubit 1 leaves |0><0|
        let amps = vec![
            c(std::f64::consts::FRAC_1_SQRT_2),
            ZERO,
            c(std::f64::consts::FRAC_1_SQRT_2),
            ZERO,
        ];
        let state = QuantumState::from_amplitudes(2, amps).unwrap();
        let reduced = state.partial_trace(&[1]).unwrap();
        assert_eq!(reduced.labels(), &[2]);
        let rho = reduced.density().unwrap();
        assert!((rho[0] - ONE).norm() < 1e-12);
        assert!(rho[1].norm() < 1e-12 && rho[2].norm() < 1e-12 && rho[3].norm() < 1e-12);
        // original label survives for Pauli evaluation
        let z2 = PauliString::parse(2, "Z2").unwrap();
        assert!((reduced.expectation(&z2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_validation() {
        let state = QuantumState::all_plus(2).unwrap();
        assert!(state.partial_trace(&[]).is_err());
        assert!(state.partial_trace(&[1, 2]).is_err());
        assert!(state.partial_trace(&[3]).is_err());
        assert!(state.partial_trace(&[1, 1]).is_err());
    }

    #[test]
    fn sampling_a_bell_pair_in_zz_gives_perfect_correlation() {
        let amps = vec![
            c(std::f64::consts::FRAC_1_SQRT_2),
            ZERO,
            ZERO,
            c(std::f64::consts::FRAC_1_SQRT_2),
        ];
        let bell = QuantumState::from_amplitudes(2, amps).unwrap();
        let mut setting = BTreeMap::new();
        setting.insert(1, Pauli::Z);
        setting.insert(2, Pauli::Z);
        let samples = bell.sample_setting(&setting, 2000, 11).unwrap();
        for (&idx, _) in samples.counts() {
            let outcome = samples.outcomes(idx);
            assert_eq!(outcome[0], outcome[1], "outcome {idx:#b}");
        }
        assert_eq!(samples.counts().values().sum::<u64>(), 2000);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let setting: BTreeMap<usize, Pauli> = (1..=6).map(|q| (q, Pauli::Z)).collect();
        let a = state.sample_setting(&setting, 500, 42).unwrap();
        let b = state.sample_setting(&setting, 500, 42).unwrap();
        assert_eq!(a.counts(), b.counts());
        let c = state.sample_setting(&setting, 500, 43).unwrap();
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn sample_setting_validation() {
        let state = QuantumState::all_plus(2).unwrap();
        let mut setting = BTreeMap::new();
        setting.insert(1, Pauli::Z);
        assert!(state.sample_setting(&setting, 10, 0).is_err()); // qubit 2 uncovered
        setting.insert(2, Pauli::I);
        assert!(state.sample_setting(&setting, 10, 0).is_err()); // I is not a basis
        setting.insert(2, Pauli::Z);
        assert!(state.sample_setting(&setting, 0, 0).is_err()); // zero shots
        assert!(state.sample_setting(&setting, 10, 0).is_ok());
    }

    #[test]
    fn dump_round_trip() {
        let state = build_named_state(NamedState::Lc6Tilde);
        let text = state.to_dump_text();
        assert!(text.starts_with("n=6 form=vector\n"));
        let back = QuantumState::from_dump_text(&text).unwrap();
        for (a, b) in state
            .amplitudes()
            .unwrap()
            .iter()
            .zip(back.amplitudes().unwrap())
        {
            assert!((a - b).norm() < 1e-15);
        }

        let noisy = state.apply_noise(&NoiseSpec::white(0.5).unwrap()).unwrap();
        let text = noisy.to_dump_text();
        assert!(text.starts_with("n=6 form=density\n"));
        let back = QuantumState::from_dump_text(&text).unwrap();
        assert!(back.is_density());

        assert!(QuantumState::from_dump_text("").is_err());
        assert!(QuantumState::from_dump_text("n=2 form=vector\n0 1 0\n").is_err());
    }

    #[test]
    fn density_gate_application_matches_vector_route() {
        let state = build_named_state(NamedState::He6Tilde);
        let gates = [Gate::Cx { control: 1, target: 2 }, Gate::Cz(6, 5)];
        let mut vector = state.clone();
        let mut density = state.to_density();
        for gate in &gates {
            vector = vector.apply_gate(gate).unwrap();
            density = density.apply_gate(gate).unwrap();
        }
        let stabs = lc6_tilde();
        for (_, element) in stabs.iter() {
            let ev = vector.expectation(element).unwrap();
            let ed = density.expectation(element).unwrap();
            assert!((ev - ed).abs() < 1e-10);
        }
    }

    #[test]
    fn validate_accepts_constructed_states() {
        let state = build_named_state(NamedState::Lc6Tilde);
        state.validate().unwrap();
        state
            .apply_noise(&NoiseSpec::white(0.3).unwrap())
            .unwrap()
            .validate()
            .unwrap();
    }
}
