//! Signed multi-qubit Pauli operators and single-qubit Clifford frame maps.
//!
//! A [`PauliString`] is a tensor product of single-qubit Paulis with a global
//! phase in {+1, +i, -1, -i}. Internally it is kept in binary symplectic form:
//! one bitmask for the X part, one for the Z part, and a two-bit exponent `e`
//! so that the operator is `i^e · prod_q X_q^{x_q} Z_q^{z_q}`. Multiplication
//! and commutation checks are then a handful of word operations.
//!
//! Qubits are indexed from 1. Strings are limited to 64 qubits.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on the number of qubits in a Pauli string (one bit per qubit).
pub const MAX_PAULI_QUBITS: usize = 64;

/// A single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// The canonical 2x2 matrix of this letter, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[one, zero], [zero, one]],
            Pauli::X => [[zero, one], [one, zero]],
            Pauli::Y => [[zero, -i], [i, zero]],
            Pauli::Z => [[one, zero], [zero, -one]],
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Global phase of a Pauli string: a fourth root of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_exponent(e: u8) -> Phase {
        match e & 3 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn as_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    /// True for +1 and -1.
    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }

    /// +1.0 or -1.0 for the real phases.
    pub fn as_sign(self) -> Option<f64> {
        match self {
            Phase::PlusOne => Some(1.0),
            Phase::MinusOne => Some(-1.0),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::PlusOne => "",
            Phase::PlusI => "i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        };
        write!(f, "{s}")
    }
}

/// Sign attached to a frame image, +1 or -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn phase(self) -> Phase {
        match self {
            Sign::Plus => Phase::PlusOne,
            Sign::Minus => Phase::MinusOne,
        }
    }
}

/// An n-qubit Pauli operator with a global phase in {+1, +i, -1, -i}.
///
/// Stored as `i^exp · prod_q X_q^{x_q} Z_q^{z_q}` with qubit q on bit q-1.
/// The phase reported by [`PauliString::phase`] is the one of the canonical
/// letter form, e.g. `X.multiply(Z)` reports `-i` with letter `Y`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    exp: u8,
}

impl PauliString {
    /// The identity operator on `n` qubits with phase +1.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_PAULI_QUBITS {
            return Err(Error::CapExceeded {
                requested: n,
                cap: MAX_PAULI_QUBITS,
            });
        }
        Ok(PauliString { n, x: 0, z: 0, exp: 0 })
    }

    /// A single non-identity letter at `qubit` (1-based), phase +1.
    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        Self::from_letters(n, &[(qubit, letter)])
    }

    /// Build from (qubit, letter) pairs with phase +1. Unlisted qubits are I.
    pub fn from_letters(n: usize, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n)?;
        for &(qubit, letter) in letters {
            if qubit == 0 || qubit > n {
                return Err(Error::QubitIndex { index: qubit, n });
            }
            let bit = 1u64 << (qubit - 1);
            if (p.x | p.z) & bit != 0 {
                return Err(Error::Parse(format!("duplicate qubit index {qubit}")));
            }
            match letter {
                Pauli::I => {}
                Pauli::X => p.x |= bit,
                Pauli::Z => p.z |= bit,
                Pauli::Y => {
                    p.x |= bit;
                    p.z |= bit;
                    p.exp = (p.exp + 1) & 3; // Y = i X Z
                }
            }
        }
        Ok(p)
    }

    /// Same letters, with the canonical phase set to `phase`.
    pub fn with_phase(mut self, phase: Phase) -> Self {
        let y = (self.x & self.z).count_ones() as u8;
        self.exp = (phase.exponent() + y) & 3;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Letter at `qubit` (1-based). Panics if out of range.
    pub fn letter(&self, qubit: usize) -> Pauli {
        assert!(qubit >= 1 && qubit <= self.n, "qubit {qubit} out of range");
        let bit = 1u64 << (qubit - 1);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    /// Global phase of the canonical letter form.
    pub fn phase(&self) -> Phase {
        let y = (self.x & self.z).count_ones() as u8;
        Phase::from_exponent(self.exp.wrapping_sub(y) & 3)
    }

    /// X-part bitmask, qubit q on bit q-1.
    pub fn x_bits(&self) -> u64 {
        self.x
    }

    /// Z-part bitmask, qubit q on bit q-1.
    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Exponent `e` of the internal normal form `i^e · X^x Z^z`.
    pub fn phase_exponent(&self) -> u8 {
        self.exp
    }

    /// True iff the phase is +1 or -1.
    pub fn is_hermitian(&self) -> bool {
        let y = (self.x & self.z).count_ones() as u8;
        (self.exp + y) & 1 == 0
    }

    /// True iff every letter is I (any phase).
    pub fn is_identity_letters(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// 1-based indices of the non-identity letters, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut bits = self.x | self.z;
        while bits != 0 {
            let q = bits.trailing_zeros() as usize + 1;
            out.push(q);
            bits &= bits - 1;
        }
        out
    }

    /// Operator product `self · other` with exact phase tracking.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        // Commuting Z^z1 past X^x2 costs (-1) per overlapping qubit.
        let swaps = (self.z & other.x).count_ones() as u8;
        Ok(PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            exp: (self.exp + other.exp + 2 * swaps) & 3,
        })
    }

    /// True iff `self` and `other` commute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        Ok(anti % 2 == 0)
    }

    /// Replace each letter by its image under the per-qubit frame map.
    ///
    /// Qubits without a frame entry are untouched. Y images are derived from
    /// Y = iXZ, so they never have to be supplied.
    pub fn apply_frame(&self, frames: &FrameMap) -> Result<PauliString> {
        for &qubit in frames.keys() {
            if qubit == 0 || qubit > self.n {
                return Err(Error::QubitIndex { index: qubit, n: self.n });
            }
        }
        let mut out = PauliString {
            n: self.n,
            x: 0,
            z: 0,
            exp: self.exp,
        };
        for qubit in 1..=self.n {
            let bit = 1u64 << (qubit - 1);
            let frame = frames.get(&qubit);
            if self.x & bit != 0 {
                out = out.multiply(&image_string(self.n, qubit, frame, Axis::X)?)?;
            }
            if self.z & bit != 0 {
                out = out.multiply(&image_string(self.n, qubit, frame, Axis::Z)?)?;
            }
        }
        Ok(out)
    }

    /// Parse the rendering produced by `Display`, e.g. "-Z3Z6" or "I".
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PlusOne, r)
        } else {
            (Phase::PlusOne, s)
        };
        if rest.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string in {s:?}")));
        }
        if rest == "I" {
            return Ok(PauliString::identity(n)?.with_phase(phase));
        }
        let mut letters = Vec::new();
        let mut chars = rest.chars().peekable();
        while let Some(c) = chars.next() {
            let letter = match c {
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => {
                    return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
                }
            };
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            if digits.is_empty() {
                return Err(Error::Parse(format!("letter {letter} without a qubit index in {s:?}")));
            }
            let index: usize = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad qubit index {digits:?} in {s:?}")))?;
            letters.push((index, letter));
        }
        Ok(Self::from_letters(n, &letters)?.with_phase(phase))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase())?;
        if self.is_identity_letters() {
            return write!(f, "I");
        }
        for q in self.support() {
            write!(f, "{}{}", self.letter(q), q)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

enum Axis {
    X,
    Z,
}

fn image_string(
    n: usize,
    qubit: usize,
    frame: Option<&SingleQubitFrame>,
    axis: Axis,
) -> Result<PauliString> {
    let (sign, letter) = match (frame, axis) {
        (None, Axis::X) => (Sign::Plus, Pauli::X),
        (None, Axis::Z) => (Sign::Plus, Pauli::Z),
        (Some(fr), Axis::X) => fr.image_of_x(),
        (Some(fr), Axis::Z) => fr.image_of_z(),
    };
    Ok(PauliString::single(n, qubit, letter)?.with_phase(sign.phase()))
}

/// A single-qubit Clifford action given by the signed images of X and Z.
///
/// The image letters must differ so that anticommutation is preserved; the
/// image of Y is always derived from Y = iXZ and therefore carries a real
/// sign, which makes the map a valid Clifford action on the Pauli group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingleQubitFrame {
    image_of_x: (Sign, Pauli),
    image_of_z: (Sign, Pauli),
}

impl SingleQubitFrame {
    pub fn new(image_of_x: (Sign, Pauli), image_of_z: (Sign, Pauli)) -> Result<Self> {
        if image_of_x.1 == Pauli::I || image_of_z.1 == Pauli::I {
            return Err(Error::InvalidFrame {
                qubit: 0,
                reason: "frame images must be non-identity letters".into(),
            });
        }
        if image_of_x.1 == image_of_z.1 {
            return Err(Error::InvalidFrame {
                qubit: 0,
                reason: format!(
                    "images of X and Z must anticommute, both map to {}",
                    image_of_x.1
                ),
            });
        }
        Ok(SingleQubitFrame { image_of_x, image_of_z })
    }

    pub fn identity() -> Self {
        SingleQubitFrame {
            image_of_x: (Sign::Plus, Pauli::X),
            image_of_z: (Sign::Plus, Pauli::Z),
        }
    }

    pub fn image_of_x(&self) -> (Sign, Pauli) {
        self.image_of_x
    }

    pub fn image_of_z(&self) -> (Sign, Pauli) {
        self.image_of_z
    }

    /// Image of Y, derived from Y = iXZ.
    pub fn image_of_y(&self) -> (Sign, Pauli) {
        let x = PauliString::single(1, 1, self.image_of_x.1)
            .expect("single letter")
            .with_phase(self.image_of_x.0.phase());
        let z = PauliString::single(1, 1, self.image_of_z.1)
            .expect("single letter")
            .with_phase(self.image_of_z.0.phase());
        let mut y = x.multiply(&z).expect("same size");
        y.exp = (y.exp + 1) & 3; // the i of Y = iXZ
        let sign = match y.phase().as_sign() {
            Some(s) if s > 0.0 => Sign::Plus,
            Some(_) => Sign::Minus,
            None => unreachable!("distinct letters always give a real Y image"),
        };
        (sign, y.letter(1))
    }
}

/// Per-qubit frame assignments, keyed by 1-based qubit index.
pub type FrameMap = BTreeMap<usize, SingleQubitFrame>;
