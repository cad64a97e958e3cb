//! Test-only dense matrix oracle.
//!
//! Builds operators straight from textbook 2x2 letter matrices and Kronecker
//! products, independent of the symplectic bookkeeping in `pauli`, so the two
//! routes can be checked against each other.

use num_complex::Complex64;

use crate::pauli::PauliString;

/// Dense 2^n x 2^n row-major matrix of a Pauli string (qubit 1 on the most
/// significant index bits).
pub fn matrix(p: &PauliString) -> Vec<Complex64> {
    let mut m = vec![p.phase().as_complex()];
    let mut dim = 1;
    for q in 1..=p.n() {
        m = kron(&m, dim, &p.letter(q).matrix());
        dim *= 2;
    }
    m
}

fn kron(a: &[Complex64], dim_a: usize, b: &[[Complex64; 2]; 2]) -> Vec<Complex64> {
    let dim = dim_a * 2;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim_a {
        for j in 0..dim_a {
            for k in 0..2 {
                for l in 0..2 {
                    out[(i * 2 + k) * dim + (j * 2 + l)] = a[i * dim_a + j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

pub fn approx_eq(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
}

/// Outer product |psi><psi| as a dense row-major matrix.
pub fn outer(psi: &[Complex64]) -> Vec<Complex64> {
    let dim = psi.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = psi[i] * psi[j].conj();
        }
    }
    out
}
