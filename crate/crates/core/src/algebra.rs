//! Two-step nilpotent algebras n = g2 + g1 with Euclidean inner product,
//! bracket g1 x g1 -> g2 and the J-operator g2 -> End(g1).
//!
//! Two families are realized:
//!
//! * `RealHyperbolicPoincare`: g1 = 0, g2 = R^p2 (abelian).
//! * `ComplexHyperbolic`: g2 = R, g1 = C^m stored as interleaved `(re, im)`
//!   pairs (Heisenberg algebra).
//!
//! Bracket and J are related by `<J_Z X, Y> = <Z, [X, Y]>` and satisfy
//! `|J_Z X| = |Z| |X|`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    RealHyperbolicPoincare,
    ComplexHyperbolic,
}

/// Dimensions of the root spaces and the algebra family they select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootData {
    pub p1: usize,
    pub p2: usize,
    pub family: Family,
}

impl RootData {
    pub fn new(p1: usize, p2: usize, family: Family) -> Result<Self> {
        match family {
            Family::RealHyperbolicPoincare => {
                if p1 != 0 {
                    return invalid(format!("real-hyperbolic family needs p1 = 0, got {p1}"));
                }
                if p2 == 0 {
                    return invalid("real-hyperbolic family needs p2 >= 1");
                }
            }
            Family::ComplexHyperbolic => {
                if p2 != 1 {
                    return invalid(format!("complex-hyperbolic family needs p2 = 1, got {p2}"));
                }
                if p1 == 0 || p1 % 2 != 0 {
                    return invalid(format!("complex-hyperbolic family needs p1 = 2m, m >= 1, got {p1}"));
                }
            }
        }
        Ok(Self { p1, p2, family })
    }

    pub fn real(p2: usize) -> Result<Self> {
        Self::new(0, p2, Family::RealHyperbolicPoincare)
    }

    pub fn complex(m: usize) -> Result<Self> {
        Self::new(2 * m, 1, Family::ComplexHyperbolic)
    }

    /// Picks the family from the dimensions.
    pub fn from_dims(p1: usize, p2: usize) -> Result<Self> {
        if p1 == 0 {
            Self::real(p2)
        } else {
            Self::new(p1, p2, Family::ComplexHyperbolic)
        }
    }

    /// `q = p1/2 + p2`.
    pub fn q(&self) -> f64 {
        self.p1 as f64 / 2.0 + self.p2 as f64
    }

    pub fn zero(&self) -> NilVector {
        NilVector { z: vec![0.0; self.p2], x: vec![0.0; self.p1] }
    }

    pub(crate) fn check_g1(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.p1 {
            return invalid(format!("g1 vector has length {}, expected {}", v.len(), self.p1));
        }
        Ok(())
    }

    pub(crate) fn check_g2(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.p2 {
            return invalid(format!("g2 vector has length {}, expected {}", v.len(), self.p2));
        }
        Ok(())
    }

    pub fn check(&self, n: &NilVector) -> Result<()> {
        self.check_g2(&n.z)?;
        self.check_g1(&n.x)
    }
}

/// Element `Z + X` of the nilpotent algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NilVector {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
}

impl NilVector {
    pub fn new(z: Vec<f64>, x: Vec<f64>) -> Self {
        Self { z, x }
    }

    pub fn z_norm_sq(&self) -> f64 {
        norm_sq(&self.z)
    }

    pub fn x_norm_sq(&self) -> f64 {
        norm_sq(&self.x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `[X, Y]` in g2.
pub fn bracket(rd: &RootData, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    rd.check_g1(x)?;
    rd.check_g1(y)?;
    Ok(bracket_unchecked(rd, x, y))
}

pub(crate) fn bracket_unchecked(rd: &RootData, x: &[f64], y: &[f64]) -> Vec<f64> {
    match rd.family {
        Family::RealHyperbolicPoincare => vec![0.0; rd.p2],
        Family::ComplexHyperbolic => {
            // -Im(sum x_k * conj(y_k))
            let mut s = 0.0;
            for (xp, yp) in x.chunks_exact(2).zip(y.chunks_exact(2)) {
                s += xp[0] * yp[1] - xp[1] * yp[0];
            }
            vec![s]
        }
    }
}

/// `J_Z X` in g1.
pub fn j_operator(rd: &RootData, z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    rd.check_g2(z)?;
    rd.check_g1(x)?;
    Ok(j_unchecked(rd, z, x))
}

pub(crate) fn j_unchecked(rd: &RootData, z: &[f64], x: &[f64]) -> Vec<f64> {
    match rd.family {
        Family::RealHyperbolicPoincare => Vec::new(),
        Family::ComplexHyperbolic => {
            let c = z[0];
            let mut out = Vec::with_capacity(x.len());
            for p in x.chunks_exact(2) {
                // i * c * (a + ib) = -c b + i c a
                out.push(-c * p[1]);
                out.push(c * p[0]);
            }
            out
        }
    }
}
