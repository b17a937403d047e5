//! The solvable group NA in `(t, Z, X)` coordinates, its simply transitive
//! action on the Siegel domain `D = {t > |X|^2 / 4}`, the geodesic
//! inversion and the action of the compact centralizer M.

use serde::{Deserialize, Serialize};

use crate::algebra::{bracket_unchecked, dot, j_unchecked, norm_sq, NilVector, RootData};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NAElement {
    pub t: f64,
    pub nil: NilVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub t: f64,
    pub nil: NilVector,
}

/// Cusp-adapted data of a point in the big Bruhat cell. Only `r`, `z`, `x`
/// enter height computations; `n` is carried along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigCellCoords {
    pub r: f64,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub n: NilVector,
}

impl BigCellCoords {
    pub fn new(rd: &RootData, r: f64, z: Vec<f64>, x: Vec<f64>, n: NilVector) -> Result<Self> {
        if !(r > 0.0) {
            return invalid(format!("big-cell r must be positive, got {r}"));
        }
        rd.check_g2(&z)?;
        rd.check_g1(&x)?;
        rd.check(&n)?;
        Ok(Self { r, z, x, n })
    }
}

impl NAElement {
    pub fn new(rd: &RootData, t: f64, nil: NilVector) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("NA element needs t > 0, got {t}"));
        }
        rd.check(&nil)?;
        Ok(Self { t, nil })
    }

    pub fn identity(rd: &RootData) -> Self {
        Self { t: 1.0, nil: rd.zero() }
    }

    /// Image of the base point `o = (1, 0, 0)`.
    pub fn orbit_point(&self) -> DomainPoint {
        DomainPoint { t: self.t + 0.25 * self.nil.x_norm_sq(), nil: self.nil.clone() }
    }
}

impl DomainPoint {
    pub fn new(rd: &RootData, t: f64, nil: NilVector) -> Result<Self> {
        rd.check(&nil)?;
        let p = Self { t, nil };
        if !p.in_domain() {
            return invalid(format!("point not in domain: t = {t} <= |X|^2/4"));
        }
        Ok(p)
    }

    pub fn base(rd: &RootData) -> Self {
        Self { t: 1.0, nil: rd.zero() }
    }

    pub fn in_domain(&self) -> bool {
        self.t.is_finite() && self.t > 0.25 * self.nil.x_norm_sq()
    }

    /// The NA element mapping `o` to this point.
    pub fn to_na(&self) -> NAElement {
        NAElement { t: self.t - 0.25 * self.nil.x_norm_sq(), nil: self.nil.clone() }
    }
}

fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + s * v).collect()
}

pub fn na_mul(rd: &RootData, a: &NAElement, b: &NAElement) -> Result<NAElement> {
    rd.check(&a.nil)?;
    rd.check(&b.nil)?;
    let sa = a.t.sqrt();
    let br = bracket_unchecked(rd, &a.nil.x, &b.nil.x);
    let z: Vec<f64> = axpy(&axpy(&a.nil.z, a.t, &b.nil.z), 0.5 * sa, &br);
    let x = axpy(&a.nil.x, sa, &b.nil.x);
    Ok(NAElement { t: a.t * b.t, nil: NilVector { z, x } })
}

pub fn na_inverse(rd: &RootData, a: &NAElement) -> Result<NAElement> {
    rd.check(&a.nil)?;
    let z = a.nil.z.iter().map(|v| -v / a.t).collect();
    let x = a.nil.x.iter().map(|v| -v / a.t.sqrt()).collect();
    Ok(NAElement { t: 1.0 / a.t, nil: NilVector { z, x } })
}

pub fn na_act(rd: &RootData, a: &NAElement, p: &DomainPoint) -> Result<DomainPoint> {
    rd.check(&a.nil)?;
    rd.check(&p.nil)?;
    if !p.in_domain() {
        return invalid("na_act: input point not in domain");
    }
    let sa = a.t.sqrt();
    let (xs, xp) = (&a.nil.x, &p.nil.x);
    let t = a.t * p.t + 0.25 * norm_sq(xs) + 0.5 * sa * dot(xs, xp);
    let br = bracket_unchecked(rd, xs, xp);
    let z = axpy(&axpy(&a.nil.z, a.t, &p.nil.z), 0.5 * sa, &br);
    let x = axpy(xs, sa, xp);
    Ok(DomainPoint { t, nil: NilVector { z, x } })
}

/// Geodesic inversion about `o`.
pub fn inversion(rd: &RootData, p: &DomainPoint) -> Result<DomainPoint> {
    rd.check(&p.nil)?;
    if !p.in_domain() {
        return invalid("inversion: input point not in domain");
    }
    let den = p.t * p.t + p.nil.z_norm_sq();
    let jx = j_unchecked(rd, &p.nil.z, &p.nil.x);
    let x = p.nil.x.iter().zip(&jx).map(|(x, j)| (-p.t * x + j) / den).collect();
    let z = p.nil.z.iter().map(|v| -v / den).collect();
    Ok(DomainPoint { t: p.t / den, nil: NilVector { z, x } })
}

/// Row-major square matrix.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MElement {
    phi: Matrix,
    psi: Matrix,
}

fn apply(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn check_orthogonal(m: &Matrix, n: usize, name: &str) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return invalid(format!("{name} must be {n}x{n}"));
    }
    for i in 0..n {
        for j in 0..n {
            let g: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (g - want).abs() > 1e-12 {
                return invalid(format!("{name} is not orthogonal (entry {i},{j} of M^T M is {g})"));
            }
        }
    }
    Ok(())
}

impl MElement {
    /// Validates orthogonality and `psi J_Z = J_{phi Z} psi` on basis vectors
    /// (both sides are bilinear, so the basis check is complete).
    pub fn new(rd: &RootData, phi: Matrix, psi: Matrix) -> Result<Self> {
        check_orthogonal(&phi, rd.p2, "phi")?;
        check_orthogonal(&psi, rd.p1, "psi")?;
        for a in 0..rd.p2 {
            let mut z = vec![0.0; rd.p2];
            z[a] = 1.0;
            let fz = apply(&phi, &z);
            for b in 0..rd.p1 {
                let mut x = vec![0.0; rd.p1];
                x[b] = 1.0;
                let lhs = apply(&psi, &j_unchecked(rd, &z, &x));
                let rhs = j_unchecked(rd, &fz, &apply(&psi, &x));
                if lhs.iter().zip(&rhs).any(|(u, v)| (u - v).abs() > 1e-12) {
                    return invalid("M element is not compatible with J");
                }
            }
        }
        Ok(Self { phi, psi })
    }

    pub fn identity(rd: &RootData) -> Self {
        let eye = |n: usize| -> Matrix {
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
        };
        Self { phi: eye(rd.p2), psi: eye(rd.p1) }
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }
}

pub fn m_act(rd: &RootData, m: &MElement, p: &DomainPoint) -> Result<DomainPoint> {
    rd.check(&p.nil)?;
    if m.phi.len() != rd.p2 || m.psi.len() != rd.p1 {
        return invalid("M element dimensions do not match root data");
    }
    Ok(DomainPoint {
        t: p.t,
        nil: NilVector { z: apply(&m.phi, &p.nil.z), x: apply(&m.psi, &p.nil.x) },
    })
}

/// A-coordinate of the Iwasawa decomposition of `sigma m n a_t`, where `n`
/// has coordinates `(Z, X)`.
pub fn sigma_normal_r(t: f64, z: &[f64], x: &[f64]) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("sigma_normal_r needs t > 0, got {t}"));
    }
    let w = t + 0.25 * norm_sq(x);
    Ok(t / (w * w + norm_sq(z)))
}
