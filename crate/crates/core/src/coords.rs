//! Arithmetic on the tangent group, Heisenberg dilations, privileged and
//! Heisenberg coordinate changes, and the polynomial model vector fields.
//!
//! Coordinates are `(x_0, x_1, …, x_d)` with `x_0` the direction transverse
//! to the hyperplane bundle. Vector fields with affine coefficients are kept
//! as exact coefficient arrays so brackets never involve differentiation
//! errors.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::levi::LeviForm;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPoint {
    pub x0: f64,
    pub xprime: Vec<f64>,
}

impl GroupPoint {
    pub fn new(x0: f64, xprime: Vec<f64>) -> Result<Self> {
        ensure_finite(&[x0], "x0")?;
        ensure_finite(&xprime, "x'")?;
        Ok(Self { x0, xprime })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            x0: 0.0,
            xprime: vec![0.0; d],
        }
    }

    /// Reads `(x_0, x_1, …, x_d)` from a flat slice.
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match x.split_first() {
            Some((&x0, rest)) => Self::new(x0, rest.to_vec()),
            None => Err(Error::InvalidInput("a point needs at least the x0 coordinate".into())),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.xprime.len() + 1);
        v.push(self.x0);
        v.extend_from_slice(&self.xprime);
        v
    }

    pub fn dim(&self) -> usize {
        self.xprime.len()
    }

    /// Group inverse; the quadratic term vanishes because `L` is antisymmetric.
    pub fn inverse(&self) -> Self {
        Self {
            x0: -self.x0,
            xprime: self.xprime.iter().map(|v| -v).collect(),
        }
    }

    /// Homogeneous pseudo-norm `(x_0² + |x'|⁴)^{1/4}`.
    pub fn norm(&self) -> f64 {
        let r2: f64 = self.xprime.iter().map(|v| v * v).sum();
        (self.x0 * self.x0 + r2 * r2).sqrt().sqrt()
    }

    /// Heisenberg dilation `(t² x_0, t x')`.
    pub fn dilate(&self, t: f64) -> Self {
        Self {
            x0: t * t * self.x0,
            xprime: self.xprime.iter().map(|v| t * v).collect(),
        }
    }
}

/// `Σ_jk L_jk x_j y_k`, summed over pairs `j < k` so that `B(x, −x)`
/// cancels exactly in floating point.
fn bilinear(l: &LeviForm, x: &[f64], y: &[f64]) -> f64 {
    let m = l.entries();
    let mut acc = 0.0;
    for j in 0..x.len() {
        for k in j + 1..y.len() {
            acc += m[(j, k)] * (x[j] * y[k] - x[k] * y[j]);
        }
    }
    acc
}

/// `x·y = (x_0 + y_0 + ½ Σ L_jk x_j y_k, x' + y')`.
pub fn group_multiply(l: &LeviForm, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
    let d = l.dim();
    for p in [x, y] {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    Ok(GroupPoint {
        x0: x.x0 + y.x0 + 0.5 * bilinear(l, &x.xprime, &y.xprime),
        xprime: x.xprime.iter().zip(&y.xprime).map(|(a, b)| a + b).collect(),
    })
}

/// Group commutator `x y x⁻¹ y⁻¹`.
pub fn group_commutator(l: &LeviForm, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
    let xy = group_multiply(l, x, y)?;
    let xyx = group_multiply(l, &xy, &x.inverse())?;
    group_multiply(l, &xyx, &y.inverse())
}

/// Returns the dilated point together with the norm of the original.
pub fn dilation_norm(t: f64, x: &GroupPoint) -> (GroupPoint, f64) {
    (x.dilate(t), x.norm())
}

/// Vector field `Σ_i (c_i + Σ_k A_ik x_k) ∂_i` on `ℝ^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub constant: DVector<f64>,
    pub linear: DMatrix<f64>,
}

impl AffineField {
    pub fn zero(dim: usize) -> Self {
        Self {
            constant: DVector::zeros(dim),
            linear: DMatrix::zeros(dim, dim),
        }
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim);
        f.constant[i] = 1.0;
        f
    }

    pub fn dim(&self) -> usize {
        self.constant.len()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        &self.constant + &self.linear * DVector::from_column_slice(x)
    }

    /// Lie bracket; exact on the coefficient arrays.
    ///
    /// For `X = a + Ax`, `Y = b + Bx` the bracket is `(Ba − Ab) + (BA − AB)x`.
    pub fn bracket(&self, other: &AffineField) -> AffineField {
        AffineField {
            constant: &other.linear * &self.constant - &self.linear * &other.constant,
            linear: &other.linear * &self.linear - &self.linear * &other.linear,
        }
    }

    pub fn scaled(&self, s: f64) -> AffineField {
        AffineField {
            constant: &self.constant * s,
            linear: &self.linear * s,
        }
    }
}

/// `X_0 = ∂_0` and `X_j = ∂_j − ½ Σ_k L_jk x_k ∂_0`, so that
/// `[X_j, X_k] = L_jk X_0`.
pub fn model_fields(l: &LeviForm) -> Vec<AffineField> {
    let d = l.dim();
    let mut fields = Vec::with_capacity(d + 1);
    fields.push(AffineField::coordinate(d + 1, 0));
    for j in 0..d {
        let mut f = AffineField::coordinate(d + 1, j + 1);
        for k in 0..d {
            f.linear[(0, k + 1)] = -0.5 * l.get(j, k);
        }
        fields.push(f);
    }
    fields
}

/// First-order data of a frame `X_0, …, X_d` at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameJet {
    pub base: Vec<f64>,
    /// `X_j = Σ_k B_jk ∂_k` at the base point, `(d+1)×(d+1)`.
    pub b_frame: DMatrix<f64>,
    /// `b_jk = ∂_{x_k} a_{j0}(0)` in privileged coordinates, `d×d`.
    pub b_jet: DMatrix<f64>,
}

impl FrameJet {
    pub fn new(base: Vec<f64>, b_frame: DMatrix<f64>, b_jet: DMatrix<f64>) -> Result<Self> {
        let dim = base.len();
        if dim < 2 {
            return Err(Error::InvalidInput("frame needs d >= 1".into()));
        }
        if b_frame.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b_frame.nrows(),
            });
        }
        if b_jet.shape() != (dim - 1, dim - 1) {
            return Err(Error::DimensionMismatch {
                expected: dim - 1,
                got: b_jet.nrows(),
            });
        }
        ensure_finite(&base, "frame base point")?;
        ensure_finite(b_frame.as_slice(), "frame matrix")?;
        ensure_finite(b_jet.as_slice(), "frame jet")?;
        Ok(Self {
            base,
            b_frame,
            b_jet,
        })
    }

    pub fn d(&self) -> usize {
        self.base.len() - 1
    }
}

/// Affine map `x ↦ A(x − u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChange {
    pub a: DMatrix<f64>,
    pub translation: DVector<f64>,
    /// 2-norm condition number of the frame matrix.
    pub condition_number: f64,
}

impl AffineChange {
    pub fn apply(&self, x: &[f64]) -> DVector<f64> {
        &self.a * (DVector::from_column_slice(x) - &self.translation)
    }

    /// Push-forward of a tangent vector (the linear part acts alone).
    pub fn push_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.a * v
    }
}

/// `ψ_u(x) = (Bᵗ)⁻¹(x − u)`, which sends `X_j(u)` to `∂_j`.
pub fn privileged_map(f: &FrameJet) -> Result<AffineChange> {
    let bt = f.b_frame.transpose();
    let sv = bt.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > f64::EPSILON * smax.max(1.0) * sv.len() as f64) {
        return Err(Error::Singular(format!(
            "frame matrix is singular (smallest singular value {smin:.3e})"
        )));
    }
    let a = bt
        .try_inverse()
        .ok_or_else(|| Error::Singular("frame matrix could not be inverted".into()))?;
    Ok(AffineChange {
        a,
        translation: DVector::from_column_slice(&f.base),
        condition_number: smax / smin,
    })
}

/// `ε_u = φ_u ∘ ψ_u` where `φ_u(y) = (y_0 − Σ_jk s_jk y_j y_k, y')` and
/// `s = ¼(b + bᵗ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateChange {
    pub privileged: AffineChange,
    pub quadratic: DMatrix<f64>,
}

impl CoordinateChange {
    /// The quadratic correction alone.
    pub fn phi(&self, y: &[f64]) -> Vec<f64> {
        let d = self.quadratic.nrows();
        let mut q = 0.0;
        for j in 0..d {
            for k in 0..d {
                q += self.quadratic[(j, k)] * y[j + 1] * y[k + 1];
            }
        }
        let mut out = y.to_vec();
        out[0] -= q;
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = self.privileged.apply(x);
        self.phi(y.as_slice())
    }

    /// Jacobian of `φ_u` at `y`; its determinant is identically 1.
    pub fn phi_jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let dim = y.len();
        let mut jac = DMatrix::identity(dim, dim);
        for k in 0..dim - 1 {
            let mut g = 0.0;
            for j in 0..dim - 1 {
                g += (self.quadratic[(j, k)] + self.quadratic[(k, j)]) * y[j + 1];
            }
            jac[(0, k + 1)] = -g;
        }
        jac
    }
}

pub fn heisenberg_map(f: &FrameJet) -> Result<CoordinateChange> {
    let privileged = privileged_map(f)?;
    let quadratic = (&f.b_jet + f.b_jet.transpose()) * 0.25;
    Ok(CoordinateChange {
        privileged,
        quadratic,
    })
}

/// Estimates `b_jk = ∂_{x_k} a_{j0}(0)` by central differences of
/// `coefficient(j, x) = a_{j0}(x)` (the `∂_0`-component of `X_j`, `j = 1..d`,
/// at a point `x ∈ ℝ^{d+1}` in privileged coordinates).
pub fn jet_from_callback(d: usize, scale: f64, coefficient: impl Fn(usize, &[f64]) -> f64) -> Result<DMatrix<f64>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidInput("finite-difference scale must be positive".into()));
    }
    let h = 1e-5 * scale;
    let mut b = DMatrix::zeros(d, d);
    let mut x = vec![0.0; d + 1];
    for j in 0..d {
        for k in 0..d {
            x[k + 1] = h;
            let plus = coefficient(j + 1, &x);
            x[k + 1] = -h;
            let minus = coefficient(j + 1, &x);
            x[k + 1] = 0.0;
            b[(j, k)] = (plus - minus) / (2.0 * h);
        }
    }
    ensure_finite(b.as_slice(), "frame jet")?;
    Ok(b)
}
