//! Closed-form algebra for symmetric 2x2 tensors and the isotropic
//! fourth-order operators used by the scheme.
//!
//! Tensors are stored as `(xx, yy, xy)` with the *tensor* shear component
//! (not the engineering shear), so the double contraction weights `xy` by 2.
//! None of the operators below build a matrix: `C`, `D^{-1}` and the
//! effective tensor `C(I - D^{-1} C)` are evaluated through their closed forms.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Spatial dimension of the tensor algebra.
pub const DIM: usize = 2;
const DIM_F: f64 = DIM as f64;

/// Symmetric 2x2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };
    pub const IDENTITY: SymTensor2 = SymTensor2 { xx: 1.0, yy: 1.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        SymTensor2 { xx, yy, xy: 0.0 }
    }

    /// Symmetric part of a (possibly non-symmetric) 2x2 matrix given row-major.
    pub fn sym_part(m: [[f64; 2]; 2]) -> Self {
        SymTensor2 { xx: m[0][0], yy: m[1][1], xy: 0.5 * (m[0][1] + m[1][0]) }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Component `(i, j)` with `i, j` in `{0, 1}`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (0, 1) | (1, 0) => self.xy,
            _ => panic!("tensor index ({i}, {j}) out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.xy.abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.xx, self.yy, self.xy]
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, o: SymTensor2) {
        *self = *self + o;
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, o: SymTensor2) {
        *self = *self - o;
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.xx, self * t.yy, self * t.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        s * self
    }
}

/// Double contraction `X : Y = sum_ij X_ij Y_ij`.
pub fn ddot(x: &SymTensor2, y: &SymTensor2) -> f64 {
    x.xx * y.xx + x.yy * y.yy + 2.0 * x.xy * y.xy
}

/// Isotropic, homogeneous material parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// First Lamé constant.
    pub lambda: f64,
    /// Shear modulus (second Lamé constant).
    pub mu: f64,
    /// Viscosity of the dashpot.
    pub eta: f64,
    /// Stiffness of the sub-spring in parallel with the dashpot.
    pub alpha: f64,
}

impl Material {
    pub fn new(lambda: f64, mu: f64, eta: f64, alpha: f64) -> Self {
        Material { lambda, mu, eta, alpha }
    }

    /// Constructs and validates in one go.
    pub fn checked(lambda: f64, mu: f64, eta: f64, alpha: f64) -> Result<Self> {
        let m = Material::new(lambda, mu, eta, alpha);
        validate_material(&m)?;
        Ok(m)
    }

    /// `c* = 2 mu + d lambda`, the coercivity constant of `C` on the trace part.
    pub fn c_star(&self) -> f64 {
        2.0 * self.mu + DIM_F * self.lambda
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Accepts iff `mu > 0`, `lambda > -(2/d) mu`, `eta > 0` and `alpha >= 0`.
pub fn validate_material(m: &Material) -> Result<()> {
    let finite = [m.lambda, m.mu, m.eta, m.alpha].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidMaterial("all material constants must be finite".into()));
    }
    if !(m.mu > 0.0) {
        return Err(Error::InvalidMaterial(format!("mu > 0 violated (mu = {})", m.mu)));
    }
    if !(m.c_star() > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "lambda > -(2/d) mu violated (lambda = {}, mu = {}, 2mu + d*lambda = {})",
            m.lambda,
            m.mu,
            m.c_star()
        )));
    }
    if !(m.eta > 0.0) {
        return Err(Error::InvalidMaterial(format!("eta > 0 violated (eta = {})", m.eta)));
    }
    if !(m.alpha >= 0.0) {
        return Err(Error::InvalidMaterial(format!("alpha >= 0 violated (alpha = {})", m.alpha)));
    }
    Ok(())
}

/// Time increment together with the derived constants of `D^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub tau: f64,
    /// `2 mu + eta / tau + alpha`
    pub beta0: f64,
    /// `d lambda + beta0`
    pub beta1: f64,
}

impl StepParams {
    pub fn new(m: &Material, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be positive and finite (tau = {tau})")));
        }
        let beta0 = 2.0 * m.mu + m.eta / tau + m.alpha;
        let beta1 = DIM_F * m.lambda + beta0;
        Ok(StepParams { tau, beta0, beta1 })
    }

    /// `eta / tau`
    pub fn viscous_weight(&self, m: &Material) -> f64 {
        m.eta / self.tau
    }
}

/// `C X = lambda tr(X) I + 2 mu X`.
pub fn apply_c(m: &Material, x: &SymTensor2) -> SymTensor2 {
    let lt = m.lambda * x.trace();
    SymTensor2::new(lt + 2.0 * m.mu * x.xx, lt + 2.0 * m.mu * x.yy, 2.0 * m.mu * x.xy)
}

/// `D^{-1} X = (1/beta0) [X - (lambda/beta1) tr(X) I]` where
/// `D = (eta/tau + alpha) I + C`.
pub fn apply_d_inv(m: &Material, s: &StepParams, x: &SymTensor2) -> SymTensor2 {
    let shift = m.lambda / s.beta1 * x.trace();
    let inv = 1.0 / s.beta0;
    SymTensor2::new(inv * (x.xx - shift), inv * (x.yy - shift), inv * x.xy)
}

/// `D X = (eta/tau + alpha) X + C X`; the forward operator inverted by [`apply_d_inv`].
pub fn apply_d(m: &Material, s: &StepParams, x: &SymTensor2) -> SymTensor2 {
    (s.viscous_weight(m) + m.alpha) * *x + apply_c(m, x)
}

/// Effective stiffness `C (I - D^{-1} C) X` of the displacement-only system,
/// i.e. `C(e - phi)` with `phi` eliminated through the explicit update.
/// Equal to `(eta/tau + alpha) C D^{-1} X`.
pub fn apply_effective(m: &Material, s: &StepParams, x: &SymTensor2) -> SymTensor2 {
    let cx = apply_c(m, x);
    apply_c(m, &(*x - apply_d_inv(m, s, &cx)))
}

/// Stress `C (e - phi)`.
pub fn stress(m: &Material, e: &SymTensor2, phi: &SymTensor2) -> SymTensor2 {
    apply_c(m, &(*e - *phi))
}

/// Pointwise `C`-weighted inner product `(C X) : Y`.
pub fn c_inner(m: &Material, x: &SymTensor2, y: &SymTensor2) -> f64 {
    ddot(&apply_c(m, x), y)
}

/// Explicit per-element update `phi^k = D^{-1}(C e^k + (eta/tau) phi^{k-1})`.
pub fn relax_update(m: &Material, s: &StepParams, strain: &SymTensor2, phi_prev: &SymTensor2) -> SymTensor2 {
    let rhs = apply_c(m, strain) + s.viscous_weight(m) * *phi_prev;
    apply_d_inv(m, s, &rhs)
}
