//! Nonlinearities `Φ, σ, ν, B, f` of
//! `∂ρ = ΔΦ(ρ) − ∇·ν(ρ) − ∇·B(ρ) − f(ρ) − √ε ∇·(σ(ρ) ξ)`.
//!
//! Every coefficient is a named built-in with parameters so experiment
//! manifests can describe it completely.

mod assumptions;
mod presets;
pub mod quadrature;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use assumptions::{verify_assumptions, AssumptionEntry, AssumptionReport, CheckStatus, MarginKind};
pub use presets::{preset, PresetName, PresetParams};
pub use quadrature::Antiderivative;

/// Noise coefficient `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sigma {
    Zero,
    Constant {
        c: f64,
    },
    /// `σ(ξ) = aξ`
    Linear {
        a: f64,
    },
    /// `σ(ξ) = √(ξ + δ²) − δ`, a bounded-slope regularisation of `√ξ`.
    RegularizedSqrt {
        delta: f64,
    },
    /// `σ(ξ) = aξ / (1 + ξ)`
    Saturating {
        a: f64,
    },
}

impl Sigma {
    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        match *self {
            Sigma::Zero => 0.0,
            Sigma::Constant { c } => c,
            Sigma::Linear { a } => a * xi,
            Sigma::RegularizedSqrt { delta } => (xi + delta * delta).sqrt() - delta,
            Sigma::Saturating { a } => a * xi / (1.0 + xi),
        }
    }

    #[inline]
    pub fn deriv(&self, xi: f64) -> f64 {
        match *self {
            Sigma::Zero | Sigma::Constant { .. } => 0.0,
            Sigma::Linear { a } => a,
            Sigma::RegularizedSqrt { delta } => 0.5 / (xi + delta * delta).sqrt(),
            Sigma::Saturating { a } => a / (1.0 + xi).powi(2),
        }
    }

    #[inline]
    pub fn second(&self, xi: f64) -> f64 {
        match *self {
            Sigma::Zero | Sigma::Constant { .. } | Sigma::Linear { .. } => 0.0,
            Sigma::RegularizedSqrt { delta } => -0.25 * (xi + delta * delta).powf(-1.5),
            Sigma::Saturating { a } => -2.0 * a / (1.0 + xi).powi(3),
        }
    }

    /// `sup (σ')²` over `[lo, hi]`, `lo ≥ 0`.
    pub fn max_deriv_sq(&self, lo: f64, _hi: f64) -> f64 {
        match *self {
            Sigma::Zero | Sigma::Constant { .. } => 0.0,
            Sigma::Linear { a } => a * a,
            // |σ'| is decreasing for the two remaining kinds
            Sigma::RegularizedSqrt { .. } | Sigma::Saturating { .. } => self.deriv(lo.max(0.0)).powi(2),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Sigma::Zero) || matches!(self, Sigma::Constant { c } if *c == 0.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Sigma::Zero => true,
            Sigma::Constant { c } => c.is_finite(),
            Sigma::Linear { a } | Sigma::Saturating { a } => a.is_finite(),
            Sigma::RegularizedSqrt { delta } => delta.is_finite() && delta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("sigma", format!("{self:?} has invalid parameters")))
        }
    }
}

/// Nonlinear part of `Φ = a·id + ψ`.
#[derive(Debug, Clone)]
pub enum PhiExtra {
    None,
    /// `ψ(ξ) = c ξ³`
    Cubic {
        coef: f64,
    },
    /// `ψ = c g` with `g' = (σ')²`, `g(0) = 0` (Stratonovich-to-Itô correction).
    Ito {
        coef: f64,
        sigma: Sigma,
        g: Arc<Antiderivative>,
    },
}

/// Diffusion nonlinearity `Φ(ξ) = linear · ξ + ψ(ξ)` on `[0, ∞)`, extended to
/// `ℝ` by `Φ(−r) = −Φ(r)`.
#[derive(Debug, Clone)]
pub struct Phi {
    pub linear: f64,
    pub extra: PhiExtra,
}

impl Phi {
    pub fn identity() -> Self {
        Self {
            linear: 1.0,
            extra: PhiExtra::None,
        }
    }

    pub fn cubic(coef: f64) -> Self {
        Self {
            linear: 1.0,
            extra: PhiExtra::Cubic { coef },
        }
    }

    #[inline]
    pub fn extra_value(&self, xi: f64) -> f64 {
        match &self.extra {
            PhiExtra::None => 0.0,
            PhiExtra::Cubic { coef } => coef * xi * xi * xi,
            PhiExtra::Ito { coef, g, .. } => coef * g.eval(xi),
        }
    }

    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            return -self.value(-xi);
        }
        self.linear * xi + self.extra_value(xi)
    }

    #[inline]
    pub fn deriv(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        self.linear
            + match &self.extra {
                PhiExtra::None => 0.0,
                PhiExtra::Cubic { coef } => 3.0 * coef * xi * xi,
                PhiExtra::Ito { coef, sigma, .. } => coef * sigma.deriv(xi).powi(2),
            }
    }

    #[inline]
    pub fn second(&self, xi: f64) -> f64 {
        let s = xi.signum();
        let a = xi.abs();
        s * match &self.extra {
            PhiExtra::None => 0.0,
            PhiExtra::Cubic { coef } => 6.0 * coef * a,
            PhiExtra::Ito { coef, sigma, .. } => 2.0 * coef * sigma.deriv(a) * sigma.second(a),
        }
    }

    /// Lipschitz constant of `ψ` on `[lo, hi]`; infinite when unknown.
    pub fn extra_lip(&self, lo: f64, hi: f64) -> f64 {
        match &self.extra {
            PhiExtra::None => 0.0,
            PhiExtra::Cubic { coef } => 3.0 * coef.abs() * hi * hi,
            PhiExtra::Ito { coef, sigma, .. } => coef.abs() * sigma.max_deriv_sq(lo, hi),
        }
    }

    /// `sup Φ'` over `[0, hi]`.
    pub fn max_deriv(&self, hi: f64) -> f64 {
        self.linear + self.extra_lip(0.0, hi)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.extra, PhiExtra::None)
    }

    /// `Φ⁻¹(v)` by safeguarded Newton iteration (bisection fallback) to a
    /// relative tolerance of `1e-13`; uses the odd extension for `v < 0`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        self.inverse_near(v, v / self.deriv(0.0).max(1e-300))
    }

    pub fn inverse_near(&self, v: f64, guess: f64) -> Result<f64> {
        if v < 0.0 {
            return Ok(-self.inverse_near(-v, -guess)?);
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        if self.is_linear() {
            if self.linear > 0.0 {
                return Ok(v / self.linear);
            }
            return Err(Error::PhiInversion { value: v });
        }
        let mut lo = 0.0;
        let mut hi = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
        let mut tries = 0;
        while self.value(hi) < v {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::PhiInversion { value: v });
            }
        }
        let mut x = if guess.is_finite() && guess > lo && guess < hi {
            guess
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..200 {
            let r = self.value(x) - v;
            if r.abs() <= 1e-14 * v.abs().max(1e-300) {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.deriv(x);
            let newton = x - r / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-13 * hi {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::PhiInversion { value: v })
    }
}

/// Convective flux `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nu {
    Zero,
    /// `ν(ξ) = v ξ`
    Linear {
        velocity: [f64; 2],
    },
    /// `ν(ξ) = v ξ² / 2`
    Burgers {
        velocity: [f64; 2],
    },
}

impl Nu {
    #[inline]
    pub fn component(&self, xi: f64, axis: usize) -> f64 {
        match *self {
            Nu::Zero => 0.0,
            Nu::Linear { velocity } => velocity[axis] * xi,
            Nu::Burgers { velocity } => 0.5 * velocity[axis] * xi * xi,
        }
    }

    pub fn norm(&self, xi: f64) -> f64 {
        (self.component(xi, 0).powi(2) + self.component(xi, 1).powi(2)).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nu::Zero)
    }
}

/// Reaction term `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reaction {
    Zero,
    /// `f(ξ) = κ sin ξ`
    Sine {
        kappa: f64,
    },
    /// `f(ξ) = r ξ`
    Linear {
        rate: f64,
    },
}

impl Reaction {
    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        match *self {
            Reaction::Zero => 0.0,
            Reaction::Sine { kappa } => kappa * xi.sin(),
            Reaction::Linear { rate } => rate * xi,
        }
    }

    #[inline]
    pub fn deriv(&self, xi: f64) -> f64 {
        match *self {
            Reaction::Zero => 0.0,
            Reaction::Sine { kappa } => kappa * xi.cos(),
            Reaction::Linear { rate } => rate,
        }
    }

    /// Constant for both the one-sided Lipschitz and the linear growth bound.
    pub fn lip(&self) -> f64 {
        match *self {
            Reaction::Zero => 0.0,
            Reaction::Sine { kappa } => kappa.abs(),
            Reaction::Linear { rate } => rate.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Reaction::Zero)
    }
}

/// Nonlocal drift `B`, a periodic convolution `B(ρ) = K * ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlocal {
    Zero,
    /// `K_i(z) = β sin(2π z_i / L)` for each axis `i`.
    SineKernel {
        beta: f64,
    },
}

impl Nonlocal {
    /// `‖B‖_Lip` from `L¹` to `W^{1,∞}`: the kernel's `W^{1,∞}` norm
    /// `β √d (1 + 2π/L)` (the cell-average quadrature constant is one).
    pub fn lip(&self, dim: usize, length: f64) -> f64 {
        match *self {
            Nonlocal::Zero => 0.0,
            Nonlocal::SineKernel { beta } => beta.abs() * (dim as f64).sqrt() * (1.0 + 2.0 * PI / length),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlocal::Zero)
    }
}

/// A complete coefficient set. `λ ≡ 1` throughout.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub name: String,
    pub phi: Phi,
    pub sigma: Sigma,
    pub nu: Nu,
    pub reaction: Reaction,
    pub nonlocal: Nonlocal,
    /// Noise intensity `ε ∈ [0, 1]`.
    pub epsilon: f64,
    /// Growth exponent `m` with `Φ(ξ) ≤ c(1 + ξ^m)`.
    pub growth_exponent: f64,
}

impl CoefficientSet {
    pub fn f_lip(&self) -> f64 {
        self.reaction.lip()
    }

    pub fn b_lip(&self, dim: usize, length: f64) -> f64 {
        self.nonlocal.lip(dim, length)
    }

    pub fn is_noiseless(&self) -> bool {
        self.epsilon == 0.0 || self.sigma.is_zero()
    }

    /// Same coefficients with the noise switched off (`ε = 0`).
    pub fn deterministic(&self) -> Self {
        let mut out = self.clone();
        out.epsilon = 0.0;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", format!("{} not in [0, 1]", self.epsilon)));
        }
        self.sigma.validate()?;
        if !(self.phi.linear.is_finite() && self.phi.linear >= 0.0) {
            return Err(invalid("phi", "linear part must be finite and nonnegative"));
        }
        if self.phi.value(0.0) != 0.0 {
            return Err(invalid("phi", "Phi(0) must vanish"));
        }
        if self.reaction.value(0.0) != 0.0 {
            return Err(invalid("f", "f(0) must vanish"));
        }
        Ok(())
    }
}

/// Itô form of a Stratonovich problem: `Φ(ρ) = ρ + (εF₁/2) g(ρ)` with
/// `g' = (σ')²`, `g(0) = 0`.
#[derive(Debug, Clone)]
pub struct StratCorrection {
    pub g: Arc<Antiderivative>,
    pub coef: f64,
    pub sigma: Sigma,
}

impl StratCorrection {
    pub fn phi(&self) -> Phi {
        Phi {
            linear: 1.0,
            extra: if self.coef == 0.0 {
                PhiExtra::None
            } else {
                PhiExtra::Ito {
                    coef: self.coef,
                    sigma: self.sigma,
                    g: self.g.clone(),
                }
            },
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        rho + self.coef * self.g.eval(rho)
    }

    /// Simpson/Richardson error estimate accumulated over the table.
    pub fn quadrature_error(&self) -> f64 {
        self.g.error_estimate
    }
}

const STRAT_TABLE_MAX: f64 = 64.0;
const STRAT_TABLE_CELLS: usize = 4096;

pub fn strat_to_ito(sigma: Sigma, epsilon: f64, f1: f64) -> Result<StratCorrection> {
    sigma.validate()?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("{epsilon} must be nonnegative")));
    }
    if !(f1.is_finite() && f1 >= 0.0) {
        return Err(invalid("f1", format!("{f1} must be nonnegative")));
    }
    let g = Antiderivative::build(
        Arc::new(move |x: f64| sigma.deriv(x).powi(2)),
        STRAT_TABLE_MAX,
        STRAT_TABLE_CELLS,
    );
    Ok(StratCorrection {
        g: Arc::new(g),
        coef: 0.5 * epsilon * f1,
        sigma,
    })
}

/// `Θ_{Φ,p}` with `Θ(0) = 0` and `Θ'(ξ) = ξ^{(p−2)/2} Φ'(ξ)^{1/2}`.
pub fn theta(phi: &Phi, p: f64, xi_max: f64) -> Antiderivative {
    let phi = phi.clone();
    Antiderivative::build(
        Arc::new(move |x: f64| {
            let w = if p == 2.0 {
                1.0
            } else {
                x.max(0.0).powf(0.5 * (p - 2.0))
            };
            w * phi.deriv(x).sqrt()
        }),
        xi_max,
        2048,
    )
}
