//! Barotropic pressure laws normalised so that `p'(1) = 1`, with the
//! enthalpy-like potential `H(rho) = rho * int_1^rho p(z)/z^2 dz`.
//!
//! Differences such as `H'(rho_ref + delta) - H'(rho_ref)` are evaluated with
//! `expm1`/`ln_1p` so that perturbations of size `eps^m` keep full precision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("density must be positive, got {0}")]
    DomainError(f64),
    #[error("invalid pressure law: {0}")]
    InvalidLaw(String),
}

/// `(1 + x)^a - 1`, accurate for small `x`.
fn pow_m1(x: f64, a: f64) -> f64 {
    (a * x.ln_1p()).exp_m1()
}

/// `(1 + x)^a - 1 - a x`, accurate for small `x`.
fn pow_defect(x: f64, a: f64) -> f64 {
    if x.abs() < 1e-2 {
        // binomial series from the quadratic term on
        let mut coef = a * (a - 1.0) / 2.0;
        let mut xk = x * x;
        let mut sum = coef * xk;
        for k in 3..40 {
            coef *= (a - (k as f64 - 1.0)) / k as f64;
            xk *= x;
            let term = coef * xk;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        pow_m1(x, a) - a * x
    }
}

/// The `gamma`-law `p(rho) = rho^gamma / gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLaw {
    pub gamma: f64,
}

impl GammaLaw {
    pub fn new(gamma: f64) -> Result<Self, PressureError> {
        if !(gamma.is_finite() && gamma > 1.5) {
            return Err(PressureError::InvalidLaw(format!(
                "gamma > 3/2 required, got {gamma}"
            )));
        }
        Ok(GammaLaw { gamma })
    }

    fn p(&self, rho: f64) -> f64 {
        rho.powf(self.gamma) / self.gamma
    }
    fn dp(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 1.0)
    }
    fn h(&self, rho: f64) -> f64 {
        let g = self.gamma;
        // rho (rho^{g-1} - 1) / (g (g - 1))
        rho * pow_m1(rho - 1.0, g - 1.0) / (g * (g - 1.0))
    }
    fn dh(&self, rho: f64) -> f64 {
        let g = self.gamma;
        (g * rho.powf(g - 1.0) - 1.0) / (g * (g - 1.0))
    }
    fn dh_increment(&self, rho_ref: f64, delta: f64) -> f64 {
        let g = self.gamma;
        rho_ref.powf(g - 1.0) * pow_m1(delta / rho_ref, g - 1.0) / (g - 1.0)
    }
    fn pressure_increment(&self, rho_ref: f64, delta: f64) -> f64 {
        let g = self.gamma;
        rho_ref.powf(g) * pow_m1(delta / rho_ref, g) / g
    }
    fn pressure_defect(&self, rho_ref: f64, delta: f64) -> f64 {
        let g = self.gamma;
        rho_ref.powf(g) * pow_defect(delta / rho_ref, g) / g
    }
    fn dp_excess(&self, rho: f64) -> f64 {
        pow_m1(rho - 1.0, self.gamma - 1.0)
    }
    fn relative_energy(&self, rho: f64, rho_ref: f64) -> f64 {
        let g = self.gamma;
        if rho == 0.0 {
            // limit of the general expression at vacuum
            return self.h(0.0) - (0.0 - rho_ref) * self.dh(rho_ref) - self.h(rho_ref);
        }
        rho_ref.powf(g) * pow_defect(rho / rho_ref - 1.0, g) / (g * (g - 1.0))
    }
}

/// Two-exponent polytrope `p = w rho^g1/g1 + (1-w) rho^g2/g2`; its equilibria
/// have no closed form and go through the root finder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedPolytrope {
    pub weight: f64,
    pub first: GammaLaw,
    pub second: GammaLaw,
}

impl MixedPolytrope {
    pub fn new(weight: f64, gamma1: f64, gamma2: f64) -> Result<Self, PressureError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(PressureError::InvalidLaw(format!(
                "mixture weight must lie in [0, 1], got {weight}"
            )));
        }
        Ok(MixedPolytrope {
            weight,
            first: GammaLaw::new(gamma1)?,
            second: GammaLaw::new(gamma2)?,
        })
    }

    fn mix(&self, f: impl Fn(&GammaLaw) -> f64) -> f64 {
        self.weight * f(&self.first) + (1.0 - self.weight) * f(&self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PressureLaw {
    Gamma(GammaLaw),
    Mixed(MixedPolytrope),
}

/// `(p, p', H, H')` at one density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials {
    pub p: f64,
    pub dp: f64,
    pub h: f64,
    pub dh: f64,
}

impl PressureLaw {
    pub fn gamma_law(gamma: f64) -> Result<Self, PressureError> {
        Ok(PressureLaw::Gamma(GammaLaw::new(gamma)?))
    }

    /// Exponent governing growth at large density; sets the `L^gamma` scale of
    /// the residual parts.
    pub fn gamma(&self) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.gamma,
            PressureLaw::Mixed(m) => {
                if m.weight == 0.0 {
                    m.second.gamma
                } else if m.weight == 1.0 {
                    m.first.gamma
                } else {
                    m.first.gamma.max(m.second.gamma)
                }
            }
        }
    }

    pub fn p(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.p(rho),
            PressureLaw::Mixed(m) => m.mix(|g| g.p(rho)),
        }
    }

    pub fn dp(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.dp(rho),
            PressureLaw::Mixed(m) => m.mix(|g| g.dp(rho)),
        }
    }

    pub fn h(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.h(rho),
            PressureLaw::Mixed(m) => m.mix(|g| g.h(rho)),
        }
    }

    pub fn dh(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.dh(rho),
            PressureLaw::Mixed(m) => m.mix(|g| g.dh(rho)),
        }
    }

    /// `H''(rho) = p'(rho) / rho`.
    pub fn d2h(&self, rho: f64) -> f64 {
        self.dp(rho) / rho
    }

    /// `H'(rho_ref + delta) - H'(rho_ref)`.
    pub fn dh_increment(&self, rho_ref: f64, delta: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.dh_increment(rho_ref, delta),
            PressureLaw::Mixed(m) => m.mix(|g| g.dh_increment(rho_ref, delta)),
        }
    }

    /// `p(rho_ref + delta) - p(rho_ref)`.
    pub fn pressure_increment(&self, rho_ref: f64, delta: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.pressure_increment(rho_ref, delta),
            PressureLaw::Mixed(m) => m.mix(|g| g.pressure_increment(rho_ref, delta)),
        }
    }

    /// `p(rho_ref + delta) - p(rho_ref) - p'(rho_ref) delta`.
    pub fn pressure_defect(&self, rho_ref: f64, delta: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.pressure_defect(rho_ref, delta),
            PressureLaw::Mixed(m) => m.mix(|g| g.pressure_defect(rho_ref, delta)),
        }
    }

    /// `p'(rho) - 1`.
    pub fn dp_excess(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.dp_excess(rho),
            PressureLaw::Mixed(m) => m.mix(|g| g.dp_excess(rho)),
        }
    }

    /// Pressure remainder `Pi` at density `rho_ref + mach * r`:
    /// `[(p'(rho_ref) - 1) r + (p(rho) - p(rho_ref) - p'(rho_ref) mach r) / mach] / strat`.
    pub fn pressure_remainder(&self, rho_ref: f64, r: f64, mach: f64, strat: f64) -> f64 {
        (self.dp_excess(rho_ref) * r + self.pressure_defect(rho_ref, mach * r) / mach) / strat
    }

    /// Pointwise relative energy `E(rho, rho_ref) = H(rho) - (rho - rho_ref) H'(rho_ref) - H(rho_ref)`.
    pub fn relative_energy_density(&self, rho: f64, rho_ref: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.relative_energy(rho, rho_ref),
            PressureLaw::Mixed(m) => m.mix(|g| g.relative_energy(rho, rho_ref)),
        }
    }

    /// Solves `H'(rho) - H'(1) = forcing` when a closed form exists.
    pub fn equilibrium_closed_form(&self, forcing: f64) -> Option<f64> {
        match self {
            PressureLaw::Gamma(g) => {
                let base = 1.0 + (g.gamma - 1.0) * forcing;
                (base > 0.0).then(|| base.powf(1.0 / (g.gamma - 1.0)))
            }
            PressureLaw::Mixed(_) => None,
        }
    }
}

/// Consistent quadruple `(p, p', H, H')` at `rho`.
pub fn pressure_potentials(law: &PressureLaw, rho: f64) -> Result<Potentials, PressureError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(PressureError::DomainError(rho));
    }
    Ok(Potentials {
        p: law.p(rho),
        dp: law.dp(rho),
        h: law.h(rho),
        dh: law.dh(rho),
    })
}
