//! Scaling regimes: Mach number `eps^m`, Rossby number `eps`, Froude number `eps^n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used to decide the borderline case `2n = m + 1`.
const BORDERLINE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegimeError {
    #[error("non-finite regime parameter (m={m}, n={n}, eps={eps})")]
    NonFinite { m: f64, n: f64, eps: f64 },
    #[error("out of regime: {0}")]
    OutOfRegime(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    /// `m > 1` and `m < 2n < m + 1`.
    AnisotropicInterior,
    /// `m > 1` and `2n = m + 1`.
    AnisotropicBorderline,
    /// `m = 1` and `1/2 < n < 1`.
    Isotropic,
}

impl RegimeKind {
    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::AnisotropicInterior => "anisotropic-interior",
            RegimeKind::AnisotropicBorderline => "anisotropic-borderline",
            RegimeKind::Isotropic => "isotropic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub m: f64,
    pub n: f64,
    pub eps: f64,
    pub kind: RegimeKind,
}

/// Classifies `(m, n, eps)` or explains which inequality fails.
pub fn validate_regime(m: f64, n: f64, eps: f64) -> Result<ScalingRegime, RegimeError> {
    if !(m.is_finite() && n.is_finite() && eps.is_finite()) {
        return Err(RegimeError::NonFinite { m, n, eps });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(RegimeError::OutOfRegime(format!(
            "0 < eps <= 1 violated (eps = {eps})"
        )));
    }
    if m < 1.0 {
        return Err(RegimeError::OutOfRegime(format!("m >= 1 violated (m = {m})")));
    }
    let kind = if m == 1.0 {
        if n <= 0.5 {
            return Err(RegimeError::OutOfRegime(format!(
                "1/2 < n violated for m = 1 (n = {n})"
            )));
        }
        if n >= 1.0 {
            return Err(RegimeError::OutOfRegime(format!(
                "n < 1 violated for m = 1 (n = {n}); strong stratification is excluded"
            )));
        }
        RegimeKind::Isotropic
    } else {
        if 2.0 * n <= m {
            return Err(RegimeError::OutOfRegime(format!(
                "m < 2n violated (m = {m}, 2n = {})",
                2.0 * n
            )));
        }
        let gap = 2.0 * n - (m + 1.0);
        if gap > BORDERLINE_TOL {
            return Err(RegimeError::OutOfRegime(format!(
                "2n <= m + 1 violated (2n = {}, m + 1 = {})",
                2.0 * n,
                m + 1.0
            )));
        }
        if gap.abs() <= BORDERLINE_TOL {
            RegimeKind::AnisotropicBorderline
        } else {
            RegimeKind::AnisotropicInterior
        }
    };
    if m <= n {
        return Err(RegimeError::OutOfRegime(format!("m > n violated (m = {m}, n = {n})")));
    }
    Ok(ScalingRegime { m, n, eps, kind })
}

impl ScalingRegime {
    /// Same exponents with a different `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<ScalingRegime, RegimeError> {
        validate_regime(self.m, self.n, eps)
    }

    /// Mach number `eps^m`.
    pub fn mach(&self) -> f64 {
        self.eps.powf(self.m)
    }

    /// Stratification strength `eps^{2(m-n)}` appearing in the static balance.
    pub fn strat(&self) -> f64 {
        self.eps.powf(2.0 * (self.m - self.n))
    }

    /// Coefficient `eps^{m-2n}` of the gravity/pressure remainder in the momentum tendency.
    pub fn remainder_scale(&self) -> f64 {
        self.eps.powf(self.m - 2.0 * self.n)
    }

    /// Rotation frequency `1/eps`.
    pub fn rotation(&self) -> f64 {
        1.0 / self.eps
    }

    pub fn is_isotropic(&self) -> bool {
        self.kind == RegimeKind::Isotropic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_examples() {
        assert_eq!(validate_regime(2.0, 1.25, 0.1).unwrap().kind, RegimeKind::AnisotropicInterior);
        assert_eq!(validate_regime(2.0, 1.5, 0.1).unwrap().kind, RegimeKind::AnisotropicBorderline);
        assert_eq!(validate_regime(1.0, 0.75, 0.1).unwrap().kind, RegimeKind::Isotropic);
    }

    #[test]
    fn rejection_names_inequality() {
        let err = validate_regime(1.0, 1.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("n < 1"), "{err}");
        let err = validate_regime(2.0, 0.9, 0.1).unwrap_err();
        assert!(err.to_string().contains("m < 2n"), "{err}");
        let err = validate_regime(2.0, 1.6, 0.1).unwrap_err();
        assert!(err.to_string().contains("2n <= m + 1"), "{err}");
        let err = validate_regime(2.0, 1.25, 1.5).unwrap_err();
        assert!(err.to_string().contains("eps"), "{err}");
        assert!(matches!(validate_regime(f64::NAN, 1.0, 0.1), Err(RegimeError::NonFinite { .. })));
    }

    #[test]
    fn scale_factors() {
        let r = validate_regime(2.0, 1.25, 0.1).unwrap();
        assert!((r.mach() - 0.01).abs() < 1e-15);
        assert!((r.strat() - 0.1f64.powf(1.5)).abs() < 1e-15);
        assert!((r.remainder_scale() - 0.1f64.powf(-0.5)).abs() < 1e-12);
    }
}
