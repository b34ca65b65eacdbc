//! Gravity potential on the vertical torus `[-1, 1)`.

use serde::{Deserialize, Serialize};

/// `G(x3) = -|x3|`: equal to `-x3` on the physical slab `[0, 1]`, extended
/// evenly so that the vertical force `dG/dx3` is odd.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GravityPotential;

/// Maps `x3` to the fundamental cell `[-1, 1)`.
fn wrap(x3: f64) -> f64 {
    if (-1.0..1.0).contains(&x3) {
        x3
    } else {
        (x3 + 1.0).rem_euclid(2.0) - 1.0
    }
}

impl GravityPotential {
    pub fn value(&self, x3: f64) -> f64 {
        -wrap(x3).abs()
    }

    /// `dG/dx3 = -sign(x3)`; zero on the symmetry planes `x3 = 0` and `x3 = -1`.
    pub fn derivative(&self, x3: f64) -> f64 {
        let z = wrap(x3);
        if z == 0.0 || z == -1.0 {
            0.0
        } else {
            -z.signum()
        }
    }

    pub fn lipschitz(&self) -> f64 {
        1.0
    }
}
