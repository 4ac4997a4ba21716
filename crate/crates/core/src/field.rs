//! The effective potential `W = V + F * rho` sampled on the `q` nodes.

use crate::error::Result;
use crate::grid::PhaseDensity;
use crate::model::{ConfiningPotential, InteractionPotential, Polynomial};

/// `W(q_i)`, `W'(q_i)` and the mean-field part `(F * rho)(q_i)` alone.
///
/// The convolution is expanded about the mean of the `q`-marginal, which is
/// exact by translation invariance and avoids cancellation in high moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotentialField {
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub mean_field: Vec<f64>,
    /// Convolution polynomial in `q - center`.
    pub convolution: Polynomial,
    pub center: f64,
}

impl EffectivePotentialField {
    pub fn from_density(rho: &PhaseDensity, v: &ConfiningPotential, f: &InteractionPotential) -> Result<Self> {
        let (center, conv) = centered_convolution(rho, f)?;
        let dconv = conv.derivative();
        let q = rho.grid().q_nodes();
        let mean_field: Vec<f64> = q.iter().map(|&x| conv.eval(x - center)).collect();
        let w = q.iter().zip(&mean_field).map(|(&x, m)| v.eval(x) + m).collect();
        let dw = q.iter().map(|&x| v.grad(x) + dconv.eval(x - center)).collect();
        Ok(EffectivePotentialField {
            w,
            dw,
            mean_field,
            convolution: conv,
            center,
        })
    }

    /// Field of `V` alone (no interaction), on the nodes of `rho`'s grid.
    pub fn external(rho: &PhaseDensity, v: &ConfiningPotential) -> Self {
        let q = rho.grid().q_nodes();
        EffectivePotentialField {
            w: q.iter().map(|&x| v.eval(x)).collect(),
            dw: q.iter().map(|&x| v.grad(x)).collect(),
            mean_field: vec![0.0; q.len()],
            convolution: Polynomial::zero(),
            center: 0.0,
        }
    }
}

/// `(center, P)` with `(F * rho)(q) = P(q - center)`.
pub fn centered_convolution(rho: &PhaseDensity, f: &InteractionPotential) -> Result<(f64, Polynomial)> {
    f.ensure_even()?;
    if f.is_zero() {
        return Ok((0.0, Polynomial::zero()));
    }
    let (center, moments) = rho.central_q_moments(f.coeffs().len() - 1);
    Ok((center, f.convolve(&moments)?))
}
