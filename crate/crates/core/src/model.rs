//! Physical parameters and closed-form constants.

use crate::error::{Error, Result};

/// Slip coefficients at the two walls and the viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipConfig {
    pub k0: f64,
    pub k1: f64,
    pub mu: f64,
}

impl SlipConfig {
    pub fn new(k0: f64, k1: f64, mu: f64) -> Result<Self> {
        if !k0.is_finite() || !k1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "slip coefficients must be finite, got k0 = {k0}, k1 = {k1}"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be positive, got mu = {mu}"
            )));
        }
        Ok(Self { k0, k1, mu })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.k0, self.k1, mu)
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants::of(self)
    }
}

/// Shape of the extremal profile for the critical viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Maximizer {
    /// `a x (x - 1) (x - b)`
    Cubic { b: f64, a: f64 },
    /// `a x (x - 1)`, the limit b -> infinity reached when k0 = k1.
    Parabola { a: f64 },
}

impl Maximizer {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Maximizer::Cubic { b, a } => a * x * (x - 1.0) * (x - b),
            Maximizer::Parabola { a } => a * x * (x - 1.0),
        }
    }

    /// Root b, infinite for the parabola.
    pub fn b(&self) -> f64 {
        match *self {
            Maximizer::Cubic { b, .. } => b,
            Maximizer::Parabola { .. } => f64::INFINITY,
        }
    }

    pub fn a(&self) -> f64 {
        match *self {
            Maximizer::Cubic { a, .. } | Maximizer::Parabola { a } => a,
        }
    }

    /// (psi'(0), psi'(1))
    pub fn end_slopes(&self) -> (f64, f64) {
        match *self {
            Maximizer::Cubic { b, a } => (a * b, a * (1.0 - b)),
            Maximizer::Parabola { a } => (-a, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub mu_c: f64,
    pub c0: f64,
    pub b_max: Option<f64>,
    pub a_norm: Option<f64>,
}

impl DerivedConstants {
    pub fn of(cfg: &SlipConfig) -> Self {
        let mu_c = critical_viscosity(cfg);
        let shape = maximizer_cubic(cfg).ok();
        Self {
            mu_c,
            c0: constant_c0(cfg),
            b_max: shape.map(|m| m.b()),
            a_norm: shape.map(|m| m.a()),
        }
    }
}

/// Three-branch formula with the k/6 value on the diagonal k0 = k1 > 0.
///
/// The variational maximum disagrees with that branch; use
/// [`critical_viscosity`] for anything downstream.
pub fn critical_viscosity_closed_form(cfg: &SlipConfig) -> f64 {
    let (k0, k1) = (cfg.k0, cfg.k1);
    if k0 <= 0.0 && k1 <= 0.0 {
        0.0
    } else if k0 == k1 {
        k0 / 6.0
    } else {
        general_root(k0, k1)
    }
}

/// Critical viscosity, sup of Z over the unit sphere of (1/2)∫(ψ'')².
///
/// Largest root of 12 m² - 4 (k0 + k1) m + k0 k1 = 0, clamped at zero.
pub fn critical_viscosity(cfg: &SlipConfig) -> f64 {
    if cfg.k0 <= 0.0 && cfg.k1 <= 0.0 {
        0.0
    } else {
        general_root(cfg.k0, cfg.k1)
    }
}

fn general_root(k0: f64, k1: f64) -> f64 {
    let disc = k0 * k0 + k1 * k1 - k0 * k1;
    ((k0 + k1) + disc.sqrt()) / 6.0
}

/// Extremal profile for Z on the unit sphere, normalized so that
/// (1/2)∫(ψ'')² = 1 with a > 0.
pub fn maximizer_cubic(cfg: &SlipConfig) -> Result<Maximizer> {
    let (k0, k1) = (cfg.k0, cfg.k1);
    if k0 <= 0.0 && k1 <= 0.0 {
        return Err(Error::NoCriticalViscosity { k0, k1 });
    }
    if k0 == k1 {
        // ψ'' = 2a
        return Ok(Maximizer::Parabola {
            a: std::f64::consts::FRAC_1_SQRT_2,
        });
    }
    let disc = (k0 * k0 + k1 * k1 - k0 * k1).sqrt();
    // root of (k0-k1) b² - 2 k0 b + k1 = 0 with the larger (k0-k1) b/6 + k1/6;
    // for k0 < 0 the product form avoids cancellation in k0 + disc
    let b = if k0 < 0.0 {
        k1 / (k0 - disc)
    } else {
        (k0 + disc) / (k0 - k1)
    };
    // ψ'' = a (6x - c), c = 2 + 2b, ∫(6x - c)² = c² - 6c + 12
    let c = 2.0 + 2.0 * b;
    let a = (2.0 / (c * c - 6.0 * c + 12.0)).sqrt();
    Ok(Maximizer::Cubic { b, a })
}

/// Residuals of μ_c = (k0-k1) b/6 + k1/6 and (k0-k1) b² - 2 k0 b + k1 = 0,
/// each scaled by the size of its terms.
pub fn maximizer_residuals(cfg: &SlipConfig, b: f64, mu_c: f64) -> (f64, f64) {
    let (k0, k1) = (cfg.k0, cfg.k1);
    let lin = mu_c - ((k0 - k1) * b / 6.0 + k1 / 6.0);
    let lin_scale = mu_c.abs() + ((k0 - k1) * b).abs() / 6.0 + k1.abs() / 6.0;
    let quad = (k0 - k1) * b * b - 2.0 * k0 * b + k1;
    let quad_scale = ((k0 - k1) * b * b).abs() + (2.0 * k0 * b).abs() + k1.abs();
    (lin.abs() / lin_scale.max(f64::MIN_POSITIVE), quad.abs() / quad_scale.max(f64::MIN_POSITIVE))
}

/// C₀ = max over y of |k1 + k0| + ((k1 + k0) y - k0)² / μ.
pub fn constant_c0(cfg: &SlipConfig) -> f64 {
    (cfg.k1 + cfg.k0).abs() + cfg.k0.powi(2).max(cfg.k1.powi(2)) / cfg.mu
}

/// Stability class of the trivial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stable,
    Neutral,
    Unstable,
}

impl Regime {
    pub fn of(cfg: &SlipConfig) -> Self {
        let mu_c = critical_viscosity(cfg);
        let tol = 1e-12 * mu_c.max(cfg.mu);
        if (cfg.mu - mu_c).abs() <= tol && mu_c > 0.0 {
            Regime::Neutral
        } else if cfg.mu > mu_c {
            Regime::Stable
        } else {
            Regime::Unstable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Stable => "stable",
            Regime::Neutral => "neutral",
            Regime::Unstable => "unstable",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k0: f64, k1: f64, mu: f64) -> SlipConfig {
        SlipConfig::new(k0, k1, mu).unwrap()
    }

    #[test]
    fn closed_form_branches() {
        assert_eq!(critical_viscosity_closed_form(&cfg(-1.0, -1.0, 1.0)), 0.0);
        assert!((critical_viscosity_closed_form(&cfg(1.0, 1.0, 1.0)) - 1.0 / 6.0).abs() < 1e-15);
        assert!((critical_viscosity_closed_form(&cfg(0.0, 1.0, 1.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert!((critical_viscosity_closed_form(&cfg(1.0, 0.0, 1.0)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn equal_coefficients_use_general_root() {
        let c = cfg(1.0, 1.0, 1.0);
        assert!((critical_viscosity(&c) - 0.5).abs() < 1e-15);
        assert_eq!(maximizer_cubic(&c).unwrap(), Maximizer::Parabola { a: std::f64::consts::FRAC_1_SQRT_2 });
    }

    #[test]
    fn c0_examples() {
        assert!((constant_c0(&cfg(1.0, 1.0, 1.0)) - 3.0).abs() < 1e-15);
        assert_eq!(constant_c0(&cfg(0.0, 0.0, 1.0)), 0.0);
        assert!((constant_c0(&cfg(-2.0, 1.0, 0.5)) - 9.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_root_for_one_sided_slip() {
        let c = cfg(1.0, 0.0, 1.0);
        let m = maximizer_cubic(&c).unwrap();
        assert!((m.b() - 2.0).abs() < 1e-15);
        let (r1, r2) = maximizer_residuals(&c, m.b(), critical_viscosity(&c));
        assert!(r1 < 1e-14 && r2 < 1e-14);
    }

    #[test]
    fn maximizer_absent_without_production() {
        assert!(maximizer_cubic(&cfg(-1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn rejects_bad_viscosity() {
        assert!(SlipConfig::new(1.0, 1.0, 0.0).is_err());
        assert!(SlipConfig::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn regime_classes() {
        assert_eq!(Regime::of(&cfg(1.0, 0.0, 0.5)), Regime::Stable);
        assert_eq!(Regime::of(&cfg(1.0, 0.0, 0.1)), Regime::Unstable);
        assert_eq!(Regime::of(&cfg(1.0, 1.0, 0.5)), Regime::Neutral);
        assert_eq!(Regime::of(&cfg(-1.0, -1.0, 0.01)), Regime::Stable);
    }
}
