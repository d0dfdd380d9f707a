//! Regulated area laws on a Cauchy slice and the horizon-entropy relations.
//!
//! Areas carry units of `length^(d-2)` in whatever length unit the scheme's
//! cutoffs use. Only leading terms of the geometric-scale area law are kept.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, HBAR, NEWTON_G, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::transfer::TransferOutcome;

/// Relative tolerance on `c̃₀ = 4 c₀`.
const SCHEME_RTOL: f64 = 1e-12;

/// Cutoffs and coefficients of the area-law formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorScheme {
    /// Space-time dimension.
    pub d: i64,
    /// UV cutoff δ.
    pub delta: f64,
    /// Intermediate regulator d_GE.
    pub d_ge: f64,
    pub d_geom: f64,
    pub c0_tilde: f64,
    pub c0: f64,
    #[serde(default)]
    pub c2: f64,
    /// Macroscopic scale τ of the entangling surface.
    pub tau: f64,
    /// `l^(d-2)`.
    #[serde(default = "default_planck_factor")]
    pub planck_factor: f64,
    /// What "≪" means: `a ≪ b` iff `a · separation_factor ≤ b`.
    #[serde(default = "default_separation")]
    pub separation_factor: f64,
}

fn default_planck_factor() -> f64 {
    8.0 * PI * NEWTON_G * HBAR / SPEED_OF_LIGHT.powi(3)
}

fn default_separation() -> f64 {
    100.0
}

impl RegulatorScheme {
    /// `d = 4`, `δ = c̃₀ = 1`, `c₀ = ¼`, `l^(d-2) = 2π`, hierarchy `1 ≪ 100 ≪ 10⁴`.
    pub fn unit() -> Self {
        Self {
            d: 4,
            delta: 1.0,
            d_ge: 100.0,
            d_geom: 1e4,
            c0_tilde: 1.0,
            c0: 0.25,
            c2: 0.0,
            tau: 1.0,
            planck_factor: TAU,
            separation_factor: 100.0,
        }
    }

    fn check_dimension(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::BadDimension(self.d));
        }
        Ok(())
    }

    /// `δ^(d-2)`.
    pub fn cutoff_area(&self) -> f64 {
        self.delta.powi((self.d - 2) as i32)
    }

    /// Newton constant implied by the regulated area law, `δ^(d-2) / c̃₀`.
    pub fn effective_newton_g(&self) -> f64 {
        self.cutoff_area() / self.c0_tilde
    }

    /// Bits per unit area in `regime`.
    fn density(&self, regime: Regime) -> Result<f64> {
        self.check_dimension().map_err(|e| Error::InvalidScheme(e.to_string()))?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidScheme(format!("{name} must be positive, got {v}")))
            }
        };
        match regime {
            Regime::Regulated => {
                positive("delta", self.delta)?;
                positive("c0_tilde", self.c0_tilde)?;
                let density = self.c0_tilde / self.cutoff_area();
                positive("c0_tilde / delta^(d-2)", density)?;
                Ok(density)
            }
            Regime::GeomScale => {
                positive("planck_factor", self.planck_factor)?;
                Ok(TAU / self.planck_factor)
            }
        }
    }

    /// `c̃₀ == 4 c₀` to relative precision.
    pub fn susskind_uglum_consistent(&self) -> bool {
        (self.c0_tilde - 4.0 * self.c0).abs() <= SCHEME_RTOL * self.c0_tilde.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `A = l^(d-2) S / 2π` at the geometric scale.
    GeomScale,
    /// `A = δ^(d-2) S / c̃₀` at the intermediate regulator.
    Regulated,
}

/// Areas before and after a transfer (regulated regime).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyGeometry {
    pub area_g: f64,
    pub area_g_prime: f64,
    /// Rindler horizon areas; equal to the causal-development areas.
    pub horizon_l: f64,
    pub horizon_l_prime: f64,
    pub entangling_sigma: f64,
    pub entangling_sigma_prime: f64,
    pub delta_area: f64,
    pub regime: Regime,
}

impl CauchyGeometry {
    /// Strict growth of every area.
    pub fn is_expanding(&self) -> bool {
        self.area_g_prime > self.area_g
            && self.horizon_l_prime > self.horizon_l
            && self.entangling_sigma_prime > self.entangling_sigma
    }
}

/// `8πGħ/c³`, independent of `d`.
pub fn planck_scale(d: i64, constants: &PhysicalConstants) -> Result<f64> {
    if d < 3 {
        return Err(Error::BadDimension(d));
    }
    Ok(8.0 * PI * constants.newton_g * constants.hbar / constants.c.powi(3))
}

/// The Planck-length formula is dimensionally consistent only in four dimensions.
pub fn planck_scale_is_dimensionally_consistent(d: i64) -> bool {
    d == 4
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")))
    }
}

/// Leading-order area of a region with entropy `s` bits.
pub fn area_from_entropy(s: f64, scheme: &RegulatorScheme, regime: Regime) -> Result<f64> {
    check_nonnegative("entropy", s)?;
    Ok(s / scheme.density(regime)?)
}

/// Exact inverse of [`area_from_entropy`].
pub fn entropy_from_area(a: f64, scheme: &RegulatorScheme, regime: Regime) -> Result<f64> {
    check_nonnegative("area", a)?;
    Ok(a * scheme.density(regime)?)
}

/// `c₀ (τ/δ)^(d-2) + c₂ (τ/δ)^(d-4)`.
pub fn geometric_entropy_series(scheme: &RegulatorScheme) -> Result<f64> {
    if scheme.delta == 0.0 {
        return Err(Error::ZeroCutoff);
    }
    scheme.check_dimension()?;
    let ratio = scheme.tau / scheme.delta;
    Ok(scheme.c0 * ratio.powi((scheme.d - 2) as i32) + scheme.c2 * ratio.powi((scheme.d - 4) as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatorReport {
    pub passed: bool,
    /// `δ F / d_GE`; at most 1 when the lower separation holds.
    pub delta_ratio: f64,
    /// `d_GE F / d_geom`.
    pub d_ge_ratio: f64,
    pub separation_factor: f64,
}

/// Checks `δ ≪ d_GE ≪ d_geom` with both inequalities inclusive.
pub fn validate_regulators(scheme: &RegulatorScheme) -> RegulatorReport {
    let f = scheme.separation_factor;
    let lower = scheme.delta * f <= scheme.d_ge;
    let upper = scheme.d_ge * f <= scheme.d_geom;
    let valid = [scheme.delta, scheme.d_ge, scheme.d_geom, f]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
        && f >= 1.0;
    RegulatorReport {
        passed: valid && lower && upper,
        delta_ratio: scheme.delta * f / scheme.d_ge,
        d_ge_ratio: scheme.d_ge * f / scheme.d_geom,
        separation_factor: f,
    }
}

/// Cauchy and horizon areas before and after a transfer.
pub fn expansion_delta(outcome: &TransferOutcome, scheme: &RegulatorScheme) -> Result<CauchyGeometry> {
    if outcome.delta_s_g.is_nan() || outcome.delta_s_g <= 0.0 {
        return Err(Error::NonPositiveDelta(outcome.delta_s_g));
    }
    let report = validate_regulators(scheme);
    if !report.passed {
        return Err(Error::RegulatorViolation(format!(
            "δF/d_GE = {:e}, d_GE F/d_geom = {:e} (both must be ≤ 1)",
            report.delta_ratio, report.d_ge_ratio
        )));
    }
    let s_g = outcome.s_g_prime - outcome.delta_s_g;
    let area_g = area_from_entropy(s_g, scheme, Regime::Regulated)?;
    let area_g_prime = area_from_entropy(outcome.s_g_prime, scheme, Regime::Regulated)?;
    Ok(CauchyGeometry {
        area_g,
        area_g_prime,
        horizon_l: area_g,
        horizon_l_prime: area_g_prime,
        entangling_sigma: area_g,
        entangling_sigma_prime: area_g_prime,
        delta_area: area_from_entropy(outcome.delta_s_g, scheme, Regime::Regulated)?,
        regime: Regime::Regulated,
    })
}

fn check_bridge(scheme: &RegulatorScheme) -> Result<()> {
    if !scheme.susskind_uglum_consistent() {
        return Err(Error::SchemeInconsistent {
            c0_tilde: scheme.c0_tilde,
            c0: scheme.c0,
        });
    }
    Ok(())
}

/// `S = (A/4) c̃₀ / δ^(d-2)`.
pub fn susskind_uglum_entropy(area: f64, scheme: &RegulatorScheme) -> Result<f64> {
    check_bridge(scheme)?;
    Ok(area / 4.0 * scheme.density(Regime::Regulated)?)
}

/// `A = 4 δ^(d-2) S / c̃₀`, the inverse of [`susskind_uglum_entropy`].
pub fn susskind_uglum_area(s: f64, scheme: &RegulatorScheme) -> Result<f64> {
    check_bridge(scheme)?;
    Ok(4.0 * s / scheme.density(Regime::Regulated)?)
}

/// `ΔS = ΔA / 4G`.
pub fn bekenstein_hawking_delta(delta_area: f64, newton_g: f64) -> Result<f64> {
    if !(newton_g > 0.0 && newton_g.is_finite()) {
        return Err(Error::NonPositiveG(newton_g));
    }
    Ok(delta_area / (4.0 * newton_g))
}
