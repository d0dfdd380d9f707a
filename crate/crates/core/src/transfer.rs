//! Before/after entropy bookkeeping of the causality-cancellation transfer,
//! state-level absorbed entropies and the accompanying thermodynamics.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::qmatrix::ComplexMatrix;
use crate::states::{self, DensityMatrix};

/// Primed entropies below this are reported as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;
/// Relative tolerance of [`energy_conservation_check`].
pub const CONSERVATION_RTOL: f64 = 1e-9;

/// Pre-transfer entropies in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyLedger {
    pub s_g: f64,
    pub s_e: f64,
    pub s_b: f64,
    pub s_e_star: f64,
    pub s_b_star: f64,
    pub s_0: f64,
}

/// Post-transfer entropies, deltas and the conservation residual, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferOutcome {
    pub s_g_prime: f64,
    pub s_e_prime: f64,
    pub s_b_prime: f64,
    pub delta_s_e_star: f64,
    pub delta_s_b_star: f64,
    pub delta_s_g: f64,
    pub delta_s_tot: f64,
    pub conservation_residual: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferOptions {
    /// Also require `s_e* > s_0` and `s_b* > s_0`, so both subsystems strictly lose entropy.
    pub strict: bool,
}

impl EntropyLedger {
    pub fn new(s_g: f64, s_e: f64, s_b: f64, s_e_star: f64, s_b_star: f64, s_0: f64) -> Self {
        Self {
            s_g,
            s_e,
            s_b,
            s_e_star,
            s_b_star,
            s_0,
        }
    }

    fn check_base(&self) -> Result<()> {
        let fields = [
            ("s_g", self.s_g),
            ("s_e", self.s_e),
            ("s_b", self.s_b),
            ("s_0", self.s_0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::ConditionViolated(format!("{name} = {v} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::NegativeEntropy { name, value: v });
            }
        }
        Ok(())
    }

    /// Checks non-negativity, `s_e* ≤ s_e`, `s_b* ≤ s_b` and `s_e* + s_b* > 2 s_0`.
    pub fn validate(&self, opts: TransferOptions) -> Result<()> {
        self.check_base()?;
        for (name, v) in [("s_e_star", self.s_e_star), ("s_b_star", self.s_b_star)] {
            if !v.is_finite() {
                return Err(Error::ConditionViolated(format!("{name} = {v} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::NegativeEntropy { name, value: v });
            }
        }
        if self.s_e_star > self.s_e {
            return Err(Error::ConditionViolated(format!(
                "s_e* = {} exceeds s_e = {}",
                self.s_e_star, self.s_e
            )));
        }
        if self.s_b_star > self.s_b {
            return Err(Error::ConditionViolated(format!(
                "s_b* = {} exceeds s_b = {}",
                self.s_b_star, self.s_b
            )));
        }
        if self.s_e_star + self.s_b_star <= 2.0 * self.s_0 {
            return Err(Error::ConditionViolated(format!(
                "s_e* + s_b* = {} does not exceed 2 s_0 = {}",
                self.s_e_star + self.s_b_star,
                2.0 * self.s_0
            )));
        }
        if opts.strict && (self.s_e_star <= self.s_0 || self.s_b_star <= self.s_0) {
            return Err(Error::ConditionViolated(format!(
                "strict mode needs s_e* and s_b* above s_0 = {} (got {}, {})",
                self.s_0, self.s_e_star, self.s_b_star
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.s_g + self.s_e + self.s_b
    }
}

impl TransferOutcome {
    pub fn total(&self) -> f64 {
        self.s_g_prime + self.s_e_prime + self.s_b_prime
    }
}

struct Primed {
    s_g: f64,
    s_e: f64,
    s_b: f64,
    delta_e: f64,
    delta_b: f64,
}

fn finish(ledger: &EntropyLedger, p: Primed) -> Result<TransferOutcome> {
    let (s_g_prime, s_e_prime, s_b_prime) = (p.s_g, p.s_e, p.s_b);
    for (name, v) in [
        ("s_g_prime", s_g_prime),
        ("s_e_prime", s_e_prime),
        ("s_b_prime", s_b_prime),
    ] {
        if v < -NEGATIVE_TOL {
            return Err(Error::NegativeEntropy { name, value: v });
        }
    }
    let (delta_s_e_star, delta_s_b_star) = (p.delta_e, p.delta_b);
    let delta_s_g = s_g_prime - ledger.s_g;
    Ok(TransferOutcome {
        s_g_prime,
        s_e_prime,
        s_b_prime,
        delta_s_e_star,
        delta_s_b_star,
        delta_s_g,
        delta_s_tot: delta_s_g + delta_s_e_star + delta_s_b_star,
        conservation_residual: ledger.total() - (s_g_prime + s_e_prime + s_b_prime),
    })
}

pub fn apply_transfer(ledger: &EntropyLedger) -> Result<TransferOutcome> {
    apply_transfer_with(ledger, TransferOptions::default())
}

/// `S_G' = S_G + (S_E* − S_0) + (S_B* − S_0)`, `S_E' = S_E − (S_E* − S_0)`,
/// `S_B' = S_B − (S_B* − S_0)`.
pub fn apply_transfer_with(ledger: &EntropyLedger, opts: TransferOptions) -> Result<TransferOutcome> {
    ledger.validate(opts)?;
    let d_e = ledger.s_e_star - ledger.s_0;
    let d_b = ledger.s_b_star - ledger.s_0;
    finish(
        ledger,
        Primed {
            s_g: ledger.s_g + d_e + d_b,
            s_e: ledger.s_e - d_e,
            s_b: ledger.s_b - d_b,
            delta_e: d_e,
            delta_b: d_b,
        },
    )
}

/// Transfer with everything absorbed (`s_e* = s_e`, `s_b* = s_b`); the
/// subsystems end at exactly `s_0`.
pub fn max_transfer(ledger: &EntropyLedger) -> Result<TransferOutcome> {
    ledger.check_base()?;
    if ledger.s_e + ledger.s_b <= 2.0 * ledger.s_0 {
        return Err(Error::ConditionViolated(format!(
            "s_e + s_b = {} does not exceed 2 s_0 = {}",
            ledger.s_e + ledger.s_b,
            2.0 * ledger.s_0
        )));
    }
    let full = EntropyLedger {
        s_e_star: ledger.s_e,
        s_b_star: ledger.s_b,
        ..*ledger
    };
    let (d_e, d_b) = (ledger.s_e - ledger.s_0, ledger.s_b - ledger.s_0);
    finish(
        &full,
        Primed {
            s_g: ledger.s_g + d_e + d_b,
            s_e: ledger.s_0,
            s_b: ledger.s_0,
            delta_e: d_e,
            delta_b: d_b,
        },
    )
}

fn check_star(rho: &DensityMatrix, star: &[usize], which: &str) -> Result<()> {
    let n = rho.dims().len();
    if star.is_empty() {
        return Err(Error::BadPartition(format!("{which}: empty star factor")));
    }
    if star.iter().any(|&i| i >= n) || star.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadPartition(format!(
            "{which}: {star:?} is not a strictly increasing subset of {n} subsystems"
        )));
    }
    Ok(())
}

/// Entropies (bits) of the star factors of `rho_e` and `rho_b`.
pub fn absorbed_entropies(
    rho_e: &DensityMatrix,
    rho_b: &DensityMatrix,
    star_e: &[usize],
    star_b: &[usize],
) -> Result<(f64, f64)> {
    check_star(rho_e, star_e, "E")?;
    check_star(rho_b, star_b, "B")?;
    Ok((
        entropy::region_entropy(rho_e, star_e)?.bits,
        entropy::region_entropy(rho_b, star_b)?.bits,
    ))
}

/// `ΔE = tr((ρ_x − ρ_0) H_0)` and `ΔE / (k_B T)` in nats.
pub fn entropy_energy_delta(
    rho_x: &DensityMatrix,
    rho_0: &DensityMatrix,
    h0: &ComplexMatrix,
    temperature: f64,
    k_b: f64,
) -> Result<(f64, f64)> {
    if rho_x.dim() != rho_0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of size {} and {}",
            rho_x.dim(),
            rho_0.dim()
        )));
    }
    if !(temperature > 0.0 && temperature.is_finite() && k_b > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need positive temperature and k_B, got T = {temperature}, k_B = {k_b}"
        )));
    }
    let delta_e = states::expectation(h0, rho_x)? - states::expectation(h0, rho_0)?;
    Ok((delta_e, delta_e / (k_b * temperature)))
}

/// Temperatures (K) and energies (J when `k_b` is SI) of one transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoRecord {
    pub t_0: f64,
    pub t_e_star: f64,
    pub t_b_star: f64,
    pub t_g: f64,
    /// Thermal energy absorbed from E*, `k_B T_0 ΔS_E*`.
    pub e_e_star: f64,
    pub e_b_star: f64,
    pub delta_e_g: f64,
    /// `k_B T_E* ΔS_E*`, the energy change at the subsystem's own temperature.
    pub delta_e_e_star: f64,
    pub delta_e_b_star: f64,
    pub k_b: f64,
}

impl ThermoRecord {
    /// Closes the energy balance `ΔE_G = E_E* + E_B* = k_B T_0 ΔS_G`.
    /// Subsystem temperatures are inputs.
    pub fn from_outcome(outcome: &TransferOutcome, t_0: f64, t_e_star: f64, t_b_star: f64, k_b: f64) -> Result<Self> {
        for (name, t) in [("t_0", t_0), ("t_e_star", t_e_star), ("t_b_star", t_b_star), ("k_b", k_b)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {t}")));
            }
        }
        let e_e_star = k_b * t_0 * outcome.delta_s_e_star * LN_2;
        let e_b_star = k_b * t_0 * outcome.delta_s_b_star * LN_2;
        let delta_e_g = k_b * t_0 * outcome.delta_s_g * LN_2;
        let t_g = if outcome.delta_s_g != 0.0 {
            delta_e_g / (k_b * outcome.delta_s_g * LN_2)
        } else {
            t_0
        };
        Ok(Self {
            t_0,
            t_e_star,
            t_b_star,
            t_g,
            e_e_star,
            e_b_star,
            delta_e_g,
            delta_e_e_star: k_b * t_e_star * outcome.delta_s_e_star * LN_2,
            delta_e_b_star: k_b * t_b_star * outcome.delta_s_b_star * LN_2,
            k_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `|ΔE_G − (E_E* + E_B*)|`.
    pub energy_residual: f64,
    pub energy_residual_relative: f64,
    /// `|ΔE_G / (k_B T_0) − ΔS_G ln 2|`, nats.
    pub entropy_residual: f64,
    pub entropy_residual_relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn energy_conservation_check(record: &ThermoRecord, outcome: &TransferOutcome) -> ConservationReport {
    let energy_residual = (record.delta_e_g - (record.e_e_star + record.e_b_star)).abs();
    let energy_scale = record
        .delta_e_g
        .abs()
        .max(record.e_e_star.abs() + record.e_b_star.abs());
    let ds_nats = outcome.delta_s_g * LN_2;
    let entropy_residual = (record.delta_e_g / (record.k_b * record.t_0) - ds_nats).abs();
    let relative = |r: f64, scale: f64| if scale > 0.0 { r / scale } else { r };
    let energy_residual_relative = relative(energy_residual, energy_scale);
    let entropy_residual_relative = relative(entropy_residual, ds_nats.abs());
    ConservationReport {
        energy_residual,
        energy_residual_relative,
        entropy_residual,
        entropy_residual_relative,
        tolerance: CONSERVATION_RTOL,
        passed: energy_residual_relative <= CONSERVATION_RTOL && entropy_residual_relative <= CONSERVATION_RTOL,
    }
}
