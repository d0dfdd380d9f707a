//! Quadratures over sampled horizon fields and the Rindler-Hamiltonian normalisation.
//!
//! Every integrand is a pre-contracted real scalar sampled on a uniform
//! tensor-product grid and integrated with the composite trapezoid rule.
//! Axis 0 is the normal (`x`) or affine (`v`) direction; the remaining axes
//! are transverse.

use std::f64::consts::{PI, TAU};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::qmatrix::{self, ComplexMatrix};
use crate::states::DensityMatrix;

/// Default decay threshold at a truncated `v` boundary, relative to the field maximum.
pub const DEFAULT_DECAY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Self {
        Self { origin, spacing, count }
    }

    /// `count` points spanning `[lo, hi]`.
    pub fn span(lo: f64, hi: f64, count: usize) -> Self {
        Self {
            origin: lo,
            spacing: (hi - lo) / (count.max(2) - 1) as f64,
            count,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// Upper truncation bound.
    pub fn end(&self) -> f64 {
        self.coord(self.count - 1)
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }
}

/// Real samples on a uniform grid, row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldDocument", into = "FieldDocument")]
pub struct SampledField {
    axes: Vec<Axis>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDocument {
    axes: Vec<Axis>,
    values: Vec<f64>,
}

impl TryFrom<FieldDocument> for SampledField {
    type Error = Error;
    fn try_from(doc: FieldDocument) -> Result<Self> {
        SampledField::new(doc.axes, doc.values)
    }
}

impl From<SampledField> for FieldDocument {
    fn from(f: SampledField) -> Self {
        FieldDocument {
            axes: f.axes,
            values: f.values,
        }
    }
}

impl SampledField {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::BadGrid("no axes".into()));
        }
        let mut total = 1usize;
        for (k, a) in axes.iter().enumerate() {
            if !(a.spacing > 0.0 && a.spacing.is_finite()) {
                return Err(Error::BadGrid(format!("axis {k}: spacing {} must be positive", a.spacing)));
            }
            if !a.origin.is_finite() || !a.end().is_finite() {
                return Err(Error::BadGrid(format!("axis {k}: bounds must be finite")));
            }
            if a.count < 2 {
                return Err(Error::BadGrid(format!("axis {k}: need at least 2 points, got {}", a.count)));
            }
            total = total
                .checked_mul(a.count)
                .ok_or_else(|| Error::BadGrid("grid size overflows".into()))?;
        }
        if values.len() != total {
            return Err(Error::BadGrid(format!(
                "{} values for a grid of {total} points",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadGrid(format!("value {i} is not finite")));
        }
        Ok(Self { axes, values })
    }

    /// Samples `f(coords)` on the grid.
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut coords = vec![0.0; axes.len()];
        let values = (0..total)
            .map(|flat| {
                Self::fill_coords(&axes, flat, &mut coords);
                f(&coords)
            })
            .collect();
        Self::new(axes, values)
    }

    pub fn constant(axes: Vec<Axis>, value: f64) -> Result<Self> {
        Self::from_fn(axes, |_| value)
    }

    fn fill_coords(axes: &[Axis], mut flat: usize, coords: &mut [f64]) {
        for k in (0..axes.len()).rev() {
            let i = flat % axes[k].count;
            flat /= axes[k].count;
            coords[k] = axes[k].coord(i);
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α·self + β·other` on an identical grid.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.axes != other.axes {
            return Err(Error::BadGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Self::new(self.axes.clone(), values)
    }

    /// Composite-trapezoid integral of `weight(coords) · value` over the whole grid.
    pub fn integrate_weighted(&self, weight: impl Fn(&[f64]) -> f64) -> f64 {
        let n = self.axes.len();
        let mut idx = vec![0usize; n];
        let mut coords: Vec<f64> = self.axes.iter().map(|a| a.origin).collect();
        let mut sum = 0.0;
        for &v in &self.values {
            let w: f64 = self
                .axes
                .iter()
                .zip(&idx)
                .map(|(a, &i)| a.trapezoid_weight(i))
                .product();
            sum += w * weight(&coords) * v;
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].count {
                    coords[k] = self.axes[k].coord(idx[k]);
                    break;
                }
                idx[k] = 0;
                coords[k] = self.axes[k].origin;
            }
        }
        sum
    }

    pub fn integrate(&self) -> f64 {
        self.integrate_weighted(|_| 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude on the last slice of axis 0.
    pub fn boundary_max_abs(&self) -> f64 {
        let stride = self.values.len() / self.axes[0].count;
        self.values[self.values.len() - stride..]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Long-format CSV: one column per axis (header names them) and a final
    /// `value` column, one row per grid point in any order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let ncols = headers.len();
        if ncols < 2 || headers.get(ncols - 1) != Some("value") {
            return Err(Error::BadGrid(
                "header must name the axes followed by a `value` column".into(),
            ));
        }
        let naxes = ncols - 1;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                let field = rec.get(k).unwrap_or("");
                field
                    .parse::<f64>()
                    .map_err(|_| Error::BadGrid(format!("row {}: `{field}` is not a number", line + 1)))
            };
            let coords = (0..naxes).map(parse).collect::<Result<Vec<_>>>()?;
            rows.push((coords, parse(naxes)?));
        }

        let mut axes = Vec::with_capacity(naxes);
        for k in 0..naxes {
            let mut xs: Vec<f64> = rows.iter().map(|r| r.0[k]).collect();
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadGrid(format!("axis `{}` has a non-finite coordinate", &headers[k])));
            }
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            if xs.len() < 2 {
                return Err(Error::BadGrid(format!("axis `{}` has fewer than 2 points", &headers[k])));
            }
            let axis = Axis::span(xs[0], xs[xs.len() - 1], xs.len());
            let tol = 1e-9 * axis.spacing;
            if xs.iter().enumerate().any(|(i, &x)| (x - axis.coord(i)).abs() > tol) {
                return Err(Error::BadGrid(format!("axis `{}` is not uniformly spaced", &headers[k])));
            }
            axes.push(axis);
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        if rows.len() != total {
            return Err(Error::BadGrid(format!("{} rows for a grid of {total} points", rows.len())));
        }
        let mut values = vec![f64::NAN; total];
        let mut seen = vec![false; total];
        for (coords, v) in rows {
            let mut flat = 0;
            for (a, &x) in axes.iter().zip(&coords) {
                let i = ((x - a.origin) / a.spacing).round() as usize;
                flat = flat * a.count + i.min(a.count - 1);
            }
            if seen[flat] {
                return Err(Error::BadGrid(format!("grid point {coords:?} appears twice")));
            }
            seen[flat] = true;
            values[flat] = v;
        }
        Self::new(axes, values)
    }

    /// Writes the long format read by [`SampledField::from_csv`].
    pub fn to_csv(&self, axis_names: &[&str]) -> Result<String> {
        if axis_names.len() != self.axes.len() {
            return Err(Error::BadGrid(format!(
                "{} names for {} axes",
                axis_names.len(),
                self.axes.len()
            )));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = axis_names.to_vec();
        header.push("value");
        w.write_record(&header)?;
        let mut coords = vec![0.0; self.axes.len()];
        for (flat, v) in self.values.iter().enumerate() {
            Self::fill_coords(&self.axes, flat, &mut coords);
            let mut rec: Vec<String> = coords.iter().map(|c| format!("{c:e}")).collect();
            rec.push(format!("{v:e}"));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Kinematic data of the horizon integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonKinematics {
    /// Killing orbit accelerator κ.
    pub kappa: f64,
    /// Affine parameter λ multiplying the flux integral.
    pub lambda_affine: f64,
    /// Spatial area element density γ.
    pub area_element_gamma: f64,
    /// Entropy per unit area C.
    pub proportionality_c: f64,
    pub newton_g: f64,
}

impl HorizonKinematics {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::NonPositiveKappa(self.kappa));
        }
        if !(self.area_element_gamma > 0.0 && self.area_element_gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "area element must be positive, got {}",
                self.area_element_gamma
            )));
        }
        if !self.lambda_affine.is_finite() || !self.proportionality_c.is_finite() {
            return Err(Error::InvalidInput("lambda and C must be finite".into()));
        }
        Ok(())
    }
}

/// Whether a truncated `v` range must show decay at its upper end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TruncationPolicy {
    /// The grid covers the whole support; no decay is required.
    Exact,
    /// `max |f(v_max, ·)| ≤ tolerance · max |f|`.
    RequireDecay { tolerance: f64 },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::RequireDecay {
            tolerance: DEFAULT_DECAY_TOL,
        }
    }
}

impl TruncationPolicy {
    fn check(&self, field: &SampledField) -> Result<()> {
        if let TruncationPolicy::RequireDecay { tolerance } = *self {
            let peak = field.max_abs();
            if peak == 0.0 {
                return Ok(());
            }
            let ratio = field.boundary_max_abs() / peak;
            if ratio > tolerance {
                return Err(Error::TruncationInvalid { ratio, tolerance });
            }
        }
        Ok(())
    }
}

/// `−2π ∫_{x>0} x T₀₀ dx d^{d−2}y`.
pub fn boost_integral(t00: &SampledField) -> Result<f64> {
    let x = t00.axes()[0];
    if x.origin < 0.0 {
        return Err(Error::BadGrid(format!(
            "boost integral needs x ≥ 0, grid starts at {}",
            x.origin
        )));
    }
    Ok(-TAU * t00.integrate_weighted(|c| c[0]))
}

/// `c = ln tr e^{−H}`, so that `e^{−(H + c)}` has unit trace.
pub fn unit_trace_constant(h: &ComplexMatrix) -> Result<f64> {
    let eigs = qmatrix::hermitian_eigenvalues(h)?;
    let lo = eigs.last().copied().unwrap_or(0.0);
    Ok(-lo + eigs.iter().map(|l| (lo - l).exp()).sum::<f64>().ln())
}

/// `e^{−(H + c)}` together with `c`.
pub fn normalized_state(h: &ComplexMatrix) -> Result<(DensityMatrix, f64)> {
    let c = unit_trace_constant(h)?;
    let rho = qmatrix::matrix_function(h, |l| (-(l + c)).exp())?.symmetrized();
    Ok((DensityMatrix::unipartite(rho)?, c))
}

/// `ΔE = −κ λ γ ∫∫ integrand dλ d²y`.
pub fn horizon_energy_flux(integrand: &SampledField, kin: &HorizonKinematics) -> Result<f64> {
    kin.validate()?;
    Ok(-kin.kappa * kin.lambda_affine * kin.area_element_gamma * integrand.integrate())
}

/// `ΔD = −λ ∫ integrand`, the flux kernel without κ.
pub fn ricci_area_change(integrand: &SampledField, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be finite, got {lambda}")));
    }
    Ok(-lambda * integrand.integrate())
}

/// `ΔS = C ΔD`.
pub fn entropy_from_area_change(delta_d: f64, c: f64) -> f64 {
    c * delta_d
}

fn check_newton(g: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::NonPositiveG(g));
    }
    Ok(())
}

fn v_moment(integrand: &SampledField, policy: TruncationPolicy) -> Result<f64> {
    if integrand.axes()[0].origin < 0.0 {
        return Err(Error::BadGrid("affine axis must start at v ≥ 0".into()));
    }
    policy.check(integrand)?;
    Ok(integrand.integrate_weighted(|c| c[0]))
}

/// `L' = L₀ + √(8πG) ∫ v · integrand dv d²y`.
pub fn perturbed_horizon_area(
    l0: f64,
    integrand: &SampledField,
    newton_g: f64,
    policy: TruncationPolicy,
) -> Result<f64> {
    check_newton(newton_g)?;
    Ok(l0 + (8.0 * PI * newton_g).sqrt() * v_moment(integrand, policy)?)
}

/// `ΔD = 8πG ∫ v · integrand dv d²y`.
pub fn flat_flux_area_change(integrand: &SampledField, newton_g: f64, policy: TruncationPolicy) -> Result<f64> {
    check_newton(newton_g)?;
    Ok(8.0 * PI * newton_g * v_moment(integrand, policy)?)
}

/// `T₀ = ħκ / (2π k_B c)`.
pub fn unruh_kappa_temperature(kappa: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::NonPositiveKappa(kappa));
    }
    Ok(constants.unruh_temperature(kappa))
}

/// Observed convergence order from errors at successive halvings of the spacing.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize, dims: usize) -> Vec<Axis> {
        vec![Axis::span(0.0, 1.0, n); dims]
    }

    fn g_unit() -> f64 {
        1.0 / (8.0 * PI)
    }

    #[test]
    fn grid_validation() {
        assert!(SampledField::new(vec![], vec![]).is_err());
        assert!(SampledField::new(vec![Axis::new(0.0, 0.0, 3)], vec![0.0; 3]).is_err());
        assert!(SampledField::new(vec![Axis::new(0.0, 1.0, 1)], vec![0.0]).is_err());
        assert!(SampledField::new(vec![Axis::new(0.0, 1.0, 3)], vec![0.0; 2]).is_err());
        assert!(SampledField::new(vec![Axis::new(0.0, 1.0, 2)], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn boost_integral_closed_forms() {
        let zero = SampledField::constant(unit_grid(5, 3), 0.0).unwrap();
        assert_eq!(boost_integral(&zero).unwrap(), 0.0);
        let t = 1.7;
        let c = SampledField::constant(unit_grid(4, 3), t).unwrap();
        assert!((boost_integral(&c).unwrap() + PI * t).abs() < 1e-12);
        let neg = SampledField::constant(vec![Axis::span(-1.0, 1.0, 3)], 1.0).unwrap();
        assert!(matches!(boost_integral(&neg), Err(Error::BadGrid(_))));
    }

    #[test]
    fn unit_trace_constant_examples() {
        let c = unit_trace_constant(&ComplexMatrix::zeros(5, 5)).unwrap();
        assert!((c - 5f64.ln()).abs() < 1e-15);
        let p = [0.5f64, 0.3, 0.2];
        let h = ComplexMatrix::from_real_diagonal(&p.map(|x| -x.ln()));
        assert!(unit_trace_constant(&h).unwrap().abs() < 1e-15);
        let (rho, _) = normalized_state(&ComplexMatrix::from_real_diagonal(&[3.0, -40.0, 700.0])).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flux_and_ricci_share_a_kernel() {
        let f = SampledField::from_fn(unit_grid(9, 3), |c| (c[0] + 0.3 * c[1]).sin() - c[2]).unwrap();
        let kin = HorizonKinematics {
            kappa: 2.5,
            lambda_affine: 0.7,
            area_element_gamma: 1.0,
            proportionality_c: 1.0,
            newton_g: 1.0,
        };
        let flux = horizon_energy_flux(&f, &kin).unwrap();
        let ricci = ricci_area_change(&f, kin.lambda_affine).unwrap();
        assert!((ricci - flux / kin.kappa).abs() < 1e-12);

        let s0 = 0.8;
        let c = SampledField::constant(unit_grid(3, 2), s0).unwrap();
        let unit = HorizonKinematics {
            kappa: 1.0,
            lambda_affine: 1.0,
            ..kin
        };
        assert!((horizon_energy_flux(&c, &unit).unwrap() + s0).abs() < 1e-12);
        let neg = SampledField::constant(unit_grid(3, 2), -1.0).unwrap();
        assert!(ricci_area_change(&neg, 0.5).unwrap() > 0.0);
        let bad = HorizonKinematics { kappa: 0.0, ..kin };
        assert!(matches!(horizon_energy_flux(&c, &bad), Err(Error::NonPositiveKappa(_))));
    }

    #[test]
    fn v_weighted_closed_forms() {
        let axes = unit_grid(3, 3);
        let s0 = 0.6;
        let c = SampledField::constant(axes.clone(), s0).unwrap();
        let l = perturbed_horizon_area(2.0, &c, g_unit(), TruncationPolicy::Exact).unwrap();
        assert!((l - (2.0 + s0 / 2.0)).abs() < 1e-12);
        let d = flat_flux_area_change(&c, g_unit(), TruncationPolicy::Exact).unwrap();
        assert!((d - s0 / 2.0).abs() < 1e-12);
        let zero = SampledField::constant(axes, 0.0).unwrap();
        assert_eq!(perturbed_horizon_area(2.0, &zero, g_unit(), TruncationPolicy::default()).unwrap(), 2.0);
        assert!(matches!(
            flat_flux_area_change(&c, g_unit(), TruncationPolicy::default()),
            Err(Error::TruncationInvalid { .. })
        ));
        assert!(matches!(flat_flux_area_change(&c, 0.0, TruncationPolicy::Exact), Err(Error::NonPositiveG(_))));
    }

    #[test]
    fn decayed_gaussian_passes_truncation() {
        let axes = vec![Axis::span(0.0, 8.0, 65), Axis::span(0.0, 1.0, 3), Axis::span(0.0, 1.0, 3)];
        let f = SampledField::from_fn(axes, |c| (-c[0] * c[0] / 2.0).exp()).unwrap();
        let d = flat_flux_area_change(&f, g_unit(), TruncationPolicy::default()).unwrap();
        // ∫₀^∞ v e^{-v²/2} dv = 1.
        assert!((d - 1.0).abs() < 1e-2);
    }

    #[test]
    fn csv_round_trip() {
        let axes = vec![Axis::span(0.0, 2.0, 3), Axis::span(-1.0, 1.0, 5)];
        let f = SampledField::from_fn(axes, |c| c[0] * c[1] + 0.25).unwrap();
        let text = f.to_csv(&["v", "y"]).unwrap();
        let back = SampledField::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back.values(), f.values());
        for (a, b) in back.axes().iter().zip(f.axes()) {
            assert_eq!(a.count, b.count);
            assert!((a.spacing - b.spacing).abs() < 1e-15);
        }
        // Row order does not matter.
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let shuffled = SampledField::from_csv(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(shuffled.values(), f.values());
    }

    #[test]
    fn csv_rejects_malformed_grids() {
        assert!(SampledField::from_csv("x,y\n0,1\n1,2\n".as_bytes()).is_err());
        assert!(SampledField::from_csv("x,value\n0,1\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(SampledField::from_csv("x,value\n0,1\n1,2\n1,2\n".as_bytes()).is_err());
        assert!(SampledField::from_csv("x,value\n0,1\nfoo,2\n".as_bytes()).is_err());
    }

    #[test]
    fn unruh_kappa_matches_acceleration_formula() {
        let c = PhysicalConstants::default();
        assert_eq!(unruh_kappa_temperature(9.81, &c).unwrap(), c.unruh_temperature(9.81));
        let kappa = TAU * c.k_b * c.c / c.hbar;
        assert!((unruh_kappa_temperature(kappa, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(unruh_kappa_temperature(-1.0, &c), Err(Error::NonPositiveKappa(_))));
    }
}
