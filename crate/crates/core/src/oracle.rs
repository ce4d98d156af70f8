//! Fourier-inversion oracle for truncated moments of `σW_h + S_h + drift·h`,
//! where `S` is strictly `Y`-stable, and checks of the small-`h` expansions
//! of those moments.
//!
//! The characteristic function is
//! `exp(h (c1 |u|^Y + i c2 sgn(u) |u|^Y) - σ² u² h / 2 + i u drift h)`.

use crate::error::{domain, Error, Result};
use crate::levy::StableParams;
use crate::numeric::{double_factorial_odd, GL8_W, GL8_X};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

/// Smallest accepted FFT size.
pub const MIN_POINTS: usize = 1 << 12;
/// Largest FFT size chosen by the automatic grid.
pub const MAX_AUTO_POINTS: usize = 1 << 22;
/// Grid spacing in units of the standard scale.
const POINTS_PER_SCALE: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharExponentSpec {
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    pub y: f64,
    pub drift: f64,
}

impl CharExponentSpec {
    pub fn gaussian(sigma: f64, drift: f64) -> Self {
        Self { c1: 0.0, c2: 0.0, sigma, y: 1.5, drift }
    }

    /// Exponent of the stable law `S(alpha, beta, scale, location)`.
    pub fn from_stable(p: &StableParams, sigma: f64) -> Result<Self> {
        p.validate()?;
        if (p.alpha - 1.0).abs() < 1e-12 {
            return Err(domain("stable index 1 has no power-law exponent form"));
        }
        let sa = p.scale.powf(p.alpha);
        Ok(Self { c1: -sa, c2: sa * p.beta * (FRAC_PI_2 * p.alpha).tan(), sigma, y: p.alpha, drift: p.location })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c1, self.c2, self.sigma, self.y, self.drift].iter().all(|v| v.is_finite());
        if !finite {
            return Err(domain("characteristic exponent parameters must be finite"));
        }
        if self.c1 > 0.0 {
            return Err(domain(format!("c1 must be non-positive, got {}", self.c1)));
        }
        if self.sigma < 0.0 {
            return Err(domain(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(self.y > 0.0 && self.y <= 2.0) {
            return Err(domain(format!("Y must lie in (0, 2], got {}", self.y)));
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        self.c1 != 0.0 || self.c2 != 0.0
    }

    /// Characteristic function of the time-`h` marginal at `u`.
    pub fn char_fn(&self, u: f64, h: f64) -> Complex64 {
        let au = u.abs();
        let (re_j, im_j) = if self.has_jumps() && au > 0.0 {
            let p = au.powf(self.y);
            (self.c1 * p, self.c2 * u.signum() * p)
        } else {
            (0.0, 0.0)
        };
        let re = h * re_j - 0.5 * self.sigma * self.sigma * u * u * h;
        let im = h * im_j + u * self.drift * h;
        Complex64::from_polar(re.exp(), im)
    }

    /// Natural length scale of the time-`h` marginal.
    pub fn scale(&self, h: f64) -> f64 {
        let gauss = self.sigma * h.sqrt();
        let stable = if self.c1 < 0.0 { (-self.c1 * h).powf(1.0 / self.y) } else { 0.0 };
        gauss.max(stable)
    }
}

/// Gaussian-plus-stable model described by its Lévy intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    pub c_plus: f64,
    pub c_minus: f64,
    pub y: f64,
    pub sigma: f64,
}

impl OracleModel {
    pub fn cbar(&self) -> f64 {
        self.c_plus + self.c_minus
    }

    pub fn is_jump_free(&self) -> bool {
        self.cbar() == 0.0
    }

    /// `c1 = C̄ cos(πY/2) Γ(-Y)`, `c2 = (C- - C+) sin(πY/2) Γ(-Y)`.
    pub fn char_spec(&self) -> Result<CharExponentSpec> {
        if self.c_plus < 0.0 || self.c_minus < 0.0 || self.sigma < 0.0 {
            return Err(domain("intensities and sigma must be non-negative"));
        }
        if self.is_jump_free() {
            return Ok(CharExponentSpec::gaussian(self.sigma, 0.0));
        }
        if !(self.y > 0.0 && self.y < 2.0) || (self.y - 1.0).abs() < 1e-12 {
            return Err(domain(format!("Y must lie in (0, 1) or (1, 2), got {}", self.y)));
        }
        let g = gamma(-self.y);
        let spec = CharExponentSpec {
            c1: self.cbar() * (FRAC_PI_2 * self.y).cos() * g,
            c2: (self.c_minus - self.c_plus) * (FRAC_PI_2 * self.y).sin() * g,
            sigma: self.sigma,
            y: self.y,
            drift: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Density tabulated on `x_j = -L + j dx`, `j = 0..N`.
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub half_width: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    /// `sum_j p_j dx`.
    pub mass: f64,
    pub min_value: f64,
}

impl DensityTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx
    }

    /// Cubic (four-point Lagrange) interpolation of the density.
    pub fn density_at(&self, x: f64) -> f64 {
        let t = (x + self.half_width) / self.dx;
        let n = self.values.len();
        if !(t >= 1.0 && t <= (n - 3) as f64) {
            return if t >= 0.0 && t <= (n - 1) as f64 { self.linear(t) } else { 0.0 };
        }
        let i = t.floor() as usize;
        let s = t - i as f64;
        let (p0, p1, p2, p3) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }

    fn linear(&self, t: f64) -> f64 {
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let s = t - i as f64;
        (1.0 - s) * self.values[i] + s * self.values[i + 1]
    }

    /// Cumulative distribution by trapezoid accumulation, linearly
    /// interpolated between nodes.
    pub fn cdf_table(&self) -> CdfTable {
        let mut cum = Vec::with_capacity(self.values.len());
        let mut acc = crate::numeric::CompensatedSum::new();
        cum.push(0.0);
        for w in self.values.windows(2) {
            acc.add(0.5 * (w[0] + w[1]) * self.dx);
            cum.push(acc.value());
        }
        let total = *cum.last().expect("non-empty");
        for c in cum.iter_mut() {
            *c /= total;
        }
        CdfTable { x0: -self.half_width, dx: self.dx, cum }
    }
}

#[derive(Debug, Clone)]
pub struct CdfTable {
    x0: f64,
    dx: f64,
    cum: Vec<f64>,
}

impl CdfTable {
    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.cum.len() - 1;
        if t >= last as f64 {
            return 1.0;
        }
        let i = t.floor() as usize;
        let s = t - i as f64;
        (1.0 - s) * self.cum[i] + s * self.cum[i + 1]
    }
}

/// Density of the time-`h` marginal on a uniform grid of `grid_points`
/// nodes over `[-grid_half_width, grid_half_width)`.
pub fn density_fft(spec: &CharExponentSpec, h: f64, grid_half_width: f64, grid_points: usize) -> Result<DensityTable> {
    spec.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("time step must be positive, got {h}")));
    }
    if grid_points < MIN_POINTS || !grid_points.is_power_of_two() {
        return Err(Error::Resolution(format!(
            "grid_points must be a power of two >= {MIN_POINTS}, got {grid_points}"
        )));
    }
    let scale = spec.scale(h);
    if !(scale > 0.0) {
        return Err(domain("degenerate law: sigma and c1 are both zero"));
    }
    if !(grid_half_width >= 12.0 * scale) {
        return Err(Error::Resolution(format!(
            "half width {grid_half_width:e} covers fewer than 12 scales (scale {scale:e})"
        )));
    }
    let n = grid_points;
    let dx = 2.0 * grid_half_width / n as f64;
    let du = PI / grid_half_width;
    let half = (n / 2) as f64;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let u = (k as f64 - half) * du;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            spec.char_fn(u, h) * sign
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = du / (2.0 * PI);
    let values: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            norm * sign * z.re
        })
        .collect();
    let mass = crate::numeric::compensated_sum(values.iter().map(|p| p * dx));
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DensityTable { half_width: grid_half_width, dx, values, mass, min_value })
}

/// Grid used by [`truncated_moment_numeric`] for the given inputs.
pub fn auto_grid(spec: &CharExponentSpec, eps: f64, h: f64) -> Result<(f64, usize)> {
    let s = spec.scale(h);
    if !(s > 0.0) {
        return Err(domain("degenerate law: sigma and c1 are both zero"));
    }
    // Resolve both the law and the truncation window.
    let dx = (s / POINTS_PER_SCALE).min(eps / 512.0);
    let reach = if spec.has_jumps() { 256.0 * eps } else { 2.0 * eps };
    let half = (40.0 * s).max(reach);
    let n = ((2.0 * half / dx).ceil() as usize).next_power_of_two().max(MIN_POINTS);
    if n > MAX_AUTO_POINTS {
        return Err(Error::Resolution(format!(
            "eps/scale = {:.3e} needs {n} grid points (limit {MAX_AUTO_POINTS})",
            eps / s
        )));
    }
    Ok((0.5 * n as f64 * dx, n))
}

/// `∫_{-eps}^{eps} x^{2k} p(x) dx` on a given density table.
pub fn truncated_moment_on_table(table: &DensityTable, k: u32, eps: f64) -> Result<f64> {
    let dx = table.dx;
    let c = table.len() / 2;
    let m = (eps / dx).floor() as usize;
    if m == 0 {
        return Err(Error::Resolution(format!("eps {eps:e} is below the grid spacing {dx:e}")));
    }
    if m + 3 >= c {
        return Err(Error::Resolution(format!("eps {eps:e} reaches the grid edge {:e}", table.half_width)));
    }
    let p = 2 * k as i32;
    let g = |j: usize| table.x(j).powi(p) * table.values[j];
    // Simpson over [-m dx, m dx]: 2m intervals.
    let mut acc = crate::numeric::CompensatedSum::new();
    acc.add(g(c - m) + g(c + m));
    for (i, j) in (c - m + 1..c + m).enumerate() {
        acc.add(if i % 2 == 0 { 4.0 } else { 2.0 } * g(j));
    }
    let mut total = acc.value() * dx / 3.0;
    // Boundary pieces on [m dx, eps] and its mirror, by Gauss-Legendre on
    // eight sub-intervals of the interpolated density.
    let a = m as f64 * dx;
    let w = eps - a;
    if w > 0.0 {
        let sub = w / 8.0;
        let mut edge = crate::numeric::CompensatedSum::new();
        for piece in 0..8 {
            let lo = a + piece as f64 * sub;
            for (xi, wi) in GL8_X.iter().zip(GL8_W) {
                let x = lo + 0.5 * sub * (xi + 1.0);
                let xp = x.powi(p);
                edge.add(0.5 * sub * wi * xp * (table.density_at(x) + table.density_at(-x)));
            }
        }
        total += edge.value();
    }
    Ok(total)
}

/// `E[X_h^{2k} 1{|X_h| <= eps}]` by Fourier inversion and quadrature.
pub fn truncated_moment_numeric(spec: &CharExponentSpec, k: u32, eps: f64, h: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("moment order k must be at least 1"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    spec.validate()?;
    let (half, n) = auto_grid(spec, eps, h)?;
    let table = density_fft(spec, h, half, n)?;
    truncated_moment_on_table(&table, k, eps)
}

/// Same moment computed on the automatic grid and on one with twice the
/// points at the same spacing ratio (`dx` halved, same width). Returns
/// `(value, relative change)`.
pub fn truncated_moment_certified(spec: &CharExponentSpec, k: u32, eps: f64, h: f64) -> Result<(f64, f64)> {
    let coarse = truncated_moment_numeric(spec, k, eps, h)?;
    let (half, n) = auto_grid(spec, eps, h)?;
    let fine_table = density_fft(spec, h, half, 2 * n)?;
    let fine = truncated_moment_on_table(&fine_table, k, eps)?;
    Ok((fine, ((fine - coarse) / fine).abs()))
}

/// Closed-form Gaussian truncated second moment
/// `σ²h [(1 - 2Φ̄(a)) - 2a φ(a)]`, `a = eps/(σ√h)`.
pub fn gaussian_truncated_second_moment(sigma: f64, eps: f64, h: f64) -> f64 {
    use crate::numeric::{norm_pdf, norm_sf};
    let a = eps / (sigma * h.sqrt());
    sigma * sigma * h * ((1.0 - 2.0 * norm_sf(a)) - 2.0 * a * norm_pdf(a))
}

/// Leading terms of the truncated `2k`-th moment as `h → 0`.
pub fn expansion_predicted(model: &OracleModel, k: u32, eps: f64, h: f64) -> Result<f64> {
    expansion_predicted_scaled(model, k, eps, h, 1.0)
}

/// [`expansion_predicted`] with the jump coefficient multiplied by
/// `coef_scale`, used as a negative control.
pub fn expansion_predicted_scaled(model: &OracleModel, k: u32, eps: f64, h: f64, coef_scale: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("moment order k must be at least 1"));
    }
    let y = model.y;
    if !(y > 1.0 && y < 2.0) {
        return Err(domain(format!("expansion requires Y in (1, 2), got {y}")));
    }
    let cbar = model.cbar() * coef_scale;
    let s2 = model.sigma * model.sigma;
    if k == 1 {
        let a = cbar / (2.0 - y) * eps.powf(2.0 - y) - cbar * (y + 1.0) * (y + 2.0) / (2.0 * y) * s2 * h * eps.powf(-y);
        Ok(s2 * h + a * h)
    } else {
        let kf = k as f64;
        Ok(double_factorial_odd(k) * s2.powi(k as i32) * h.powi(k as i32)
            + cbar / (2.0 * kf - y) * h * eps.powf(2.0 * kf - y))
    }
}

/// Dominant remainder order of the expansion for `ε = h^ω`.
pub fn theoretical_order(k: u32, y: f64, omega: f64) -> f64 {
    let kf = k as f64;
    if k == 1 {
        (3.0 - (y + 2.0) * omega).min(2.0 + (2.0 - 2.0 * y) * omega)
    } else {
        (2.0 + (2.0 * kf - y - 2.0) * omega).min(1.0 + (2.0 * kf - y / 2.0) * omega)
    }
}

/// Order in `h` of the retained jump term for `ε = h^ω`.
pub fn jump_term_order(k: u32, y: f64, omega: f64) -> f64 {
    1.0 + (2.0 * k as f64 - y) * omega
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Residuals decay like a power of `h`.
    Algebraic,
    /// Jump-free: residuals are Gaussian tail terms, exponentially small.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub k: u32,
    pub model: OracleModel,
    pub omega: f64,
    pub h_values: Vec<f64>,
    pub eps_rule: String,
    pub eps_values: Vec<f64>,
    pub numeric: Vec<f64>,
    pub predicted: Vec<f64>,
    pub residual: Vec<f64>,
    pub fitted_order: f64,
    pub theoretical_order: f64,
    pub jump_term_order: f64,
    pub regime: Regime,
    /// Largest relative change of any numeric moment under grid doubling.
    pub grid_certificate: f64,
}

impl ExpansionReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Columns `h,eps,numeric,predicted,residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "eps", "numeric", "predicted", "residual"])?;
        for i in 0..self.h_values.len() {
            w.write_record([
                format!("{:?}", self.h_values[i]),
                format!("{:?}", self.eps_values[i]),
                format!("{:?}", self.numeric[i]),
                format!("{:?}", self.predicted[i]),
                format!("{:?}", self.residual[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Residuals of the expansion along `h_sequence` with `ε = h^ω`, and the
/// fitted log-log order of their decay.
pub fn residual_order_check(model: &OracleModel, k: u32, h_sequence: &[f64], omega: f64) -> Result<ExpansionReport> {
    residual_order_check_scaled(model, k, h_sequence, omega, 1.0)
}

pub fn residual_order_check_scaled(
    model: &OracleModel,
    k: u32,
    h_sequence: &[f64],
    omega: f64,
    coef_scale: f64,
) -> Result<ExpansionReport> {
    if h_sequence.len() < 4 {
        return Err(Error::Input(format!("need at least 4 step sizes, got {}", h_sequence.len())));
    }
    if h_sequence.windows(2).any(|w| !(w[1] < w[0])) || h_sequence.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Input("step sizes must be positive and strictly decreasing".into()));
    }
    let spec = model.char_spec()?;
    let mut report = ExpansionReport {
        k,
        model: *model,
        omega,
        h_values: h_sequence.to_vec(),
        eps_rule: format!("eps = h^{omega}"),
        eps_values: Vec::new(),
        numeric: Vec::new(),
        predicted: Vec::new(),
        residual: Vec::new(),
        fitted_order: f64::NAN,
        theoretical_order: theoretical_order(k, model.y, omega),
        jump_term_order: jump_term_order(k, model.y, omega),
        regime: if model.is_jump_free() { Regime::Exponential } else { Regime::Algebraic },
        grid_certificate: 0.0,
    };
    for &h in h_sequence {
        let eps = h.powf(omega);
        let (num, change) = truncated_moment_certified(&spec, k, eps, h)?;
        let pred = expansion_predicted_scaled(model, k, eps, h, coef_scale)?;
        report.eps_values.push(eps);
        report.numeric.push(num);
        report.predicted.push(pred);
        report.residual.push(num - pred);
        report.grid_certificate = report.grid_certificate.max(change);
    }
    let xs: Vec<f64> = h_sequence.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = report.residual.iter().map(|r| r.abs().max(f64::MIN_POSITIVE).ln()).collect();
    report.fitted_order = ls_slope(&xs, &ys);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        let s = CharExponentSpec::gaussian(0.2, 0.0);
        assert!(matches!(density_fft(&s, 1.0, 10.0, 4000), Err(Error::Resolution(_))));
        assert!(matches!(density_fft(&s, 1.0, 10.0, 2048), Err(Error::Resolution(_))));
        assert!(matches!(density_fft(&s, 1.0, 1.0, 4096), Err(Error::Resolution(_))));
    }

    #[test]
    fn char_spec_from_intensities() {
        let m = OracleModel { c_plus: 0.5, c_minus: 0.5, y: 1.5, sigma: 0.3 };
        let s = m.char_spec().unwrap();
        let g = 4.0 * PI.sqrt() / 3.0;
        assert!((s.c1 - (0.75 * PI).cos() * g).abs() < 1e-12);
        assert_eq!(s.c2, 0.0);
        assert!(s.c1 < 0.0);
    }

    #[test]
    fn stable_exponent_matches_intensity_exponent() {
        let spec = crate::levy::LevyJumpSpec::new(0.7, 0.3, 0.0, 0.0, 1.35).unwrap();
        let via_stable = CharExponentSpec::from_stable(&spec.stable_params().unwrap(), 0.0).unwrap();
        let via_c = OracleModel { c_plus: 0.7, c_minus: 0.3, y: 1.35, sigma: 0.0 }.char_spec().unwrap();
        assert!((via_stable.c1 - via_c.c1).abs() < 1e-12);
        assert!((via_stable.c2 - via_c.c2).abs() < 1e-12);
    }

    #[test]
    fn jump_free_reduction() {
        let m = OracleModel { c_plus: 0.0, c_minus: 0.0, y: 1.5, sigma: 0.2 };
        let h = 1e-4;
        assert!((expansion_predicted(&m, 1, 0.01, h).unwrap() - 0.04 * h).abs() < 1e-20);
        assert!((expansion_predicted(&m, 2, 0.01, h).unwrap() - 3.0 * 0.0016 * h * h).abs() < 1e-24);
        assert!(expansion_predicted(&OracleModel { y: 2.0, ..m }, 1, 0.01, h).is_err());
    }

    #[test]
    fn theoretical_orders() {
        let w = 5.0 / 12.0;
        assert!((theoretical_order(1, 1.5, w) - 1.541_666_666_666_666_7).abs() < 1e-12);
        assert!((jump_term_order(2, 1.5, w) - (1.0 + 2.5 * w)).abs() < 1e-15);
    }

    #[test]
    fn slope_of_exact_power() {
        let xs: Vec<f64> = (1..6).map(|i| (i as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.7 * x + 0.3).collect();
        assert!((ls_slope(&xs, &ys) - 1.7).abs() < 1e-12);
    }
}
