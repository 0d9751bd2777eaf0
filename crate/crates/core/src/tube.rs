//! Thin tubes around an embedded band and the extrinsic Laplacian.
//!
//! The tube `S_ε = {p + τN(p) : |τ| < ε}` over a band of the surface of
//! revolution has volume density `h = (1 − τκ₁)(1 − τκ₂) = 1 − 2Hτ + Kτ²`
//! relative to `dA dτ`. For `φ = cos(πτ/2ε) ψ(x) e^{iky} h^{−1/2}` the
//! Dirichlet Rayleigh quotient behaves like
//! `−(π/2ε)² + ⟨ψ, Δ_ex ψ⟩/⟨ψ, ψ⟩ + O(ε)` with `Δ_ex = Δ − K + H²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::RevolutionProfile;
use crate::error::{GrushinError, Result};
use crate::geometry::GrushinModel;
use crate::quadrature::GaussRule;

pub const DEFAULT_NODES: usize = 64;
const DENSITY_STEP: f64 = 1e-5;
const THICKNESS_SAMPLES: usize = 400;

#[derive(Debug, Clone)]
pub struct TubeBand {
    profile: RevolutionProfile,
    x_band: (f64, f64),
    epsilon: f64,
    k: i64,
}

impl TubeBand {
    /// Validates that the band is compact inside the embedding and that the
    /// tube of half-thickness `epsilon` does not fold over itself.
    pub fn new(model: GrushinModel, x_band: (f64, f64), epsilon: f64, k: i64) -> Result<Self> {
        let profile = RevolutionProfile::new(model);
        let (a, b) = x_band;
        let v = profile.validity();
        if !(a < b) || !v.contains_interior(a) || !v.contains_interior(b) {
            return Err(GrushinError::domain(format!(
                "band [{a}, {b}] must be a compact interval strictly inside {v}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GrushinError::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let band = TubeBand {
            profile,
            x_band,
            epsilon,
            k,
        };
        band.check_thickness()?;
        Ok(band)
    }

    fn check_thickness(&self) -> Result<()> {
        let (a, b) = self.x_band;
        for i in 0..=THICKNESS_SAMPLES {
            let x = a + (b - a) * i as f64 / THICKNESS_SAMPLES as f64;
            let (k1, k2) = self.principal_curvatures(x)?;
            let worst = (1.0 - self.epsilon * k1.abs()).min(1.0 - self.epsilon * k2.abs());
            if worst <= 0.0 {
                return Err(GrushinError::domain(format!(
                    "tube of half-thickness {} self-intersects near x = {x}",
                    self.epsilon
                )));
            }
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        TubeBand::new(self.profile.model(), self.x_band, epsilon, self.k)
    }

    pub fn model(&self) -> GrushinModel {
        self.profile.model()
    }

    pub fn x_band(&self) -> (f64, f64) {
        self.x_band
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    fn principal_curvatures(&self, x: f64) -> Result<(f64, f64)> {
        let j = self.profile.jet(x)?;
        Ok((j.meridian_curvature(), j.parallel_curvature()))
    }

    fn in_band(&self, x: f64, tau: f64) -> Result<()> {
        let (a, b) = self.x_band;
        if x < a || x > b || tau.abs() > self.epsilon {
            return Err(GrushinError::domain(format!(
                "(x, tau) = ({x}, {tau}) lies outside [{a}, {b}] x [-{e}, {e}]",
                e = self.epsilon
            )));
        }
        Ok(())
    }

    /// Volume density of the tube at `(x, τ)`: the closed form
    /// `1 − 2Hτ + Kτ²` and the ratio `√det g_τ / √det g₀` of the offset
    /// surface metric, whose `x` derivatives are taken by central
    /// differences of the offset profile.
    pub fn density(&self, x: f64, tau: f64) -> Result<(f64, f64)> {
        self.in_band(x, tau)?;
        let m = self.model();
        let exact = 1.0 - 2.0 * m.mean_curvature(x)? * tau + m.gaussian_curvature(x)? * tau * tau;
        if exact <= 0.0 {
            return Err(GrushinError::domain(format!(
                "tube self-intersects at (x, tau) = ({x}, {tau})"
            )));
        }
        let p = &self.profile;
        let h = DENSITY_STEP * x;
        let (lo, hi) = (x - h, x + h);
        let jl = p.jet(lo)?;
        let jh = p.jet(hi)?;
        let j = p.jet(x)?;
        let dz = p.height_increment(lo, hi)?;
        let d_rho = jh.radius - jl.radius;
        // offset profile: (ρ − τz′, z + τρ′)
        let d_r_tau = d_rho - tau * (jh.axial_d1 - jl.axial_d1);
        let d_z_tau = dz + tau * (jh.radius_d1 - jl.radius_d1);
        let e0 = (d_rho * d_rho + dz * dz) / (4.0 * h * h);
        let e_tau = (d_r_tau * d_r_tau + d_z_tau * d_z_tau) / (4.0 * h * h);
        let r0 = j.radius;
        let r_tau = j.radius - tau * j.axial_d1;
        let numerical = (e_tau.sqrt() * r_tau.abs()) / (e0.sqrt() * r0);
        Ok((exact, numerical))
    }
}

/// `A · (1 − u²)³` with `u = (x − center)/half_width`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(GrushinError::invalid("test-function width must be positive"));
        }
        Ok(TestFunction {
            center,
            half_width,
            amplitude: 1.0,
        })
    }

    /// The bump filling the whole band.
    pub fn spanning(band: &TubeBand) -> Self {
        let (a, b) = band.x_band;
        TestFunction {
            center: 0.5 * (a + b),
            half_width: 0.5 * (b - a),
            amplitude: 1.0,
        }
    }

    pub fn scaled(self, amplitude: f64) -> Self {
        TestFunction { amplitude, ..self }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// `(ψ, ψ′)`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let g = 1.0 - u * u;
        (
            self.amplitude * g * g * g,
            -6.0 * self.amplitude * u * g * g / self.half_width,
        )
    }

    fn check_inside(&self, band: &TubeBand) -> Result<()> {
        let (a, b) = self.support();
        let (lo, hi) = band.x_band;
        if a < lo - 1e-12 || b > hi + 1e-12 {
            return Err(GrushinError::domain(format!(
                "test function support [{a}, {b}] leaves the band [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// `Q_ε = −(∫ |∂_τφ|² + |∇_{S(τ)}φ|²) / ∫ |φ|²` over the tube with
/// `φ = cos(πτ/2ε) ψ(x) e^{iky} h^{−1/2}`, using an `nodes × nodes`
/// Gauss–Legendre rule in `(x, τ)`.
pub fn tube_rayleigh_quotient(band: &TubeBand, psi: &TestFunction, nodes: usize) -> Result<f64> {
    psi.check_inside(band)?;
    let (a, b) = psi.support();
    let eps = band.epsilon;
    let alpha = band.model().metric_exponent();
    let k2 = (band.k as f64).powi(2);
    let xr = GaussRule::new(nodes, a, b);
    let tr = GaussRule::new(nodes, -eps, eps);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &wx) in xr.nodes.iter().zip(&xr.weights) {
        let j = band.profile.jet(x)?;
        let (k1, k2c) = (j.meridian_curvature(), j.parallel_curvature());
        let (k1p, k2p) = (j.meridian_curvature_d1(), j.parallel_curvature_d1());
        let (p, dp) = psi.eval(x);
        let da = x.powf(-alpha);
        let gyy = band.model().inverse_metric_yy(x);
        for (&tau, &wt) in tr.nodes.iter().zip(&tr.weights) {
            let f1 = 1.0 - tau * k1;
            let f2 = 1.0 - tau * k2c;
            let h = f1 * f2;
            if h <= 0.0 {
                return Err(GrushinError::domain(format!(
                    "tube self-intersects at (x, tau) = ({x}, {tau})"
                )));
            }
            let hx = -tau * (k1p * f2 + k2p * f1);
            let ht = -(k1 * f2 + k2c * f1);
            let arg = PI * tau / (2.0 * eps);
            let c = arg.cos();
            let s = -PI / (2.0 * eps) * arg.sin();
            let ih = h.powf(-0.5);
            let ih3 = ih / h;
            let phi = c * p * ih;
            let phi_t = s * p * ih - 0.5 * c * p * ih3 * ht;
            let phi_x = c * (dp * ih - 0.5 * p * ih3 * hx);
            let w = wx * wt * h * da;
            num += w * (phi_t * phi_t + phi_x * phi_x / (f1 * f1) + k2 * gyy * phi * phi / (f2 * f2));
            den += w * phi * phi;
        }
    }
    if !(den > 0.0) {
        return Err(GrushinError::numerical("vanishing norm in tube quotient", None));
    }
    Ok(-num / den)
}

/// `⟨ψ_k, Δ_ex ψ_k⟩ / ⟨ψ_k, ψ_k⟩` on the surface with `dA = x^{−α}dx dy`.
pub fn extrinsic_quotient(band: &TubeBand, psi: &TestFunction, nodes: usize) -> Result<f64> {
    psi.check_inside(band)?;
    let (a, b) = psi.support();
    let m = band.model();
    let alpha = m.metric_exponent();
    let k2 = (band.k as f64).powi(2);
    let rule = GaussRule::new(nodes, a, b);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (p, dp) = psi.eval(x);
        let da = x.powf(-alpha);
        let veff = m.effective_potential(x)?;
        num += w * da * (dp * dp + k2 * m.inverse_metric_yy(x) * p * p - veff * p * p);
        den += w * da * p * p;
    }
    if !(den > 0.0) {
        return Err(GrushinError::numerical(
            "vanishing norm in extrinsic quotient",
            None,
        ));
    }
    Ok(-num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub q_shifted: f64,
    pub target: f64,
    pub error: f64,
    /// Error relative to the previous row.
    pub ratio: Option<f64>,
}

/// `Q_ε + (π/2ε)²` against the extrinsic quotient for each `ε`.
pub fn convergence_study(
    template: &TubeBand,
    psi: &TestFunction,
    eps_list: &[f64],
    nodes: usize,
) -> Result<Vec<StudyRow>> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GrushinError::invalid("epsilon list must be strictly decreasing"));
    }
    let target = extrinsic_quotient(template, psi, nodes)?;
    let shifted: Vec<(f64, f64)> = eps_list
        .par_iter()
        .map(|&eps| {
            let band = template.with_epsilon(eps)?;
            let q = tube_rayleigh_quotient(&band, psi, nodes)?;
            Ok((eps, q + (PI / (2.0 * eps)).powi(2)))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<StudyRow> = Vec::with_capacity(shifted.len());
    for (eps, q) in shifted {
        let error = (q - target).abs();
        let ratio = rows.last().map(|r| error / r.error);
        rows.push(StudyRow {
            epsilon: eps,
            q_shifted: q,
            target,
            error,
            ratio,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trumpet(eps: f64) -> TubeBand {
        TubeBand::new(GrushinModel::alpha(1.0).unwrap(), (1.5, 3.0), eps, 0).unwrap()
    }

    #[test]
    fn density_at_zero_thickness() {
        let b = trumpet(0.05);
        let (e, n) = b.density(2.0, 0.0).unwrap();
        assert_eq!(e, 1.0);
        assert_relative_eq!(n, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn cylinder_density_is_one_minus_tau() {
        let b = TubeBand::new(GrushinModel::alpha(0.0).unwrap(), (0.5, 2.0), 0.3, 0).unwrap();
        for (x, t) in [(0.7, 0.2), (1.5, -0.25), (1.0, 0.1)] {
            let (e, n) = b.density(x, t).unwrap();
            assert_relative_eq!(e, 1.0 - t, epsilon = 1e-15);
            assert!((n - e).abs() < 1e-8);
        }
    }

    #[test]
    fn trumpet_density_example() {
        let b = trumpet(0.05);
        let (e, n) = b.density(2.0, 0.01).unwrap();
        assert!((e - n).abs() <= 1e-6);
    }

    #[test]
    fn rejects_thick_tubes_and_bad_bands() {
        let m = GrushinModel::alpha(1.0).unwrap();
        assert!(TubeBand::new(m, (1.5, 3.0), 2.0, 0).is_err());
        assert!(TubeBand::new(m, (1.0, 3.0), 0.01, 0).is_err());
        assert!(TubeBand::new(m, (3.0, 1.5), 0.01, 0).is_err());
        assert!(trumpet(0.05).density(2.0, 0.06).is_err());
    }

    #[test]
    fn quotients_are_gauge_invariant() {
        let b = trumpet(0.05);
        let psi = TestFunction::spanning(&b);
        let q1 = tube_rayleigh_quotient(&b, &psi, 32).unwrap();
        let q2 = tube_rayleigh_quotient(&b, &psi.scaled(-7.5), 32).unwrap();
        assert!((q1 - q2).abs() <= 1e-12 * q1.abs());
        let e1 = extrinsic_quotient(&b, &psi, 64).unwrap();
        let e2 = extrinsic_quotient(&b, &psi.scaled(1e-3), 64).unwrap();
        assert!((e1 - e2).abs() <= 1e-12 * e1.abs());
    }

    #[test]
    fn flat_extrinsic_quotient_adds_a_quarter() {
        let b = TubeBand::new(GrushinModel::alpha(0.0).unwrap(), (0.5, 2.0), 0.1, 0).unwrap();
        let psi = TestFunction::spanning(&b);
        let r = GaussRule::new(64, 0.5, 2.0);
        let d: f64 = r.integrate(|x| psi.eval(x).1.powi(2));
        let n: f64 = r.integrate(|x| psi.eval(x).0.powi(2));
        let q = extrinsic_quotient(&b, &psi, 64).unwrap();
        assert_relative_eq!(q, -d / n + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn flat_tube_shifted_quotient_converges() {
        let t = TubeBand::new(GrushinModel::alpha(0.0).unwrap(), (0.5, 2.0), 0.1, 0).unwrap();
        let psi = TestFunction::spanning(&t);
        let rows = convergence_study(&t, &psi, &[0.1, 0.05, 0.025], 64).unwrap();
        assert!(rows.windows(2).all(|w| w[1].error < w[0].error));
    }

    #[test]
    fn trumpet_target_value() {
        let b = trumpet(0.05);
        let psi = TestFunction::spanning(&b);
        let q = extrinsic_quotient(&b, &psi, 64).unwrap();
        assert!((q - -5.644_546_486_465_088).abs() < 1e-9);
    }
}
