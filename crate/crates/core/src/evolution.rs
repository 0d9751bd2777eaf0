//! Heat and Schrödinger evolution of a single fiber on a truncated
//! interval, and the sensitivity of that evolution to the boundary
//! condition imposed near a singular endpoint.
//!
//! With `H = −d²/dx² + V_k` (the negative fiber Laplacian) the equations
//! are `∂t u = −Hu` and, with `ħ = m = 1`, `i∂t ψ = ½Hψ`. Both are stepped
//! by Crank–Nicolson.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GrushinError, Result};
use crate::spectral::{FiberOperator, Side};

pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Heat,
    Schrodinger,
}

/// Three-point discretization of `H` on the unknown nodes of a uniform grid.
///
/// Dirichlet ends drop their boundary node. A Neumann end keeps it and
/// closes the stencil with the centered ghost point `u₋₁ = u₁`; the node
/// then carries trapezoid weight ½, which makes `H` self-adjoint for the
/// weighted inner product `Σ wᵢ uᵢ vᵢ dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    /// All grid nodes, boundary nodes included.
    pub grid: Vec<f64>,
    pub dx: f64,
    /// Index into `grid` of the first unknown.
    pub offset: usize,
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub weights: Vec<f64>,
    pub bc: (Boundary, Boundary),
}

/// Assembles `−d²/dx² + V_k` on `n` uniform nodes spanning `interval`.
pub fn discretize(
    op: &FiberOperator,
    interval: (f64, f64),
    n: usize,
    bc: (Boundary, Boundary),
) -> Result<TridiagonalOperator> {
    if n < MIN_GRID {
        return Err(GrushinError::invalid(format!(
            "grid needs at least {MIN_GRID} points, got {n}"
        )));
    }
    let (lo, hi) = interval;
    let (left, right) = op.interval();
    if !(lo < hi) {
        return Err(GrushinError::invalid(format!("empty interval [{lo}, {hi}]")));
    }
    if lo <= left || hi >= right {
        return Err(GrushinError::domain(format!(
            "truncation [{lo}, {hi}] must lie strictly inside ({left}, {right}); a positive cutoff is required"
        )));
    }
    let dx = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + dx * i as f64 })
        .collect();
    let first = if bc.0 == Boundary::Dirichlet { 1 } else { 0 };
    let last = if bc.1 == Boundary::Dirichlet { n - 2 } else { n - 1 };
    let m = last - first + 1;
    let inv = 1.0 / (dx * dx);
    let mut diag = Vec::with_capacity(m);
    for &x in &grid[first..=last] {
        diag.push(2.0 * inv + op.potential(x)?);
    }
    let mut lower = vec![-inv; m - 1];
    let mut upper = vec![-inv; m - 1];
    let mut weights = vec![1.0; m];
    if bc.0 == Boundary::Neumann {
        upper[0] = -2.0 * inv;
        weights[0] = 0.5;
    }
    if bc.1 == Boundary::Neumann {
        lower[m - 2] = -2.0 * inv;
        weights[m - 1] = 0.5;
    }
    Ok(TridiagonalOperator {
        grid,
        dx,
        offset: first,
        lower,
        diag,
        upper,
        weights,
        bc,
    })
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Abscissae of the unknowns.
    pub fn unknown_grid(&self) -> &[f64] {
        &self.grid[self.offset..self.offset + self.len()]
    }

    /// `W^{1/2} H W^{−1/2}` as (diagonal, off-diagonal); a symmetric matrix.
    pub fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let off = (0..self.len() - 1)
            .map(|i| {
                let s = (self.weights[i] / self.weights[i + 1]).sqrt();
                self.upper[i] * s
            })
            .collect();
        (self.diag.clone(), off)
    }

    /// Dense copy of the symmetrized matrix, row-major.
    pub fn symmetrized_dense(&self) -> Vec<Vec<f64>> {
        let (d, e) = self.symmetrized();
        let m = d.len();
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            a[i][i] = d[i];
            if i + 1 < m {
                a[i][i + 1] = e[i];
                a[i + 1][i] = e[i];
            }
        }
        a
    }

    /// `index`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        let (d, e) = self.symmetrized();
        tridiagonal_eigenvalue(&d, &e, index)
    }

    /// Eigenvector for [`eigenvalue`](Self::eigenvalue), by inverse
    /// iteration, normalized to unit weighted norm on the unknowns.
    pub fn eigenvector(&self, index: usize) -> Result<(f64, Vec<f64>)> {
        let lambda = self.eigenvalue(index)?;
        let m = self.len();
        let shift = lambda + 1e-10 * lambda.abs().max(1.0);
        let lower: Vec<Complex64> = self.lower.iter().map(|&v| v.into()).collect();
        let upper: Vec<Complex64> = self.upper.iter().map(|&v| v.into()).collect();
        let diag: Vec<Complex64> = self.diag.iter().map(|&v| (v - shift).into()).collect();
        let mut v: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 1e-3, 0.0))
            .collect();
        for _ in 0..4 {
            v = thomas(&lower, &diag, &upper, &v)?;
            let norm = self.norm(&v);
            v.iter_mut().for_each(|z| *z /= norm);
        }
        let sign = if v.iter().map(|z| z.re).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        Ok((lambda, v.iter().map(|z| sign * z.re).collect()))
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i > 0 {
                    s += self.lower[i - 1] * u[i - 1];
                }
                if i + 1 < m {
                    s += self.upper[i] * u[i + 1];
                }
                s
            })
            .collect()
    }

    /// Weighted discrete L² norm on the unknowns.
    pub fn norm(&self, u: &[Complex64]) -> f64 {
        (u.iter()
            .zip(&self.weights)
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            * self.dx)
            .sqrt()
    }

    /// Restricts grid values to the unknowns.
    pub fn restrict(&self, full: &[Complex64]) -> Vec<Complex64> {
        full[self.offset..self.offset + self.len()].to_vec()
    }

    /// Extends unknown values by zeros at Dirichlet nodes.
    pub fn extend(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        full[self.offset..self.offset + u.len()].copy_from_slice(u);
        full
    }
}

fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 {
            f64::EPSILON * (e[i - 1].abs() + 1.0)
        } else {
            q
        };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `index`-th smallest eigenvalue of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e`.
pub fn tridiagonal_eigenvalue(d: &[f64], e: &[f64], index: usize) -> Result<f64> {
    let m = d.len();
    if index >= m || e.len() + 1 != m {
        return Err(GrushinError::invalid(format!(
            "eigenvalue index {index} out of range for a {m}x{m} matrix"
        )));
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < m { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the tridiagonal system `(lower, diag, upper) x = rhs`.
fn thomas(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let m = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    let mut beta = diag[0];
    if beta.norm() == 0.0 {
        return Err(GrushinError::numerical("singular tridiagonal system", None));
    }
    if m > 1 {
        c[0] = upper[0] / beta;
    }
    d[0] = rhs[0] / beta;
    for i in 1..m {
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if beta.norm() == 0.0 || !beta.is_finite() {
            return Err(GrushinError::numerical("singular tridiagonal system", None));
        }
        if i + 1 < m {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..m - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}

/// Settings of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub interval: (f64, f64),
    pub n: usize,
    pub bc: (Boundary, Boundary),
    /// Time step; `None` means `dt = dx`.
    pub dt: Option<f64>,
    pub equation: Equation,
    pub t_end: f64,
    /// Record a snapshot every this many steps (the final state is always
    /// recorded).
    pub save_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `|‖u(T)‖ − ‖u(0)‖| / T`.
    pub norm_drift_per_unit_time: f64,
    /// Smallest eigenvalue of the discrete `H`; heat norms grow at most
    /// like `exp(−λ_min t)` when it is negative.
    pub lowest_eigenvalue: f64,
    pub norm_nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub op: FiberOperator,
    /// Full grid, boundary nodes included.
    pub grid: Vec<f64>,
    pub bc: (Boundary, Boundary),
    pub dt: f64,
    pub equation: Equation,
    pub snapshots: Vec<(f64, Vec<Complex64>)>,
    pub norms: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Crank–Nicolson evolution of `initial` (given on the full grid).
pub fn evolve(op: &FiberOperator, config: &EvolutionConfig, initial: &[Complex64]) -> Result<ModeSolution> {
    let disc = discretize(op, config.interval, config.n, config.bc)?;
    evolve_discrete(op, &disc, config, initial)
}

/// [`evolve`] on an already assembled operator.
pub fn evolve_discrete(
    op: &FiberOperator,
    disc: &TridiagonalOperator,
    config: &EvolutionConfig,
    initial: &[Complex64],
) -> Result<ModeSolution> {
    if initial.len() != disc.grid.len() {
        return Err(GrushinError::invalid(format!(
            "initial data has {} values for {} grid nodes",
            initial.len(),
            disc.grid.len()
        )));
    }
    if !(config.t_end >= 0.0) || !config.t_end.is_finite() {
        return Err(GrushinError::invalid(format!(
            "T must be finite and >= 0, got {}",
            config.t_end
        )));
    }
    if config.save_every == 0 {
        return Err(GrushinError::invalid("save_every must be >= 1"));
    }
    let dt_req = config.dt.unwrap_or(disc.dx);
    if !(dt_req > 0.0) {
        return Err(GrushinError::invalid(format!(
            "dt must be positive, got {dt_req}"
        )));
    }
    let steps = (config.t_end / dt_req)
        .round()
        .max(if config.t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 {
        config.t_end / steps as f64
    } else {
        dt_req
    };
    // ∂t u = −c H u with c = 1 (heat) or i/2 (Schrödinger)
    let c = match config.equation {
        Equation::Heat => Complex64::new(1.0, 0.0),
        Equation::Schrodinger => Complex64::new(0.0, 0.5),
    };
    let half = c * (0.5 * dt);
    let lower: Vec<Complex64> = disc.lower.iter().map(|&v| half * v).collect();
    let upper: Vec<Complex64> = disc.upper.iter().map(|&v| half * v).collect();
    let diag: Vec<Complex64> = disc
        .diag
        .iter()
        .map(|&v| Complex64::new(1.0, 0.0) + half * v)
        .collect();

    let mut u = disc.restrict(initial);
    let mut norms = vec![disc.norm(&u)];
    let mut snapshots = vec![(0.0, disc.extend(&u))];
    for s in 1..=steps {
        let hu = disc.apply(&u);
        let rhs: Vec<Complex64> = u.iter().zip(&hu).map(|(a, b)| a - half * b).collect();
        u = thomas(&lower, &diag, &upper, &rhs)?;
        if u.iter().any(|z| !z.is_finite()) {
            return Err(GrushinError::numerical(
                format!("evolution became non-finite at step {s}"),
                None,
            ));
        }
        norms.push(disc.norm(&u));
        if s % config.save_every == 0 || s == steps {
            snapshots.push((s as f64 * dt, disc.extend(&u)));
        }
    }
    let lowest = disc.eigenvalue(0)?;
    let first = norms[0];
    let last = *norms.last().expect("norm history is never empty");
    let diagnostics = Diagnostics {
        norm_drift_per_unit_time: (last - first).abs() / config.t_end,
        lowest_eigenvalue: lowest,
        norm_nonincreasing: norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)),
    };
    Ok(ModeSolution {
        op: *op,
        grid: disc.grid.clone(),
        bc: disc.bc,
        dt,
        equation: config.equation,
        snapshots,
        norms,
        diagnostics,
    })
}

impl ModeSolution {
    /// CSV with a `t` header row followed by one row per grid node. Heat
    /// values are written as real numbers, Schrödinger values as `|ψ|`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "t")?;
        for (t, _) in &self.snapshots {
            write!(out, ",{t}")?;
        }
        writeln!(out)?;
        for (i, x) in self.grid.iter().enumerate() {
            write!(out, "{x}")?;
            for (_, v) in &self.snapshots {
                let z = v[i];
                match self.equation {
                    Equation::Heat => write!(out, ",{}", z.re)?,
                    Equation::Schrodinger => write!(out, ",{}", z.norm())?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Gaussian `exp(−(x − center)²/(2 width²))` sampled on `grid`.
pub fn gaussian(grid: &[f64], center: f64, width: f64) -> Vec<Complex64> {
    grid.iter()
        .map(|&x| Complex64::new((-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0))
        .collect()
}

/// Boundary-condition sensitivity protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityProtocol {
    pub equation: Equation,
    pub t_end: f64,
    pub width: f64,
    /// Probe center; `None` places it one unit from the singular end.
    pub center: Option<f64>,
    /// Regular truncation carrying a Dirichlet condition.
    pub far_end: f64,
    pub n: usize,
    /// `dt = dt_factor · dx`.
    pub dt_factor: f64,
}

impl Default for SensitivityProtocol {
    fn default() -> Self {
        SensitivityProtocol {
            equation: Equation::Heat,
            t_end: 0.1,
            width: 0.1,
            center: None,
            far_end: 5.0,
            n: 4001,
            dt_factor: 1.0,
        }
    }
}

impl SensitivityProtocol {
    /// Halves `dx` and `dt`.
    pub fn refined(self) -> Self {
        SensitivityProtocol {
            n: 2 * self.n - 1,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub delta: f64,
    pub sensitivity: f64,
}

/// For each cutoff `δ`, evolves the probe with Dirichlet and with Neumann
/// at `δ` from the singular end and measures the L² distance of the two
/// solutions over the probe's support (center ± 4 widths).
pub fn bc_sensitivity(
    op: &FiberOperator,
    singular_end: Side,
    deltas: &[f64],
    protocol: &SensitivityProtocol,
) -> Result<Vec<SensitivityRow>> {
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(GrushinError::invalid("cutoffs must be positive"));
    }
    let end = op.endpoint(singular_end);
    if !end.is_finite() {
        return Err(GrushinError::invalid("the singular end must be finite"));
    }
    let toward_far = match singular_end {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    if (protocol.far_end - end) * toward_far <= 0.0 {
        return Err(GrushinError::invalid(format!(
            "far truncation {} is on the wrong side of the endpoint {end}",
            protocol.far_end
        )));
    }
    let center = protocol.center.unwrap_or(end + toward_far);
    deltas
        .par_iter()
        .map(|&delta| {
            let cut = end + toward_far * delta;
            let (interval, bcs) = match singular_end {
                Side::Left => (
                    (cut, protocol.far_end),
                    [
                        (Boundary::Dirichlet, Boundary::Dirichlet),
                        (Boundary::Neumann, Boundary::Dirichlet),
                    ],
                ),
                Side::Right => (
                    (protocol.far_end, cut),
                    [
                        (Boundary::Dirichlet, Boundary::Dirichlet),
                        (Boundary::Dirichlet, Boundary::Neumann),
                    ],
                ),
            };
            let mut finals = Vec::with_capacity(2);
            let mut grid = Vec::new();
            let mut dx = 0.0;
            for bc in bcs {
                let disc = discretize(op, interval, protocol.n, bc)?;
                let config = EvolutionConfig {
                    interval,
                    n: protocol.n,
                    bc,
                    dt: Some(protocol.dt_factor * disc.dx),
                    equation: protocol.equation,
                    t_end: protocol.t_end,
                    save_every: usize::MAX,
                };
                let init = gaussian(&disc.grid, center, protocol.width);
                let sol = evolve_discrete(op, &disc, &config, &init)?;
                grid = sol.grid;
                dx = disc.dx;
                finals.push(sol.snapshots.last().expect("final snapshot").1.clone());
            }
            let sum: f64 = grid
                .iter()
                .enumerate()
                .filter(|(_, &x)| (x - center).abs() <= 4.0 * protocol.width)
                .map(|(i, _)| (finals[0][i] - finals[1][i]).norm_sqr())
                .sum();
            Ok(SensitivityRow {
                delta,
                sensitivity: (sum * dx).sqrt(),
            })
        })
        .collect()
}
