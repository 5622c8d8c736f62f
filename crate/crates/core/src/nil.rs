//! Grid discretization of the sublaplacian on the Heisenberg nilmanifold
//! `Γ\H³`, its low spectrum, and fits of the eigenvalue counting function.
//!
//! The group law is `x·y = (x₀ + y₀ + x₂y₁ − x₁y₂, x' + y')` and `Γ = ℤ³`, so
//! the fields `X₁ = ∂₁ + x₂∂₀`, `X₂ = ∂₂ − x₁∂₀` descend to the quotient.
//! Functions are expanded in `x₀` as `Σ_ξ e^{2πiξx₀} f_ξ(x₁, x₂)`; the
//! lattice then acts on each `f_ξ` by the twisted periodicity
//!
//! ```text
//! f_ξ(x₁ + 1, x₂) = e^{2πiξx₂} f_ξ(x₁, x₂),   f_ξ(x₁, x₂ + 1) = e^{−2πiξx₁} f_ξ(x₁, x₂)
//! ```
//!
//! and `X_j` is discretized on an `N × N` grid by `D_j = (U_j − I)/h`, with
//! `U_j` the exact time-`h` flow of `X_j`. Each sector operator
//! `c Σ D_jᴴ D_j` is Hermitian by construction; sectors `±ξ` are complex
//! conjugates of each other and share their spectrum. Frequencies run over
//! `−N/2 < ξ ≤ N/2`, so the whole operator acts on `N³` unknowns.

use rayon::prelude::*;
use serde::Serialize;

use num_complex::Complex64;

use crate::eigen::{eigenpairs_below, HermitianOperator, SolverOptions};
use crate::error::{Error, Result};

pub const MIN_GRID: usize = 16;

/// Environment variable capping the worker threads used across sectors.
pub const THREADS_ENV: &str = "HEISENSPEC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NilGrid {
    pub n: usize,
    /// Discretize `−½(X₁² + X₂²)` rather than `−(X₁² + X₂²)`.
    pub half_factor: bool,
}

impl NilGrid {
    pub fn new(n: usize, half_factor: bool) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::InvalidInput(format!("grid size N = {n} is below the minimum {MIN_GRID}")));
        }
        Ok(Self { n, half_factor })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn scale(&self) -> f64 {
        if self.half_factor {
            0.5
        } else {
            1.0
        }
    }

    /// Largest eigenvalue trusted in fits.
    ///
    /// Two limits apply: second-order stencils distort above `π²N²/10`, and
    /// the `x₀`-frequencies are only present for `|ξ| ≤ N/2`, whose lowest
    /// level `2π|ξ|` (for the half operator) caps the resolved range at
    /// about `πN`.
    pub fn trust_cutoff(&self) -> f64 {
        let nf = self.n as f64;
        let pi = std::f64::consts::PI;
        2.0 * self.scale() * (pi * pi * nf * nf / 10.0).min(0.95 * pi * nf)
    }

    /// Nonnegative sector frequencies with the number of sectors sharing
    /// each spectrum.
    pub fn sectors(&self) -> Vec<(i64, usize)> {
        let top = (self.n / 2) as i64;
        (0..=top)
            .map(|xi| {
                let paired = xi != 0 && !(self.n % 2 == 0 && xi == top);
                (xi, if paired { 2 } else { 1 })
            })
            .collect()
    }
}

/// One Fourier sector of the discretized operator.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub n: usize,
    pub xi: i64,
    scale: f64,
    /// Phase of `U₁` at each node, wraparound twist included.
    ph1: Vec<Complex64>,
    ph2: Vec<Complex64>,
}

impl SectorOperator {
    pub fn new(grid: &NilGrid, xi: i64) -> Self {
        let n = grid.n;
        let h = grid.h();
        let tau = std::f64::consts::TAU;
        let xi_f = xi as f64;
        let mut ph1 = Vec::with_capacity(n * n);
        let mut ph2 = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                let (x1, x2) = (i1 as f64 * h, i2 as f64 * h);
                let mut a1 = tau * xi_f * x2 * h;
                if i1 + 1 == n {
                    a1 += tau * xi_f * x2;
                }
                let mut a2 = -tau * xi_f * x1 * h;
                if i2 + 1 == n {
                    a2 -= tau * xi_f * x1;
                }
                ph1.push(Complex64::from_polar(1.0, a1));
                ph2.push(Complex64::from_polar(1.0, a2));
            }
        }
        Self {
            n,
            xi,
            scale: grid.scale(),
            ph1,
            ph2,
        }
    }

    /// Forward difference `D_j f` along the flow of `X_j`, `j ∈ {1, 2}`.
    pub fn difference(&self, j: usize, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let inv_h = n as f64;
        (0..n * n)
            .map(|idx| {
                let (i1, i2) = (idx / n, idx % n);
                let (ph, next) = if j == 1 {
                    (self.ph1[idx], ((i1 + 1) % n) * n + i2)
                } else {
                    (self.ph2[idx], i1 * n + (i2 + 1) % n)
                };
                (ph * f[next] - f[idx]) * inv_h
            })
            .collect()
    }
}

impl HermitianOperator for SectorOperator {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        // (U − I)ᴴ(U − I) = 2I − U − Uᴴ for unitary U
        let n = self.n;
        let c = self.scale * (n * n) as f64;
        for i1 in 0..n {
            let up = ((i1 + 1) % n) * n;
            let down = ((i1 + n - 1) % n) * n;
            let row = i1 * n;
            for i2 in 0..n {
                let idx = row + i2;
                let right = row + (i2 + 1) % n;
                let left = row + (i2 + n - 1) % n;
                let u1 = self.ph1[idx] * x[up + i2];
                let u1h = self.ph1[down + i2].conj() * x[down + i2];
                let u2 = self.ph2[idx] * x[right];
                let u2h = self.ph2[left].conj() * x[left];
                y[idx] = (x[idx] * 4.0 - u1 - u1h - u2 - u2h) * c;
            }
        }
    }

    fn spectral_bound(&self) -> f64 {
        8.0 * self.scale * (self.n * self.n) as f64
    }
}

/// The discretized operator as its list of distinct sectors.
#[derive(Debug, Clone)]
pub struct NilOperator {
    pub grid: NilGrid,
    pub sectors: Vec<(SectorOperator, usize)>,
}

impl NilOperator {
    /// Total number of unknowns, `N³`.
    pub fn dim(&self) -> usize {
        self.sectors.iter().map(|(s, m)| s.dim() * m).sum()
    }
}

pub fn build_operator(grid: &NilGrid) -> NilOperator {
    NilOperator {
        grid: *grid,
        sectors: grid
            .sectors()
            .into_iter()
            .map(|(xi, mult)| (SectorOperator::new(grid, xi), mult))
            .collect(),
    }
}

/// Continuum count of sector eigenvalues up to `cutoff`, used to size the
/// eigensolver block.
fn expected_sector_count(grid: &NilGrid, xi: i64, cutoff: f64) -> usize {
    let c = grid.scale();
    let pi = std::f64::consts::PI;
    if xi == 0 {
        let r = (cutoff / (4.0 * pi * pi * c)).max(0.0).sqrt();
        let k = r.floor() as i64;
        let mut count = 0;
        for a in -k..=k {
            for b in -k..=k {
                if ((a * a + b * b) as f64) <= r * r {
                    count += 1;
                }
            }
        }
        count
    } else {
        let xi = xi.unsigned_abs() as f64;
        let step = 2.0 * c * 2.0 * pi * xi;
        let levels = ((cutoff / step + 1.0) / 2.0).floor().max(0.0);
        (2.0 * xi * levels) as usize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorDiagnostics {
    pub xi: i64,
    pub multiplicity: usize,
    pub found: usize,
    pub iterations: usize,
    pub worst_residual: f64,
}

/// Sorted eigenvalues (repeated by multiplicity) with solver diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    /// Residual `‖Av − λv‖` of the pair behind each eigenvalue.
    pub residuals: Vec<f64>,
    pub count_requested: Option<usize>,
    pub cutoff: f64,
    pub grid: NilGrid,
    pub sectors: Vec<SectorDiagnostics>,
}

impl SpectrumSample {
    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn sector_seed(seed: u64, xi: i64) -> u64 {
    seed ^ (xi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `f` on a pool limited by [`THREADS_ENV`] when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match cap {
        Some(threads) if threads > 0 => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Every eigenvalue of the grid operator up to `cutoff`.
pub fn spectrum_below(op: &NilOperator, cutoff: f64, seed: u64, opts: SolverOptions) -> Result<SpectrumSample> {
    let results: Vec<Result<(Vec<f64>, Vec<f64>, SectorDiagnostics)>> = with_thread_cap(|| {
        op.sectors
            .par_iter()
            .map(|(sector, mult)| {
                let expected = expected_sector_count(&op.grid, sector.xi, cutoff);
                let pairs = eigenpairs_below(sector, cutoff, expected + expected / 5, sector_seed(seed, sector.xi), opts)?;
                let diag = SectorDiagnostics {
                    xi: sector.xi,
                    multiplicity: *mult,
                    found: pairs.values.len(),
                    iterations: pairs.iterations,
                    worst_residual: pairs.residuals.iter().copied().fold(0.0, f64::max),
                };
                Ok((pairs.values, pairs.residuals, diag))
            })
            .collect()
    });
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut sectors = Vec::with_capacity(results.len());
    for r in results {
        let (values, residuals, diag) = r?;
        for _ in 0..diag.multiplicity {
            pairs.extend(values.iter().copied().zip(residuals.iter().copied()));
        }
        sectors.push(diag);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SpectrumSample {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
        count_requested: None,
        cutoff,
        grid: op.grid,
        sectors,
    })
}

/// The `count` smallest eigenvalues of the grid operator.
pub fn lowest_eigenvalues(op: &NilOperator, count: usize, seed: u64, opts: SolverOptions) -> Result<SpectrumSample> {
    if count == 0 || count > op.dim() / 4 {
        return Err(Error::InvalidInput(format!(
            "count = {count} must be positive and well below the dimension {}",
            op.dim()
        )));
    }
    // Weyl-law guess N(λ) ≈ λ²/(16 (2c)²) for the threshold, then widen
    let c2 = 2.0 * op.grid.scale();
    let mut cutoff = c2 * (4.0 * (count as f64).sqrt() * 1.2 + 10.0);
    loop {
        let mut sample = spectrum_below(op, cutoff, seed, opts)?;
        if sample.eigenvalues.len() >= count {
            // keep whole clusters out of the truncation decision but
            // report exactly `count` values
            sample.eigenvalues.truncate(count);
            sample.residuals.truncate(count);
            sample.count_requested = Some(count);
            return Ok(sample);
        }
        cutoff *= 1.5;
    }
}

/// Least-squares description of `N(λ)` over a window.
#[derive(Debug, Clone, Serialize)]
pub struct CountingFit {
    /// Slope of `log N` against `log λ`.
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// `exp(intercept)` of the log-log line.
    pub loglog_constant: f64,
    pub loglog_constant_stderr: f64,
    /// `C` in `N ≈ C λ^e + B λ^{e/2}` with the reference exponent `e`.
    pub constant: f64,
    pub constant_stderr: f64,
    pub secondary: f64,
    pub reference_exponent: f64,
    /// Distinct eigenvalue clusters used as data points.
    pub points: usize,
    pub eigenvalues_in_window: usize,
    pub window: (f64, f64),
    /// The slope disagrees with the reference exponent by more than 0.1:
    /// the window has not reached the Weyl regime.
    pub pre_asymptotic: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub reference_exponent: f64,
    pub min_eigenvalues: usize,
    /// Relative tolerance for merging numerically equal eigenvalues.
    pub cluster_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            reference_exponent: 2.0,
            min_eigenvalues: 20,
            cluster_tol: 1e-6,
        }
    }
}

/// `(λ, N)` points: one per eigenvalue cluster, with `N` the average rank
/// of the cluster so that a jump of the counting function is represented by
/// its midpoint.
pub fn counting_points(eigenvalues: &[f64], cluster_tol: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < eigenvalues.len() {
        let mut j = i;
        while j + 1 < eigenvalues.len() && eigenvalues[j + 1] - eigenvalues[i] <= cluster_tol * eigenvalues[i].abs().max(1.0) {
            j += 1;
        }
        let mean = eigenvalues[i..=j].iter().sum::<f64>() / (j - i + 1) as f64;
        out.push((mean, 0.5 * ((i + 1) + (j + 1)) as f64));
        i = j + 1;
    }
    out
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    intercept_se: f64,
}

fn linear_regression(x: &[f64], y: &[f64]) -> Line {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { rss / (m - 2.0) } else { 0.0 };
    Line {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / m + mx * mx / sxx)).sqrt(),
    }
}

/// Two-parameter least squares `y ≈ c·u + b·v`; returns `(c, b, se_c)`.
fn two_term(u: &[f64], v: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let suu: f64 = u.iter().map(|a| a * a).sum();
    let svv: f64 = v.iter().map(|a| a * a).sum();
    let suv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let suy: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum();
    let svy: f64 = v.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = suu * svv - suv * suv;
    let c = (svv * suy - suv * svy) / det;
    let b = (suu * svy - suv * suy) / det;
    let m = y.len() as f64;
    let rss: f64 = (0..y.len()).map(|i| (y[i] - c * u[i] - b * v[i]).powi(2)).sum();
    let s2 = if y.len() > 2 { rss / (m - 2.0) } else { 0.0 };
    (c, b, (s2 * svv / det).sqrt())
}

pub fn fit_counting(sample: &SpectrumSample, window: (f64, f64), opts: FitOptions) -> Result<CountingFit> {
    fit_counting_values(&sample.eigenvalues, window, opts)
}

/// [`fit_counting`] on a bare sorted eigenvalue list.
pub fn fit_counting_values(eigenvalues: &[f64], window: (f64, f64), opts: FitOptions) -> Result<CountingFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::InvalidInput(format!("window ({lo}, {hi}) must satisfy 0 < lo < hi")));
    }
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("eigenvalues must be sorted".into()));
    }
    let in_window = eigenvalues.iter().filter(|&&v| v >= lo && v <= hi).count();
    let points: Vec<(f64, f64)> = counting_points(eigenvalues, opts.cluster_tol)
        .into_iter()
        .filter(|&(v, _)| v >= lo && v <= hi)
        .collect();
    if in_window < opts.min_eigenvalues || points.len() < 3 {
        return Err(Error::TooFewEigenvalues {
            needed: opts.min_eigenvalues,
            found: in_window,
        });
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = linear_regression(&lx, &ly);
    let e = opts.reference_exponent;
    let u: Vec<f64> = points.iter().map(|p| p.0.powf(e)).collect();
    let v: Vec<f64> = points.iter().map(|p| p.0.powf(0.5 * e)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (constant, secondary, constant_stderr) = two_term(&u, &v, &y);
    let loglog_constant = line.intercept.exp();
    Ok(CountingFit {
        exponent: line.slope,
        exponent_stderr: line.slope_se,
        loglog_constant,
        loglog_constant_stderr: loglog_constant * line.intercept_se,
        constant,
        constant_stderr,
        secondary,
        reference_exponent: e,
        points: points.len(),
        eigenvalues_in_window: in_window,
        window,
        pre_asymptotic: (line.slope - e).abs() > 0.1,
    })
}

/// Least-squares extrapolation of `value(N) ≈ v∞ + a N^{−order}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub coefficient: f64,
}

pub fn richardson(samples: &[(usize, f64)], order: f64) -> Result<Extrapolation> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("extrapolation needs at least two grids".into()));
    }
    let x: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).powf(-order)).collect();
    let y: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
    let line = linear_regression(&x, &y);
    Ok(Extrapolation {
        value: line.intercept,
        coefficient: line.slope,
    })
}

/// Everything needed to run the grid study behind `nilcheck`.
#[derive(Debug, Clone)]
pub struct NilcheckConfig {
    pub grids: Vec<usize>,
    pub half_factor: bool,
    /// Fit window for the constant; defaults to `[4π, cutoff of the
    /// coarsest grid]` in half-operator units.
    pub window: Option<(f64, f64)>,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for NilcheckConfig {
    fn default() -> Self {
        Self {
            grids: vec![24, 32, 48],
            half_factor: true,
            window: None,
            seed: 0x5eed,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub n: usize,
    pub cutoff: f64,
    pub eigenvalue_count: usize,
    pub smallest_eigenvalue: f64,
    pub worst_residual: f64,
    pub fit: CountingFit,
    pub sectors: Vec<SectorDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NilcheckReport {
    pub half_factor: bool,
    pub window: (f64, f64),
    pub grids: Vec<GridResult>,
    /// Fit constants extrapolated in `N⁻²`.
    pub extrapolated: Extrapolation,
    /// Exponent fit on the finest grid over its whole trusted range.
    pub exponent_fit: CountingFit,
    /// Extrapolated constant rescaled to the `−½ΣX_j²` normalization.
    pub half_operator_constant: f64,
}

pub fn run_nilcheck(cfg: &NilcheckConfig) -> Result<NilcheckReport> {
    if cfg.grids.len() < 2 {
        return Err(Error::InvalidInput("nilcheck needs at least two grid sizes".into()));
    }
    let grids: Vec<NilGrid> = cfg.grids.iter().map(|&n| NilGrid::new(n, cfg.half_factor)).collect::<Result<_>>()?;
    let unit = 2.0 * grids[0].scale();
    let coarsest = grids.iter().map(|g| g.trust_cutoff()).fold(f64::INFINITY, f64::min);
    let window = cfg.window.unwrap_or((4.0 * std::f64::consts::PI * unit, coarsest));
    if window.1 > coarsest * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "window end {} exceeds the trusted range {coarsest} of the coarsest grid",
            window.1
        )));
    }
    let fit_opts = FitOptions::default();
    let mut results = Vec::with_capacity(grids.len());
    let mut finest: Option<(usize, SpectrumSample)> = None;
    for g in &grids {
        let op = build_operator(g);
        let sample = spectrum_below(&op, g.trust_cutoff(), cfg.seed, cfg.solver)?;
        let fit = fit_counting(&sample, window, fit_opts)?;
        results.push(GridResult {
            n: g.n,
            cutoff: sample.cutoff,
            eigenvalue_count: sample.eigenvalues.len(),
            smallest_eigenvalue: sample.eigenvalues.first().copied().unwrap_or(f64::NAN),
            worst_residual: sample.worst_residual(),
            fit,
            sectors: sample.sectors.clone(),
        });
        if finest.as_ref().map_or(true, |(n, _)| g.n > *n) {
            finest = Some((g.n, sample));
        }
    }
    let (_, fine) = finest.expect("at least two grids");
    let exponent_fit = fit_counting(&fine, (window.0, fine.cutoff), fit_opts)?;
    let points: Vec<(usize, f64)> = results.iter().map(|r| (r.n, r.fit.constant)).collect();
    let extrapolated = richardson(&points, 2.0)?;
    Ok(NilcheckReport {
        half_factor: cfg.half_factor,
        window,
        grids: results,
        extrapolated,
        exponent_fit,
        half_operator_constant: extrapolated.value * unit.powf(fit_opts.reference_exponent),
    })
}
