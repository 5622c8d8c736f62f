//! Levi-form algebra, singular sets and the hypoellipticity criteria for
//! sublaplacians, Kohn Laplacians and horizontal sublaplacians.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::special::binomial;

/// Relative threshold below which a singular value of `L` counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;
/// Absolute tolerance for membership in a singular set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Largest antisymmetry defect the constructor silently removes.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Antisymmetric structure matrix `L` with `[X_j, X_k] = L_jk X_0 mod H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviForm {
    entries: DMatrix<f64>,
}

impl LeviForm {
    /// Antisymmetrizes `m` as `(m - mᵀ)/2`; inputs whose symmetric part exceeds
    /// [`ANTISYMMETRY_TOL`] are rejected.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "Levi form must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("Levi form needs d >= 1".into()));
        }
        ensure_finite(m.as_slice(), "Levi form")?;
        let sym = (&m + m.transpose()) * 0.5;
        let defect = sym.amax();
        if defect > ANTISYMMETRY_TOL {
            return Err(Error::InvalidInput(format!(
                "Levi form is not antisymmetric (symmetric part {defect:.3e})"
            )));
        }
        Ok(Self {
            entries: (&m - m.transpose()) * 0.5,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("Levi form rows must all have length d".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Normal form `[[0, D], [-D, 0]] ⊕ 0_{d-2n}` with `D = diag(λ)`.
    pub fn normal_form(lambdas: &[f64], d: usize) -> Result<Self> {
        let n = lambdas.len();
        if 2 * n > d {
            return Err(Error::InvalidInput(format!("2n = {} exceeds d = {d}", 2 * n)));
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("normal-form generators must be positive".into()));
        }
        let mut m = DMatrix::zeros(d, d);
        for (j, &l) in lambdas.iter().enumerate() {
            m[(j, n + j)] = l;
            m[(n + j, j)] = -l;
        }
        Self::new(m)
    }

    /// Structure constants of the Heisenberg group `H^{2n+1}` with
    /// `X_j = ∂_j + x_{n+j} ∂_0`, `X_{n+j} = ∂_{n+j} - x_j ∂_0`,
    /// i.e. `[X_j, X_{n+j}] = -2 X_0`.
    pub fn heisenberg(n: usize) -> Self {
        let d = 2 * n;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..n {
            m[(j, n + j)] = -2.0;
            m[(n + j, j)] = 2.0;
        }
        Self { entries: m }
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    /// Orthogonal change of frame `QᵀLQ`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(q.transpose() * &self.entries * q)
    }
}

/// Positive symplectic eigenvalues of `L` and its rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticSpectrum {
    /// `λ_1 >= ... >= λ_n > 0`.
    pub lambdas: Vec<f64>,
    pub rank: usize,
}

impl SymplecticSpectrum {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// `½ Tr |L| = Σ λ_j`.
    pub fn half_trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// Singular values of an antisymmetric matrix come in equal pairs `λ_j, λ_j`;
/// the pairs are averaged after dropping values below the zero threshold.
pub fn symplectic_spectrum(l: &LeviForm) -> Result<SymplecticSpectrum> {
    let m = l.entries();
    let norm = m.norm();
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let threshold = ZERO_THRESHOLD * norm.max(1.0);
    let nonzero: Vec<f64> = sv.into_iter().filter(|&s| s >= threshold).collect();
    if nonzero.len() % 2 == 1 {
        return Err(Error::Eigen(format!(
            "odd number ({}) of nonzero singular values for an antisymmetric matrix",
            nonzero.len()
        )));
    }
    let lambdas: Vec<f64> = nonzero.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    Ok(SymplecticSpectrum {
        rank: 2 * lambdas.len(),
        lambdas,
    })
}

/// Real set of `μ` values where the model sublaplacian fails to be
/// hypoelliptic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSet {
    pub half_trace: f64,
    pub kind: SingularSetKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SingularSetKind {
    /// `(-∞, -c] ∪ [c, ∞)`, when `2n < d`.
    HalfLines,
    /// `{±(c + 2 Σ α_j λ_j) : α ∈ ℕⁿ}`, when `2n = d`.
    Ladder { generators: Vec<f64> },
}

pub fn singular_set(l: &LeviForm) -> Result<SingularSet> {
    let spec = symplectic_spectrum(l)?;
    Ok(singular_set_from_spectrum(&spec, l.dim()))
}

pub fn singular_set_from_spectrum(spec: &SymplecticSpectrum, d: usize) -> SingularSet {
    let kind = if spec.rank < d {
        SingularSetKind::HalfLines
    } else {
        SingularSetKind::Ladder {
            generators: spec.lambdas.clone(),
        }
    };
    SingularSet {
        half_trace: spec.half_trace(),
        kind,
    }
}

impl SingularSet {
    /// Distance from the real number `x` to the set.
    pub fn real_distance(&self, x: f64) -> f64 {
        let a = x.abs();
        let c = self.half_trace;
        match &self.kind {
            SingularSetKind::HalfLines => (c - a).max(0.0),
            SingularSetKind::Ladder { generators } => {
                if a <= c {
                    return c - a;
                }
                let mut best = f64::INFINITY;
                nearest_ladder_offset(a - c, generators, &mut best);
                best
            }
        }
    }

    /// True iff `z` is real and `Re z` is in the set, both within
    /// [`MEMBERSHIP_TOL`].
    pub fn contains(&self, z: Complex64) -> bool {
        z.im.abs() <= MEMBERSHIP_TOL && self.real_distance(z.re) <= MEMBERSHIP_TOL
    }

    /// Euclidean distance in ℂ from `z` to the set.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.real_distance(z.re).hypot(z.im)
    }

    /// Ladder points in `[0, bound]` (positive half), ascending; for half
    /// lines only the endpoint `c`.
    pub fn ladder_points(&self, bound: f64) -> Vec<f64> {
        let c = self.half_trace;
        match &self.kind {
            SingularSetKind::HalfLines => {
                if c <= bound {
                    vec![c]
                } else {
                    vec![]
                }
            }
            SingularSetKind::Ladder { generators } => {
                let mut out = Vec::new();
                enumerate_sums(c, bound + MEMBERSHIP_TOL, generators, &mut out);
                out.sort_by(f64::total_cmp);
                out.dedup_by(|a, b| (*a - *b).abs() <= MEMBERSHIP_TOL);
                out
            }
        }
    }
}

/// Minimal `|target - 2Σα_jλ_j|` over `α ∈ ℕⁿ`, enumerating lazily.
fn nearest_ladder_offset(target: f64, gens: &[f64], best: &mut f64) {
    match gens.split_first() {
        None => *best = best.min(target.abs()),
        Some((&g, rest)) => {
            let step = 2.0 * g;
            let max_alpha = ((target + *best) / step).floor().max(0.0) as usize;
            for alpha in 0..=max_alpha {
                let remaining = target - step * alpha as f64;
                if remaining < -*best {
                    break;
                }
                nearest_ladder_offset(remaining, rest, best);
                if *best == 0.0 {
                    return;
                }
            }
        }
    }
}

fn enumerate_sums(start: f64, bound: f64, gens: &[f64], out: &mut Vec<f64>) {
    match gens.split_first() {
        None => {
            if start <= bound {
                out.push(start)
            }
        }
        Some((&g, rest)) => {
            let mut v = start;
            while v <= bound {
                enumerate_sums(v, bound, rest, out);
                v += 2.0 * g;
            }
        }
    }
}

/// Eigenvalues of a complex square matrix via complex Schur form.
pub fn complex_eigenvalues(mu: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if !mu.is_square() || mu.nrows() == 0 {
        return Err(Error::InvalidInput("μ must be a non-empty square matrix".into()));
    }
    if mu.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("μ"));
    }
    if mu.nrows() == 1 {
        return Ok(vec![mu[(0, 0)]]);
    }
    let schur = Schur::try_new(mu.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("complex Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Outcome of a sublaplacian invertibility test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    /// Smallest distance in ℂ from an eigenvalue of `μ` to the singular set.
    pub margin: f64,
    /// First eigenvalue found inside the singular set.
    pub witness: Option<Complex64>,
    /// Some eigenvalue of `μ` is non-real; such eigenvalues never meet the
    /// real singular set.
    pub nonreal_spectrum: bool,
    pub eigenvalues: Vec<Complex64>,
}

/// `Sp μ ∩ Λ = ∅`.
pub fn sublaplacian_condition(l: &LeviForm, mu: &DMatrix<Complex64>) -> Result<ConditionReport> {
    let set = singular_set(l)?;
    let eigenvalues = complex_eigenvalues(mu)?;
    Ok(condition_from_eigenvalues(&set, eigenvalues))
}

pub fn condition_from_eigenvalues(set: &SingularSet, eigenvalues: Vec<Complex64>) -> ConditionReport {
    let witness = eigenvalues.iter().copied().find(|&z| set.contains(z));
    let margin = eigenvalues
        .iter()
        .map(|&z| set.distance(z))
        .fold(f64::INFINITY, f64::min);
    ConditionReport {
        holds: witness.is_none(),
        margin,
        witness,
        nonreal_spectrum: eigenvalues.iter().any(|z| z.im.abs() > MEMBERSHIP_TOL),
        eigenvalues,
    }
}

/// Pointwise CR data: half-rank `n`, negative Levi eigenvalues `κ`, rank
/// `r` of the Levi form and fiber dimension `d` of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GeometryParams {
    pub n: usize,
    pub kappa: usize,
    pub r: usize,
    pub d: usize,
}

impl GeometryParams {
    pub fn new(n: usize, kappa: usize, r: usize) -> Result<Self> {
        Self::with_fiber(n, kappa, r, 2 * n)
    }

    pub fn with_fiber(n: usize, kappa: usize, r: usize, d: usize) -> Result<Self> {
        if kappa > r || r > n {
            return Err(Error::InvalidInput(format!(
                "need 0 <= kappa <= r <= n, got kappa={kappa}, r={r}, n={n}"
            )));
        }
        if 2 * n > d {
            return Err(Error::InvalidInput(format!("need 2n <= d, got n={n}, d={d}")));
        }
        Ok(Self { n, kappa, r, d })
    }

    /// Strictly pseudoconvex-type nondegenerate point (`r = n`).
    pub fn nondegenerate(n: usize, kappa: usize) -> Result<Self> {
        Self::new(n, kappa, n)
    }

    /// `ε_j = +1` for `j < n - κ`, `-1` after.
    pub fn epsilons(&self) -> Vec<i64> {
        (0..self.n)
            .map(|j| if j < self.n - self.kappa { 1 } else { -1 })
            .collect()
    }

    /// The two forbidden bands of the Kohn condition `Y(q)`.
    pub fn y_bands(&self) -> [(usize, usize); 2] {
        let GeometryParams { n, kappa, r, .. } = *self;
        [(kappa, kappa + n - r), (r - kappa, n - kappa)]
    }
}

fn check_degree(q: usize, max: usize, name: &str) -> Result<()> {
    if q > max {
        Err(Error::InvalidInput(format!("{name} = {q} out of range 0..={max}")))
    } else {
        Ok(())
    }
}

/// Kohn Laplacian condition: `q ∉ {κ,…,κ+n−r} ∪ {r−κ,…,n−κ}`.
pub fn condition_y(g: &GeometryParams, q: usize) -> Result<bool> {
    check_degree(q, g.n, "q")?;
    Ok(!g.y_bands().iter().any(|&(lo, hi)| (lo..=hi).contains(&q)))
}

/// Horizontal sublaplacian condition on `k`-forms for a Levi form of rank
/// `2n` on a rank-`d` bundle: `k < n` or `k > d − n`.
pub fn condition_x(d: usize, n: usize, k: usize) -> Result<bool> {
    if 2 * n > d {
        return Err(Error::InvalidInput(format!("need 2n <= d, got n={n}, d={d}")));
    }
    check_degree(k, d, "k")?;
    Ok(k < n || k > d - n)
}

/// Pairs `(p,q)` excluded by `X(p,q)`, before symmetrization.
pub fn xpq_forbidden(g: &GeometryParams) -> Vec<(usize, usize)> {
    let span = g.n - g.r;
    let mut out = Vec::with_capacity((span + 1) * (span + 1));
    for j in 0..=span {
        for k in 0..=span {
            out.push((g.kappa + j, g.r - g.kappa + k));
        }
    }
    out
}

/// Horizontal sublaplacian on `(p,q)`-forms.
pub fn condition_xpq(g: &GeometryParams, p: usize, q: usize) -> Result<bool> {
    check_degree(p, g.n, "p")?;
    check_degree(q, g.n, "q")?;
    let forbidden = xpq_forbidden(g);
    Ok(!forbidden.contains(&(p, q)) && !forbidden.contains(&(q, p)))
}

/// Multiset of reals stored as `(value, multiplicity)` sorted by value.
pub type Multiset = Vec<(f64, usize)>;

fn collect_multiset(map: BTreeMap<i64, (f64, usize)>) -> Multiset {
    map.into_values().collect()
}

/// Key values on a 1e-9 lattice so that equal sums merge.
fn lattice_key(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

/// Eigenvalues `μ_{J,K̄} = Σ_{J}λ − Σ_{K}λ` of `μ(a)` on horizontal
/// `k`-forms, counted with the `binom(d−2n, k−|J|−|K|)` choices of the
/// abelian part.
pub fn horizontal_mu_spectrum(lambdas: &[f64], d: usize, k: usize) -> Result<Multiset> {
    let n = lambdas.len();
    if 2 * n > d {
        return Err(Error::InvalidInput(format!("need 2n <= d, got n={n}, d={d}")));
    }
    check_degree(k, d, "k")?;
    let free = d - 2 * n;
    let mut map: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for jmask in 0u32..(1 << n) {
        for kmask in 0u32..(1 << n) {
            let size = (jmask.count_ones() + kmask.count_ones()) as usize;
            if size > k || k - size > free {
                continue;
            }
            let mult = binomial(free as i64, (k - size) as i64) as usize;
            let value: f64 = (0..n)
                .map(|j| {
                    let mut v = 0.0;
                    if jmask >> j & 1 == 1 {
                        v += lambdas[j];
                    }
                    if kmask >> j & 1 == 1 {
                        v -= lambdas[j];
                    }
                    v
                })
                .sum();
            let e = map.entry(lattice_key(value)).or_insert((value, 0));
            e.1 += mult;
        }
    }
    Ok(collect_multiset(map))
}

/// Eigenvalues of the Kohn Laplacian's `μ` on `(·, q)`-forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KohnSpectrum {
    /// `μ_K = Σ_{j∈K} ε_j − Σ_{j∉K} ε_j` over `|K| = q`.
    pub values: Multiset,
    /// `n + 2q − 2κ − 4k` with multiplicity `binom(n−κ, k) binom(κ, q−k)`,
    /// `k = |K ∩ {1..n−κ}|`. This is `−μ_K` (same multiset up to sign).
    pub reduced: Multiset,
}

pub fn kohn_mu_spectrum(g: &GeometryParams, q: usize) -> Result<KohnSpectrum> {
    if g.r != g.n {
        return Err(Error::InvalidInput("Kohn spectrum needs a nondegenerate point (r = n)".into()));
    }
    check_degree(q, g.n, "q")?;
    let n = g.n;
    let eps = g.epsilons();
    let mut direct: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != q {
            continue;
        }
        let v: i64 = (0..n)
            .map(|j| if mask >> j & 1 == 1 { eps[j] } else { -eps[j] })
            .sum();
        let e = direct.entry(v).or_insert((v as f64, 0));
        e.1 += 1;
    }
    let (n_i, q_i, kappa) = (n as i64, q as i64, g.kappa as i64);
    let mut reduced: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for k in (q_i - kappa).max(0)..=q_i.min(n_i - kappa) {
        let v = n_i + 2 * q_i - 2 * kappa - 4 * k;
        let mult = (binomial(n_i - kappa, k) * binomial(kappa, q_i - k)) as usize;
        let e = reduced.entry(v).or_insert((v as f64, 0));
        e.1 += mult;
    }
    Ok(KohnSpectrum {
        values: collect_multiset(direct),
        reduced: collect_multiset(reduced),
    })
}
