//! Chebyshev-filtered subspace iteration for the low end of the spectrum of
//! a Hermitian operator given only through matrix-vector products.
//!
//! A block of vectors is repeatedly multiplied by a Chebyshev polynomial in
//! the operator that damps the unwanted upper part of the spectrum, then
//! orthonormalized and diagonalized on the block (Rayleigh–Ritz). Working on
//! a block at a time resolves exactly degenerate eigenvalues, which a
//! single-vector Lanczos recurrence cannot separate.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Hermitian operator on `ℂ^dim` with spectrum in `[0, spectral_bound()]`.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// An upper bound for the largest eigenvalue.
    fn spectral_bound(&self) -> f64;
}

/// Dense Hermitian matrix wrapped as an operator.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    matrix: DMatrix<Complex64>,
    bound: f64,
}

impl DenseHermitian {
    /// Hermitizes `m` and bounds its spectrum by the max absolute row sum.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("operator matrix must be square".into()));
        }
        let matrix = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let bound = matrix
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self { matrix, bound })
    }
}

impl HermitianOperator for DenseHermitian {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.matrix.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn spectral_bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Required residual `‖Av − θv‖` for unit `v`.
    pub tol: f64,
    /// Chebyshev polynomial degree per sweep.
    pub degree: usize,
    pub max_iterations: usize,
    /// Extra block vectors beyond the wanted ones.
    pub buffer: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            degree: 40,
            max_iterations: 400,
            buffer: 12,
        }
    }
}

/// Converged low eigenpairs.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns.
    pub vectors: DMatrix<Complex64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Count(usize),
    Below(f64),
}

fn apply_block(op: &impl HermitianOperator, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut y = DMatrix::zeros(x.nrows(), x.ncols());
    for (xc, mut yc) in x.column_iter().zip(y.column_iter_mut()) {
        op.apply(xc.as_slice(), yc.as_mut_slice());
    }
    y
}

fn random_block(dim: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

struct Ritz {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
    residuals: Vec<f64>,
}

fn rayleigh_ritz(op: &impl HermitianOperator, x: DMatrix<Complex64>) -> Result<Ritz> {
    let q = x.qr().q();
    let aq = apply_block(op, &q);
    let h = q.adjoint() * &aq;
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(h, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("Rayleigh–Ritz eigenproblem did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let w = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = &q * &w;
    let avectors = &aq * &w;
    let residuals = values
        .iter()
        .enumerate()
        .map(|(j, &theta)| (avectors.column(j) - vectors.column(j) * Complex64::new(theta, 0.0)).norm())
        .collect();
    Ok(Ritz {
        values,
        vectors,
        residuals,
    })
}

/// Scaled Chebyshev filter damping `[a, b]` relative to `lower`.
fn chebyshev_filter(
    op: &impl HermitianOperator,
    x: &DMatrix<Complex64>,
    degree: usize,
    lower: f64,
    a: f64,
    b: f64,
) -> DMatrix<Complex64> {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut sigma = e / (lower - c);
    let tau = 2.0 / sigma;
    let shift = |ax: DMatrix<Complex64>, v: &DMatrix<Complex64>| ax - v * Complex64::new(c, 0.0);

    let mut prev = x.clone();
    let mut cur = shift(apply_block(op, x), x) * Complex64::new(sigma / e, 0.0);
    for _ in 1..degree {
        let sigma_next = 1.0 / (tau - sigma);
        let next = shift(apply_block(op, &cur), &cur) * Complex64::new(2.0 * sigma_next / e, 0.0)
            - &prev * Complex64::new(sigma * sigma_next, 0.0);
        prev = cur;
        cur = next;
        sigma = sigma_next;
    }
    cur
}

fn solve(op: &impl HermitianOperator, target: Target, initial_block: usize, seed: u64, opts: SolverOptions) -> Result<Eigenpairs> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("operator has dimension 0".into()));
    }
    let bound = op.spectral_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = initial_block.max(opts.buffer + 1).min(dim);
    let mut ritz = rayleigh_ritz(op, random_block(dim, block, &mut rng))?;
    let mut iterations = 0;

    loop {
        let full = block == dim;
        let wanted = match target {
            Target::Count(c) => c.min(dim),
            Target::Below(cut) => ritz.values.iter().take_while(|&&v| v <= cut).count(),
        };
        // a block whose every Ritz value is wanted may be hiding more
        let saturated = match target {
            Target::Count(c) => block < (c + opts.buffer).min(dim),
            Target::Below(_) => wanted + opts.buffer / 2 > block && !full,
        };
        if saturated {
            let extra = (block / 2).max(opts.buffer).min(dim - block);
            let mut x = DMatrix::zeros(dim, block + extra);
            x.columns_mut(0, block).copy_from(&ritz.vectors);
            x.columns_mut(block, extra).copy_from(&random_block(dim, extra, &mut rng));
            block += extra;
            ritz = rayleigh_ritz(op, x)?;
            continue;
        }

        let wanted_ok = ritz.residuals[..wanted].iter().all(|&r| r <= opts.tol);
        let edge_ok = match target {
            Target::Count(_) => true,
            // the first unwanted Ritz pair must be close enough to an
            // eigenvalue to certify that nothing below the cutoff is missing
            Target::Below(cut) => {
                wanted == block || {
                    let r = ritz.residuals[wanted];
                    let gap = ritz.values[wanted] - cut;
                    r <= opts.tol || (gap > r && r <= (100.0 * opts.tol).max(1e-3 * gap))
                }
            }
        };
        if full || (iterations > 0 && wanted_ok && edge_ok) {
            let vectors = ritz.vectors.columns(0, wanted).into_owned();
            return Ok(Eigenpairs {
                values: ritz.values[..wanted].to_vec(),
                vectors,
                residuals: ritz.residuals[..wanted].to_vec(),
                iterations,
            });
        }
        if iterations >= opts.max_iterations {
            let worst = ritz.residuals[..wanted.max(1).min(block)]
                .iter()
                .copied()
                .fold(0.0, f64::max);
            return Err(Error::NotConverged {
                iterations,
                worst_residual: worst,
            });
        }

        let a = ritz.values[block - 1];
        let lower = ritz.values[0].min(a - 1e-6 * (bound - a).abs().max(1.0));
        let x = if a < bound {
            chebyshev_filter(op, &ritz.vectors, opts.degree, lower, a, bound)
        } else {
            apply_block(op, &ritz.vectors)
        };
        ritz = rayleigh_ritz(op, x)?;
        iterations += 1;
    }
}

/// The `count` smallest eigenpairs.
pub fn lowest_eigenpairs(op: &impl HermitianOperator, count: usize, seed: u64, opts: SolverOptions) -> Result<Eigenpairs> {
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidInput(format!(
            "requested {count} eigenpairs of a {}-dimensional operator",
            op.dim()
        )));
    }
    solve(op, Target::Count(count), count + opts.buffer, seed, opts)
}

/// Every eigenpair with eigenvalue at most `cutoff`; `expected` sizes the
/// initial block and is enlarged as needed.
pub fn eigenpairs_below(op: &impl HermitianOperator, cutoff: f64, expected: usize, seed: u64, opts: SolverOptions) -> Result<Eigenpairs> {
    if !cutoff.is_finite() {
        return Err(Error::NonFinite("cutoff"));
    }
    solve(op, Target::Below(cutoff), expected + opts.buffer, seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal(Vec<f64>);

    impl HermitianOperator for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
                *yi = xi * d;
            }
        }
        fn spectral_bound(&self) -> f64 {
            self.0.iter().copied().fold(0.0, f64::max)
        }
    }

    #[test]
    fn degenerate_diagonal_spectrum() {
        // levels 1, 2, 3, … with multiplicity equal to the level
        let mut d = Vec::new();
        for level in 1..=30 {
            d.extend(std::iter::repeat(level as f64).take(level));
        }
        let op = Diagonal(d);
        let e = eigenpairs_below(&op, 6.5, 10, 7, SolverOptions::default()).unwrap();
        assert_eq!(e.values.len(), 21);
        assert!((e.values[20] - 6.0).abs() < 1e-10);
        assert!(e.residuals.iter().all(|&r| r <= 1e-8));

        let e = lowest_eigenpairs(&op, 4, 3, SolverOptions::default()).unwrap();
        let want = [1.0, 2.0, 2.0, 3.0];
        assert!(e.values.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn dense_matches_direct_solver() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_block(n, n, &mut rng);
        let h = &m * m.adjoint();
        let op = DenseHermitian::new(h.clone()).unwrap();
        let e = lowest_eigenpairs(&op, 5, 1, SolverOptions::default()).unwrap();
        let mut exact: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        exact.sort_by(f64::total_cmp);
        for i in 0..5 {
            assert!((e.values[i] - exact[i]).abs() < 1e-8 * exact[n - 1]);
        }
    }

    #[test]
    fn rejects_bad_counts() {
        let op = Diagonal(vec![1.0, 2.0]);
        assert!(lowest_eigenpairs(&op, 0, 0, SolverOptions::default()).is_err());
        assert!(lowest_eigenpairs(&op, 3, 0, SolverOptions::default()).is_err());
    }
}
