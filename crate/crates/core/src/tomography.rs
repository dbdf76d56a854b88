//! Maximum-likelihood reconstruction of a two-mode state from quadrature
//! samples by the unbinned `R rho R` iteration, plus bootstrap errors.
//!
//! The likelihood of one pair `(x1, x2)` in basis `(phi1, phi2)` is
//! `v^dagger rho v` with `v = D psi`, where `psi_{kl} = psi_k(x1) psi_l(x2)`
//! is real and `D = diag(exp(-i (phi1 k + phi2 l)))`. Per basis we work with
//! the real matrix `Re(D^dagger rho D)`, which keeps the per-sample cost in
//! real arithmetic.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{hermitize, trace_norm, Cutoff, DensityMatrix, C64};
use crate::homodyne::{default_bases, HomodyneBasis, QuadratureBatch};
use crate::seeds::substream;
use crate::special::hermite_functions;

const CHUNK: usize = 2048;
const MIN_DAMPING: f64 = 1.0 / 1024.0;
const LIKELIHOOD_SLACK: f64 = 1e-12;
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyPlan {
    pub bases: Vec<HomodyneBasis>,
    pub samples_per_basis: usize,
    pub cutoff: Cutoff,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl Default for TomographyPlan {
    fn default() -> Self {
        TomographyPlan {
            bases: default_bases(7),
            samples_per_basis: 3000,
            cutoff: Cutoff::new(3).expect("valid cutoff"),
            max_iterations: 2000,
            convergence_tol: 1e-6,
        }
    }
}

impl TomographyPlan {
    pub fn validate(&self) -> Result<()> {
        if self.bases.is_empty() {
            return Err(Error::InvalidParameter("tomography plan has no bases".into()));
        }
        if self.samples_per_basis == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "samples per basis and iteration limit must be positive".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// `|x1,phi1><x1,phi1| (x) |x2,phi2><x2,phi2|` in the truncated Fock basis.
pub fn povm_element(x1: f64, x2: f64, basis: &HomodyneBasis, cutoff: Cutoff) -> DMatrix<C64> {
    let n = cutoff.n_max();
    let (p1, p2) = (hermite_functions(x1, n), hermite_functions(x2, n));
    let v: Vec<C64> = cutoff
        .basis()
        .map(|(k, l)| {
            C64::from_polar(
                p1[k] * p2[l],
                -(basis.phi1() * k as f64 + basis.phi2() * l as f64),
            )
        })
        .collect();
    let d = v.len();
    DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleDiagnostics {
    /// Mean log-likelihood per sample after each accepted iterate, starting
    /// with the initial state.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub final_update_norm: f64,
    pub converged: bool,
    /// Number of iterations that fell back to a damped step.
    pub damped_steps: usize,
    /// Fewer samples than ten times the squared Hilbert dimension.
    pub low_sample_warning: bool,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub state: DensityMatrix,
    pub diagnostics: MleDiagnostics,
}

struct Block {
    phases: Vec<C64>,
    /// `n * dim` product wave functions, one row per sample.
    psi: Vec<f64>,
    n: usize,
}

struct Prepared {
    cutoff: Cutoff,
    dim: usize,
    blocks: Vec<Block>,
    total: usize,
}

fn prepare(data: &[QuadratureBatch], cutoff: Cutoff) -> Result<Prepared> {
    if data.is_empty() || data.iter().all(|b| b.is_empty()) {
        return Err(Error::EmptyData);
    }
    let first = data[0].basis();
    if data.iter().all(|b| b.basis() == first) {
        return Err(Error::InvalidParameter(
            "tomography needs at least two distinct bases".into(),
        ));
    }
    let n_max = cutoff.n_max();
    let dim = cutoff.dim();
    let levels: Vec<(usize, usize)> = cutoff.basis().collect();
    let blocks: Vec<Block> = data
        .par_iter()
        .map(|batch| {
            let b = batch.basis();
            let phases = levels
                .iter()
                .map(|&(k, l)| C64::from_polar(1.0, -(b.phi1() * k as f64 + b.phi2() * l as f64)))
                .collect();
            let mut psi = Vec::with_capacity(batch.len() * dim);
            for &(x1, x2) in batch.samples() {
                let (p1, p2) = (hermite_functions(x1, n_max), hermite_functions(x2, n_max));
                psi.extend(levels.iter().map(|&(k, l)| p1[k] * p2[l]));
            }
            Block {
                phases,
                psi,
                n: batch.len(),
            }
        })
        .collect();
    let total = blocks.iter().map(|b| b.n).sum();
    Ok(Prepared {
        cutoff,
        dim,
        blocks,
        total,
    })
}

/// Fixed-shape pairwise reduction, so the summation order depends only on
/// the number of items.
fn pairwise<T: Clone>(items: &[T], combine: &impl Fn(&T, &T) -> T) -> T {
    match items.len() {
        1 => items[0].clone(),
        n => {
            let (a, b) = items.split_at(n / 2);
            combine(&pairwise(a, combine), &pairwise(b, combine))
        }
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Clone)]
struct Partial {
    log_likelihood: f64,
    /// Packed upper triangle of `sum psi psi^T / p`.
    scatter: Vec<f64>,
}

fn add_partials(a: &Partial, b: &Partial) -> Partial {
    Partial {
        log_likelihood: a.log_likelihood + b.log_likelihood,
        scatter: a.scatter.iter().zip(&b.scatter).map(|(x, y)| x + y).collect(),
    }
}

impl Prepared {
    /// Mean log-likelihood of `rho` and the normalized operator
    /// `R = (1/N) sum Pi / p`.
    fn evaluate(&self, rho: &DMatrix<C64>) -> (f64, DMatrix<C64>) {
        let d = self.dim;
        let packed_len = d * (d + 1) / 2;
        // Re(D^dagger rho D) packed as its upper triangle, off-diagonals doubled
        let rotated: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut a = Vec::with_capacity(packed_len);
                for i in 0..d {
                    for j in i..d {
                        let v = (b.phases[i].conj() * rho[(i, j)] * b.phases[j]).re;
                        a.push(if i == j { v } else { 2.0 * v });
                    }
                }
                a
            })
            .collect();
        let tasks: Vec<(usize, usize, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| {
                (0..b.n)
                    .step_by(CHUNK)
                    .map(move |s| (bi, s, (s + CHUNK).min(b.n)))
            })
            .collect();
        let partials: Vec<(usize, Partial)> = tasks
            .par_iter()
            .map(|&(bi, start, end)| {
                let a = &rotated[bi];
                let psi = &self.blocks[bi].psi;
                let mut ll = 0.0;
                let mut scatter = vec![0.0; packed_len];
                let mut products = vec![0.0; packed_len];
                for s in start..end {
                    let v = &psi[s * d..(s + 1) * d];
                    let mut idx = 0;
                    for i in 0..d {
                        let vi = v[i];
                        for &vj in &v[i..] {
                            products[idx] = vi * vj;
                            idx += 1;
                        }
                    }
                    let p = dot(a, &products);
                    let p = p.max(f64::MIN_POSITIVE);
                    ll += p.ln();
                    let inv = 1.0 / p;
                    scatter
                        .iter_mut()
                        .zip(&products)
                        .for_each(|(acc, x)| *acc += x * inv);
                }
                (
                    bi,
                    Partial {
                        log_likelihood: ll,
                        scatter,
                    },
                )
            })
            .collect();

        let per_block: Vec<Partial> = (0..self.blocks.len())
            .map(|bi| {
                let chunks: Vec<Partial> = partials
                    .iter()
                    .filter(|(b, _)| *b == bi)
                    .map(|(_, p)| p.clone())
                    .collect();
                pairwise(&chunks, &add_partials)
            })
            .collect();

        let mut r = DMatrix::<C64>::zeros(d, d);
        let mut ll = Vec::with_capacity(per_block.len());
        for (block, part) in self.blocks.iter().zip(&per_block) {
            ll.push(part.log_likelihood);
            let mut idx = 0;
            for i in 0..d {
                for j in i..d {
                    let z = block.phases[i] * block.phases[j].conj() * part.scatter[idx];
                    idx += 1;
                    r[(i, j)] += z;
                    if i != j {
                        r[(j, i)] += z.conj();
                    }
                }
            }
        }
        let n = self.total as f64;
        let total_ll = pairwise(&ll, &|a: &f64, b: &f64| a + b);
        (total_ll / n, r.unscale(n))
    }
}

/// Mean log-likelihood per sample of `rho` given `data`.
pub fn log_likelihood(rho: &DensityMatrix, data: &[QuadratureBatch]) -> Result<f64> {
    let prepared = prepare(data, rho.cutoff())?;
    Ok(prepared.evaluate(rho.matrix()).0)
}

fn step(r: &DMatrix<C64>, rho: &DMatrix<C64>, damping: f64) -> DMatrix<C64> {
    let d = r.nrows();
    let op = if damping < 1.0 {
        DMatrix::<C64>::identity(d, d).scale(1.0 - damping) + r.scale(damping)
    } else {
        r.clone()
    };
    let next = hermitize(&(&op * rho * &op));
    let tr = next.trace().re;
    next.unscale(tr)
}

/// Reconstructs from the maximally mixed state.
pub fn mle_reconstruct(data: &[QuadratureBatch], plan: &TomographyPlan) -> Result<Reconstruction> {
    let d = plan.cutoff.dim();
    let start = DensityMatrix::from_matrix_unchecked(
        plan.cutoff,
        DMatrix::<C64>::identity(d, d).unscale(d as f64),
    )?;
    mle_reconstruct_from(data, plan, &start)
}

/// Reconstructs starting from `initial`, which must be full rank for the
/// iteration to reach every state.
pub fn mle_reconstruct_from(
    data: &[QuadratureBatch],
    plan: &TomographyPlan,
    initial: &DensityMatrix,
) -> Result<Reconstruction> {
    plan.validate()?;
    if initial.cutoff() != plan.cutoff {
        return Err(Error::DimensionMismatch {
            expected: plan.cutoff.dim(),
            found: initial.cutoff().dim(),
        });
    }
    let prepared = prepare(data, plan.cutoff)?;
    let low_sample_warning = prepared.total < 10 * prepared.dim * prepared.dim;

    let mut rho = initial.matrix().clone();
    let (mut ll, mut r) = prepared.evaluate(&rho);
    let mut trajectory = vec![ll];
    let mut damping: f64 = 1.0;
    let mut damped_steps = 0;
    let mut update_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < plan.max_iterations {
        iterations += 1;
        if damping < 1.0 {
            damped_steps += 1;
        }
        let candidate = step(&r, &rho, damping);
        let (cand_ll, cand_r) = prepared.evaluate(&candidate);
        if cand_ll < ll - LIKELIHOOD_SLACK && damping > MIN_DAMPING {
            damping *= 0.5;
            continue;
        }
        update_norm = trace_norm(&(&candidate - &rho));
        rho = candidate;
        ll = cand_ll;
        r = cand_r;
        trajectory.push(ll);
        debug_assert!(
            DensityMatrix::from_matrix_unchecked(prepared.cutoff, rho.clone())
                .and_then(|s| s.validate())
                .is_ok(),
            "iterate left the set of density matrices"
        );
        if update_norm < plan.convergence_tol {
            converged = true;
            break;
        }
    }

    let state = DensityMatrix::from_matrix_unchecked(prepared.cutoff, rho)?;
    state.validate()?;
    Ok(Reconstruction {
        state,
        diagnostics: MleDiagnostics {
            log_likelihood: trajectory,
            iterations,
            final_update_norm: update_norm,
            converged,
            damped_steps,
            low_sample_warning,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSummary {
    /// Metrics of the point estimate.
    pub point: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    pub resamples: usize,
}

/// Resamples every batch with replacement, reconstructs each resample
/// (warm-started from the point estimate) and reports the spread of
/// `metrics`. Resample `r` draws from the substream `(seed, "bootstrap", r)`.
pub fn bootstrap<F>(
    data: &[QuadratureBatch],
    plan: &TomographyPlan,
    resamples: usize,
    seed: u64,
    metrics: F,
) -> Result<BootstrapSummary>
where
    F: Fn(&DensityMatrix) -> Result<Vec<f64>> + Sync,
{
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let point_estimate = mle_reconstruct(data, plan)?.state;
    let point = metrics(&point_estimate)?;
    // warm start from a slightly mixed point estimate so the support is full
    let d = plan.cutoff.dim();
    let warm = DensityMatrix::from_matrix_unchecked(
        plan.cutoff,
        point_estimate.matrix().scale(1.0 - 1e-3)
            + DMatrix::<C64>::identity(d, d).scale(1e-3 / d as f64),
    )?;

    let values: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, "bootstrap", r as u64);
            let resampled: Vec<QuadratureBatch> = data
                .iter()
                .map(|batch| {
                    let s = batch.samples();
                    let picked = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect();
                    QuadratureBatch::new(batch.basis(), picked)
                })
                .collect::<Result<_>>()?;
            let rec = mle_reconstruct_from(&resampled, plan, &warm)?;
            metrics(&rec.state)
        })
        .collect::<Result<_>>()?;

    let m = point.len();
    let n = values.len() as f64;
    let mean: Vec<f64> = (0..m)
        .map(|k| values.iter().map(|v| v[k]).sum::<f64>() / n)
        .collect();
    let std_dev = (0..m)
        .map(|k| {
            let var = values.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt()
        })
        .collect();
    Ok(BootstrapSummary {
        point,
        mean,
        std_dev,
        resamples,
    })
}
