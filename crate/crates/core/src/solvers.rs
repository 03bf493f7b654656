//! Linear solves, symmetric eigenproblems and the flutter coalescence sweep.
//!
//! Every routine works on already reduced (constrained) operators.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{symmetric_largest, unsymmetric_smallest, BandMatrix, KrylovOptions};
use crate::{Error, Result};

/// Required `||K x - f|| / ||f||` of a static solution.
pub const STATIC_RESIDUAL: f64 = 1e-10;

/// Fallback acceptance: componentwise backward error
/// `max_i |r_i| / (|K| |x| + |f|)_i`. Nearly singular shear terms of very
/// thin plates cancel in `K x`, putting `||r|| / ||f||` out of reach of any
/// double precision `x`; such a solution is still exact for a perturbation of
/// `K` and `f` at this relative size.
pub const STATIC_BACKWARD_ERROR: f64 = 1e-12;

/// Componentwise backward error of `x` for `K x = f` given the residual `r`.
pub fn backward_error(k: &BandMatrix, x: &[f64], f: &[f64], r: &[f64]) -> f64 {
    let scale = k.abs_mul_vec(x);
    r.iter()
        .zip(scale.iter().zip(f))
        .map(|(ri, (s, fi))| {
            let d = s + fi.abs();
            if d == 0.0 {
                if *ri == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ri.abs() / d
            }
        })
        .fold(0.0, f64::max)
}

const REFINEMENT_STEPS: usize = 5;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `K x = f`, by Cholesky when `K` is positive definite and by
/// pivoted LU otherwise (e.g. a stiffness softened by thermal prestress).
pub fn solve_static(k: &BandMatrix, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != k.dim() {
        return Err(Error::Internal(format!("load vector has {} entries, system order is {}", f.len(), k.dim())));
    }
    let fnorm = norm(f);
    if fnorm == 0.0 {
        return Ok(vec![0.0; f.len()]);
    }
    enum Factor {
        Cholesky(crate::linalg::BandCholesky),
        Lu(crate::linalg::BandLu),
    }
    let factor = match k.cholesky() {
        Ok(c) => Factor::Cholesky(c),
        Err(Error::Singular { .. }) => Factor::Lu(k.lu()?),
        Err(e) => return Err(e),
    };
    let solve = |b: &[f64]| match &factor {
        Factor::Cholesky(c) => c.solve(b),
        Factor::Lu(lu) => lu.solve(b),
    };
    let residual = |x: &[f64]| -> Vec<f64> { k.mul_vec(x).iter().zip(f).map(|(a, b)| b - a).collect() };
    let mut x = solve(f);
    let mut r = residual(&x);
    let mut rel = norm(&r) / fnorm;
    // Thin plates give condition numbers near 1e12; a few correction
    // steps recover the residual lost in the factorization.
    for _ in 0..REFINEMENT_STEPS {
        if rel <= STATIC_RESIDUAL {
            break;
        }
        let dx = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let r_trial = residual(&trial);
        let rel_trial = norm(&r_trial) / fnorm;
        if !(rel_trial < rel) {
            break;
        }
        (x, r, rel) = (trial, r_trial, rel_trial);
    }
    if !(rel <= STATIC_RESIDUAL || backward_error(k, &x, f, &r) <= STATIC_BACKWARD_ERROR) {
        return Err(Error::Convergence { requested: 1, converged: 0, basis: k.dim(), residual: rel });
    }
    Ok(x)
}

/// Real eigenpairs in ascending order of eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Lowest `modes` squared circular frequencies of `K x = omega^2 M x`.
pub fn solve_vibration(k: &BandMatrix, m: &BandMatrix, modes: usize, opts: &KrylovOptions) -> Result<EigenResult> {
    let factor = k.cholesky()?;
    let pairs = symmetric_largest(k, &factor, m, modes, true, opts)?;
    Ok(EigenResult {
        values: pairs.mu.iter().map(|mu| 1.0 / mu).collect(),
        vectors: pairs.vectors,
        residuals: pairs.residuals,
    })
}

/// Smallest positive load factors of `(K + lambda K_G) x = 0`, where `K_G`
/// is the geometric stiffness of the unit prestress state.
pub fn solve_buckling(
    k: &BandMatrix,
    geometric: &BandMatrix,
    modes: usize,
    opts: &KrylovOptions,
) -> Result<EigenResult> {
    let factor = k.cholesky()?;
    let mut b = geometric.clone();
    b.scale(-1.0);
    let pairs = symmetric_largest(k, &factor, &b, modes, true, opts)?;
    Ok(EigenResult {
        values: pairs.mu.iter().map(|mu| 1.0 / mu).collect(),
        vectors: pairs.vectors,
        residuals: pairs.residuals,
    })
}

/// Controls for [`flutter_sweep`]. `lambda_max` is in the units of the
/// aerodynamic operator passed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlutterOptions {
    pub lambda_max: f64,
    pub steps: usize,
    pub branches: usize,
    /// A branch counts as coalesced when `|Im w2| > tol |w2|`.
    pub coalescence_tol: f64,
    /// Bisection stops at this relative bracket width.
    pub refine_tol: f64,
    pub krylov: KrylovOptions,
}

impl FlutterOptions {
    pub fn new(lambda_max: f64) -> Self {
        Self {
            lambda_max,
            steps: 200,
            branches: 6,
            coalescence_tol: 1e-6,
            refine_tol: 1e-4,
            krylov: KrylovOptions::default(),
        }
    }
}

/// Tracked branches `omega^2` at one aerodynamic pressure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlutterPoint {
    pub lambda: f64,
    pub omega_sq: Vec<(f64, f64)>,
    pub coalesced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FlutterOutcome {
    /// First coalescence at `lambda`, with `Re omega^2` of the merged pair.
    Coalescence {
        lambda: f64,
        omega_sq: f64,
    },
    StableUpTo {
        lambda_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlutterResult {
    pub outcome: FlutterOutcome,
    pub trace: Vec<FlutterPoint>,
}

struct Sample {
    lambda: f64,
    values: Vec<Complex<f64>>,
    vectors: Vec<(Vec<f64>, Vec<f64>)>,
    coalesced: bool,
}

fn is_coalesced(values: &[Complex<f64>], tol: f64) -> bool {
    values.iter().any(|v| v.im.abs() > tol * v.norm())
}

fn sample(k: &BandMatrix, aero: &BandMatrix, m: &BandMatrix, lambda: f64, opts: &FlutterOptions) -> Result<Sample> {
    let a = k.add_scaled(lambda, aero);
    let lu = a.lu()?;
    let pairs = unsymmetric_smallest(&a, &lu, m, opts.branches, &opts.krylov)?;
    let coalesced = is_coalesced(&pairs.values, opts.coalescence_tol);
    Ok(Sample { lambda, values: pairs.values, vectors: pairs.vectors, coalesced })
}

/// Modal assurance between two complex vectors given as (re, im) parts.
fn mac(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (mut re, mut im, mut na, mut nb) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.0.len() {
        // conj(a) . b
        re += a.0[i] * b.0[i] + a.1[i] * b.1[i];
        im += a.0[i] * b.1[i] - a.1[i] * b.0[i];
        na += a.0[i] * a.0[i] + a.1[i] * a.1[i];
        nb += b.0[i] * b.0[i] + b.1[i] * b.1[i];
    }
    (re * re + im * im) / (na * nb)
}

/// Greedy MAC matching: returns the indices of `current` ordered like `previous`.
fn match_branches(previous: &[(Vec<f64>, Vec<f64>)], current: &[(Vec<f64>, Vec<f64>)]) -> Vec<usize> {
    let mut scores = Vec::new();
    for (i, p) in previous.iter().enumerate() {
        for (j, c) in current.iter().enumerate() {
            scores.push((mac(p, c), i, j));
        }
    }
    scores.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut order = vec![usize::MAX; previous.len().min(current.len())];
    let mut used = vec![false; current.len()];
    for (_, i, j) in scores {
        if i < order.len() && order[i] == usize::MAX && !used[j] {
            order[i] = j;
            used[j] = true;
        }
    }
    order
}

/// Sweeps `lambda` from zero in `steps` increments looking for the first
/// merger of two branches of `(K + lambda A) x = omega^2 M x`, then bisects.
///
/// Coarse points are evaluated in parallel chunks and the scan stops at the
/// first chunk that contains a coalescence. Branch order in the trace
/// follows modal assurance with the previous point rather than sorting.
pub fn flutter_sweep(
    k: &BandMatrix,
    aero: &BandMatrix,
    m: &BandMatrix,
    opts: &FlutterOptions,
) -> Result<FlutterResult> {
    if !(opts.lambda_max > 0.0) || opts.steps == 0 {
        return Err(Error::Configuration("flutter sweep needs lambda_max > 0 and at least one step".into()));
    }
    let step = opts.lambda_max / opts.steps as f64;
    let chunk = rayon::current_num_threads().max(1) * 2;
    let mut trace: Vec<FlutterPoint> = Vec::new();
    let mut previous: Option<Vec<(Vec<f64>, Vec<f64>)>> = None;
    let mut last_stable: Option<f64> = None;
    let mut first_hit: Option<Sample> = None;
    let mut i0 = 0;
    'scan: while i0 <= opts.steps {
        let i1 = (i0 + chunk).min(opts.steps + 1);
        let samples: Vec<Sample> =
            (i0..i1).into_par_iter().map(|i| sample(k, aero, m, i as f64 * step, opts)).collect::<Result<_>>()?;
        for s in samples {
            let order = match &previous {
                Some(p) => match_branches(p, &s.vectors),
                None => (0..s.values.len()).collect(),
            };
            trace.push(FlutterPoint {
                lambda: s.lambda,
                omega_sq: order.iter().map(|&j| (s.values[j].re, s.values[j].im)).collect(),
                coalesced: s.coalesced,
            });
            if s.coalesced {
                first_hit = Some(s);
                break 'scan;
            }
            last_stable = Some(s.lambda);
            previous = Some(order.iter().map(|&j| s.vectors[j].clone()).collect());
        }
        i0 = i1;
    }
    let Some(hit) = first_hit else {
        return Ok(FlutterResult { outcome: FlutterOutcome::StableUpTo { lambda_max: opts.lambda_max }, trace });
    };
    let Some(mut lo) = last_stable else {
        return Err(Error::Domain("branches are already complex at zero aerodynamic pressure".into()));
    };
    let mut hi = hit.lambda;
    let mut hi_values = hit.values;
    while (hi - lo) > opts.refine_tol * hi {
        let mid = 0.5 * (lo + hi);
        let s = sample(k, aero, m, mid, opts)?;
        if s.coalesced {
            hi = mid;
            hi_values = s.values;
        } else {
            lo = mid;
        }
    }
    let merged = hi_values
        .iter()
        .max_by(|a, b| (a.im.abs() / a.norm()).total_cmp(&(b.im.abs() / b.norm())))
        .copied()
        .ok_or_else(|| Error::Internal("no branches at the coalescence point".into()))?;
    Ok(FlutterResult { outcome: FlutterOutcome::Coalescence { lambda: 0.5 * (lo + hi), omega_sq: merged.re }, trace })
}
