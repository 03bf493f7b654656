use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::band::{BandCholesky, BandLu, BandMatrix};
use crate::{Error, Result};

/// Controls for the block Krylov eigensolvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub block_size: usize,
    pub max_basis: usize,
    /// Required `||A x - lambda B x|| / ||A x||` for every returned pair.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { block_size: 4, max_basis: 600, tolerance: 1e-8, seed: 0x5eed_1a7e }
    }
}

/// Eigenpairs of a symmetric pencil, reported as `mu = 1 / lambda` in
/// descending order.
#[derive(Debug, Clone)]
pub struct SymmetricPairs {
    pub mu: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub basis_size: usize,
}

/// Eigenpairs `(A - omega2 M) x = 0` of an unsymmetric pencil, sorted by
/// ascending real part.
#[derive(Debug, Clone)]
pub struct ComplexPairs {
    pub values: Vec<Complex<f64>>,
    /// Real and imaginary parts of each eigenvector.
    pub vectors: Vec<(Vec<f64>, Vec<f64>)>,
    pub residuals: Vec<f64>,
    pub basis_size: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn random_block(n: usize, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Largest eigenvalues `mu` of `B x = mu K x` with `K` positive definite.
///
/// Equivalent to the smallest `lambda = 1/mu` of `K x = lambda B x`. The
/// Krylov space of `K^-1 B` is built with `K`-orthonormal blocks and the
/// projected pencil is solved densely. With `positive_only`, only `mu > 0`
/// is sought, which gives the smallest positive critical factor when `B` is
/// indefinite.
pub fn symmetric_largest(
    k: &BandMatrix,
    k_factor: &BandCholesky,
    b: &BandMatrix,
    nev: usize,
    positive_only: bool,
    opts: &KrylovOptions,
) -> Result<SymmetricPairs> {
    let n = k.dim();
    if nev == 0 || nev > n {
        return Err(Error::Configuration(format!("cannot extract {nev} eigenpairs from a system of order {n}")));
    }
    let max_basis = opts.max_basis.max(nev + 2 * opts.block_size).min(n);
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut kv: Vec<Vec<f64>> = Vec::new();
    let mut bv: Vec<Vec<f64>> = Vec::new();
    let op = |x: &[f64]| k_factor.solve(&b.mul_vec(x));
    let mut block: Vec<Vec<f64>> = random_block(n, opts.block_size.max(1), opts.seed).iter().map(|x| op(x)).collect();
    let mut worst = f64::INFINITY;
    let mut found = 0;
    loop {
        let mut added = Vec::new();
        for mut w in block.drain(..) {
            if v.len() >= max_basis {
                break;
            }
            let kw0 = k.mul_vec(&w);
            let n0 = dot(&w, &kw0).max(0.0).sqrt();
            if !(n0 > 0.0) {
                continue;
            }
            for _ in 0..2 {
                for (vj, kvj) in v.iter().zip(&kv) {
                    let c = dot(kvj, &w);
                    axpy(-c, vj, &mut w);
                }
            }
            let kw = k.mul_vec(&w);
            let nw = dot(&w, &kw).max(0.0).sqrt();
            if nw <= 1e-10 * n0 {
                continue;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            let kw: Vec<f64> = kw.iter().map(|x| x / nw).collect();
            let bw = b.mul_vec(&w);
            v.push(w);
            kv.push(kw);
            bv.push(bw);
            added.push(v.len() - 1);
        }
        let exhausted = added.is_empty() || v.len() >= max_basis;
        let m = v.len();
        if m >= nev + opts.block_size || exhausted {
            let kp = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&v[i], &kv[j]) + dot(&v[j], &kv[i])));
            let bp = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&v[i], &bv[j]) + dot(&v[j], &bv[i])));
            let chol = kp.cholesky().ok_or_else(|| Error::Internal("projected stiffness lost definiteness".into()))?;
            let linv = chol
                .l()
                .try_inverse()
                .ok_or_else(|| Error::Internal("projected stiffness factor not invertible".into()))?;
            let c = &linv * &bp * linv.transpose();
            let c = (&c + c.transpose()) * 0.5;
            let eig = SymmetricEigen::new(c);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let chosen: Vec<usize> =
                order.into_iter().filter(|&i| !positive_only || eig.eigenvalues[i] > 0.0).take(nev).collect();
            let mut mus = Vec::new();
            let mut vecs = Vec::new();
            let mut res = Vec::new();
            for &i in &chosen {
                let mu = eig.eigenvalues[i];
                let y = linv.transpose() * eig.eigenvectors.column(i);
                let mut x = vec![0.0; n];
                let mut kx = vec![0.0; n];
                let mut bx = vec![0.0; n];
                for j in 0..m {
                    axpy(y[j], &v[j], &mut x);
                    axpy(y[j], &kv[j], &mut kx);
                    axpy(y[j], &bv[j], &mut bx);
                }
                // K x - (1/mu) B x, scaled by mu to avoid dividing by tiny mu.
                let r: Vec<f64> = kx.iter().zip(&bx).map(|(a, b)| mu * a - b).collect();
                let denom = mu.abs() * norm(&kx);
                res.push(if denom > 0.0 { norm(&r) / denom } else { f64::INFINITY });
                let s = norm(&x);
                vecs.push(x.into_iter().map(|t| t / s).collect::<Vec<_>>());
                mus.push(mu);
            }
            worst = res.iter().cloned().fold(0.0, f64::max);
            found = res.iter().filter(|&&r| r <= opts.tolerance).count();
            let complete = mus.len() == nev || (positive_only && exhausted);
            if complete && res.iter().all(|&r| r <= opts.tolerance) {
                if mus.is_empty() {
                    return Err(Error::NoPositiveEigenvalue);
                }
                return Ok(SymmetricPairs { mu: mus, vectors: vecs, residuals: res, basis_size: m });
            }
            if exhausted {
                if positive_only && mus.is_empty() {
                    return Err(Error::NoPositiveEigenvalue);
                }
                return Err(Error::Convergence { requested: nev, converged: found, basis: m, residual: worst });
            }
        }
        block = added.iter().map(|&j| k_factor.solve(&bv[j])).collect();
        if block.is_empty() {
            return Err(Error::Convergence { requested: nev, converged: found, basis: v.len(), residual: worst });
        }
    }
}

/// The `nev` eigenvalues of `A x = omega2 M x` nearest zero, for
/// unsymmetric `A` and symmetric positive definite `M`.
///
/// Works on `A^-1 M` with a Euclidean-orthonormal block Arnoldi basis; Ritz
/// vectors come from inverse iteration on the small Hessenberg-like
/// projection.
pub fn unsymmetric_smallest(
    a: &BandMatrix,
    a_factor: &BandLu,
    m: &BandMatrix,
    nev: usize,
    opts: &KrylovOptions,
) -> Result<ComplexPairs> {
    let n = a.dim();
    if nev == 0 || nev > n {
        return Err(Error::Configuration(format!("cannot extract {nev} eigenpairs from a system of order {n}")));
    }
    let max_basis = opts.max_basis.max(nev + 2 * opts.block_size).min(n);
    let op = |x: &[f64]| a_factor.solve(&m.mul_vec(x));
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<Vec<f64>> = Vec::new();
    let mut block: Vec<Vec<f64>> = random_block(n, opts.block_size.max(1), opts.seed).iter().map(|x| op(x)).collect();
    loop {
        let mut added = Vec::new();
        for mut x in block.drain(..) {
            if v.len() >= max_basis {
                break;
            }
            let n0 = norm(&x);
            if !(n0 > 0.0) {
                continue;
            }
            for _ in 0..2 {
                for vj in &v {
                    let c = dot(vj, &x);
                    axpy(-c, vj, &mut x);
                }
            }
            let nx = norm(&x);
            if nx <= 1e-10 * n0 {
                continue;
            }
            x.iter_mut().for_each(|t| *t /= nx);
            w.push(op(&x));
            v.push(x);
            added.push(v.len() - 1);
        }
        let exhausted = added.is_empty() || v.len() >= max_basis;
        let dim = v.len();
        if dim >= nev + opts.block_size || exhausted {
            let h = DMatrix::from_fn(dim, dim, |i, j| dot(&v[i], &w[j]));
            let nus = h.complex_eigenvalues();
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&i, &j| nus[j].norm().total_cmp(&nus[i].norm()));
            let mut pairs = Vec::new();
            for &i in order.iter().take(nev) {
                let nu = nus[i];
                if nu.norm() == 0.0 {
                    continue;
                }
                let y = ritz_direction(&h, nu, opts.seed);
                let mut xr = vec![0.0; n];
                let mut xi = vec![0.0; n];
                for j in 0..dim {
                    axpy(y[j].re, &v[j], &mut xr);
                    axpy(y[j].im, &v[j], &mut xi);
                }
                let omega2 = Complex::new(1.0, 0.0) / nu;
                let (ar, ai) = (a.mul_vec(&xr), a.mul_vec(&xi));
                let (mr, mi) = (m.mul_vec(&xr), m.mul_vec(&xi));
                let mut rr = 0.0;
                let mut ax = 0.0;
                for t in 0..n {
                    let re = ar[t] - (omega2.re * mr[t] - omega2.im * mi[t]);
                    let im = ai[t] - (omega2.re * mi[t] + omega2.im * mr[t]);
                    rr += re * re + im * im;
                    ax += ar[t] * ar[t] + ai[t] * ai[t];
                }
                let res = if ax > 0.0 { (rr / ax).sqrt() } else { f64::INFINITY };
                pairs.push((omega2, (xr, xi), res));
            }
            let worst = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
            let found = pairs.iter().filter(|p| p.2 <= opts.tolerance).count();
            if pairs.len() == nev && found == nev {
                pairs.sort_by(|p, q| p.0.re.total_cmp(&q.0.re).then(p.0.im.total_cmp(&q.0.im)));
                let mut out =
                    ComplexPairs { values: Vec::new(), vectors: Vec::new(), residuals: Vec::new(), basis_size: dim };
                for (val, vecs, res) in pairs {
                    out.values.push(val);
                    out.vectors.push(vecs);
                    out.residuals.push(res);
                }
                return Ok(out);
            }
            if exhausted {
                return Err(Error::Convergence { requested: nev, converged: found, basis: dim, residual: worst });
            }
        }
        block = added.iter().map(|&j| w[j].clone()).collect();
    }
}

/// Unit eigenvector of the small dense `h` for eigenvalue `nu` by inverse
/// iteration with a slightly perturbed shift.
fn ritz_direction(h: &DMatrix<f64>, nu: Complex<f64>, seed: u64) -> DVector<Complex<f64>> {
    let dim = h.nrows();
    let hc: DMatrix<Complex<f64>> = h.map(|x| Complex::new(x, 0.0));
    let shift = nu * Complex::new(1.0 + 1e-12, 1e-13) + Complex::new(1e-300, 0.0);
    let shifted = &hc - DMatrix::<Complex<f64>>::identity(dim, dim) * shift;
    let lu = shifted.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut y = DVector::from_fn(dim, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    for _ in 0..3 {
        match lu.solve(&y) {
            Some(z) if z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) => {
                let s = z.norm();
                if s > 0.0 {
                    y = z / Complex::new(s, 0.0);
                }
            }
            _ => break,
        }
    }
    // Fix the phase so the largest component is real and positive.
    let (imax, _) =
        y.iter().enumerate().fold((0, 0.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let phase = y[imax] / Complex::new(y[imax].norm(), 0.0);
    y.map(|c| c / phase)
}

/// Generalized eigenvalues of the dense symmetric pencil `(K, M)` with `M`
/// positive definite, ascending. Reference path for small systems.
pub fn dense_generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::Domain("mass-like matrix is not positive definite".into()))?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::Internal("Cholesky factor not invertible".into()))?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}
