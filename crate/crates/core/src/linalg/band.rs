use nalgebra::DMatrix;

use crate::{Error, Result};

/// Square matrix with `lower` sub- and `upper` super-diagonals, stored by
/// rows: row `i` keeps columns `i - lower ..= i + upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        Self { n, lower, upper, data: vec![0.0; n * (lower + upper + 1)] }
    }

    pub fn symmetric_zeros(n: usize, half_bandwidth: usize) -> Self {
        Self::zeros(n, half_bandwidth, half_bandwidth)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !self.in_band(i, j) {
            return Err(Error::Internal(format!(
                "entry ({i}, {j}) outside band ({}, {}) of order {}",
                self.lower, self.upper, self.n
            )));
        }
        let k = self.offset(i, j);
        self.data[k] += value;
        Ok(())
    }

    /// Column range held by row `i`.
    fn row_cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `|A| |x|` entrywise, the scale of rounding errors in `A x`.
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let cols = self.row_cols(i);
                let base = self.offset(i, cols.start);
                let row = &self.data[base..base + cols.len()];
                row.iter().zip(&x[cols]).map(|(a, b)| (a * b).abs()).sum()
            })
            .collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let cols = self.row_cols(i);
            let base = self.offset(i, cols.start);
            let row = &self.data[base..base + cols.len()];
            *yi = row.iter().zip(&x[cols]).map(|(a, b)| a * b).sum();
        }
    }

    /// `self + factor * other`, widened to the larger band.
    pub fn add_scaled(&self, factor: f64, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(self.n, self.lower.max(other.lower), self.upper.max(other.upper));
        for m in [(1.0, self), (factor, other)] {
            for i in 0..self.n {
                for j in m.1.row_cols(i) {
                    let k = out.offset(i, j);
                    out.data[k] += m.0 * m.1.get(i, j);
                }
            }
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Iterator over stored entries `(i, j, value)` inside the matrix.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row_cols(i).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.row_cols(i) {
                if j > i {
                    worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }

    /// Replaces both triangles by their average.
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in self.row_cols(i) {
                if j > i && self.in_band(j, i) {
                    let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                    let (a, b) = (self.offset(i, j), self.offset(j, i));
                    self.data[a] = avg;
                    self.data[b] = avg;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn from_dense(a: &DMatrix<f64>, lower: usize, upper: usize) -> Result<Self> {
        let n = a.nrows();
        let mut b = Self::zeros(n, lower, upper);
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v != 0.0 {
                    b.add(i, j, v)?;
                }
            }
        }
        Ok(b)
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        BandCholesky::factor(self)
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// `A = L L^T` for a symmetric positive definite band matrix; only the lower
/// triangle of the input is read.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i, i - bw ..= i]`.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.lower();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let scale = (0..n).fold(0.0f64, |m, i| m.max(a.get(i, i).abs()));
        let tiny = scale * 1e-14;
        let mut bad = Vec::new();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = a.get(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                // L[i, k] at l[i*w + k + bw - i]
                let li = &l[i * w..(i + 1) * w];
                let lj = &l[j * w..(j + 1) * w];
                for k in k0..j {
                    s -= li[k + bw - i] * lj[k + bw - j];
                }
                if j == i {
                    if !(s > tiny) {
                        bad.push(i);
                        s = scale.max(1.0);
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + j + bw - i] = s / l[j * w + bw];
                }
            }
        }
        if let Some(&first) = bad.first() {
            return Err(Error::Singular { null_dim: bad.len(), first });
        }
        Ok(Self { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let row = &self.l[i * w..(i + 1) * w];
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= row[k + bw - i] * x[k];
            }
            x[i] = s / row[bw];
        }
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * w + bw];
            x[i] = xi;
            for k in i.saturating_sub(bw)..i {
                x[k] -= self.l[i * w + k + bw - i] * xi;
            }
        }
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * (self.bw + 1) + self.bw].ln()).sum()
    }
}

/// Band LU with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    lower: usize,
    /// Width of each `u` row: columns `i - lower ..= i + lower + upper`.
    span: usize,
    u: Vec<f64>,
    /// `mult[k * lower + r]` eliminates row `k + 1 + r` with pivot row `k`.
    mult: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = (a.lower(), a.upper());
        let span = 2 * kl + ku + 1;
        let mut u = vec![0.0; n * span];
        let at = |i: usize, j: usize| i * span + (j + kl - i);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                u[at(i, j)] = a.get(i, j);
            }
        }
        let scale = a.max_abs();
        let tiny = scale * 1e-14;
        let mut mult = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        let mut bad = Vec::new();
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = u[at(k, k)].abs();
            for r in k + 1..=last_row {
                let v = u[at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    u.swap(at(k, j), at(p, j));
                }
            }
            let piv = u[at(k, k)];
            if !(piv.abs() > tiny) {
                bad.push(k);
                continue;
            }
            for r in k + 1..=last_row {
                let m = u[at(r, k)] / piv;
                mult[k * kl + (r - k - 1)] = m;
                u[at(r, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        u[at(r, j)] -= m * u[at(k, j)];
                    }
                }
            }
        }
        if let Some(&first) = bad.first() {
            return Err(Error::Singular { null_dim: bad.len(), first });
        }
        Ok(Self { n, lower: kl, span, u, mult, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, span) = (self.n, self.lower, self.span);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    x[r] -= self.mult[k * kl + (r - k - 1)] * xk;
                }
            }
        }
        let reach = span - kl - 1;
        for i in (0..n).rev() {
            let base = i * span + kl - i;
            let mut s = x[i];
            for j in i + 1..(i + reach + 1).min(n) {
                s -= self.u[base + j] * x[j];
            }
            x[i] = s / self.u[base + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                a.add(i, j, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        a
    }

    fn spd_band(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let r = random_band(n, bw, bw, seed);
        let mut a = BandMatrix::symmetric_zeros(n, bw);
        for (i, j, v) in r.entries() {
            a.add(i, j, 0.5 * v).unwrap();
            a.add(j, i, 0.5 * v).unwrap();
        }
        for i in 0..n {
            a.add(i, i, 2.0 * bw as f64 + 2.0).unwrap();
        }
        a
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_band(30, 3, 5, 1);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let y = a.mul_vec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..30 {
            assert!((y[i] - yd[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = spd_band(60, 7, 2);
        let chol = a.cholesky().unwrap();
        let b: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 * 0.1).collect();
        let x = chol.solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..60 {
            assert!((r[i] - b[i]).abs() < 1e-11);
        }
        let dense = a.to_dense().cholesky().unwrap();
        let ld: f64 = dense.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        assert!((chol.log_det() - ld).abs() < 1e-10);
    }

    #[test]
    fn cholesky_reports_singularity() {
        let mut a = BandMatrix::symmetric_zeros(4, 1);
        for i in 0..4 {
            a.add(i, i, if i == 2 { 0.0 } else { 1.0 }).unwrap();
        }
        match a.cholesky() {
            Err(Error::Singular { null_dim, first }) => {
                assert_eq!((null_dim, first), (1, 2));
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn lu_solves_unsymmetric_system_needing_pivots() {
        for seed in 0..5 {
            let mut a = random_band(50, 4, 2, 10 + seed);
            // Zero a few diagonal entries so pivoting is exercised.
            for i in (0..50).step_by(7) {
                let d = a.get(i, i);
                a.add(i, i, -d).unwrap();
            }
            let lu = a.lu().unwrap();
            let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos()).collect();
            let x = lu.solve(&b);
            let r = a.mul_vec(&x);
            let xd = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for i in 0..50 {
                assert!((r[i] - b[i]).abs() < 1e-9, "seed {seed} row {i}");
                assert!((x[i] - xd[i]).abs() < 1e-8 * xd.amax().max(1.0));
            }
        }
    }

    #[test]
    fn lu_reports_singularity() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0).unwrap();
        a.add(2, 2, 1.0).unwrap();
        assert!(matches!(a.lu(), Err(Error::Singular { .. })));
    }

    #[test]
    fn out_of_band_add_is_rejected() {
        let mut a = BandMatrix::zeros(5, 1, 1);
        assert!(a.add(0, 3, 1.0).is_err());
    }

    #[test]
    fn symmetrize_and_asymmetry() {
        let mut a = random_band(20, 3, 3, 7);
        assert!(a.asymmetry() > 0.0);
        a.symmetrize();
        assert_eq!(a.asymmetry(), 0.0);
    }
}
