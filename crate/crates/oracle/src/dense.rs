//! Dense matrix reference arithmetic.

/// Row-major dense matrix, possibly rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                y[j] += self.get(i, j) * x[i];
            }
        }
        y
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.add(i, j, aik * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Direct solve by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut aug = self.a.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            let mut best = aug[col * n + col].abs();
            for r in col + 1..n {
                let v = aug[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            assert!(best > 0.0, "singular matrix in dense solve");
            if piv != col {
                for j in 0..n {
                    aug.swap(col * n + j, piv * n + j);
                }
                rhs.swap(col, piv);
            }
            let d = aug[col * n + col];
            for r in col + 1..n {
                let factor = aug[r * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    aug[r * n + j] -= factor * aug[col * n + j];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..n {
                s -= aug[i * n + j] * x[j];
            }
            x[i] = s / aug[i * n + i];
        }
        x
    }

    /// SPD test by attempting a Cholesky factorization.
    pub fn is_spd(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        let scale = self.a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        for i in 0..n {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= rel_tol * scale {
                        return false;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        true
    }
}

/// Summation restriction matrix (nCoarse × nFine) for an agglomeration map.
pub fn restriction_matrix(fine_to_coarse: &[usize], n_coarse: usize) -> DenseMat {
    let mut r = DenseMat::zeros(n_coarse, fine_to_coarse.len());
    for (i, &c) in fine_to_coarse.iter().enumerate() {
        r.set(c, i, 1.0);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let mut m = DenseMat::zeros(2, 2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 3.0);
        let x = m.solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn spd_detection() {
        let mut spd = DenseMat::zeros(2, 2);
        spd.set(0, 0, 2.0);
        spd.set(0, 1, -1.0);
        spd.set(1, 0, -1.0);
        spd.set(1, 1, 2.0);
        assert!(spd.is_spd(1e-12));
        let mut indef = spd.clone();
        indef.set(1, 1, -2.0);
        assert!(!indef.is_spd(1e-12));
    }
}
