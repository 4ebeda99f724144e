//! Minimal dense linear algebra: square matrices, a pivoted Gaussian solve
//! and a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Everything here works at desk scale (N up to a few thousand dense); the
//! rest of the crate never needs more.

/// Square dense matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Matrix::from_fn(n, |i, j| rows[i][j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// y = A x with the usual row-times-vector convention.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Gram matrix AᵀA.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.get(k, i) * self.get(k, j);
            }
            acc
        })
    }

    /// Frobenius norm of the off-diagonal part.
    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    acc += v * v;
                }
            }
        }
        acc.sqrt()
    }
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot degenerates (singular to working precision).
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let mut pivot = col;
        let mut best = m.get(col, col).abs();
        for row in col + 1..n {
            let v = m.get(row, col).abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            rhs.swap(col, pivot);
        }
        let diag = m.get(col, col);
        for row in col + 1..n {
            let factor = m.get(row, col) / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(row, j) - factor * m.get(col, j);
                m.set(row, j, v);
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= m.get(row, j) * x[j];
        }
        x[row] = acc / m.get(row, row);
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps rotate away each off-diagonal entry in turn; convergence is
/// declared when the off-diagonal Frobenius norm drops below `tol`.
/// Returns eigenvalues sorted in descending order, or `None` if the sweep
/// cap is exhausted first.
pub fn jacobi_eigenvalues(a: &Matrix, max_sweeps: usize, tol: f64) -> Option<Vec<f64>> {
    let n = a.dim();
    if n == 1 {
        return Some(vec![a.get(0, 0)]);
    }
    let mut m = a.clone();

    for _ in 0..max_sweeps {
        if m.off_diagonal_norm() <= tol {
            let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
            eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return Some(eig);
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                // Stable rotation choice: smaller-magnitude tangent root.
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    let new_kp = akp - s * (akq + tau * akp);
                    let new_kq = akq + s * (akp - tau * akq);
                    m.set(k, p, new_kp);
                    m.set(p, k, new_kp);
                    m.set(k, q, new_kq);
                    m.set(q, k, new_kq);
                }
            }
        }
    }

    if m.off_diagonal_norm() <= tol {
        let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        return Some(eig);
    }
    None
}
