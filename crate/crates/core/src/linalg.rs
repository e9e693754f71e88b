//! Dense symmetric eigenvalues via cyclic Jacobi sweeps.
//!
//! Only eigenvalues are needed (capacities are spectral functionals), so no
//! eigenvector accumulation. Cyclic-by-row sweeps with an off-diagonal
//! Frobenius stopping rule; adequate up to n ~ 2048.

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Toeplitz matrix `K(i,j) = r(|i-j|)`, with `r` zero beyond its last lag.
    pub fn toeplitz(r: &[f64], n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let lag = i.abs_diff(j);
                m.data[i * n + j] = if lag < r.len() { r[lag] } else { 0.0 };
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn off_diagonal_frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.get(i, j);
                s += 2.0 * v * v;
            }
        }
        s.sqrt()
    }

    /// Apply the two-sided rotation `G^T A G` in coordinates `(p, q)`,
    /// `p < q`, exploiting symmetry: transform the two (contiguous) rows,
    /// patch the 2x2 block exactly, then mirror the rows into the columns.
    fn rotate(&mut self, p: usize, q: usize, c: f64, s: f64, t: f64) {
        let n = self.n;
        let app = self.data[p * n + p];
        let aqq = self.data[q * n + q];
        let apq = self.data[p * n + q];
        {
            let (left, right) = self.data.split_at_mut(q * n);
            let row_p = &mut left[p * n..p * n + n];
            let row_q = &mut right[..n];
            for (ap, aq) in row_p.iter_mut().zip(row_q.iter_mut()) {
                let x = *ap;
                let y = *aq;
                *ap = c * x - s * y;
                *aq = s * x + c * y;
            }
        }
        self.data[p * n + p] = app - t * apq;
        self.data[q * n + q] = aqq + t * apq;
        self.data[p * n + q] = 0.0;
        self.data[q * n + p] = 0.0;
        for k in 0..n {
            if k != p && k != q {
                self.data[k * n + p] = self.data[p * n + k];
                self.data[k * n + q] = self.data[q * n + k];
            }
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
///
/// Threshold-cyclic Jacobi: each sweep rotates the pairs whose magnitude
/// exceeds a fraction of the current off-diagonal norm, so near-banded
/// matrices do not pay for rotations on negligible entries. Stops when the
/// off-diagonal Frobenius norm drops below `1e-10 * max(1, ||A||_F)`, capped
/// at 30 sweeps. Deterministic for a given input.
pub fn jacobi_eigenvalues(mut a: SymMatrix) -> Vec<f64> {
    let n = a.n;
    if n == 1 {
        return vec![a.get(0, 0)];
    }
    let tol = 1e-10 * a.frobenius().max(1.0);
    // Entries below this can never matter: leaving all of them unrotated
    // keeps the off-diagonal norm under tol.
    let skip = tol / (10.0 * n as f64);
    for _ in 0..30 {
        let off = a.off_diagonal_frobenius();
        if off <= tol {
            break;
        }
        let thresh = (0.5 * off / n as f64).max(skip);
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= thresh {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a.rotate(p, q, c, s, t);
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}
