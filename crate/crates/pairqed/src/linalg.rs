//! Dense complex linear algebra for small matrices.
//!
//! Everything in the crate works on 2x2, 4x4 or 16x16 complex matrices, so
//! the routines here are written for that regime: LU with partial pivoting,
//! scaling-and-squaring matrix exponential with Pade(13), and eigenvalues
//! via Hessenberg reduction followed by shifted QR. No external linear
//! algebra backend is required.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("QR eigenvalue iteration failed to converge after {0} sweeps")]
    EigNoConvergence(usize),
}

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Identity matrix of dimension `n`.
pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, c(1.0))
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == c(0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization: `vec(rho)[j*n + i] = rho[i, j]`.
pub fn vectorize(m: &Array2<C64>) -> Array1<C64> {
    let (n, cols) = m.dim();
    let mut v = Array1::zeros(n * cols);
    for j in 0..cols {
        for i in 0..n {
            v[j * n + i] = m[[i, j]];
        }
    }
    v
}

/// Inverse of [`vectorize`] for a square `n x n` matrix.
pub fn unvectorize(v: &Array1<C64>, n: usize) -> Array2<C64> {
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            m[[i, j]] = v[j * n + i];
        }
    }
    m
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    let (r, cdim) = m.dim();
    let mut out = Array2::zeros((cdim, r));
    for i in 0..r {
        for j in 0..cdim {
            out[[j, i]] = m[[i, j]].conj();
        }
    }
    out
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Max column sum of moduli (induced 1-norm).
pub fn norm_1(m: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Largest modulus among entries.
pub fn norm_max(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

// ---------------------------------------------------------------------------
// LU factorization
// ---------------------------------------------------------------------------

/// LU factorization with partial pivoting, reusable for multiple solves.
pub struct LuFactors {
    lu: Array2<C64>,
    perm: Vec<usize>,
    /// Smallest pivot modulus encountered (singularity diagnostic).
    pub min_pivot: f64,
}

impl LuFactors {
    /// Factor `a`; pivots below `abs_floor` are clamped to it rather than
    /// failing, which lets a factorization of a singular matrix be used for
    /// inverse iteration.
    pub fn new_clamped(a: &Array2<C64>, abs_floor: f64) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for col in 0..n {
            let mut max_val = 0.0;
            let mut max_row = col;
            for row in col..n {
                let v = lu[[row, col]].norm();
                if v > max_val {
                    max_val = v;
                    max_row = row;
                }
            }
            if max_row != col {
                perm.swap(max_row, col);
                for j in 0..n {
                    let tmp = lu[[col, j]];
                    lu[[col, j]] = lu[[max_row, j]];
                    lu[[max_row, j]] = tmp;
                }
            }
            let mut pivot = lu[[col, col]];
            if pivot.norm() < abs_floor {
                pivot = c(abs_floor);
                lu[[col, col]] = pivot;
            }
            min_pivot = min_pivot.min(pivot.norm());
            for row in (col + 1)..n {
                let factor = lu[[row, col]] / pivot;
                lu[[row, col]] = factor;
                for j in (col + 1)..n {
                    let v = lu[[col, j]];
                    lu[[row, j]] -= factor * v;
                }
            }
        }
        LuFactors { lu, perm, min_pivot }
    }

    pub fn new(a: &Array2<C64>) -> Result<Self, LinalgError> {
        let f = Self::new_clamped(a, 0.0);
        if f.min_pivot <= f64::EPSILON * norm_1(a).max(f64::MIN_POSITIVE) {
            // locate the offending column for the error message
            let n = a.nrows();
            let mut col = n - 1;
            for j in 0..n {
                if f.lu[[j, j]].norm() <= f.min_pivot {
                    col = j;
                    break;
                }
            }
            return Err(LinalgError::Singular { col, pivot: f.min_pivot });
        }
        Ok(f)
    }

    pub fn solve_vec(&self, b: &Array1<C64>) -> Array1<C64> {
        let n = self.lu.nrows();
        let mut x = Array1::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // forward substitution with unit lower triangle
        for i in 1..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[[i, k]] * x[k];
            }
            x[i] = s;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lu[[i, k]] * x[k];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }

    pub fn solve_mat(&self, b: &Array2<C64>) -> Array2<C64> {
        let n = self.lu.nrows();
        let m = b.ncols();
        let mut out = Array2::zeros((n, m));
        for j in 0..m {
            let col = b.column(j).to_owned();
            let x = self.solve_vec(&col);
            out.column_mut(j).assign(&x);
        }
        out
    }
}

/// Solve `a x = b` for square `a` and matrix right-hand side.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>, LinalgError> {
    Ok(LuFactors::new(a)?.solve_mat(b))
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

// Pade(13) numerator coefficients, Higham 2005.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a Pade(13) approximant.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = norm_1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a.mapv(|z| z / c(2f64.powi(squarings as i32)));

    let a2 = a_scaled.dot(&a_scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let id = eye(n);

    let u_inner = &a6 * c(PADE13[13]) + &a4 * c(PADE13[11]) + &a2 * c(PADE13[9]);
    let u_poly = a6.dot(&u_inner)
        + &a6 * c(PADE13[7])
        + &a4 * c(PADE13[5])
        + &a2 * c(PADE13[3])
        + &id * c(PADE13[1]);
    let u = a_scaled.dot(&u_poly);

    let v_inner = &a6 * c(PADE13[12]) + &a4 * c(PADE13[10]) + &a2 * c(PADE13[8]);
    let v = a6.dot(&v_inner)
        + &a6 * c(PADE13[6])
        + &a4 * c(PADE13[4])
        + &a2 * c(PADE13[2])
        + &id * c(PADE13[0]);

    let num = &v + &u;
    let den = &v - &u;
    let mut result = solve(&den, &num).expect("Pade denominator is nonsingular by construction");
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

// ---------------------------------------------------------------------------
// Eigenvalues (Hessenberg + shifted QR)
// ---------------------------------------------------------------------------

/// Reduce to upper Hessenberg form by complex Householder reflections.
fn hessenberg(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, rows k+1..n
        let mut xnorm2 = 0.0;
        for i in (k + 1)..n {
            xnorm2 += h[[i, k]].norm_sqr();
        }
        if xnorm2.sqrt() <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = h[[k + 1, k]];
        let phase = if x0.norm() > 0.0 { x0 / c(x0.norm()) } else { c(1.0) };
        let alpha = -phase * c(xnorm2.sqrt());
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 <= f64::MIN_POSITIVE {
            continue;
        }
        let scale = 2.0 / vnorm2;
        // left: H <- (I - s v v^H) H over rows k+1.., cols k..
        for j in k..n {
            let mut dot = c(0.0);
            for (idx, i) in (k + 1..n).enumerate() {
                dot += v[idx].conj() * h[[i, j]];
            }
            dot *= c(scale);
            for (idx, i) in (k + 1..n).enumerate() {
                let corr = v[idx] * dot;
                h[[i, j]] -= corr;
            }
        }
        // right: H <- H (I - s v v^H) over all rows, cols k+1..
        for i in 0..n {
            let mut dot = c(0.0);
            for (idx, j) in (k + 1..n).enumerate() {
                dot += h[[i, j]] * v[idx];
            }
            dot *= c(scale);
            for (idx, j) in (k + 1..n).enumerate() {
                let corr = dot * v[idx].conj();
                h[[i, j]] -= corr;
            }
        }
        // enforce exact zeros below the subdiagonal
        for i in (k + 2)..n {
            h[[i, k]] = c(0.0);
        }
    }
    h
}

/// Eigenvalues of the 2x2 matrix [[a, b], [cc, d]].
fn eig2(a: C64, b: C64, cc: C64, d: C64) -> (C64, C64) {
    let mean = (a + d) * c(0.5);
    let disc = ((a - d) * c(0.5)).powi(2) + b * cc;
    let root = disc.sqrt();
    (mean + root, mean - root)
}

/// Complex Givens rotation `[ [c, s], [-conj(s), c] ]` with real `c >= 0`
/// such that it maps `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, c(0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / c(bn));
    }
    let n = (an * an + bn * bn).sqrt();
    let cval = an / n;
    let s = (a / c(an)) * b.conj() / c(n);
    (cval, s)
}

/// Cholesky-based positive-semidefiniteness test for a Hermitian matrix:
/// returns true when all eigenvalues of `m` are >= `-shift`.
pub fn hermitian_psd(m: &Array2<C64>, shift: f64) -> bool {
    let n = m.nrows();
    let mut l = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let mut d = m[[j, j]].re + shift;
        for k in 0..j {
            d -= l[[j, k]].norm_sqr();
        }
        if d < 0.0 {
            return false;
        }
        let ljj = d.sqrt();
        l[[j, j]] = c(ljj);
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = if ljj > 0.0 { s / c(ljj) } else { c(0.0) };
        }
    }
    true
}

/// Eigenvalues of a general complex square matrix.
///
/// Uses explicit single-shift QR on the Hessenberg form with Wilkinson
/// shifts; adequate and robust for the small dimensions used here.
pub fn eigenvalues(a: &Array2<C64>) -> Result<Vec<C64>, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![a[[0, 0]]]);
    }
    let mut h = hessenberg(a);
    let mut eigs: Vec<C64> = Vec::with_capacity(n);
    let mut end = n;
    let mut iters_since_deflation = 0usize;
    let max_iters = 60 * n;
    let mut total_iters = 0usize;
    // absolute deflation floor: subdiagonals this far below the matrix scale
    // cannot be resolved and would otherwise stall the iteration
    let abs_floor = 1e-4 * f64::EPSILON * norm_1(&h).max(f64::MIN_POSITIVE);

    while end > 0 {
        if end == 1 {
            eigs.push(h[[0, 0]]);
            break;
        }
        // scan for a negligible subdiagonal inside the active block
        let mut start = end - 1;
        while start > 0 {
            let sub = h[[start, start - 1]].norm();
            let local = h[[start - 1, start - 1]].norm() + h[[start, start]].norm();
            let tol = (f64::EPSILON * local).max(abs_floor);
            if sub <= tol {
                h[[start, start - 1]] = c(0.0);
                break;
            }
            start -= 1;
        }
        if start == end - 1 {
            eigs.push(h[[end - 1, end - 1]]);
            end -= 1;
            iters_since_deflation = 0;
            continue;
        }
        if start == end - 2 {
            let (l1, l2) = eig2(
                h[[start, start]],
                h[[start, start + 1]],
                h[[start + 1, start]],
                h[[start + 1, start + 1]],
            );
            eigs.push(l1);
            eigs.push(l2);
            end -= 2;
            iters_since_deflation = 0;
            continue;
        }

        total_iters += 1;
        iters_since_deflation += 1;
        if total_iters > max_iters {
            return Err(LinalgError::EigNoConvergence(total_iters));
        }

        // Wilkinson shift from the trailing 2x2; exceptional shift if stuck
        let shift = if iters_since_deflation % 17 == 0 {
            h[[end - 1, end - 2]] * c(1.5)
        } else {
            let (l1, l2) = eig2(
                h[[end - 2, end - 2]],
                h[[end - 2, end - 1]],
                h[[end - 1, end - 2]],
                h[[end - 1, end - 1]],
            );
            let target = h[[end - 1, end - 1]];
            if (l1 - target).norm() < (l2 - target).norm() {
                l1
            } else {
                l2
            }
        };

        // explicit shifted QR sweep on the active block [start, end)
        for i in start..end {
            h[[i, i]] -= shift;
        }
        let mut rots: Vec<(f64, C64)> = Vec::with_capacity(end - start - 1);
        for i in start..(end - 1) {
            let (cv, s) = givens(h[[i, i]], h[[i + 1, i]]);
            // apply from the left to rows i, i+1
            for j in i..end {
                let hi = h[[i, j]];
                let hk = h[[i + 1, j]];
                h[[i, j]] = c(cv) * hi + s * hk;
                h[[i + 1, j]] = -s.conj() * hi + c(cv) * hk;
            }
            h[[i + 1, i]] = c(0.0);
            rots.push((cv, s));
        }
        for (idx, (cv, s)) in rots.iter().enumerate() {
            let i = start + idx;
            // apply the adjoint rotation from the right to columns i, i+1
            let top = (i + 2).min(end);
            for r in start..top {
                let hi = h[[r, i]];
                let hk = h[[r, i + 1]];
                h[[r, i]] = hi * c(*cv) + hk * s.conj();
                h[[r, i + 1]] = -hi * *s + hk * c(*cv);
            }
        }
        for i in start..end {
            h[[i, i]] += shift;
        }
    }
    Ok(eigs)
}

/// Eigen-decomposition of a real symmetric 2x2 matrix `[[a, b], [b, d]]`.
/// Returns `((lambda1, v1), (lambda2, v2))` with `lambda1 >= lambda2` and
/// orthonormal real eigenvectors.
pub fn sym_eig2(a: f64, b: f64, d: f64) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
    if b == 0.0 {
        return if a >= d {
            ((a, [1.0, 0.0]), (d, [0.0, 1.0]))
        } else {
            ((d, [0.0, 1.0]), (a, [1.0, 0.0]))
        };
    }
    let mean = 0.5 * (a + d);
    let diff = 0.5 * (a - d);
    let r = (diff * diff + b * b).sqrt();
    let l1 = mean + r;
    let l2 = mean - r;
    // eigenvector for l1: (b, l1 - a) or (l1 - d, b), pick the stabler
    let v1 = if diff >= 0.0 {
        [l1 - d, b]
    } else {
        [b, l1 - a]
    };
    let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
    let v1 = [v1[0] / n1, v1[1] / n1];
    let v2 = [-v1[1], v1[0]];
    ((l1, v1), (l2, v2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = Array2::<C64>::zeros((4, 4));
        let e = expm(&z);
        assert!(norm_max(&(&e - &eye(4))) < 1e-14);
    }

    #[test]
    fn expm_diagonal() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[[0, 0]] = c(1.0);
        a[[1, 1]] = C64::new(0.0, std::f64::consts::PI);
        a[[2, 2]] = c(-50.0);
        let e = expm(&a);
        assert!(close(e[[0, 0]], c(1.0f64.exp()), 1e-12));
        assert!(close(e[[1, 1]], c(-1.0), 1e-12));
        assert!((e[[2, 2]].norm() - (-50.0f64).exp().abs()).abs() < 1e-30);
    }

    #[test]
    fn expm_rotation_is_unitary() {
        // exp(-i theta sigma_x / 2)
        let th = 0.7;
        let a = array![
            [c(0.0), C64::new(0.0, -th / 2.0)],
            [C64::new(0.0, -th / 2.0), c(0.0)]
        ];
        let u = expm(&a);
        let prod = u.dot(&dagger(&u));
        assert!(norm_max(&(&prod - &eye(2))) < 1e-12);
        assert!(close(u[[0, 0]], c((th / 2.0).cos()), 1e-12));
    }

    #[test]
    fn expm_group_property() {
        let a = array![
            [C64::new(-0.3, 0.2), C64::new(0.1, -0.4), c(0.05)],
            [C64::new(0.0, 0.9), C64::new(-1.0, 0.0), c(0.2)],
            [c(0.3), C64::new(0.0, -0.1), C64::new(-0.2, 0.5)]
        ];
        let e1 = expm(&a);
        let half = a.mapv(|z| z * c(0.5));
        let e2 = expm(&half);
        let e2sq = e2.dot(&e2);
        assert!(norm_max(&(&e1 - &e2sq)) < 1e-12);
    }

    #[test]
    fn lu_solves_random_system() {
        let a = array![
            [c(2.0), C64::new(1.0, 1.0), c(0.0), c(0.5)],
            [C64::new(0.0, -1.0), c(3.0), c(1.0), c(0.0)],
            [c(0.1), c(0.0), C64::new(1.0, 0.5), c(2.0)],
            [c(0.0), c(0.7), C64::new(0.0, 2.0), c(1.0)]
        ];
        let x_true = Array1::from(vec![c(1.0), C64::new(0.0, 1.0), c(-2.0), C64::new(0.5, 0.5)]);
        let b = a.dot(&x_true);
        let x = LuFactors::new(&a).unwrap().solve_vec(&b);
        for i in 0..4 {
            assert!(close(x[i], x_true[i], 1e-12));
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = array![[c(1.0), c(2.0)], [c(2.0), c(4.0)]];
        assert!(LuFactors::new(&a).is_err());
    }

    #[test]
    fn eig_diagonal_and_triangular() {
        let a = array![
            [c(3.0), c(1.0), c(0.0)],
            [c(0.0), C64::new(0.0, 2.0), c(5.0)],
            [c(0.0), c(0.0), c(-1.0)]
        ];
        let mut eigs = eigenvalues(&a).unwrap();
        eigs.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!(close(eigs[0], c(-1.0), 1e-10));
        assert!(close(eigs[1], C64::new(0.0, 2.0), 1e-10));
        assert!(close(eigs[2], c(3.0), 1e-10));
    }

    #[test]
    fn eig_matches_known_2x2_complex() {
        let a = array![[c(0.0), c(1.0)], [c(-1.0), c(0.0)]];
        let eigs = eigenvalues(&a).unwrap();
        let mut ims: Vec<f64> = eigs.iter().map(|z| z.im).collect();
        ims.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(eigs.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn eig_trace_and_det_invariants() {
        // pseudo-random fixed matrix, 6x6
        let n = 6;
        let mut a = Array2::<C64>::zeros((n, n));
        let mut seed = 1234567u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = C64::new(next(), next());
            }
        }
        let eigs = eigenvalues(&a).unwrap();
        assert_eq!(eigs.len(), n);
        let tr: C64 = a.diag().sum();
        let sum: C64 = eigs.iter().sum();
        assert!(close(sum, tr, 1e-9));
        // sum of squares equals trace of a^2
        let a2 = a.dot(&a);
        let tr2: C64 = a2.diag().sum();
        let sum2: C64 = eigs.iter().map(|z| z * z).sum();
        assert!(close(sum2, tr2, 1e-8));
    }

    #[test]
    fn eig_hermitian_is_real() {
        let a = array![
            [c(2.0), C64::new(1.0, 1.0), C64::new(0.0, -0.5)],
            [C64::new(1.0, -1.0), c(-1.0), c(0.3)],
            [C64::new(0.0, 0.5), c(0.3), c(0.5)]
        ];
        let eigs = eigenvalues(&a).unwrap();
        for z in &eigs {
            assert!(z.im.abs() < 1e-10, "hermitian eigenvalue has imaginary part {z}");
        }
    }

    #[test]
    fn eig_defective_jordan_block() {
        // [[1, 1], [0, 1]] has a double eigenvalue 1 with one eigenvector
        let a = array![[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        let eigs = eigenvalues(&a).unwrap();
        for z in &eigs {
            assert!(close(*z, c(1.0), 1e-7));
        }
    }

    #[test]
    fn sym_eig2_recovers_rotation() {
        let ((l1, v1), (l2, v2)) = sym_eig2(2.0, 1.5, 0.5);
        // residual check A v = l v
        for (l, v) in [(l1, v1), (l2, v2)] {
            let r0 = 2.0 * v[0] + 1.5 * v[1] - l * v[0];
            let r1 = 1.5 * v[0] + 0.5 * v[1] - l * v[1];
            assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
        }
        assert!((v1[0] * v2[0] + v1[1] * v2[1]).abs() < 1e-12);
        assert!(l1 >= l2);
    }

    #[test]
    fn kron_and_vectorize_are_consistent() {
        // vec(A X B) = (B^T (x) A) vec(X)
        let a = array![[c(1.0), C64::new(0.0, 1.0)], [c(2.0), c(-1.0)]];
        let b = array![[c(0.5), c(1.0)], [C64::new(0.0, -2.0), c(3.0)]];
        let x = array![[c(1.0), c(0.0)], [C64::new(0.5, 0.5), c(-2.0)]];
        let lhs = vectorize(&a.dot(&x).dot(&b));
        let bt = b.t().to_owned();
        let rhs = kron(&bt, &a).dot(&vectorize(&x));
        for i in 0..4 {
            assert!(close(lhs[i], rhs[i], 1e-13));
        }
    }
}
