//! Small dense linear-algebra kernels: LU factorization with partial
//! pivoting, triangular solves (plain and transposed), spectral norms by
//! power iteration, and Cholesky factorization.
//!
//! Everything here is sequential and deterministic: fixed starting vectors,
//! fixed iteration orders, no randomness. Problem sizes in this crate are
//! tiny (tens of variables), so simplicity and bit-reproducibility win over
//! blocked algorithms.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// LU factorization `P·A = L·U` with partial pivoting.
/// `lu` packs L (unit lower triangle, implicit diagonal) and U; `piv[k]` is
/// the row swapped into position `k` at elimination step `k`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Array2<f64>,
    piv: Vec<usize>,
}

/// Factors a square matrix; a vanishing pivot (magnitude below 1e−300)
/// reports the matrix as numerically singular.
pub fn lu_factor(a: ArrayView2<f64>) -> Result<LuFactors> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Precondition(format!(
            "lu_factor needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut lu = a.to_owned();
    let mut piv = vec![0usize; n];
    for k in 0..n {
        let mut p = k;
        let mut best = lu[[k, k]].abs();
        for i in (k + 1)..n {
            let v = lu[[i, k]].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !best.is_finite() || best < 1e-300 {
            return Err(Error::SingularSystem { sigma_min: best });
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                lu.swap([k, j], [p, j]);
            }
        }
        let pivot = lu[[k, k]];
        for i in (k + 1)..n {
            let factor = lu[[i, k]] / pivot;
            lu[[i, k]] = factor;
            for j in (k + 1)..n {
                lu[[i, j]] -= factor * lu[[k, j]];
            }
        }
    }
    Ok(LuFactors { lu, piv })
}

impl LuFactors {
    fn n(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `A·x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.n();
        let mut x = b.clone();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for k in 1..n {
            for j in 0..k {
                let l = self.lu[[k, j]];
                x[k] -= l * x[j];
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                let u = self.lu[[k, j]];
                x[k] -= u * x[j];
            }
            x[k] /= self.lu[[k, k]];
        }
        x
    }

    /// Solves `A·X = B` column-block right-hand sides.
    pub fn solve_mat(&self, b: ArrayView2<f64>) -> Array2<f64> {
        let n = self.n();
        let cols = b.ncols();
        let mut x = b.to_owned();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for c in 0..cols {
                    x.swap([k, c], [p, c]);
                }
            }
        }
        // Forward substitution with unit-diagonal L.
        for k in 1..n {
            for j in 0..k {
                let l = self.lu[[k, j]];
                if l != 0.0 {
                    let (top, mut bottom) = x.view_mut().split_at(ndarray::Axis(0), k);
                    let row_j = top.row(j);
                    let mut row_k = bottom.row_mut(0);
                    row_k.scaled_add(-l, &row_j);
                    let _ = row_k;
                }
            }
        }
        // Back substitution with U.
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                let u = self.lu[[k, j]];
                if u != 0.0 {
                    let (mut top, bottom) = x.view_mut().split_at(ndarray::Axis(0), j);
                    let row_j = bottom.row(0);
                    let mut row_k = top.row_mut(k);
                    row_k.scaled_add(-u, &row_j);
                }
            }
            let pivot = self.lu[[k, k]];
            x.row_mut(k).mapv_inplace(|v| v / pivot);
        }
        x
    }

    /// Solves `Aᵀ·X = B`. With `P·A = L·U` this is `Uᵀ·Lᵀ·P·X = B`:
    /// forward-substitute `Uᵀ`, back-substitute `Lᵀ`, then undo `P`.
    pub fn solve_transpose_mat(&self, b: ArrayView2<f64>) -> Array2<f64> {
        let n = self.n();
        let cols = b.ncols();
        let mut x = b.to_owned();
        // Uᵀ is lower triangular with diagonal U_kk.
        for k in 0..n {
            let pivot = self.lu[[k, k]];
            x.row_mut(k).mapv_inplace(|v| v / pivot);
            for i in (k + 1)..n {
                let u = self.lu[[k, i]];
                if u != 0.0 {
                    let (top, mut bottom) = x.view_mut().split_at(ndarray::Axis(0), i);
                    let row_k = top.row(k);
                    let mut row_i = bottom.row_mut(0);
                    row_i.scaled_add(-u, &row_k);
                }
            }
        }
        // Lᵀ is upper triangular with unit diagonal.
        for k in (0..n).rev() {
            for i in 0..k {
                let l = self.lu[[k, i]];
                if l != 0.0 {
                    let (mut top, bottom) = x.view_mut().split_at(ndarray::Axis(0), k);
                    let row_k = bottom.row(0);
                    let mut row_i = top.row_mut(i);
                    row_i.scaled_add(-l, &row_k);
                }
            }
        }
        // x currently holds P·X; undo the transpositions in reverse order.
        for k in (0..n).rev() {
            let p = self.piv[k];
            if p != k {
                for c in 0..cols {
                    x.swap([k, c], [p, c]);
                }
            }
        }
        x
    }
}

fn deterministic_start(dim: usize) -> Array1<f64> {
    let mut v = Array1::from_iter((0..dim).map(|i| 1.0 + 0.001 * (i as f64 + 1.0).sin()));
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    v
}

fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Largest singular value by power iteration on `MᵀM`, without forming it.
/// Deterministic start, tolerance 1e−14 relative, generous iteration cap.
pub fn spectral_norm(m: ArrayView2<f64>) -> f64 {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 || m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut v = deterministic_start(cols);
    // If the start vector lands in the null space, fall back to basis vectors.
    if l2(&m.dot(&v)) == 0.0 {
        let mut found = false;
        for k in 0..cols {
            let mut e = Array1::zeros(cols);
            e[k] = 1.0;
            if l2(&m.dot(&e)) > 0.0 {
                v = e;
                found = true;
                break;
            }
        }
        if !found {
            return 0.0;
        }
    }
    let mut sigma = 0.0_f64;
    for _ in 0..5000 {
        let u = m.dot(&v);
        let mut w = m.t().dot(&u);
        let wn = l2(&w);
        if wn == 0.0 {
            return l2(&u);
        }
        w.mapv_inplace(|x| x / wn);
        let new_sigma = l2(&m.dot(&w));
        let done = (new_sigma - sigma).abs() <= 1e-14 * new_sigma.max(1e-300);
        v = w;
        sigma = new_sigma;
        if done {
            break;
        }
    }
    sigma
}

/// Smallest singular value of a square matrix via inverse power iteration
/// (two triangular solves per step on the LU factors). Returns 0 when the
/// matrix is numerically singular.
pub fn smallest_singular_value(m: ArrayView2<f64>) -> f64 {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 0 {
        return 0.0;
    }
    let lu = match lu_factor(m) {
        Ok(f) => f,
        Err(_) => return 0.0,
    };
    let mut v = deterministic_start(n);
    let mut lambda = 0.0_f64; // approaches 1/sigma_min^2
    for _ in 0..5000 {
        let w = lu.solve_vec(&v);
        let w2 = w.insert_axis(ndarray::Axis(1));
        let u = lu.solve_transpose_mat(w2.view());
        let mut u = u.remove_axis(ndarray::Axis(1));
        let growth = l2(&u);
        if growth == 0.0 || !growth.is_finite() {
            return if growth.is_finite() { spectral_norm(m) } else { 0.0 };
        }
        u.mapv_inplace(|x| x / growth);
        let done = (growth - lambda).abs() <= 1e-13 * growth.max(1e-300);
        v = u;
        lambda = growth;
        if done {
            break;
        }
    }
    1.0 / lambda.sqrt()
}

/// Cholesky factorization `A = L·Lᵀ` (lower triangle) of a symmetric
/// positive-definite matrix. Reports the first non-positive leading pivot.
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Precondition(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "pivot {i} is {sum:.6e}"
                    )));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// `log det A` from a Cholesky factor of A.
pub fn log_det_from_cholesky(l: &Array2<f64>) -> f64 {
    2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>()
}
