//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Column `k` of the factors is obtained from a sparse triangular solve
//! with the columns already computed; the nonzero pattern of that solve is
//! found by a depth-first search in the graph of `L` (Gilbert-Peierls).
//! Columns are permuted up front by a fill-reducing ordering of the
//! symmetric pattern; rows are permuted by pivoting during elimination.

use super::ordering::nested_dissection;
use super::sparse::{norm2, CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `max |a_ij|` are treated as zero.
pub const ZERO_PIVOT_RATIO: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PivotMode {
    /// Keep the diagonal entry when it is at least `tol` times the largest
    /// candidate in its column, otherwise take the largest.
    Threshold(f64),
    /// Always pivot on the diagonal. For symmetric input this is an
    /// `LDL^T` factorization and the pivots carry the inertia.
    DiagonalOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnOrdering {
    Natural,
    NestedDissection,
    /// `order[k]` is the column eliminated at step `k`.
    Given(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LuOptions {
    pub pivot: PivotMode,
    pub ordering: ColumnOrdering,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self {
            pivot: PivotMode::Threshold(0.1),
            ordering: ColumnOrdering::NestedDissection,
        }
    }
}

/// `P A Q = L U` with unit lower triangular `L`.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    /// `col_order[k]`: column of `A` eliminated at step `k`.
    col_order: Vec<usize>,
    /// `row_step[i]`: step at which row `i` of `A` was pivotal.
    row_step: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<u32>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<u32>,
    u_val: Vec<f64>,
    a_max: f64,
}

/// Counts of positive, negative and zero pivots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

pub fn lu_factor(a: &CsrMatrix) -> Result<LuFactorization> {
    lu_factor_with(a, &LuOptions::default())
}

pub fn lu_factor_with(a: &CsrMatrix, options: &LuOptions) -> Result<LuFactorization> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let col_order = match &options.ordering {
        ColumnOrdering::Natural => (0..n).collect(),
        ColumnOrdering::NestedDissection => nested_dissection(&a.symmetric_pattern()),
        ColumnOrdering::Given(order) => {
            if order.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: order.len(),
                });
            }
            order.clone()
        }
    };
    // Column access to A is row access to A^T.
    let at = a.transpose();
    let (ap, ai, ax) = (at.row_ptr(), at.col_idx(), at.values());
    let a_max = a.max_abs();
    let zero_tol = ZERO_PIVOT_RATIO * a_max;

    const UNSET: usize = usize::MAX;
    let mut row_step = vec![UNSET; n];
    let mut l_ptr = Vec::with_capacity(n + 1);
    let mut u_ptr = Vec::with_capacity(n + 1);
    let cap = 4 * a.nnz() + n;
    let mut l_idx: Vec<u32> = Vec::with_capacity(cap);
    let mut l_val: Vec<f64> = Vec::with_capacity(cap);
    let mut u_idx: Vec<u32> = Vec::with_capacity(cap);
    let mut u_val: Vec<f64> = Vec::with_capacity(cap);

    let mut x = vec![0.0; n];
    let mut mark = vec![UNSET; n];
    let mut reach = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut cursor = vec![0usize; n];

    for k in 0..n {
        l_ptr.push(l_val.len());
        u_ptr.push(u_val.len());
        let col = col_order[k];

        // Pattern of L \ A(:, col) in topological order: reach[top..n].
        let mut top = n;
        for &i in &ai[ap[col]..ap[col + 1]] {
            if mark[i] == k {
                continue;
            }
            // Iterative DFS from row i through the columns of L.
            let mut head = 0;
            stack[0] = i;
            mark[i] = k;
            cursor[0] = match row_step[i] {
                UNSET => 0,
                s => l_ptr[s] + 1,
            };
            loop {
                let j = stack[head];
                let end = match row_step[j] {
                    UNSET => 0,
                    s => l_ptr[s + 1],
                };
                let mut pushed = false;
                while cursor[head] < end {
                    let r = l_idx[cursor[head]] as usize;
                    cursor[head] += 1;
                    if mark[r] != k {
                        mark[r] = k;
                        head += 1;
                        stack[head] = r;
                        cursor[head] = match row_step[r] {
                            UNSET => 0,
                            s => l_ptr[s] + 1,
                        };
                        pushed = true;
                        break;
                    }
                }
                if !pushed {
                    top -= 1;
                    reach[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }

        // Numerical solve.
        for p in ap[col]..ap[col + 1] {
            x[ai[p]] = ax[p];
        }
        for &j in &reach[top..n] {
            let s = row_step[j];
            if s == UNSET {
                continue;
            }
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in l_ptr[s] + 1..l_ptr[s + 1] {
                x[l_idx[p] as usize] -= l_val[p] * xj;
            }
        }

        // Pivot selection.
        let mut best = UNSET;
        let mut best_abs = -1.0;
        for &i in &reach[top..n] {
            if row_step[i] == UNSET {
                let v = x[i].abs();
                if v > best_abs {
                    best_abs = v;
                    best = i;
                }
            } else {
                u_idx.push(row_step[i] as u32);
                u_val.push(x[i]);
            }
        }
        let diagonal_available = row_step[col] == UNSET && mark[col] == k;
        let pivot_row = match options.pivot {
            PivotMode::DiagonalOnly => {
                if !diagonal_available || x[col].abs() <= zero_tol {
                    let magnitude = if diagonal_available { x[col].abs() } else { 0.0 };
                    return Err(Error::Singular { column: col, magnitude });
                }
                col
            }
            PivotMode::Threshold(tol) => {
                if best == UNSET || best_abs <= zero_tol {
                    return Err(Error::Singular {
                        column: col,
                        magnitude: best_abs.max(0.0),
                    });
                }
                if diagonal_available && x[col].abs() >= tol * best_abs {
                    col
                } else {
                    best
                }
            }
        };
        let pivot = x[pivot_row];
        u_idx.push(k as u32);
        u_val.push(pivot);
        row_step[pivot_row] = k;
        l_idx.push(pivot_row as u32);
        l_val.push(1.0);
        for &i in &reach[top..n] {
            if row_step[i] == UNSET {
                l_idx.push(i as u32);
                l_val.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    l_ptr.push(l_val.len());
    u_ptr.push(u_val.len());
    // Renumber L rows into pivot order.
    for r in l_idx.iter_mut() {
        *r = row_step[*r as usize] as u32;
    }
    Ok(LuFactorization {
        n,
        col_order,
        row_step,
        l_ptr,
        l_idx,
        l_val,
        u_ptr,
        u_idx,
        u_val,
        a_max,
    })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries in `L` and `U` together.
    pub fn factor_nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        let mut work = vec![0.0; self.n];
        self.solve_in_place(&mut x, &mut work)?;
        Ok(x)
    }

    /// Overwrites `b` with the solution; `work` must have length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: b.len(),
            });
        }
        if work.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: work.len(),
            });
        }
        for (i, &v) in b.iter().enumerate() {
            work[self.row_step[i]] = v;
        }
        for k in 0..self.n {
            let yk = work[k];
            if yk != 0.0 {
                for p in self.l_ptr[k] + 1..self.l_ptr[k + 1] {
                    work[self.l_idx[p] as usize] -= self.l_val[p] * yk;
                }
            }
        }
        for k in (0..self.n).rev() {
            let diag = self.u_ptr[k + 1] - 1;
            work[k] /= self.u_val[diag];
            let yk = work[k];
            if yk != 0.0 {
                for p in self.u_ptr[k]..diag {
                    work[self.u_idx[p] as usize] -= self.u_val[p] * yk;
                }
            }
        }
        for (k, &c) in self.col_order.iter().enumerate() {
            b[c] = work[k];
        }
        Ok(())
    }

    /// Solves, refines once if needed, and checks `||A x - b|| <= tol ||b||`.
    /// Returns the solution and the achieved relative residual.
    pub fn solve_checked(&self, a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
        let bnorm = norm2(b);
        let mut x = self.solve(b)?;
        if bnorm == 0.0 {
            return Ok((x, 0.0));
        }
        let mut res = relative_residual(a, &x, b, bnorm)?;
        if res > tol {
            let ax = a.mul_vec(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.solve(&r)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            res = relative_residual(a, &x, b, bnorm)?;
        }
        if res > tol || !res.is_finite() {
            return Err(Error::SolveResidual {
                residual: res,
                tolerance: tol,
            });
        }
        Ok((x, res))
    }

    /// Diagonal of `U` in elimination order.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.u_val[self.u_ptr[k + 1] - 1]).collect()
    }

    /// Sign counts of the pivots. Meaningful as the inertia of a symmetric
    /// matrix when factored with [`PivotMode::DiagonalOnly`].
    pub fn inertia(&self) -> Inertia {
        let tol = ZERO_PIVOT_RATIO * self.a_max;
        let mut out = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for p in self.pivots() {
            if p > tol {
                out.positive += 1;
            } else if p < -tol {
                out.negative += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    /// `row_order[k]` is the row of `A` that is row `k` of `P A`.
    pub fn row_order(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (i, &s) in self.row_step.iter().enumerate() {
            out[s] = i;
        }
        out
    }

    pub fn col_order(&self) -> &[usize] {
        &self.col_order
    }

    /// Factors as matrices in elimination order.
    pub fn factors(&self) -> (CsrMatrix, CsrMatrix) {
        let mut l = TripletBuilder::new(self.n, self.n);
        let mut u = TripletBuilder::new(self.n, self.n);
        for k in 0..self.n {
            for p in self.l_ptr[k]..self.l_ptr[k + 1] {
                l.push(self.l_idx[p] as usize, k, self.l_val[p]);
            }
            for p in self.u_ptr[k]..self.u_ptr[k + 1] {
                u.push(self.u_idx[p] as usize, k, self.u_val[p]);
            }
        }
        (l.build(), u.build())
    }
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64], bnorm: f64) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    Ok(r / bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        let mut t = TripletBuilder::new(n, n);
        let mut diag = vec![1.0; n];
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push(i, j, v);
                    t.push(j, i, v);
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
        }
        for (i, d) in diag.iter().enumerate() {
            t.push(i, i, *d);
        }
        t.build()
    }

    fn reconstruction_defect(a: &CsrMatrix, f: &LuFactorization) -> f64 {
        let (l, u) = f.factors();
        let (ld, ud) = (l.to_dense(), u.to_dense());
        let ad = a.to_dense();
        let (rows, cols) = (f.row_order(), f.col_order());
        let n = a.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let lu: f64 = (0..n).map(|k| ld[i][k] * ud[k][j]).sum();
                worst = worst.max((ad[rows[i]][cols[j]] - lu).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let f = lu_factor(&CsrMatrix::identity(5)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn permutation_matrix_needs_pivoting() {
        let a = CsrMatrix::from_dense(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let f = lu_factor(&a).unwrap();
        assert_eq!(f.solve(&[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
        assert!(lu_factor_with(
            &a,
            &LuOptions {
                pivot: PivotMode::DiagonalOnly,
                ordering: ColumnOrdering::Natural
            }
        )
        .is_err());
    }

    #[test]
    fn diagonal_solve() {
        let f = lu_factor(&CsrMatrix::from_diagonal(&[2.0; 4])).unwrap();
        assert_eq!(f.solve(&[1.0; 4]).unwrap(), vec![0.5; 4]);
        assert_eq!(f.solve(&[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_spd(100, &mut rng);
        let f = lu_factor(&a).unwrap();
        let b: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, res) = f.solve_checked(&a, &b, 1e-11).unwrap();
        assert!(res <= 1e-11);
        assert!(reconstruction_defect(&a, &f) <= 1e-10 * a.max_abs());
        assert_eq!(f.inertia().negative, 0);
    }

    #[test]
    fn unsymmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, (i * 7 + 3) % n, 1.0 + rng.random::<f64>());
            for _ in 0..3 {
                t.push(i, rng.random_range(0..n), rng.random_range(-1.0..1.0));
            }
        }
        let a = t.build();
        let f = lu_factor(&a).unwrap();
        assert!(reconstruction_defect(&a, &f) <= 1e-10 * a.max_abs());
        let b = vec![1.0; n];
        let x = f.solve(&b).unwrap();
        let r = a.mul_vec(&x).unwrap();
        let err: f64 = r.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_dense(3, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(lu_factor(&a), Err(Error::Singular { .. })));
        let b = CsrMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(lu_factor(&b), Err(Error::Singular { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let f = lu_factor(&CsrMatrix::identity(3)).unwrap();
        assert!(matches!(f.solve(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn saddle_point_inertia() {
        // [[I, B], [B^T, 0]] with B of full column rank has one negative
        // pivot per multiplier.
        let d = [
            1.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, 2.0, 0.0, 1.0, 1.0, //
            0.0, 0.0, 3.0, 0.0, 1.0, //
            1.0, 1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 1.0, 0.0, 0.0,
        ];
        let a = CsrMatrix::from_dense(5, 5, &d);
        let f = lu_factor_with(
            &a,
            &LuOptions {
                pivot: PivotMode::DiagonalOnly,
                ordering: ColumnOrdering::Natural,
            },
        )
        .unwrap();
        assert_eq!(
            f.inertia(),
            Inertia {
                positive: 3,
                negative: 2,
                zero: 0
            }
        );
        let g = lu_factor(&a).unwrap();
        let (_, res) = g.solve_checked(&a, &[1.0, 2.0, 3.0, 4.0, 5.0], 1e-12).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn dissection_reduces_fill_on_a_grid_laplacian() {
        let m = 40;
        let n = m * m;
        let mut t = TripletBuilder::new(n, n);
        for j in 0..m {
            for i in 0..m {
                let v = j * m + i;
                t.push(v, v, 4.0);
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && a < m as i64 && b < m as i64 {
                        t.push(v, (b as usize) * m + a as usize, -1.0);
                    }
                }
            }
        }
        let a = t.build();
        let natural = lu_factor_with(
            &a,
            &LuOptions {
                pivot: PivotMode::Threshold(0.1),
                ordering: ColumnOrdering::Natural,
            },
        )
        .unwrap();
        let nd = lu_factor(&a).unwrap();
        assert!(nd.factor_nnz() < natural.factor_nnz());
        let b = vec![1.0; n];
        let (x1, _) = nd.solve_checked(&a, &b, 1e-12).unwrap();
        let x2 = natural.solve(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-10);
        }
    }
}
