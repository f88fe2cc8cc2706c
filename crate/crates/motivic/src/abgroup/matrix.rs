//! Dense integer matrices and the two normal forms the rest of the crate
//! leans on. Conventions, fixed once and for all:
//!
//! * Matrices act on *row* vectors; a matrix is a stack of generators and its
//!   row lattice is the subgroup they generate.
//! * `hnf` returns the canonical row-style Hermite normal form: pivot columns
//!   strictly increase row by row, every pivot is positive, entries above a
//!   pivot are reduced into `[0, pivot)`, and zero rows sink to the bottom.
//!   The nonzero rows are the unique canonical basis of the row lattice, so
//!   two matrices span the same lattice iff their forms agree.
//! * `snf` returns the Smith normal form `U * m * V = diag(d1..dr)` with
//!   `U`, `V` unimodular and nonnegative invariant factors `d1 | d2 | ...`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows<R, C>(rows: Vec<R>) -> Self
    where
        R: IntoIterator<Item = C>,
        C: Into<BigInt>,
    {
        let data: Vec<Vec<BigInt>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(Into::into).collect())
            .collect();
        let nrows = data.len();
        let ncols = data.first().map_or(0, Vec::len);
        assert!(
            data.iter().all(|r| r.len() == ncols),
            "ragged row lengths in IntMatrix::from_rows"
        );
        Self {
            rows: nrows,
            cols: ncols,
            data: data.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: Vec<BigInt>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// row[a] -= q * row[b]
    fn row_sub_mul(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let t = &self.data[b * self.cols + c] * q;
            self.data[a * self.cols + c] -= t;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.data[r * self.cols + c].clone();
            self.data[r * self.cols + c] = v;
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// col[a] -= q * col[b]
    fn col_sub_mul(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let t = &self.data[r * self.cols + b] * q;
            self.data[r * self.cols + a] -= t;
        }
    }

    pub fn is_zero_row(&self, r: usize) -> bool {
        self.row(r).iter().all(Zero::is_zero)
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other.data[k * other.cols + j];
                    out.data[i * other.cols + j] += t;
                }
            }
        }
        out
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                    Some(r) => {
                        a.swap_rows(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = &num / &prev;
                }
                a[(i, k)] = BigInt::zero();
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    /// Canonical Hermite normal form of the row lattice (see module docs).
    pub fn hnf(&self) -> IntMatrix {
        self.hnf_with_transform().0
    }

    /// Canonical HNF together with a unimodular `U` such that `U * self = H`.
    pub fn hnf_with_transform(&self) -> (IntMatrix, IntMatrix) {
        let mut h = self.clone();
        let mut u = IntMatrix::identity(self.rows);
        let mut pivot_row = 0usize;
        for col in 0..h.cols {
            if pivot_row == h.rows {
                break;
            }
            // Euclidean descent: shrink entries at/below pivot_row in this
            // column until at most one survives.
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..h.rows {
                    if !h[(r, col)].is_zero()
                        && best.is_none_or(|b| h[(r, col)].abs() < h[(b, col)].abs())
                    {
                        best = Some(r);
                    }
                }
                let Some(b) = best else { break };
                h.swap_rows(pivot_row, b);
                u.swap_rows(pivot_row, b);
                let mut finished = true;
                for r in pivot_row + 1..h.rows {
                    if !h[(r, col)].is_zero() {
                        let q = h[(r, col)].div_floor(&h[(pivot_row, col)]);
                        h.row_sub_mul(r, pivot_row, &q);
                        u.row_sub_mul(r, pivot_row, &q);
                        if !h[(r, col)].is_zero() {
                            finished = false;
                        }
                    }
                }
                if finished {
                    break;
                }
            }
            if !h[(pivot_row, col)].is_zero() {
                if h[(pivot_row, col)].is_negative() {
                    h.negate_row(pivot_row);
                    u.negate_row(pivot_row);
                }
                // Reduce the entries above the pivot into [0, pivot).
                for r in 0..pivot_row {
                    let q = h[(r, col)].div_floor(&h[(pivot_row, col)]);
                    h.row_sub_mul(r, pivot_row, &q);
                    u.row_sub_mul(r, pivot_row, &q);
                }
                pivot_row += 1;
            }
        }
        (h, u)
    }

    /// Basis of the integer left kernel `{ v : v * self = 0 }`, one row per
    /// basis vector (possibly zero rows total).
    pub fn left_kernel(&self) -> IntMatrix {
        let (h, u) = self.hnf_with_transform();
        let mut out = IntMatrix::zero(0, self.rows);
        for r in 0..h.rows {
            if h.is_zero_row(r) {
                out.push_row(u.row(r).to_vec());
            }
        }
        out
    }

    /// Smith normal form: returns `(d, u, v)` with `u * self * v` diagonal,
    /// `d` the nonnegative invariant factors satisfying `d[i] | d[i+1]`
    /// (trailing zeros included up to `min(rows, cols)`).
    pub fn snf(&self) -> (Vec<BigInt>, IntMatrix, IntMatrix) {
        let mut m = self.clone();
        let mut u = IntMatrix::identity(self.rows);
        let mut v = IntMatrix::identity(self.cols);
        let dim = self.rows.min(self.cols);
        for t in 0..dim {
            loop {
                // Pick the smallest nonzero entry of the working submatrix.
                let mut best: Option<(usize, usize)> = None;
                for r in t..m.rows {
                    for c in t..m.cols {
                        if !m[(r, c)].is_zero()
                            && best.is_none_or(|(br, bc)| m[(r, c)].abs() < m[(br, bc)].abs())
                        {
                            best = Some((r, c));
                        }
                    }
                }
                let Some((br, bc)) = best else { break };
                m.swap_rows(t, br);
                u.swap_rows(t, br);
                m.swap_cols(t, bc);
                v.swap_cols(t, bc);
                // Clear column t below and row t to the right.
                let mut clean = true;
                for r in t + 1..m.rows {
                    if !m[(r, t)].is_zero() {
                        let q = m[(r, t)].div_floor(&m[(t, t)]);
                        m.row_sub_mul(r, t, &q);
                        u.row_sub_mul(r, t, &q);
                        if !m[(r, t)].is_zero() {
                            clean = false;
                        }
                    }
                }
                for c in t + 1..m.cols {
                    if !m[(t, c)].is_zero() {
                        let q = m[(t, c)].div_floor(&m[(t, t)]);
                        m.col_sub_mul(c, t, &q);
                        v.col_sub_mul(c, t, &q);
                        if !m[(t, c)].is_zero() {
                            clean = false;
                        }
                    }
                }
                if !clean {
                    continue;
                }
                // Enforce divisibility of the remaining block by the pivot.
                let mut fixed = true;
                'scan: for r in t + 1..m.rows {
                    for c in t + 1..m.cols {
                        if !(&m[(r, c)] % &m[(t, t)]).is_zero() {
                            let one = BigInt::one();
                            m.row_sub_mul(t, r, &(-&one));
                            u.row_sub_mul(t, r, &(-&one));
                            fixed = false;
                            break 'scan;
                        }
                    }
                }
                if fixed {
                    break;
                }
            }
            if m[(t, t)].is_negative() {
                m.negate_row(t);
                u.negate_row(t);
            }
        }
        let d = (0..dim).map(|i| m[(i, i)].clone()).collect();
        (d, u, v)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}
