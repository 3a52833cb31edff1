//! Compressed sparse row storage with triplet accumulation.

use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Element type of a [`CsrMatrix`].
pub trait Scalar: Copy + Default + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync + 'static {
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn abs(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type SparseComplexMatrix = CsrMatrix<Complex64>;

/// Coordinate-format accumulator; duplicates are summed on compression.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    n: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "dimension exceeds index width");
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        let mut b = Self::new(n);
        b.entries.reserve(capacity);
        b
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row as u32, col as u32, value));
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sums duplicates in insertion order and drops exact zeros.
    pub fn into_csr(self) -> CsrMatrix<T> {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in &self.entries {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // stable bucket sort by row
        let mut next = counts.clone();
        let mut bucketed: Vec<(u32, T)> = vec![(0, T::default()); self.entries.len()];
        for (r, c, v) in self.entries {
            let slot = &mut next[r as usize];
            bucketed[*slot] = (c, v);
            *slot += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(bucketed.len() / 2);
        let mut values = Vec::with_capacity(bucketed.len() / 2);
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut bucketed[counts[i]..counts[i + 1]];
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    acc = acc + row[k].1;
                    k += 1;
                }
                if acc != T::default() {
                    col_idx.push(c as usize);
                    values.push(acc);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize, one: T) -> Self {
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![one; n] }
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                b.push(i, j, v);
            }
        }
        b.into_csr()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).fold(T::default(), |acc, (j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs() * v.abs()).sum::<f64>().sqrt()
    }

    /// `max |A_ij - A_ji|` over stored entries (unconjugated transpose).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let t = self.get(j, i);
                let d = (v - t).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, _)| {
                let range = self.row_ptr[j]..self.row_ptr[j + 1];
                self.col_idx[range].binary_search(&i).is_ok()
            })
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::default(); self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> CsrMatrix<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }

    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut row = Complex64::new(0.0, 0.0);
            for (j, v) in self.row(i) {
                row += x[j] * v;
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}

impl CsrMatrix<Complex64> {
    pub fn mul_vec_real(&self, x: &[f64]) -> Vec<Complex64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.mul_vec(&xc)
    }

    /// `x^H A x`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    /// MatrixMarket coordinate export, one-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}
