//! Minimal square CSR matrices assembled from coordinate triplets.
//!
//! Assembly pushes duplicate entries freely; compression sorts them with a
//! stable sort and sums duplicates in insertion order, so identical inputs
//! produce bitwise-identical matrices.

use std::io::Write;

/// Coordinate-format accumulator for a square sparse matrix.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(n: usize) -> Self {
        CooBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        CooBuilder {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self, symmetric: bool) -> SparseOperator {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
            row_ptr[i + 1] = col_idx.len();
        }
        // Rows without entries inherit the previous offset.
        for i in 1..=self.n {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        SparseOperator {
            n: self.n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }
}

/// A square sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn zeros(n: usize) -> Self {
        CooBuilder::new(n).build(true)
    }

    pub fn identity(n: usize) -> Self {
        let mut coo = CooBuilder::new(n);
        for i in 0..n {
            coo.push(i, i, 1.0);
        }
        coo.build(true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(ax, xi)| ax * xi).sum()
    }

    /// Entrywise sum of two matrices of the same dimension.
    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.n, other.n, "dimension mismatch in operator sum");
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let take_a = q >= bc.len() || (p < ac.len() && ac[p] <= bc[q]);
                let take_b = p >= ac.len() || (q < bc.len() && bc[q] <= ac[p]);
                if take_a && take_b {
                    col_idx.push(ac[p]);
                    values.push(av[p] + bv[q]);
                    p += 1;
                    q += 1;
                } else if take_a {
                    col_idx.push(ac[p]);
                    values.push(av[p]);
                    p += 1;
                } else {
                    col_idx.push(bc[q]);
                    values.push(bv[q]);
                    q += 1;
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SparseOperator {
            n: self.n,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    pub fn scaled(&self, s: f64) -> SparseOperator {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            if let Ok(k) = cols.binary_search(&i) {
                d[i] = vals[k];
            }
        }
        d
    }

    /// max_{i,j} |A_ij - A_ji|, treating missing entries as zero.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let mut defect = 0.0f64;
        for i in 0..self.n {
            let (ac, av) = self.row(i);
            let (bc, bv) = t.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                if q >= bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    defect = defect.max(av[p].abs());
                    p += 1;
                } else if p >= ac.len() || bc[q] < ac[p] {
                    defect = defect.max(bv[q].abs());
                    q += 1;
                } else {
                    defect = defect.max((av[p] - bv[q]).abs());
                    p += 1;
                    q += 1;
                }
            }
        }
        defect
    }

    fn transpose(&self) -> SparseOperator {
        let mut counts = vec![0usize; self.n + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n {
            counts[j + 1] += counts[j];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for (i, j, v) in self.triplets() {
            let slot = next[j];
            col_idx[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        SparseOperator {
            n: self.n,
            row_ptr: counts,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Writes the matrix as `row col value` lines in row-major order.
    pub fn write_coordinate_text(&self, mut w: impl Write) -> std::io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {}", i, j, v)?;
        }
        Ok(())
    }
}
