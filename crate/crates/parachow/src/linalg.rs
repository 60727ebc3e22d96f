//! Exact linear algebra over Q: matrices, reduced echelon form, and
//! canonically represented subspaces. Containment and equality reduce to
//! exact rank computations, so everything here is deterministic.

use crate::rational::Q;
use num::traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return None;
        }
        Some(QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = QMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        *out.at_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> QMatrix {
        let mut out = QMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.rows, other.rows, "row mismatch");
        let mut out = QMatrix::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(i, j) = self.at(i, j).clone();
            }
            for j in 0..other.cols {
                *out.at_mut(i, self.cols + j) = other.at(i, j).clone();
            }
        }
        out
    }

    pub fn scale(&self, c: &Q) -> QMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= c;
        }
        out
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&i| !self.at(i, col).is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..self.cols {
                    let a = self.at(p, j).clone();
                    let b = self.at(row, j).clone();
                    *self.at_mut(p, j) = b;
                    *self.at_mut(row, j) = a;
                }
            }
            let lead = self.at(row, col).clone();
            for j in col..self.cols {
                let v = self.at(row, j).clone() / &lead;
                *self.at_mut(row, j) = v;
            }
            for i in 0..self.rows {
                if i == row || self.at(i, col).is_zero() {
                    continue;
                }
                let f = self.at(i, col).clone();
                for j in col..self.cols {
                    let v = self.at(i, j).clone() - &f * self.at(row, j);
                    *self.at_mut(i, j) = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Columns spanning the kernel, one per free column of the RREF.
    pub fn null_space(&self) -> QMatrix {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = QMatrix::zero(self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            *out.at_mut(fc, k) = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                *out.at_mut(pc, k) = -m.at(r, fc).clone();
            }
        }
        out
    }
}

/// A linear subspace of Q^ambient, held as a canonical column basis (the
/// reduced row echelon form of any spanning set, transposed). Equal
/// subspaces compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: QMatrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: QMatrix::zero(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: QMatrix::identity(ambient),
        }
    }

    /// Span of the columns of `m`, canonicalized.
    pub fn from_columns(m: &QMatrix) -> Self {
        let mut t = m.transpose();
        t.rref();
        let nonzero: Vec<Vec<Q>> = (0..t.rows())
            .filter(|&i| (0..t.cols()).any(|j| !t.at(i, j).is_zero()))
            .map(|i| (0..t.cols()).map(|j| t.at(i, j).clone()).collect())
            .collect();
        let rowmat = QMatrix::from_rows(nonzero).unwrap_or_else(|| QMatrix::zero(0, m.rows()));
        let basis = if rowmat.rows() == 0 {
            QMatrix::zero(m.rows(), 0)
        } else {
            rowmat.transpose()
        };
        Subspace {
            ambient: m.rows(),
            basis,
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &QMatrix {
        &self.basis
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        debug_assert_eq!(self.ambient, other.ambient);
        self.basis.hstack(&other.basis).rank() == self.dim()
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::from_columns(&self.basis.hstack(&other.basis))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        // Null vectors (x, y) of [U | -V] satisfy Ux = Vy; the intersection
        // is spanned by the Ux.
        let stacked = self.basis.hstack(&other.basis.scale(&-Q::one()));
        let null = stacked.null_space();
        let mut cols = QMatrix::zero(self.ambient, null.cols());
        for j in 0..null.cols() {
            for i in 0..self.ambient {
                let mut acc = Q::zero();
                for k in 0..self.basis.cols() {
                    acc += self.basis.at(i, k) * null.at(k, j);
                }
                *cols.at_mut(i, j) = acc;
            }
        }
        Subspace::from_columns(&cols)
    }

    /// Image of this subspace under a linear map.
    pub fn apply(&self, map: &QMatrix) -> Subspace {
        Subspace::from_columns(&map.mul(&self.basis))
    }

    /// {x : map x in target}.
    pub fn preimage(map: &QMatrix, target: &Subspace) -> Subspace {
        let stacked = map.hstack(&target.basis.scale(&-Q::one()));
        let null = stacked.null_space();
        let mut cols = QMatrix::zero(map.cols(), null.cols());
        for j in 0..null.cols() {
            for i in 0..map.cols() {
                *cols.at_mut(i, j) = null.at(i, j).clone();
            }
        }
        Subspace::from_columns(&cols)
    }
}

pub fn column_space(m: &QMatrix) -> Subspace {
    Subspace::from_columns(m)
}

pub fn kernel(m: &QMatrix) -> Subspace {
    Subspace::from_columns(&m.null_space())
}
