use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Coordinate system a sparse operator acts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Square Cartesian window `(j, k)`, `0 <= j, k <= nmax`, index `j * (nmax + 1) + k`.
    Cartesian { nmax: usize },
    /// First Fock register `e_n`, `0 <= n <= nmax1`.
    FirstRegister { nmax1: usize },
    /// Two-component spinor over `e_n`, index `comp * (nmax2 + 1) + n`.
    SpinorRegister { nmax2: usize },
    /// Mode window `(n, p)`, index `n * (2 pmax + 1) + (p + pmax)`.
    Modes { nmax1: usize, pmax: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Cartesian { nmax } => (nmax + 1) * (nmax + 1),
            Basis::FirstRegister { nmax1 } => nmax1 + 1,
            Basis::SpinorRegister { nmax2 } => 2 * (nmax2 + 1),
            Basis::Modes { nmax1, pmax } => (nmax1 + 1) * (2 * pmax + 1),
        }
    }
}

/// Compressed sparse row operator tagged with a name and basis.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub name: String,
    pub basis: Basis,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(name: &str, basis: Basis, mut trips: Vec<(usize, usize, C64)>) -> Self {
        let dim = basis.dim();
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            vals.push(v);
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != C64::new(0.0, 0.0)).collect();
        let mut cols2 = Vec::with_capacity(vals.len());
        let mut vals2 = Vec::with_capacity(vals.len());
        for i in 0..vals.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                cols2.push(col_idx[i]);
                vals2.push(vals[i]);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { name: name.to_string(), basis, row_ptr, col_idx: cols2, vals: vals2 }
    }

    pub fn identity(name: &str, basis: Basis) -> Self {
        let trips = (0..basis.dim()).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(name, basis, trips)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.col_idx[k], self.vals[k]));
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::BasisMismatch(format!(
                "{}: vector length {} vs dimension {}",
                self.name,
                x.len(),
                self.dim()
            )));
        }
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
        Ok(y)
    }

    fn check_same(&self, other: &SparseOperator) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!(
                "{} ({:?}) vs {} ({:?})",
                self.name, self.basis, other.name, other.basis
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> SparseOperator {
        let trips = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseOperator::from_triplets(&format!("{}^dag", self.name), self.basis, trips)
    }

    pub fn scaled(&self, s: C64) -> SparseOperator {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SparseOperator, s: C64) -> Result<SparseOperator> {
        self.check_same(other)?;
        let mut trips = self.triplets();
        trips.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, v * s)));
        Ok(SparseOperator::from_triplets(&self.name, self.basis, trips))
    }

    /// Operator product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_same(other)?;
        let mut trips = Vec::new();
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let m = self.col_idx[k];
                let a = self.vals[k];
                for l in other.row_ptr[m]..other.row_ptr[m + 1] {
                    trips.push((r, other.col_idx[l], a * other.vals[l]));
                }
            }
        }
        Ok(SparseOperator::from_triplets(
            &format!("{}*{}", self.name, other.name),
            self.basis,
            trips,
        ))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Ok(ab
            .add_scaled(&ba, C64::new(-1.0, 0.0))?
            .renamed(&format!("[{},{}]", self.name, other.name)))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `<x, y>`, antilinear in `x`.
pub fn vec_dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
