use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::sparse::{Basis, SparseOperator};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Vector in the spinor register, both components over `e_0 ..= e_nmax2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spinor {
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
}

impl Spinor {
    pub fn zeros(nmax2: usize) -> Self {
        Spinor { upper: vec![ZERO; nmax2 + 1], lower: vec![ZERO; nmax2 + 1] }
    }

    pub fn nmax2(&self) -> usize {
        self.upper.len() - 1
    }

    pub fn to_flat(&self) -> Vec<C64> {
        let mut v = self.upper.clone();
        v.extend_from_slice(&self.lower);
        v
    }

    pub fn from_flat(v: &[C64]) -> Self {
        let h = v.len() / 2;
        Spinor { upper: v[..h].to_vec(), lower: v[h..].to_vec() }
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn dot(&self, other: &Spinor) -> C64 {
        let u: C64 = self.upper.iter().zip(&other.upper).map(|(a, b)| a.conj() * b).sum();
        let l: C64 = self.lower.iter().zip(&other.lower).map(|(a, b)| a.conj() * b).sum();
        u + l
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper.iter().chain(&self.lower).map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn axpy(&mut self, a: C64, x: &Spinor) {
        for (s, v) in self.upper.iter_mut().zip(&x.upper) {
            *s += a * v;
        }
        for (s, v) in self.lower.iter_mut().zip(&x.lower) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: C64) -> Spinor {
        Spinor {
            upper: self.upper.iter().map(|v| a * v).collect(),
            lower: self.lower.iter().map(|v| a * v).collect(),
        }
    }

    pub fn apply(&self, op: &SparseOperator) -> Result<Spinor> {
        if op.basis != (Basis::SpinorRegister { nmax2: self.nmax2() }) {
            return Err(Error::BasisMismatch(format!("{} on spinor of nmax2 {}", op.name, self.nmax2())));
        }
        Ok(Spinor::from_flat(&op.apply(&self.to_flat())?))
    }
}

/// Truncation bookkeeping attached to series-built states.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct SeriesInfo {
    pub terms_first: usize,
    pub terms_second: usize,
    pub tail_first: f64,
    pub tail_second: f64,
}

/// Vector in `H1 (x) H2 (x) C^2`, components indexed `[n1][n2]`.
#[derive(Clone, Debug)]
pub struct SpinorState {
    pub cutoff: FockCutoff,
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
    pub series: Option<SeriesInfo>,
}

impl SpinorState {
    pub fn zeros(cutoff: FockCutoff) -> Self {
        let n = (cutoff.nmax1 + 1) * (cutoff.nmax2 + 1);
        SpinorState { cutoff, upper: vec![ZERO; n], lower: vec![ZERO; n], series: None }
    }

    #[inline]
    pub fn idx(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.cutoff.nmax2 + 1) + n2
    }

    /// `f (x) s` for a first-register vector `f`.
    pub fn product(first: &[C64], spinor: &Spinor, cutoff: FockCutoff) -> Result<Self> {
        if first.len() != cutoff.nmax1 + 1 || spinor.nmax2() != cutoff.nmax2 {
            return Err(Error::BasisMismatch("product factors do not match cutoff".into()));
        }
        let mut out = SpinorState::zeros(cutoff);
        for (n1, f) in first.iter().enumerate() {
            for n2 in 0..=cutoff.nmax2 {
                let i = out.idx(n1, n2);
                out.upper[i] = f * spinor.upper[n2];
                out.lower[i] = f * spinor.lower[n2];
            }
        }
        Ok(out)
    }

    /// Adds `coef * e_{n1} (x) s`.
    pub fn add_product(&mut self, n1: usize, coef: C64, s: &Spinor) {
        let base = self.idx(n1, 0);
        for n2 in 0..=self.cutoff.nmax2 {
            self.upper[base + n2] += coef * s.upper[n2];
            self.lower[base + n2] += coef * s.lower[n2];
        }
    }

    pub fn slice(&self, n1: usize) -> Spinor {
        let a = self.idx(n1, 0);
        let b = a + self.cutoff.nmax2 + 1;
        Spinor { upper: self.upper[a..b].to_vec(), lower: self.lower[a..b].to_vec() }
    }

    pub fn set_slice(&mut self, n1: usize, s: &Spinor) {
        let a = self.idx(n1, 0);
        let b = a + self.cutoff.nmax2 + 1;
        self.upper[a..b].copy_from_slice(&s.upper);
        self.lower[a..b].copy_from_slice(&s.lower);
    }

    pub fn dot(&self, other: &SpinorState) -> Result<C64> {
        self.check(other)?;
        let u: C64 = self.upper.iter().zip(&other.upper).map(|(a, b)| a.conj() * b).sum();
        let l: C64 = self.lower.iter().zip(&other.lower).map(|(a, b)| a.conj() * b).sum();
        Ok(u + l)
    }

    fn check(&self, other: &SpinorState) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::BasisMismatch(format!("{:?} vs {:?}", self.cutoff, other.cutoff)));
        }
        Ok(())
    }

    pub fn component_masses(&self) -> (f64, f64) {
        (
            self.upper.iter().map(|c| c.norm_sqr()).sum(),
            self.lower.iter().map(|c| c.norm_sqr()).sum(),
        )
    }

    pub fn norm(&self) -> f64 {
        let (u, l) = self.component_masses();
        (u + l).sqrt()
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, other: &SpinorState, a: C64) -> Result<SpinorState> {
        self.check(other)?;
        let mut out = self.clone();
        out.series = None;
        for (s, v) in out.upper.iter_mut().zip(&other.upper) {
            *s += a * v;
        }
        for (s, v) in out.lower.iter_mut().zip(&other.lower) {
            *s += a * v;
        }
        Ok(out)
    }

    pub fn scaled(&self, a: C64) -> SpinorState {
        let mut out = self.clone();
        out.upper.iter_mut().chain(out.lower.iter_mut()).for_each(|v| *v *= a);
        out
    }

    /// Applies a spinor-register operator to every `n1` slice.
    pub fn apply_spinor(&self, op: &SparseOperator) -> Result<SpinorState> {
        let mut out = SpinorState::zeros(self.cutoff);
        for n1 in 0..=self.cutoff.nmax1 {
            out.set_slice(n1, &self.slice(n1).apply(op)?);
        }
        Ok(out)
    }

    /// Applies a first-register operator to every `(component, n2)` column.
    pub fn apply_first(&self, op: &SparseOperator) -> Result<SpinorState> {
        if op.basis != (Basis::FirstRegister { nmax1: self.cutoff.nmax1 }) {
            return Err(Error::BasisMismatch(format!("{} on first register", op.name)));
        }
        let mut out = SpinorState::zeros(self.cutoff);
        let n1s = self.cutoff.nmax1 + 1;
        for n2 in 0..=self.cutoff.nmax2 {
            for comp in 0..2 {
                let src = if comp == 0 { &self.upper } else { &self.lower };
                let col: Vec<C64> = (0..n1s).map(|n1| src[self.idx(n1, n2)]).collect();
                let y = op.apply(&col)?;
                let dst = if comp == 0 { &mut out.upper } else { &mut out.lower };
                for (n1, v) in y.into_iter().enumerate() {
                    dst[n1 * (self.cutoff.nmax2 + 1) + n2] = v;
                }
            }
        }
        Ok(out)
    }
}

/// `first (x) spinor`; `None` stands for the identity.
#[derive(Clone, Debug)]
pub struct TensorOperator {
    pub name: String,
    pub first: Option<SparseOperator>,
    pub spinor: Option<SparseOperator>,
}

impl TensorOperator {
    pub fn on_first(op: SparseOperator) -> Self {
        TensorOperator { name: op.name.clone(), first: Some(op), spinor: None }
    }

    pub fn on_spinor(op: SparseOperator) -> Self {
        TensorOperator { name: op.name.clone(), first: None, spinor: Some(op) }
    }

    pub fn apply(&self, s: &SpinorState) -> Result<SpinorState> {
        let mut out = match &self.spinor {
            Some(op) => s.apply_spinor(op)?,
            None => {
                let mut c = s.clone();
                c.series = None;
                c
            }
        };
        if let Some(op) = &self.first {
            out = out.apply_first(op)?;
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> TensorOperator {
        TensorOperator {
            name: format!("{}^dag", self.name),
            first: self.first.as_ref().map(|o| o.adjoint()),
            spinor: self.spinor.as_ref().map(|o| o.adjoint()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_layout() {
        let cut = FockCutoff::new(2, 3).unwrap();
        let mut s = Spinor::zeros(3);
        s.upper[1] = C64::new(1.0, 0.0);
        s.lower[2] = C64::new(0.0, 2.0);
        let f = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(3.0, 0.0)];
        let st = SpinorState::product(&f, &s, cut).unwrap();
        assert_eq!(st.upper[st.idx(2, 1)], C64::new(3.0, 0.0));
        assert_eq!(st.lower[st.idx(2, 2)], C64::new(0.0, 6.0));
        assert!((st.norm() - (10f64 * 5.0).sqrt()).abs() < 1e-14);
        assert_eq!(st.slice(2), s.scaled(C64::new(3.0, 0.0)));
    }

    #[test]
    fn mismatched_cutoffs_error() {
        let a = SpinorState::zeros(FockCutoff::new(2, 3).unwrap());
        let b = SpinorState::zeros(FockCutoff::new(3, 3).unwrap());
        assert!(a.dot(&b).is_err());
    }

    #[test]
    fn first_register_shift() {
        let cut = FockCutoff::new(3, 1).unwrap();
        let shift = SparseOperator::from_triplets(
            "s",
            Basis::FirstRegister { nmax1: 3 },
            vec![(1, 0, C64::new(1.0, 0.0))],
        );
        let mut s = Spinor::zeros(1);
        s.upper[0] = C64::new(1.0, 0.0);
        let mut f = vec![C64::new(0.0, 0.0); 4];
        f[0] = C64::new(1.0, 0.0);
        let st = SpinorState::product(&f, &s, cut).unwrap();
        let out = TensorOperator::on_first(shift).apply(&st).unwrap();
        assert_eq!(out.upper[out.idx(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(out.norm(), 1.0);
    }
}
