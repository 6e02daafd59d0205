use crate::error::{Error, Result};
use crate::sparse::{Basis, SparseOperator};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Largest oscillator index accepted by [`oscillator_psi`].
pub const PSI_HARD_LIMIT: usize = 512;

/// Truncation of the two Fock registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct FockCutoff {
    pub nmax1: usize,
    pub nmax2: usize,
}

impl FockCutoff {
    pub fn new(nmax1: usize, nmax2: usize) -> Result<Self> {
        if nmax2 < 1 {
            return Err(Error::Cutoff("nmax2 must be at least 1".into()));
        }
        if nmax1 > PSI_HARD_LIMIT || nmax2 > PSI_HARD_LIMIT {
            return Err(Error::Cutoff(format!("cutoff above hard limit {PSI_HARD_LIMIT}")));
        }
        Ok(FockCutoff { nmax1, nmax2 })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint {
    pub x: f64,
    pub y: f64,
}

impl ComplexPoint {
    pub fn new(x: f64, y: f64) -> Self {
        ComplexPoint { x, y }
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x, self.y)
    }
}

/// Table `psi_0(x) ..= psi_nmax(x)` from the three-term recurrence.
pub fn oscillator_psi_table(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let p0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(p0);
    if nmax == 0 {
        return out;
    }
    out.push(2f64.sqrt() * x * p0);
    for n in 1..nmax {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Normalized Hermite function `psi_n(x)`.
pub fn oscillator_psi(n: usize, x: f64) -> Result<f64> {
    if n > PSI_HARD_LIMIT {
        return Err(Error::Cutoff(format!("psi index {n} above {PSI_HARD_LIMIT}")));
    }
    if !x.is_finite() {
        return Err(Error::Contract(format!("non-finite argument {x}")));
    }
    Ok(oscillator_psi_table(n, x)[n])
}

/// Two-dimensional ground state `e_{0,0}(x, y)`.
pub fn vacuum_2d(pt: ComplexPoint) -> f64 {
    (-(pt.x * pt.x + pt.y * pt.y) / 2.0).exp() / PI.sqrt()
}

fn cart_index(nmax: usize, j: usize, k: usize) -> usize {
    j * (nmax + 1) + k
}

/// Cartesian and circular annihilators on the square window `[0, nmax]^2`.
#[derive(Clone, Debug)]
pub struct LadderMatrices {
    pub nmax: usize,
    pub a_x: SparseOperator,
    pub a_y: SparseOperator,
    pub a1: SparseOperator,
    pub a2: SparseOperator,
}

impl LadderMatrices {
    pub fn new(nmax: usize) -> Self {
        let basis = Basis::Cartesian { nmax };
        let mut tx = Vec::new();
        let mut ty = Vec::new();
        for j in 0..=nmax {
            for k in 0..=nmax {
                let col = cart_index(nmax, j, k);
                if j > 0 {
                    tx.push((cart_index(nmax, j - 1, k), col, C64::new((j as f64).sqrt(), 0.0)));
                }
                if k > 0 {
                    ty.push((cart_index(nmax, j, k - 1), col, C64::new((k as f64).sqrt(), 0.0)));
                }
            }
        }
        let a_x = SparseOperator::from_triplets("a_X", basis, tx);
        let a_y = SparseOperator::from_triplets("a_Y", basis, ty);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a1 = a_x
            .scaled(C64::new(s, 0.0))
            .add_scaled(&a_y, C64::new(0.0, -s))
            .unwrap()
            .renamed("A_1");
        let a2 = a_x
            .scaled(C64::new(s, 0.0))
            .add_scaled(&a_y, C64::new(0.0, s))
            .unwrap()
            .renamed("A_2");
        LadderMatrices { nmax, a_x, a_y, a1, a2 }
    }

    pub fn basis(&self) -> Basis {
        Basis::Cartesian { nmax: self.nmax }
    }

    /// `e_{0,0}` as a Cartesian coefficient vector.
    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.basis().dim()];
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// True when `(j, k)` has total excitation strictly below the window edge.
    pub fn is_interior(&self, idx: usize) -> bool {
        let j = idx / (self.nmax + 1);
        let k = idx % (self.nmax + 1);
        j + k < self.nmax
    }

    /// `e_{n1,n2}` built by repeated creation.
    pub fn circular_mode(&self, n1: usize, n2: usize) -> Result<CartesianModeVector> {
        if n1 + n2 > self.nmax {
            return Err(Error::Cutoff(format!(
                "mode ({n1}, {n2}) needs total excitation {} > window {}",
                n1 + n2,
                self.nmax
            )));
        }
        let a1d = self.a1.adjoint();
        let a2d = self.a2.adjoint();
        let mut v = self.vacuum();
        for k in 1..=n2 {
            v = a2d.apply(&v)?;
            let s = 1.0 / (k as f64).sqrt();
            v.iter_mut().for_each(|c| *c *= s);
        }
        for k in 1..=n1 {
            v = a1d.apply(&v)?;
            let s = 1.0 / (k as f64).sqrt();
            v.iter_mut().for_each(|c| *c *= s);
        }
        let norm = crate::sparse::vec_norm(&v);
        Ok(CartesianModeVector { nmax: self.nmax, coeffs: v, norm })
    }
}

/// Builds the four ladder matrices on the window fixed by `cutoff.nmax2`.
pub fn ladder_matrices(cutoff: FockCutoff) -> LadderMatrices {
    LadderMatrices::new(cutoff.nmax2)
}

/// Coefficients of a two-dimensional function over `psi_j(x) psi_k(y)`.
#[derive(Clone, Debug)]
pub struct CartesianModeVector {
    pub nmax: usize,
    pub coeffs: Vec<C64>,
    pub norm: f64,
}

impl CartesianModeVector {
    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.coeffs[cart_index(self.nmax, j, k)]
    }
}

pub fn circular_mode(n1: usize, n2: usize, cutoff: FockCutoff) -> Result<CartesianModeVector> {
    ladder_matrices(cutoff).circular_mode(n1, n2)
}

/// Pointwise value of a Cartesian expansion.
pub fn eval_mode(v: &CartesianModeVector, pt: ComplexPoint) -> C64 {
    let px = oscillator_psi_table(v.nmax, pt.x);
    let py = oscillator_psi_table(v.nmax, pt.y);
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=v.nmax {
        let mut row = C64::new(0.0, 0.0);
        for k in 0..=v.nmax {
            row += v.get(j, k) * py[k];
        }
        acc += row * px[j];
    }
    acc
}

/// Largest entrywise defect of `[a, b^dag] - delta * 1` on columns with interior support.
pub fn interior_commutator_defect(
    lad: &LadderMatrices,
    a: &SparseOperator,
    b: &SparseOperator,
    delta: f64,
) -> Result<f64> {
    let comm = a.commutator(&b.adjoint())?;
    let dim = lad.basis().dim();
    let mut worst: f64 = 0.0;
    for col in (0..dim).filter(|&c| lad.is_interior(c)) {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[col] = C64::new(1.0, 0.0);
        let mut y = comm.apply(&e)?;
        y[col] -= C64::new(delta, 0.0);
        worst = y.iter().map(|c| c.norm()).fold(worst, f64::max);
    }
    Ok(worst)
}
