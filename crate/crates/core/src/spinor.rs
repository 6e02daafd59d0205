use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::sparse::{Basis, SparseOperator};
use crate::state::{Spinor, SpinorState};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

/// Fermi velocity and magnetic length; energies scale with `2 v_f / xi`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Units {
    pub v_f: f64,
    pub xi: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { v_f: 1.0, xi: 1.0 }
    }
}

impl Units {
    pub fn new(v_f: f64, xi: f64) -> Result<Self> {
        if !(v_f.is_finite() && xi.is_finite() && v_f > 0.0 && xi > 0.0) {
            return Err(Error::Contract(format!("v_f = {v_f}, xi = {xi} must be positive")));
        }
        Ok(Units { v_f, xi })
    }

    pub fn energy_scale(&self) -> f64 {
        2.0 * self.v_f / self.xi
    }
}

/// Label `(n, p)` of `c_{n,p} = e_n (x) v_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ModeIndex {
    pub n: usize,
    pub p: i64,
}

impl ModeIndex {
    pub fn new(n: usize, p: i64) -> Self {
        ModeIndex { n, p }
    }
}

/// Finite set of labels `0 <= n <= nmax1`, `|p| <= pmax`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ModeWindow {
    pub nmax1: usize,
    pub pmax: usize,
}

impl ModeWindow {
    pub fn new(nmax1: usize, pmax: usize) -> Self {
        ModeWindow { nmax1, pmax }
    }

    /// Window covering every c-vector representable under `cutoff`.
    pub fn from_cutoff(cutoff: FockCutoff) -> Self {
        ModeWindow { nmax1: cutoff.nmax1, pmax: cutoff.nmax2 }
    }

    pub fn len(&self) -> usize {
        (self.nmax1 + 1) * (2 * self.pmax + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, m: ModeIndex) -> Option<usize> {
        if m.n > self.nmax1 || m.p.unsigned_abs() as usize > self.pmax {
            return None;
        }
        Some(m.n * (2 * self.pmax + 1) + (m.p + self.pmax as i64) as usize)
    }

    pub fn at(&self, i: usize) -> ModeIndex {
        let w = 2 * self.pmax + 1;
        ModeIndex { n: i / w, p: (i % w) as i64 - self.pmax as i64 }
    }

    pub fn iter(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.at(i))
    }

    pub fn p_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.pmax as i64)..=self.pmax as i64
    }

    /// Labels one step away from every edge of the window.
    pub fn is_interior(&self, m: ModeIndex) -> bool {
        m.n < self.nmax1 && (m.p.unsigned_abs() as usize) < self.pmax
    }

    pub fn basis(&self) -> Basis {
        Basis::Modes { nmax1: self.nmax1, pmax: self.pmax }
    }
}

fn check_p(p: i64, nmax2: usize) -> Result<()> {
    if p.unsigned_abs() as usize > nmax2 {
        return Err(Error::Cutoff(format!("|p| = {} exceeds nmax2 = {nmax2}", p.abs())));
    }
    Ok(())
}

/// Spinor-register factor `v_p` of the c-basis.
pub fn v_spinor(p: i64, nmax2: usize) -> Result<Spinor> {
    check_p(p, nmax2)?;
    let mut s = Spinor::zeros(nmax2);
    let k = p.unsigned_abs() as usize;
    if p == 0 {
        s.upper[0] = C64::new(1.0, 0.0);
        return Ok(s);
    }
    let sign = if p > 0 { -1.0 } else { 1.0 };
    s.upper[k] = C64::new(FRAC_1_SQRT_2, 0.0);
    s.lower[k - 1] = C64::new(0.0, sign * FRAC_1_SQRT_2);
    Ok(s)
}

/// First-register unit vector `e_n`.
pub fn first_unit(n: usize, nmax1: usize) -> Result<Vec<C64>> {
    if n > nmax1 {
        return Err(Error::Cutoff(format!("n = {n} exceeds nmax1 = {nmax1}")));
    }
    let mut v = vec![C64::new(0.0, 0.0); nmax1 + 1];
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

pub fn basis_vector_c(idx: ModeIndex, cutoff: FockCutoff) -> Result<SpinorState> {
    SpinorState::product(&first_unit(idx.n, cutoff.nmax1)?, &v_spinor(idx.p, cutoff.nmax2)?, cutoff)
}

/// Triplets of `s * A` mapping component `from` to component `to`; `A` is the
/// single-register annihilator, or its adjoint when `create`.
pub(crate) fn ladder_block(
    nmax2: usize,
    from: usize,
    to: usize,
    create: bool,
    s: C64,
) -> Vec<(usize, usize, C64)> {
    let off = nmax2 + 1;
    (1..=nmax2)
        .map(|n| {
            let val = s * (n as f64).sqrt();
            if create {
                (to * off + n, from * off + n - 1, val)
            } else {
                (to * off + n - 1, from * off + n, val)
            }
        })
        .collect()
}

/// Single-register annihilator `A_2` on `e_0 ..= e_nmax2`.
pub fn fock_annihilator(nmax1: usize) -> SparseOperator {
    let trips = (1..=nmax1).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))).collect();
    SparseOperator::from_triplets("A_(1)", Basis::FirstRegister { nmax1 }, trips)
}

/// `H_K = (2 i v_f / xi) [[0, A2^dag], [-A2, 0]]` on the spinor register.
pub fn hk_operator(units: Units, nmax2: usize) -> SparseOperator {
    let c = C64::new(0.0, units.energy_scale());
    let mut trips = ladder_block(nmax2, 1, 0, true, c);
    trips.extend(ladder_block(nmax2, 0, 1, false, -c));
    SparseOperator::from_triplets("H_K", Basis::SpinorRegister { nmax2 }, trips)
}

pub fn apply_hk(state: &SpinorState, units: Units) -> Result<SpinorState> {
    state.apply_spinor(&hk_operator(units, state.cutoff.nmax2))
}

/// Landau level `sign(p) (2 v_f / xi) sqrt|p|`.
pub fn energy(idx: ModeIndex, units: Units) -> f64 {
    energy_p(idx.p, units)
}

pub fn energy_p(p: i64, units: Units) -> f64 {
    (p.signum() as f64) * units.energy_scale() * (p.unsigned_abs() as f64).sqrt()
}

/// Energies of every label in a window.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub window: ModeWindow,
    pub entries: BTreeMap<ModeIndex, C64>,
}

impl Spectrum {
    pub fn v0(window: ModeWindow, units: Units) -> Self {
        let entries = window.iter().map(|m| (m, C64::new(energy(m, units), 0.0))).collect();
        Spectrum { window, entries }
    }
}

/// Dense eigenvalues of `H_K` on the invariant block spanned by `v_p`, `|p| <= nmax2`.
pub fn dense_hk_eigenvalues(units: Units, nmax2: usize) -> Vec<f64> {
    let full = hk_operator(units, nmax2).to_dense();
    let keep: Vec<usize> = (0..2 * (nmax2 + 1)).filter(|&i| i != 2 * nmax2 + 1).collect();
    let m = DMatrix::from_fn(keep.len(), keep.len(), |r, c| full[(keep[r], keep[c])]);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}
