use crate::coherent::Branch;
use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::ladder::rank_one_sum;
use crate::sparse::{Basis, SparseOperator};
use crate::spinor::{first_unit, ladder_block, ModeIndex, Units};
use crate::state::{Spinor, SpinorState};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Relative tolerance for `V^2` sitting on an integer.
pub const EXCEPTIONAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Weak,
    Strong,
}

/// Chemical potential `V >= 0` with units; `V = 1` is rejected.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PotentialParams {
    pub v: f64,
    pub units: Units,
}

impl PotentialParams {
    pub fn new(v: f64, units: Units) -> Result<Self> {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Contract(format!("V = {v} must be finite and nonnegative")));
        }
        if (v * v - 1.0).abs() < EXCEPTIONAL_TOL {
            return Err(Error::RegimeBoundary(v));
        }
        Ok(PotentialParams { v, units })
    }

    pub fn with_v(v: f64) -> Result<Self> {
        Self::new(v, Units::default())
    }

    pub fn regime(&self) -> Regime {
        if self.v < 1.0 {
            Regime::Weak
        } else {
            Regime::Strong
        }
    }

    /// True when `V^2` is a positive integer within tolerance.
    pub fn is_exceptional(&self) -> bool {
        exceptional_level(self.v).is_some()
    }
}

/// The level `p = V^2` when it is a positive integer within tolerance.
pub fn exceptional_level(v: f64) -> Option<u64> {
    let v2 = v * v;
    let r = v2.round();
    if r >= 1.0 && (v2 - r).abs() < EXCEPTIONAL_TOL * v2.max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

pub fn is_exceptional_pair(p: u64, v: f64) -> bool {
    exceptional_level(v) == Some(p)
}

/// `p - V^2`, snapped to zero at an exceptional pair.
pub fn discriminant(p: u64, v: f64) -> f64 {
    if is_exceptional_pair(p, v) {
        0.0
    } else {
        p as f64 - v * v
    }
}

/// Principal square root; a negative-zero imaginary part counts as `+0`.
pub fn principal_sqrt(z: C64) -> C64 {
    C64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im }).sqrt()
}

/// `sqrt(p - V^2)` on the principal branch.
pub fn sqrt_disc(p: u64, v: f64) -> C64 {
    let d = discriminant(p, v);
    if d >= 0.0 {
        C64::new(d.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-d).sqrt())
    }
}

fn branch_sign(b: Branch) -> f64 {
    match b {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    }
}

/// `(-V -+ i sqrt(p - V^2)) / sqrt(p)`.
pub fn alpha(p: u64, v: f64, branch: Branch) -> Result<C64> {
    if p == 0 {
        return Err(Error::Contract("alpha needs p >= 1".into()));
    }
    let s = sqrt_disc(p, v);
    let i = C64::new(0.0, 1.0);
    Ok((C64::new(-v, 0.0) - branch_sign(branch) * i * s) / (p as f64).sqrt())
}

/// True when level `p >= 1` lies in the broken region `p < V^2`.
pub fn is_broken(p: u64, v: f64) -> bool {
    discriminant(p, v) < 0.0
}

/// Branch of `psi` paired with `phi^branch`: swapped on broken levels.
pub fn dual_branch(p: u64, v: f64, branch: Branch) -> Branch {
    match (is_broken(p, v), branch) {
        (false, b) => b,
        (true, Branch::Plus) => Branch::Minus,
        (true, Branch::Minus) => Branch::Plus,
    }
}

/// Normalization pair `(K_phi, K_psi)` for `phi_p^branch` and its dual.
/// `K_psi` is real positive and `conj(K_phi) K_psi` equals the pairing product.
pub fn normalization_k(p: u64, v: f64, branch: Branch) -> Result<(C64, C64)> {
    if p == 0 {
        return Ok((C64::new(1.0, 0.0), C64::new(1.0, 0.0)));
    }
    if is_exceptional_pair(p, v) {
        return Err(Error::ExceptionalPoint { p: p as i64, v });
    }
    let prod = pairing_product(p, v, branch);
    let mag = prod.norm().sqrt();
    Ok((prod.conj() / mag, C64::new(mag, 0.0)))
}

/// `p / (2 (p - V^2 + s i V sqrt(p - V^2)))` with `s` the sign of the dual branch.
pub fn pairing_product(p: u64, v: f64, branch: Branch) -> C64 {
    let s = sqrt_disc(p, v);
    let sig = branch_sign(dual_branch(p, v, branch));
    let d = C64::new(discriminant(p, v), 0.0) + sig * C64::new(0.0, v) * s;
    C64::new(p as f64, 0.0) / (2.0 * d)
}

/// Unnormalized `(e_p, a e_{p-1})`.
fn two_term(p: u64, a: C64, nmax2: usize) -> Spinor {
    let mut s = Spinor::zeros(nmax2);
    s.upper[p as usize] = C64::new(1.0, 0.0);
    s.lower[p as usize - 1] = a;
    s
}

fn check_level(p: i64, nmax2: usize) -> Result<u64> {
    let k = p.unsigned_abs();
    if k as usize > nmax2 {
        return Err(Error::Cutoff(format!("|p| = {k} exceeds nmax2 = {nmax2}")));
    }
    Ok(k)
}

fn level_branch(p: i64) -> Branch {
    if p >= 0 {
        Branch::Plus
    } else {
        Branch::Minus
    }
}

/// `phi` for signed label `p`: `phi^+_p` for `p >= 0`, `phi^-_{|p|}` otherwise.
pub fn phi_spinor(p: i64, v: f64, nmax2: usize) -> Result<Spinor> {
    let k = check_level(p, nmax2)?;
    if k == 0 {
        return Ok(two_zero(nmax2));
    }
    let b = level_branch(p);
    let (kphi, _) = normalization_k(k, v, b)?;
    Ok(two_term(k, alpha(k, v, b)?, nmax2).scaled(kphi))
}

fn two_zero(nmax2: usize) -> Spinor {
    let mut s = Spinor::zeros(nmax2);
    s.upper[0] = C64::new(1.0, 0.0);
    s
}

fn opposite(b: Branch) -> Branch {
    match b {
        Branch::Plus => Branch::Minus,
        Branch::Minus => Branch::Plus,
    }
}

/// Literal `psi^branch_k = (e_k, -alpha^{-branch}_k e_{k-1})` with the given magnitude.
fn psi_raw(k: u64, v: f64, branch: Branch, kpsi: C64, nmax2: usize) -> Result<Spinor> {
    Ok(two_term(k, -alpha(k, v, opposite(branch))?, nmax2).scaled(kpsi))
}

/// Dual of `phi` for signed label `p`: `psi` on unbroken levels, the swapped `psi` on broken ones.
pub fn dual_spinor(p: i64, v: f64, nmax2: usize) -> Result<Spinor> {
    let k = check_level(p, nmax2)?;
    if k == 0 {
        return Ok(two_zero(nmax2));
    }
    let b = level_branch(p);
    let (_, kpsi) = normalization_k(k, v, b)?;
    psi_raw(k, v, dual_branch(k, v, b), kpsi, nmax2)
}

/// `E_p`: `eps0 sqrt(p - V^2)`, `i eps0 V`, `-eps0 sqrt(-p - V^2)`.
pub fn eigenvalue_e(p: i64, v: f64, units: Units) -> C64 {
    let e0 = units.energy_scale();
    match p.signum() {
        0 => C64::new(0.0, e0 * v),
        1 => e0 * sqrt_disc(p as u64, v),
        _ => -e0 * sqrt_disc(p.unsigned_abs(), v),
    }
}

/// `theta_p = E_p - E_0`.
pub fn theta(p: i64, v: f64, units: Units) -> C64 {
    if p == 0 {
        return C64::new(0.0, 0.0);
    }
    eigenvalue_e(p, v, units) - eigenvalue_e(0, v, units)
}

/// `H(V) = (2 i v_f / xi) [[V, A2^dag], [-A2, -V]]` on the spinor register.
pub fn hv_operator(params: &PotentialParams, nmax2: usize) -> SparseOperator {
    let c = C64::new(0.0, params.units.energy_scale());
    let off = nmax2 + 1;
    let mut trips = Vec::new();
    for n in 0..=nmax2 {
        trips.push((n, n, c * params.v));
        trips.push((off + n, off + n, -c * params.v));
    }
    trips.extend(ladder_block(nmax2, 1, 0, true, c));
    trips.extend(ladder_block(nmax2, 0, 1, false, -c));
    SparseOperator::from_triplets("H(V)", Basis::SpinorRegister { nmax2 }, trips)
}

pub fn apply_hv(state: &SpinorState, params: &PotentialParams) -> Result<SpinorState> {
    state.apply_spinor(&hv_operator(params, state.cutoff.nmax2))
}

/// Dense eigenvalues of `H(V)` on the block spanned by `phi_p`, `|p| <= nmax2`.
pub fn dense_hv_eigenvalues(params: &PotentialParams, nmax2: usize) -> Vec<C64> {
    let full = hv_operator(params, nmax2).to_dense();
    let keep: Vec<usize> = (0..2 * (nmax2 + 1)).filter(|&i| i != 2 * nmax2 + 1).collect();
    let m = DMatrix::from_fn(keep.len(), keep.len(), |r, c| full[(keep[r], keep[c])]);
    nalgebra::Schur::new(m)
        .eigenvalues()
        .map(|e| e.iter().copied().collect())
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DualRole {
    Psi,
    PsiTilde,
}

/// `phi_p` and its dual for `|p| <= pmax` in a spinor register of size `nmax2`.
#[derive(Clone, Debug)]
pub struct BiorthFamily {
    pub params: PotentialParams,
    pub nmax2: usize,
    pub pmax: usize,
    phi: Vec<Spinor>,
    dual: Vec<Spinor>,
}

impl BiorthFamily {
    pub fn new(params: PotentialParams, nmax2: usize, pmax: usize) -> Result<Self> {
        if pmax > nmax2 {
            return Err(Error::Cutoff(format!("pmax {pmax} > nmax2 {nmax2}")));
        }
        let pm = pmax as i64;
        let phi = (-pm..=pm).map(|p| phi_spinor(p, params.v, nmax2)).collect::<Result<_>>()?;
        let dual = (-pm..=pm).map(|p| dual_spinor(p, params.v, nmax2)).collect::<Result<_>>()?;
        Ok(BiorthFamily { params, nmax2, pmax, phi, dual })
    }

    pub fn phi(&self, p: i64) -> &Spinor {
        &self.phi[(p + self.pmax as i64) as usize]
    }

    pub fn dual(&self, p: i64) -> &Spinor {
        &self.dual[(p + self.pmax as i64) as usize]
    }

    pub fn dual_role(&self) -> DualRole {
        match self.params.regime() {
            Regime::Weak => DualRole::Psi,
            Regime::Strong => DualRole::PsiTilde,
        }
    }

    pub fn p_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.pmax as i64)..=self.pmax as i64
    }

    /// `<phi_p, dual_q>` over the window, indexed `[p + pmax][q + pmax]`.
    pub fn gram(&self) -> Vec<Vec<C64>> {
        self.phi.iter().map(|a| self.dual.iter().map(|b| a.dot(b)).collect()).collect()
    }

    /// `<dual_q, O phi_p>`, the operator in biorthogonal coordinates.
    pub fn coordinates(&self, op: &SparseOperator) -> Result<DMatrix<C64>> {
        let n = self.phi.len();
        let imgs: Vec<Spinor> = self.phi.iter().map(|f| f.apply(op)).collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(n, n, |q, p| self.dual[q].dot(&imgs[p])))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Phi,
    Psi,
    PsiTilde,
}

#[derive(Clone, Debug)]
pub struct BiorthVector {
    pub role: Role,
    pub index: ModeIndex,
    pub state: SpinorState,
}

pub fn build_biorth_pair(
    idx: ModeIndex,
    params: &PotentialParams,
    cutoff: FockCutoff,
) -> Result<(BiorthVector, BiorthVector)> {
    let e = first_unit(idx.n, cutoff.nmax1)?;
    let phi = phi_spinor(idx.p, params.v, cutoff.nmax2)?;
    let dual = dual_spinor(idx.p, params.v, cutoff.nmax2)?;
    let role = match params.regime() {
        Regime::Weak => Role::Psi,
        Regime::Strong => Role::PsiTilde,
    };
    Ok((
        BiorthVector { role: Role::Phi, index: idx, state: SpinorState::product(&e, &phi, cutoff)? },
        BiorthVector { role, index: idx, state: SpinorState::product(&e, &dual, cutoff)? },
    ))
}

/// The four V-dependent ladders on the spinor register.
#[derive(Clone, Debug)]
pub struct PtLadders {
    pub a_k: SparseOperator,
    pub b_k: SparseOperator,
    pub c2: SparseOperator,
    pub d2: SparseOperator,
    pub family: BiorthFamily,
}

pub fn build_pt_ladders(params: &PotentialParams, cutoff: FockCutoff) -> Result<PtLadders> {
    if let Some(p) = exceptional_level(params.v) {
        return Err(Error::ExceptionalPoint { p: p as i64, v: params.v });
    }
    let nmax2 = cutoff.nmax2;
    let fam = BiorthFamily::new(*params, nmax2, nmax2)?;
    let pm = nmax2 as i64;
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    let mut tc = Vec::new();
    let mut td = Vec::new();
    for p in -pm..pm {
        let s = C64::new(((p + 1).unsigned_abs() as f64).sqrt(), 0.0);
        let r = principal_sqrt(theta(p + 1, params.v, params.units));
        ta.push((s, fam.phi(p).clone(), fam.dual(p + 1).clone()));
        tb.push((s, fam.phi(p + 1).clone(), fam.dual(p).clone()));
        tc.push((r, fam.phi(p).clone(), fam.dual(p + 1).clone()));
        td.push((r, fam.phi(p + 1).clone(), fam.dual(p).clone()));
    }
    Ok(PtLadders {
        a_k: rank_one_sum("A_K(V)", nmax2, &ta),
        b_k: rank_one_sum("B_K(V)", nmax2, &tb),
        c2: rank_one_sum("c_2", nmax2, &tc),
        d2: rank_one_sum("d_2", nmax2, &td),
        family: fam,
    })
}

/// `max ||(d2 c2 - h(V)) phi_p|| / ||phi_p||` over interior levels.
pub fn factorization_defect(params: &PotentialParams, cutoff: FockCutoff) -> Result<f64> {
    let lad = build_pt_ladders(params, cutoff)?;
    let nmax2 = cutoff.nmax2;
    let e0 = eigenvalue_e(0, params.v, params.units);
    let h = hv_operator(params, nmax2).add_scaled(&SparseOperator::identity("1", Basis::SpinorRegister { nmax2 }), -e0)?;
    let dc = lad.d2.matmul(&lad.c2)?;
    let pm = nmax2 as i64 - 1;
    let mut worst: f64 = 0.0;
    for p in -pm..=pm {
        let f = lad.family.phi(p);
        let mut r = f.apply(&dc)?;
        r.axpy(C64::new(-1.0, 0.0), &f.apply(&h)?);
        worst = worst.max(r.norm() / f.norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelKind {
    Broken,
    Unbroken,
    ZeroMode,
    Exceptional,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LevelClass {
    pub p: i64,
    #[serde(rename = "class")]
    pub kind: LevelKind,
}

pub fn classify_level(p: i64, v: f64) -> LevelKind {
    let k = p.unsigned_abs();
    if k == 0 {
        LevelKind::ZeroMode
    } else if is_exceptional_pair(k, v) {
        LevelKind::Exceptional
    } else if is_broken(k, v) {
        LevelKind::Broken
    } else {
        LevelKind::Unbroken
    }
}

pub fn classify_levels(v: f64, p_range: impl IntoIterator<Item = i64>) -> Vec<LevelClass> {
    p_range.into_iter().map(|p| LevelClass { p, kind: classify_level(p, v) }).collect()
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ExceptionalReport {
    pub p: u64,
    pub v: f64,
    pub alpha_plus: (f64, f64),
    pub alpha_minus: (f64, f64),
    /// Distance between the unit directions of `phi^+_p` and `phi^-_p`.
    pub coincidence: f64,
    pub shifted_eigenvalue: (f64, f64),
    /// `|<phi_p, psi_p>|` for unit directions.
    pub self_orthogonality: f64,
}

pub fn exceptional_diagnostics(p: u64, v_star: f64, nmax2: usize) -> Result<ExceptionalReport> {
    if !is_exceptional_pair(p, v_star) {
        return Err(Error::Contract(format!("V = {v_star} is not exceptional for p = {p}")));
    }
    check_level(p as i64, nmax2)?;
    let ap = alpha(p, v_star, Branch::Plus)?;
    let am = alpha(p, v_star, Branch::Minus)?;
    let unit = |s: Spinor| {
        let n = s.norm();
        s.scaled(C64::new(1.0 / n, 0.0))
    };
    let up = unit(two_term(p, ap, nmax2));
    let um = unit(two_term(p, am, nmax2));
    let mut d = up.clone();
    d.axpy(C64::new(-1.0, 0.0), &um);
    let psi = unit(psi_raw(p, v_star, Branch::Plus, C64::new(1.0, 0.0), nmax2)?);
    let e = eigenvalue_e(p as i64, v_star, Units::default());
    Ok(ExceptionalReport {
        p,
        v: v_star,
        alpha_plus: (ap.re, ap.im),
        alpha_minus: (am.re, am.im),
        coincidence: d.norm(),
        shifted_eigenvalue: (e.re, e.im),
        self_orthogonality: up.dot(&psi).norm(),
    })
}

/// `(|alpha^+_p|, |alpha^-_p|)` in the broken region `1 <= p < V^2`.
pub fn gain_loss_asymptotics(p: u64, v: f64) -> Result<(f64, f64)> {
    if p == 0 || !is_broken(p, v) {
        return Err(Error::Contract(format!("p = {p} is not a broken level for V = {v}")));
    }
    let r = (v * v - p as f64).sqrt();
    let sp = (p as f64).sqrt();
    Ok(((v - r) / sp, (v + r) / sp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pp(v: f64) -> PotentialParams {
        PotentialParams::with_v(v).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let a = alpha(1, 0.5, Branch::Plus).unwrap();
        assert_abs_diff_eq!(a.re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, -0.75f64.sqrt(), epsilon = 1e-15);
        for p in 1..=10 {
            for b in [Branch::Plus, Branch::Minus] {
                assert_abs_diff_eq!(alpha(p, 0.5, b).unwrap().norm(), 1.0, epsilon = 1e-12);
            }
        }
        let v = 2f64.sqrt();
        assert_eq!(alpha(2, v, Branch::Plus).unwrap(), C64::new(-1.0, 0.0));
        assert_eq!(alpha(2, v, Branch::Minus).unwrap(), C64::new(-1.0, 0.0));
    }

    #[test]
    fn k_examples() {
        let (kf, kp) = normalization_k(1, 0.5, Branch::Plus).unwrap();
        assert_abs_diff_eq!(kf.norm(), (1.0f64 / 3.0).powf(0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(kp.re, (1.0f64 / 3.0).powf(0.25), epsilon = 1e-14);
        let s = 0.75f64.sqrt();
        let want = C64::new(1.0, 0.0) / (2.0 * C64::new(0.75, 0.5 * s));
        assert!((kf.conj() * kp - want).norm() < 1e-15);
        assert!(matches!(normalization_k(4, 2.0, Branch::Plus), Err(Error::ExceptionalPoint { .. })));
        let (kf, _) = normalization_k(1_000_000, 0.5, Branch::Plus).unwrap();
        assert_abs_diff_eq!(kf.norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-7);
    }

    #[test]
    fn eigenvalue_examples() {
        let u = Units::default();
        assert_eq!(eigenvalue_e(0, 0.5, u), C64::new(0.0, 1.0));
        assert_abs_diff_eq!(eigenvalue_e(1, 0.5, u).re, 3f64.sqrt(), epsilon = 1e-15);
        let e = eigenvalue_e(1, 9.5, u);
        assert_eq!(e.re, 0.0);
        assert_abs_diff_eq!(e.im, 2.0 * 89.25f64.sqrt(), epsilon = 1e-13);
        let t = theta(1, 0.5, u);
        assert_abs_diff_eq!(t.re, 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.norm(), 2.0, epsilon = 1e-15);
        assert_eq!(theta(0, 3.3, u), C64::new(0.0, 0.0));
    }

    #[test]
    fn hv_reduces_to_hk() {
        let a = hv_operator(&pp(0.0), 6).triplets();
        let b = crate::spinor::hk_operator(Units::default(), 6).triplets();
        assert_eq!(a, b);
    }

    #[test]
    fn eigenvectors_and_biorthogonality() {
        for v in [0.25, 0.5, 0.9, 1.5, 9.5] {
            let params = pp(v);
            let fam = BiorthFamily::new(params, 20, 20).unwrap();
            let h = hv_operator(&params, 20);
            let hd = h.adjoint();
            for p in fam.p_range() {
                let e = eigenvalue_e(p, v, params.units);
                let mut r = fam.phi(p).apply(&h).unwrap();
                r.axpy(-e, fam.phi(p));
                assert!(r.norm() < 1e-10, "V={v} p={p} right {}", r.norm());
                let mut l = fam.dual(p).apply(&hd).unwrap();
                l.axpy(-e.conj(), fam.dual(p));
                assert!(l.norm() < 1e-10, "V={v} p={p} left {}", l.norm());
            }
            let g = fam.gram();
            for (i, row) in g.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((x - want).norm() < 1e-12, "V={v} ({i},{j}) {x}");
                }
            }
        }
    }

    #[test]
    fn dense_oracle_matches_formula() {
        for v in [0.5, 1.5, 9.5] {
            let params = pp(v);
            let got = dense_hv_eigenvalues(&params, 12);
            let mut used = vec![false; got.len()];
            for p in -12..=12 {
                let e = eigenvalue_e(p, v, params.units);
                let (k, d) = got
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !used[*i])
                    .map(|(i, g)| (i, (g - e).norm()))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                used[k] = true;
                assert!(d < 1e-8, "V={v} p={p} {d}");
            }
        }
    }

    #[test]
    fn ladder_actions() {
        for v in [0.5, 9.5] {
            let params = pp(v);
            let cut = FockCutoff::new(2, 14).unwrap();
            let lad = build_pt_ladders(&params, cut).unwrap();
            let f = &lad.family;
            assert!(f.phi(0).apply(&lad.a_k).unwrap().norm() < 1e-13);
            assert!(f.dual(-1).apply(&lad.a_k.adjoint()).unwrap().norm() < 1e-13);
            assert!(f.phi(0).apply(&lad.c2).unwrap().norm() < 1e-13);
            let mut r = f.phi(1).apply(&lad.d2).unwrap();
            r.axpy(-principal_sqrt(theta(2, v, params.units)), f.phi(2));
            assert!(r.norm() < 1e-12);
            let coords = f.coordinates(&lad.a_k).unwrap();
            for q in 0..coords.nrows() {
                for p in 0..coords.ncols() {
                    let pl = p as i64 - 14;
                    let want = if q + 1 == p { (pl.unsigned_abs() as f64).sqrt() } else { 0.0 };
                    assert!((coords[(q, p)] - want).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn factorization_small() {
        let cut = FockCutoff::new(1, 16).unwrap();
        for v in [0.0, 0.25, 0.5, 9.5] {
            assert!(factorization_defect(&pp(v), cut).unwrap() < 1e-9, "V={v}");
        }
    }

    #[test]
    fn exceptional_refusal() {
        let cut = FockCutoff::new(1, 8).unwrap();
        assert!(matches!(build_pt_ladders(&pp(2.0), cut), Err(Error::ExceptionalPoint { p: 4, .. })));
        assert!(matches!(PotentialParams::with_v(1.0), Err(Error::RegimeBoundary(_))));
        let r = exceptional_diagnostics(4, 2.0, 8).unwrap();
        assert!(r.coincidence < 1e-12 && r.self_orthogonality < 1e-12);
        let r = exceptional_diagnostics(1, 1.0, 8).unwrap();
        assert_eq!(r.alpha_plus, (-1.0, 0.0));
        let r = exceptional_diagnostics(2, 1.4142135623730951, 8).unwrap();
        assert!(r.coincidence < 1e-9);
        assert!(exceptional_diagnostics(3, 2.0, 8).is_err());
    }

    #[test]
    fn classification() {
        let c = classify_levels(9.5, [0, 1, 90, 91, -90, -91]);
        let kinds: Vec<_> = c.iter().map(|x| x.kind).collect();
        use LevelKind::*;
        assert_eq!(kinds, vec![ZeroMode, Broken, Broken, Unbroken, Broken, Unbroken]);
        assert_eq!(classify_level(9, 3.0), Exceptional);
    }

    #[test]
    fn asymptotics() {
        let (a, b) = gain_loss_asymptotics(1, 9.5).unwrap();
        assert_abs_diff_eq!(a * b, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 18.9472, epsilon = 1e-4);
        assert_abs_diff_eq!(a, alpha(1, 9.5, Branch::Plus).unwrap().norm(), epsilon = 1e-15);
        assert!(gain_loss_asymptotics(91, 9.5).is_err());
    }
}
