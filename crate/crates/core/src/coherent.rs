use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::ladder::{build_ladder, LadderKind};
use crate::quadrature::{ln_factorial, GaussLaguerre};
use crate::spinor::v_spinor;
use crate::state::{SeriesInfo, Spinor, SpinorState};
use num_complex::Complex64 as C64;

/// Tolerance on the series tail bound.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentSpec {
    pub z1: C64,
    pub z2: C64,
    pub family: Family,
    pub branch: Branch,
    pub cutoff: FockCutoff,
}

/// Level carried by the `n2`-th term of a family/branch.
pub fn sigma(family: Family, branch: Branch, n2: usize) -> i64 {
    let n = n2 as i64;
    match (family, branch) {
        (Family::A, Branch::Plus) => n,
        (Family::A, Branch::Minus) => -n - 1,
        (Family::B, Branch::Plus) => n + 1,
        (Family::B, Branch::Minus) => -n,
    }
}

/// Largest `n2` with `|sigma(n2)| <= nmax2`.
pub fn sigma_cap(family: Family, branch: Branch, nmax2: usize) -> Option<usize> {
    match (family, branch) {
        (Family::A, Branch::Plus) | (Family::B, Branch::Minus) => Some(nmax2),
        _ => nmax2.checked_sub(1),
    }
}

/// Gaussian tail bound after keeping terms `0 ..= n`; `None` when the ratio test does not apply.
pub fn gaussian_tail_bound(z: f64, n: usize) -> Option<f64> {
    let r = z / ((n + 2) as f64).sqrt();
    if r >= 1.0 {
        return None;
    }
    let ln = -z * z / 2.0 + (n + 1) as f64 * z.ln() - 0.5 * ln_factorial(n + 1);
    Some(if z == 0.0 { 0.0 } else { ln.exp() / (1.0 - r) })
}

/// Smallest truncation `N <= cap` meeting the tail tolerance, with its bound.
pub fn gaussian_terms(z: C64, cap: usize, what: &str) -> Result<(usize, f64)> {
    let mut last = f64::INFINITY;
    for n in 0..=cap {
        if let Some(b) = gaussian_tail_bound(z.norm(), n) {
            last = b;
            if b < TAIL_TOL {
                return Ok((n, b));
            }
        }
    }
    Err(Error::Cutoff(format!(
        "{what}: series for |z| = {} needs more than {cap} terms (tail estimate {last:e})",
        z.norm()
    )))
}

/// `e^{-|z|^2/2} z^n / sqrt(n!)` for `n = 0 ..= nmax`.
pub fn gaussian_coefficients(z: C64, nmax: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut c = C64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
    out.push(c);
    for n in 1..=nmax {
        c = c * z / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// Truncated `Phi(z1)` on the first register, padded to `nmax1 + 1`.
pub fn first_register_coherent(z1: C64, nmax1: usize) -> Result<(Vec<C64>, usize, f64)> {
    let (n, tail) = gaussian_terms(z1, nmax1, "first register")?;
    let mut f = gaussian_coefficients(z1, n);
    f.resize(nmax1 + 1, C64::new(0.0, 0.0));
    Ok((f, n, tail))
}

pub fn build_coherent(spec: &CoherentSpec) -> Result<SpinorState> {
    let cut = spec.cutoff;
    let (first, n1, t1) = first_register_coherent(spec.z1, cut.nmax1)?;
    let cap = sigma_cap(spec.family, spec.branch, cut.nmax2)
        .ok_or_else(|| Error::Cutoff("nmax2 too small for branch".into()))?;
    let (n2, t2) = gaussian_terms(spec.z2, cap, "spinor register")?;
    let coefs = gaussian_coefficients(spec.z2, n2);
    let mut sp = Spinor::zeros(cut.nmax2);
    for (k, c) in coefs.iter().enumerate() {
        sp.axpy(*c, &v_spinor(sigma(spec.family, spec.branch, k), cut.nmax2)?);
    }
    let mut st = SpinorState::product(&first, &sp, cut)?;
    st.series = Some(SeriesInfo { terms_first: n1 + 1, terms_second: n2 + 1, tail_first: t1, tail_second: t2 });
    Ok(st)
}

fn legal(spec: &CoherentSpec, op: LadderKind) -> Option<C64> {
    use LadderKind::*;
    match (op, spec.family, spec.branch) {
        (A1, _, _) => Some(spec.z1),
        (A2, Family::A, Branch::Plus)
        | (A2Dag, Family::A, Branch::Minus)
        | (B2Dag, Family::B, Branch::Plus)
        | (B2, Family::B, Branch::Minus) => Some(spec.z2),
        _ => None,
    }
}

/// `||O Phi - z Phi||` for a legal operator/branch pairing.
pub fn eigen_residual(spec: &CoherentSpec, op: LadderKind) -> Result<f64> {
    let z = legal(spec, op).ok_or_else(|| {
        Error::Contract(format!("{op:?} is not paired with {:?}/{:?}", spec.family, spec.branch))
    })?;
    apply_residual(spec, op, z)
}

/// Residual against an arbitrary eigenvalue, bypassing the pairing table.
pub fn apply_residual(spec: &CoherentSpec, op: LadderKind, z: C64) -> Result<f64> {
    let st = build_coherent(spec)?;
    let img = build_ladder(op, spec.cutoff)?.apply(&st)?;
    Ok(img.add_scaled(&st, -z)?.norm())
}

/// Coefficients `<c_{n,p}, f>` for `|p| <= nmax2`, indexed `[n][p + nmax2]`.
pub fn c_coefficients(f: &SpinorState) -> Result<Vec<Vec<C64>>> {
    let m = f.cutoff.nmax2 as i64;
    let vs: Vec<Spinor> = (-m..=m).map(|p| v_spinor(p, f.cutoff.nmax2)).collect::<Result<_>>()?;
    Ok((0..=f.cutoff.nmax1)
        .map(|n| {
            let s = f.slice(n);
            vs.iter().map(|v| v.dot(&s)).collect()
        })
        .collect())
}

/// Squared norm of `f` outside the levels accepted by `keep`, including the lower
/// top mode that no `c_{n,p}` reaches.
pub fn weight_outside(f: &SpinorState, keep: impl Fn(i64) -> bool) -> Result<f64> {
    let m = f.cutoff.nmax2 as i64;
    let excluded: f64 = c_coefficients(f)?
        .iter()
        .flat_map(|row| row.iter().enumerate().filter(|(i, _)| !keep(*i as i64 - m)).map(|(_, c)| c.norm_sqr()))
        .sum();
    let top: f64 = (0..=f.cutoff.nmax1).map(|n| f.lower[f.idx(n, f.cutoff.nmax2)].norm_sqr()).sum();
    Ok(excluded + top)
}

/// `int d^2z1/pi d^2z2/pi <f, Phi><Phi, g>` where the `n2`-th term of `Phi` is
/// `sum_k w_k c_{n1, maps_k(n2)}`; angles are integrated exactly.
pub(crate) fn gaussian_pair_integral(
    fc: &[Vec<C64>],
    gc: &[Vec<C64>],
    pmax: usize,
    maps: &[(C64, fn(usize) -> i64)],
    quad: &GaussLaguerre,
) -> C64 {
    let pm = pmax as i64;
    let mut acc = C64::new(0.0, 0.0);
    for n1 in 0..fc.len() {
        let q1 = quad.normalized_moment(n1);
        for n2 in 0..=pmax {
            let mut a = C64::new(0.0, 0.0);
            let mut b = C64::new(0.0, 0.0);
            let mut any = false;
            for (w, map) in maps {
                let p = map(n2);
                if p.abs() > pm {
                    continue;
                }
                any = true;
                let i = (p + pm) as usize;
                a += w * fc[n1][i].conj();
                b += w.conj() * gc[n1][i];
            }
            if any {
                acc += a * b * q1 * quad.normalized_moment(n2);
            }
        }
    }
    acc
}

fn map_for(family: Family, branch: Branch) -> fn(usize) -> i64 {
    match (family, branch) {
        (Family::A, Branch::Plus) => |n| n as i64,
        (Family::A, Branch::Minus) => |n| -(n as i64) - 1,
        (Family::B, Branch::Plus) => |n| n as i64 + 1,
        (Family::B, Branch::Minus) => |n| -(n as i64),
    }
}

/// Quadrature evaluation of the resolution of the identity restricted to one branch.
pub fn resolution_identity_check(
    family: Family,
    branch: Branch,
    f: &SpinorState,
    g: &SpinorState,
    quad: &GaussLaguerre,
) -> Result<C64> {
    let keep = |p: i64| match (family, branch) {
        (Family::A, Branch::Plus) => p >= 0,
        (Family::A, Branch::Minus) => p <= -1,
        (Family::B, Branch::Plus) => p >= 1,
        (Family::B, Branch::Minus) => p <= 0,
    };
    for (name, s) in [("f", f), ("g", g)] {
        let out = weight_outside(s, keep)?;
        if out > 1e-20 * s.norm().powi(2).max(1.0) {
            return Err(Error::Contract(format!(
                "{name} has weight {out:e} outside the {family:?}/{branch:?} subspace"
            )));
        }
    }
    let fc = c_coefficients(f)?;
    let gc = c_coefficients(g)?;
    Ok(gaussian_pair_integral(&fc, &gc, f.cutoff.nmax2, &[(C64::new(1.0, 0.0), map_for(family, branch))], quad))
}

/// The same integral over `(Phi^+ + Phi^-)/sqrt 2` of the A family, minus `<f, g>`.
pub fn combined_state_defect(f: &SpinorState, g: &SpinorState, quad: &GaussLaguerre) -> Result<C64> {
    let fc = c_coefficients(f)?;
    let gc = c_coefficients(g)?;
    let w = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let maps = [(w, map_for(Family::A, Branch::Plus)), (w, map_for(Family::A, Branch::Minus))];
    let integral = gaussian_pair_integral(&fc, &gc, f.cutoff.nmax2, &maps, quad);
    Ok(integral - f.dot(g)?)
}

/// `(Phi_A^+ + Phi_A^-)/sqrt 2`.
pub fn combined_state(z1: C64, z2: C64, cutoff: FockCutoff) -> Result<SpinorState> {
    let mk = |branch| build_coherent(&CoherentSpec { z1, z2, family: Family::A, branch, cutoff });
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(mk(Branch::Plus)?.add_scaled(&mk(Branch::Minus)?, C64::new(1.0, 0.0))?.scaled(C64::new(s, 0.0)))
}
