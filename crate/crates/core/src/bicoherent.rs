use crate::coherent::{
    first_register_coherent, gaussian_coefficients, gaussian_pair_integral, gaussian_terms, Branch, TAIL_TOL,
};
use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::pt::{build_pt_ladders, exceptional_level, principal_sqrt, theta, BiorthFamily, PotentialParams, Regime};
use crate::quadrature::GaussLaguerre;
use crate::spinor::fock_annihilator;
use crate::state::{SeriesInfo, Spinor, SpinorState, TensorOperator};
use num_complex::Complex64 as C64;

/// Tolerance on the tail of the normalization series.
pub const NORM_TAIL_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BicoherentFamily {
    Standard,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ket,
    Bra,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BicoherentSpec {
    pub z1: C64,
    pub z2: C64,
    pub family: BicoherentFamily,
    pub side: Side,
    pub branch: Branch,
    pub params: PotentialParams,
    pub cutoff: FockCutoff,
}

/// Level carried by the `n`-th term: `n` (plus) or `-n-1` (minus).
pub fn level(branch: Branch, n: usize) -> i64 {
    match branch {
        Branch::Plus => n as i64,
        Branch::Minus => -(n as i64) - 1,
    }
}

/// `rho_k`: `theta_k` on the plus branch, `theta_{-k}` on the minus branch.
pub fn rho(k: usize, params: &PotentialParams, branch: Branch) -> C64 {
    let p = match branch {
        Branch::Plus => k as i64,
        Branch::Minus => -(k as i64),
    };
    theta(p, params.v, params.units)
}

/// Cumulative products of `rho_k` for `n = 0 ..= nmax`.
#[derive(Clone, Debug)]
pub struct ThetaFactorial {
    pub branch: Branch,
    /// `rho_1 ... rho_n`.
    pub complex: Vec<C64>,
    /// `|rho_1| ... |rho_n|`.
    pub modulus: Vec<f64>,
    /// `sqrt(rho_1) ... sqrt(rho_n)` with principal roots.
    pub root: Vec<C64>,
}

impl ThetaFactorial {
    pub fn new(nmax: usize, params: &PotentialParams, branch: Branch) -> Self {
        let mut complex = vec![C64::new(1.0, 0.0)];
        let mut modulus = vec![1.0];
        let mut root = vec![C64::new(1.0, 0.0)];
        for k in 1..=nmax {
            let r = rho(k, params, branch);
            complex.push(complex[k - 1] * r);
            modulus.push(modulus[k - 1] * r.norm());
            root.push(root[k - 1] * principal_sqrt(r));
        }
        ThetaFactorial { branch, complex, modulus, root }
    }
}

/// `(theta_1 ... theta_n, |theta_1| ... |theta_n|)`.
pub fn theta_factorial(n: usize, params: &PotentialParams) -> (C64, f64) {
    let t = ThetaFactorial::new(n, params, Branch::Plus);
    (t.complex[n], t.modulus[n])
}

/// Lower bound on `|rho_k|` for all `k >= m`.
fn rho_floor(m: usize, params: &PotentialParams, branch: Branch) -> f64 {
    let e0 = params.units.energy_scale();
    let v2 = params.v * params.v;
    if m as f64 > v2 {
        return e0 * (m as f64).sqrt();
    }
    match branch {
        Branch::Plus => rho(m, params, branch).norm(),
        Branch::Minus => e0 * params.v,
    }
}

/// Normalization data for the theta family on one branch.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    pub terms: usize,
    /// `N(|z|)`, real positive.
    pub n: f64,
    /// Bra-side factor `1 / (N G)` with `G = sum |z|^{2n} / conj(rho_n!)`.
    pub m: C64,
    /// Bound on `max(N, |M|) sum_{n >= terms} |z|^n / sqrt(|rho_n|!)`.
    pub tail: f64,
    /// Bound on `sum_{n >= terms} |z|^{2n} / |rho_n|!`.
    pub norm_tail: f64,
    pub factorial: ThetaFactorial,
}

fn branch_cap(branch: Branch, nmax2: usize) -> usize {
    match branch {
        Branch::Plus => nmax2,
        Branch::Minus => nmax2 - 1,
    }
}

/// Truncates the theta series where both the normalization tail (relative
/// `NORM_TAIL_TOL`) and the coefficient tail (absolute `TAIL_TOL`) are met.
pub fn theta_series(z2: C64, params: &PotentialParams, branch: Branch, nmax2: usize) -> Result<ThetaSeries> {
    let cap = branch_cap(branch, nmax2);
    let tf = ThetaFactorial::new(cap + 1, params, branch);
    let z = z2.norm();
    let mut sum = 0.0;
    let mut g = C64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for nt in 0..=cap {
        sum += z.powi(2 * nt as i32) / tf.modulus[nt];
        g += z.powi(2 * nt as i32) / tf.complex[nt].conj();
        if z == 0.0 {
            return Ok(finish(z, 0, sum, 0.0, 0.0, tf));
        }
        let floor = rho_floor(nt + 2, params, branch);
        let q2 = z * z / floor;
        if q2 >= 1.0 {
            continue;
        }
        let qc = z / floor.sqrt();
        let next = z.powi(nt as i32 + 1) / tf.modulus[nt + 1].sqrt();
        let norm_tail = next * next / (1.0 - q2);
        let n = sum.powf(-0.5);
        let tail = n.max(1.0 / (n * g.norm())) * next / (1.0 - qc);
        last = tail;
        if norm_tail < NORM_TAIL_TOL * sum && tail < TAIL_TOL {
            return Ok(finish(z, nt, sum, tail, norm_tail, tf));
        }
    }
    Err(Error::Cutoff(format!(
        "theta series for |z2| = {z} needs more than {cap} terms (tail estimate {last:e})"
    )))
}

fn finish(z: f64, nt: usize, sum: f64, tail: f64, norm_tail: f64, tf: ThetaFactorial) -> ThetaSeries {
    let n = sum.powf(-0.5);
    let g: C64 = (0..=nt).map(|k| z.powi(2 * k as i32) / tf.complex[k].conj()).sum();
    ThetaSeries { terms: nt + 1, n, m: 1.0 / (n * g), tail, norm_tail, factorial: tf }
}

/// `N(|z2|)` with its tail estimate (plus branch).
pub fn normalization_n(z2: C64, params: &PotentialParams, cutoff: FockCutoff) -> Result<(f64, f64)> {
    let s = theta_series(z2, params, Branch::Plus, cutoff.nmax2)?;
    Ok((s.n, s.norm_tail))
}

fn spinor_series(
    coefs: &[C64],
    branch: Branch,
    pick: impl Fn(i64) -> Spinor,
    nmax2: usize,
) -> Spinor {
    let mut sp = Spinor::zeros(nmax2);
    for (k, c) in coefs.iter().enumerate() {
        sp.axpy(*c, &pick(level(branch, k)));
    }
    sp
}

pub fn build_bicoherent(spec: &BicoherentSpec) -> Result<SpinorState> {
    let cut = spec.cutoff;
    if spec.branch == Branch::Minus && cut.nmax2 < 2 {
        return Err(Error::Cutoff("nmax2 too small for the minus branch".into()));
    }
    let (first, n1, t1) = first_register_coherent(spec.z1, cut.nmax1)?;
    let fam = BiorthFamily::new(spec.params, cut.nmax2, cut.nmax2)?;
    let pick = |p: i64| match spec.side {
        Side::Ket => fam.phi(p).clone(),
        Side::Bra => fam.dual(p).clone(),
    };
    let (coefs, t2) = match spec.family {
        BicoherentFamily::Standard => {
            let (n, t) = gaussian_terms(spec.z2, branch_cap(spec.branch, cut.nmax2), "spinor register")?;
            (gaussian_coefficients(spec.z2, n), t)
        }
        BicoherentFamily::Theta => {
            if let Some(p) = exceptional_level(spec.params.v) {
                return Err(Error::ExceptionalPoint { p: p as i64, v: spec.params.v });
            }
            let s = theta_series(spec.z2, &spec.params, spec.branch, cut.nmax2)?;
            let mut zn = C64::new(1.0, 0.0);
            let mut c = Vec::with_capacity(s.terms);
            for k in 0..s.terms {
                let root = s.factorial.root[k];
                c.push(match spec.side {
                    Side::Ket => s.n * zn / root,
                    Side::Bra => s.m * zn / root.conj(),
                });
                zn *= spec.z2;
            }
            (c, s.tail)
        }
    };
    let sp = spinor_series(&coefs, spec.branch, pick, cut.nmax2);
    let mut st = SpinorState::product(&first, &sp, cut)?;
    st.series = Some(SeriesInfo { terms_first: n1 + 1, terms_second: coefs.len(), tail_first: t1, tail_second: t2 });
    Ok(st)
}

/// Operators with bicoherent eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiOperator {
    /// First-register annihilator.
    A1,
    AK,
    BK,
    AKDag,
    BKDag,
    C2,
    D2,
    C2Dag,
    D2Dag,
}

fn legal(spec: &BicoherentSpec, op: BiOperator) -> Option<C64> {
    use BiOperator::*;
    use BicoherentFamily::*;
    use Side::*;
    let b = spec.branch;
    match (op, spec.family, spec.side) {
        (A1, _, _) => Some(spec.z1),
        (AK, Standard, Ket) if b == Branch::Plus => Some(spec.z2),
        (BK, Standard, Ket) if b == Branch::Minus => Some(spec.z2),
        (AKDag, Standard, Bra) if b == Branch::Minus => Some(spec.z2),
        (BKDag, Standard, Bra) if b == Branch::Plus => Some(spec.z2),
        (C2, Theta, Ket) if b == Branch::Plus => Some(spec.z2),
        (D2, Theta, Ket) if b == Branch::Minus => Some(spec.z2),
        (C2Dag, Theta, Bra) if b == Branch::Minus => Some(spec.z2),
        (D2Dag, Theta, Bra) if b == Branch::Plus => Some(spec.z2),
        _ => None,
    }
}

/// `||O s - z s|| / ||s||`; bra states can carry large norms at strong potential.
pub fn bicoherent_eigen_residual(spec: &BicoherentSpec, op: BiOperator) -> Result<f64> {
    let z = legal(spec, op).ok_or_else(|| {
        Error::Contract(format!("{op:?} is not paired with {:?}/{:?}/{:?}", spec.family, spec.side, spec.branch))
    })?;
    let st = build_bicoherent(spec)?;
    let t = if op == BiOperator::A1 {
        TensorOperator::on_first(fock_annihilator(spec.cutoff.nmax1))
    } else {
        let lad = build_pt_ladders(&spec.params, spec.cutoff)?;
        let o = match op {
            BiOperator::AK => lad.a_k,
            BiOperator::BK => lad.b_k,
            BiOperator::AKDag => lad.a_k.adjoint(),
            BiOperator::BKDag => lad.b_k.adjoint(),
            BiOperator::C2 => lad.c2,
            BiOperator::D2 => lad.d2,
            BiOperator::C2Dag => lad.c2.adjoint(),
            BiOperator::D2Dag => lad.d2.adjoint(),
            BiOperator::A1 => unreachable!(),
        };
        TensorOperator::on_spinor(o)
    };
    Ok(t.apply(&st)?.add_scaled(&st, -z)?.norm() / st.norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOrder {
    /// `<f, phi><psi, g>`
    PhiPsi,
    /// `<f, psi><phi, g>`
    PsiPhi,
}

/// `int d^2z1 d^2z2 / pi^2` of the standard-family projector pair over the given branches.
pub fn quasi_basis_check(
    f: &SpinorState,
    g: &SpinorState,
    params: &PotentialParams,
    quad: &GaussLaguerre,
    branches: &[Branch],
    order: PairOrder,
) -> Result<C64> {
    let cut = f.cutoff;
    if g.cutoff != cut {
        return Err(Error::BasisMismatch("f and g cutoffs differ".into()));
    }
    let fam = BiorthFamily::new(*params, cut.nmax2, cut.nmax2)?;
    let phi_left = order == PairOrder::PhiPsi;
    let table = |s: &SpinorState, use_phi: bool| -> Vec<Vec<C64>> {
        (0..=cut.nmax1)
            .map(|n| {
                let sl = s.slice(n);
                fam.p_range()
                    .map(|p| if use_phi { fam.phi(p) } else { fam.dual(p) }.dot(&sl))
                    .collect()
            })
            .collect()
    };
    let fc = table(f, phi_left);
    let gc = table(g, !phi_left);
    let one = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for b in branches {
        let map: fn(usize) -> i64 = match b {
            Branch::Plus => |n| n as i64,
            Branch::Minus => |n| -(n as i64) - 1,
        };
        acc += gaussian_pair_integral(&fc, &gc, cut.nmax2, &[(one, map)], quad);
    }
    Ok(acc)
}

/// Norm bound chain behind the convergence of the theta series.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceCertificate {
    pub v: f64,
    pub regime: Regime,
    /// Bound on `||phi_n||^2` and `||dual_n||^2` for `n >= bound_from`.
    pub bound: f64,
    pub bound_from: usize,
    pub measured_max: f64,
    pub measured_to: usize,
    /// Largest squared norm below `bound_from` (finite part of the split).
    pub finite_part_max: f64,
    pub tail_estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the norm bound on `n in [bound_from, bound_from + nmax2]` and bounds the
/// theta-series tail at the truncation chosen for `z2`.
pub fn convergence_certificate(
    params: &PotentialParams,
    z2: C64,
    cutoff: FockCutoff,
    tol: f64,
) -> Result<ConvergenceCertificate> {
    let v2 = params.v * params.v;
    let (bound, from) = match params.regime() {
        Regime::Weak => (1.0 / (1.0 - v2), 0usize),
        Regime::Strong => {
            let n0 = v2.floor() + 1.0;
            (n0 / (n0 - v2), n0 as usize)
        }
    };
    let to = from + cutoff.nmax2;
    let fam = BiorthFamily::new(*params, to, to)?;
    let sq = |p: i64| fam.phi(p).norm_sqr().max(fam.dual(p).norm_sqr());
    let measured_max = (from..=to).map(|n| sq(n as i64)).fold(0.0, f64::max);
    let finite_part_max = (0..from).map(|n| sq(n as i64)).fold(0.0, f64::max);
    let s = theta_series(z2, params, Branch::Plus, cutoff.nmax2)?;
    let tail_estimate = s.tail * bound.max(finite_part_max).sqrt();
    Ok(ConvergenceCertificate {
        v: params.v,
        regime: params.regime(),
        bound,
        bound_from: from,
        measured_max,
        measured_to: to,
        finite_part_max,
        tail_estimate,
        tolerance: tol,
        pass: measured_max <= bound * (1.0 + 1e-12) && tail_estimate < tol,
    })
}
