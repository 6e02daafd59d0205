use crate::bicoherent::{
    bicoherent_eigen_residual, build_bicoherent, convergence_certificate, normalization_n, BiOperator,
    BicoherentFamily, BicoherentSpec, Side,
};
use crate::coherent::{
    build_coherent, combined_state_defect, eigen_residual, resolution_identity_check, Branch, CoherentSpec, Family,
};
use crate::density::{density, gain_loss, GridSpec};
use crate::error::{Error, Result};
use crate::fock::{interior_commutator_defect, FockCutoff, LadderMatrices};
use crate::ladder::{factorization_defect_v0, LadderKind};
use crate::pt::{
    alpha, build_pt_ladders, dense_hv_eigenvalues, eigenvalue_e, exceptional_diagnostics, factorization_defect,
    BiorthFamily, PotentialParams,
};
use crate::quadrature::GaussLaguerre;
use crate::spinor::{apply_hk, basis_vector_c, dense_hk_eigenvalues, energy, fock_annihilator, ModeIndex, ModeWindow, Units};
use crate::state::SpinorState;
use crate::C64;
use serde::Serialize;

/// Cutoffs used by the invariant suites.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckScale {
    pub nmax1: usize,
    pub nmax2: usize,
    pub pmax: usize,
    /// Spinor cutoff for strong-potential bicoherent states.
    pub nmax2_strong: usize,
}

impl Default for CheckScale {
    fn default() -> Self {
        CheckScale { nmax1: 64, nmax2: 64, pmax: 32, nmax2_strong: 128 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Outcome {
    fn at_most(criterion: u8, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Outcome { criterion, name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    fn above(criterion: u8, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Outcome { criterion, name: name.into(), value, tolerance: threshold, pass: value > threshold }
    }

    fn holds(criterion: u8, name: impl Into<String>, ok: bool) -> Self {
        Outcome { criterion, name: name.into(), value: ok as u8 as f64, tolerance: 1.0, pass: ok }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pp(v: f64) -> Result<PotentialParams> {
    PotentialParams::with_v(v)
}

pub fn spectrum(s: CheckScale) -> Result<Vec<Outcome>> {
    let units = Units::default();
    let cut = FockCutoff::new(s.nmax1, s.nmax2)?;
    let w = ModeWindow::new(s.nmax1, s.pmax);
    let mut worst: f64 = 0.0;
    for m in w.iter().filter(|m| w.is_interior(*m)) {
        let v = basis_vector_c(m, cut)?;
        let r = apply_hk(&v, units)?.add_scaled(&v, c(-energy(m, units), 0.0))?;
        worst = worst.max(r.norm());
    }
    let got = dense_hk_eigenvalues(units, s.nmax2);
    let pm = s.nmax2 as i64;
    let mut want: Vec<f64> = (-pm..=pm).map(|p| p.signum() as f64 * 2.0 * (p.unsigned_abs() as f64).sqrt()).collect();
    want.sort_by(f64::total_cmp);
    let dev = if got.len() == want.len() {
        got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(vec![
        Outcome::at_most(1, "H_K interior eigen-residual", worst, 1e-10),
        Outcome::at_most(1, "dense spectrum vs sign(p) 2 sqrt|p|", dev, 1e-9),
    ])
}

pub fn ccr(s: CheckScale) -> Result<Vec<Outcome>> {
    let lad = LadderMatrices::new(s.nmax2);
    let mut out = Vec::new();
    for (name, a) in [("a_X", &lad.a_x), ("a_Y", &lad.a_y), ("A_1", &lad.a1), ("A_2", &lad.a2)] {
        out.push(Outcome::at_most(2, format!("[{name}, {name}^dag] = 1"), interior_commutator_defect(&lad, a, a, 1.0)?, 1e-12));
    }
    out.push(Outcome::at_most(2, "[A_1, A_2^dag] = 0", interior_commutator_defect(&lad, &lad.a1, &lad.a2, 0.0)?, 1e-12));
    let a = fock_annihilator(s.nmax1);
    let comm = a.commutator(&a.adjoint())?;
    let mut worst: f64 = 0.0;
    for n in 0..s.nmax1 {
        let mut e = vec![c(0.0, 0.0); s.nmax1 + 1];
        e[n] = c(1.0, 0.0);
        let mut y = comm.apply(&e)?;
        y[n] -= 1.0;
        worst = y.iter().map(|x| x.norm()).fold(worst, f64::max);
    }
    out.push(Outcome::at_most(2, "[A_(1), A_(1)^dag] = 1", worst, 1e-12));
    Ok(out)
}

pub fn coherent(s: CheckScale) -> Result<Vec<Outcome>> {
    let cut = FockCutoff::new(s.nmax1, s.nmax2)?;
    let (z1, z2) = (c(1.0, 0.5), c(1.0, -1.0));
    let mut norm_dev: f64 = 0.0;
    let mut res: f64 = 0.0;
    for (family, branch, op) in [
        (Family::A, Branch::Plus, LadderKind::A2),
        (Family::A, Branch::Minus, LadderKind::A2Dag),
        (Family::B, Branch::Plus, LadderKind::B2Dag),
        (Family::B, Branch::Minus, LadderKind::B2),
    ] {
        let spec = CoherentSpec { z1, z2, family, branch, cutoff: cut };
        norm_dev = norm_dev.max((build_coherent(&spec)?.norm() - 1.0).abs());
        res = res.max(eigen_residual(&spec, op)?).max(eigen_residual(&spec, LadderKind::A1)?);
    }
    let q = GaussLaguerre::default();
    let small = FockCutoff::new(4, 8)?;
    let cv = |n, p| basis_vector_c(ModeIndex::new(n, p), small);
    let mut gram: f64 = 0.0;
    for (family, branch, ps) in [
        (Family::A, Branch::Plus, [0i64, 1, 3]),
        (Family::A, Branch::Minus, [-1, -2, -5]),
        (Family::B, Branch::Plus, [1, 2, 4]),
        (Family::B, Branch::Minus, [0, -1, -4]),
    ] {
        for (i, &p) in ps.iter().enumerate() {
            for (j, &r) in ps.iter().enumerate() {
                for n in [0usize, 2] {
                    let got = resolution_identity_check(family, branch, &cv(n, p)?, &cv(n, r)?, &q)?;
                    let want = if i == j { 1.0 } else { 0.0 };
                    gram = gram.max((got - want).norm());
                }
            }
        }
        let f = cv(1, ps[0])?.add_scaled(&cv(3, ps[1])?, c(0.4, -0.2))?;
        let g = cv(1, ps[0])?.add_scaled(&cv(3, ps[2])?, c(-0.1, 0.7))?;
        let got = resolution_identity_check(family, branch, &f, &g, &q)?;
        gram = gram.max((got - f.dot(&g)?).norm());
    }
    let c00 = cv(0, 0)?;
    let defect = combined_state_defect(&c00, &c00, &q)?.norm();
    Ok(vec![
        Outcome::at_most(3, "coherent norms", norm_dev, 1e-8),
        Outcome::at_most(3, "coherent eigen-residuals", res, 1e-8),
        Outcome::at_most(3, "resolution of identity vs subspace Gram", gram, 1e-6),
        Outcome::above(3, "combined-state defect at c_00", defect, 0.1),
    ])
}

pub fn factorization_v0(s: CheckScale) -> Result<Vec<Outcome>> {
    let r = factorization_defect_v0(Units::default(), FockCutoff::new(1, s.nmax2)?)?;
    let mut dev: f64 = 0.0;
    let mut min = f64::INFINITY;
    for &(p, d) in r.per_p.iter().filter(|x| x.0 != 0) {
        let a = p.unsigned_abs() as f64;
        dev = dev.max((d - (2.0 * p.signum() as f64 * a.sqrt() - a).abs()).abs());
        min = min.min(d);
    }
    Ok(vec![
        Outcome::at_most(4, "per-level defect vs |2 sign(p) sqrt|p| - |p||", dev, 1e-10),
        Outcome { criterion: 4, name: format!("max defect {:.6} (min {min:.3e})", r.max), value: r.max, tolerance: 0.0, pass: r.max > 0.0 },
    ])
}

pub fn biorthonormality(s: CheckScale) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for v in [0.5, 9.5] {
        let fam = BiorthFamily::new(pp(v)?, s.nmax2, s.nmax2)?;
        let g = fam.gram();
        let mut dev: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                dev = dev.max((x - if i == j { 1.0 } else { 0.0 }).norm());
            }
        }
        out.push(Outcome::at_most(5, format!("Gram({:?}) identity, V={v}", fam.dual_role()), dev, 1e-10));
    }
    Ok(out)
}

pub fn pt_spectrum(s: CheckScale) -> Result<Vec<Outcome>> {
    let u = Units::default();
    let pm = s.nmax2 as i64;
    let im_max = (-pm..=pm).filter(|&p| p != 0).map(|p| eigenvalue_e(p, 0.5, u).im.abs()).fold(0.0, f64::max);
    let e0 = (eigenvalue_e(0, 0.5, u) - c(0.0, 1.0)).norm();
    let strong = (1..=120i64).flat_map(|p| [p, -p]).all(|p| {
        let im = eigenvalue_e(p, 9.5, u).im;
        if p.abs() <= 90 { im.abs() > 0.0 } else { im == 0.0 }
    });
    let mut dense: f64 = 0.0;
    for v in [0.5, 9.5] {
        let params = pp(v)?;
        let mut got = dense_hv_eigenvalues(&params, 24);
        for p in -24..=24 {
            let e = eigenvalue_e(p, v, u);
            let (k, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| Error::Contract("empty dense spectrum".into()))?;
            got.swap_remove(k);
            dense = dense.max(d);
        }
    }
    Ok(vec![
        Outcome::at_most(6, "V=0.5 imag(E_p), p != 0", im_max, 1e-12),
        Outcome::at_most(6, "V=0.5 E_0 = 1.0i", e0, 1e-12),
        Outcome::holds(6, "V=9.5 broken for 1<=|p|<=90, real for |p|>=91", strong),
        Outcome::at_most(6, "dense Schur vs closed form", dense, 1e-8),
    ])
}

pub fn pt_factorization(s: CheckScale) -> Result<Vec<Outcome>> {
    let cut = FockCutoff::new(1, s.nmax2)?;
    [0.25, 0.5, 9.5]
        .iter()
        .map(|&v| Ok(Outcome::at_most(7, format!("(d2 c2 - h(V)) phi_p, V={v}"), factorization_defect(&pp(v)?, cut)?, 1e-9)))
        .collect()
}

pub fn alpha_identities(s: CheckScale) -> Result<Vec<Outcome>> {
    let pm = s.pmax as u64;
    let mut unit: f64 = 0.0;
    for v in [0.25, 0.5, 0.9] {
        for p in 1..=pm {
            for b in [Branch::Plus, Branch::Minus] {
                unit = unit.max((alpha(p, v, b)?.norm() - 1.0).abs());
            }
        }
    }
    let mut ep = true;
    for p in 1..=pm {
        let v = (p as f64).sqrt();
        for b in [Branch::Plus, Branch::Minus] {
            ep &= alpha(p, v, b)? == c(-1.0, 0.0);
        }
    }
    let mut prod: f64 = 0.0;
    for p in 1..=90 {
        prod = prod.max((alpha(p, 9.5, Branch::Plus)?.norm() * alpha(p, 9.5, Branch::Minus)?.norm() - 1.0).abs());
    }
    let closed = 9.5 - (9.5f64 * 9.5 - 1.0).sqrt();
    let a1 = (alpha(1, 9.5, Branch::Plus)?.norm() - closed).abs();
    Ok(vec![
        Outcome::at_most(8, "|alpha| = 1 for V<1", unit, 1e-12),
        Outcome::holds(8, "alpha = -1 at p = V^2", ep),
        Outcome::at_most(8, "|alpha+||alpha-| = 1, V=9.5", prod, 1e-12),
        Outcome::at_most(8, "|alpha+_1(9.5)| vs V - sqrt(V^2-1)", a1, 1e-12),
    ])
}

pub fn norm_bounds(s: CheckScale, tol: f64) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for v in [0.5, 9.5] {
        let cert = convergence_certificate(&pp(v)?, c(1.0, -1.0), FockCutoff::new(1, s.nmax2_strong)?, tol)?;
        out.push(Outcome::at_most(
            9,
            format!("max ||phi_n||^2 on n in [{}, {}], V={v}", cert.bound_from, cert.measured_to),
            cert.measured_max,
            cert.bound,
        ));
    }
    Ok(out)
}

pub fn bicoherent(s: CheckScale) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    let (n1, _) = normalization_n(c(1.0, 0.0), &pp(0.5)?, FockCutoff::new(1, s.nmax2)?)?;
    out.push(Outcome::at_most(10, format!("N(1) = {n1:.7} vs 0.75718, V=0.5"), (n1 - 0.75718).abs(), 1e-4));
    let cut = FockCutoff::new(s.nmax1, s.nmax2_strong)?;
    for v in [0.5, 9.5] {
        for (z2, label) in [(c(1.0, 0.0), "1"), (c(1.0, -1.0), "1-i")] {
            let ket = BicoherentSpec {
                z1: c(0.5, 0.5),
                z2,
                family: BicoherentFamily::Theta,
                side: Side::Ket,
                branch: Branch::Plus,
                params: pp(v)?,
                cutoff: cut,
            };
            let bra = BicoherentSpec { side: Side::Bra, ..ket };
            let x = build_bicoherent(&ket)?.dot(&build_bicoherent(&bra)?)?;
            out.push(Outcome::at_most(10, format!("<eta+, xi+> = 1, V={v}, z2={label}"), (x - 1.0).norm(), 1e-8));
        }
        let mut worst: f64 = 0.0;
        for (side, branch, op) in [
            (Side::Ket, Branch::Plus, BiOperator::C2),
            (Side::Ket, Branch::Minus, BiOperator::D2),
            (Side::Bra, Branch::Minus, BiOperator::C2Dag),
            (Side::Bra, Branch::Plus, BiOperator::D2Dag),
        ] {
            let spec = BicoherentSpec {
                z1: c(1.0, -0.5),
                z2: c(1.0, -1.0),
                family: BicoherentFamily::Theta,
                side,
                branch,
                params: pp(v)?,
                cutoff: cut,
            };
            worst = worst.max(bicoherent_eigen_residual(&spec, op)?).max(bicoherent_eigen_residual(&spec, BiOperator::A1)?);
        }
        out.push(Outcome::at_most(10, format!("theta-family eigen-residuals, V={v}"), worst, 1e-8));
    }
    Ok(out)
}

fn theta_state(v: f64, side: Side, branch: Branch, cutoff: FockCutoff) -> Result<SpinorState> {
    build_bicoherent(&BicoherentSpec {
        z1: c(0.0, 0.0),
        z2: c(1.0, -1.0),
        family: BicoherentFamily::Theta,
        side,
        branch,
        params: pp(v)?,
        cutoff,
    })
}

pub fn densities(s: CheckScale) -> Result<Vec<Outcome>> {
    let grid = GridSpec::default();
    let cut = FockCutoff::new(1, s.nmax2_strong)?;
    let ratio = |st: &SpinorState| {
        let (u, l) = st.component_masses();
        u / l
    };
    let mass_dev = |st: &SpinorState| -> Result<f64> {
        let f = density(st, &grid, serde_json::Value::Null)?;
        Ok((f.meta.grid_mass / f.meta.coefficient_norm_sq - 1.0).abs())
    };
    let reference = build_coherent(&CoherentSpec {
        z1: c(0.0, 0.0),
        z2: c(1.0, -1.0),
        family: Family::A,
        branch: Branch::Plus,
        cutoff: FockCutoff::new(1, s.nmax2)?,
    })?;
    let eta = theta_state(9.5, Side::Ket, Branch::Plus, cut)?;
    let xi = theta_state(9.5, Side::Bra, Branch::Minus, cut)?;
    let r0 = ratio(&reference);
    let mut out = vec![
        Outcome::holds(11, format!("V=0 reference mass ratio {r0:.4} in [0.4, 2.5]"), (0.4..=2.5).contains(&r0)),
        Outcome::above(11, "eta+ upper/lower, V=9.5", ratio(&eta), 10.0),
        Outcome::above(11, "xi- lower/upper, V=9.5", 1.0 / ratio(&xi), 10.0),
    ];
    let mut dev: f64 = 0.0;
    for st in [&reference, &eta, &xi] {
        dev = dev.max(mass_dev(st)?);
    }
    out.push(Outcome::at_most(11, "grid mass vs coefficient norm (relative)", dev, 1e-3));
    let mut prev = 0.0;
    let mut mono = true;
    for v in [0.5, 3.01, 6.01, 9.5] {
        let st = build_bicoherent(&BicoherentSpec {
            z1: c(0.0, 0.0),
            z2: c(1.0, -1.0),
            family: BicoherentFamily::Standard,
            side: Side::Ket,
            branch: Branch::Plus,
            params: pp(v)?,
            cutoff: cut,
        })?;
        let r = gain_loss(&st, None, 0).ratio;
        mono &= r >= prev;
        prev = r;
    }
    out.push(Outcome::holds(11, "phi+ gain ratio nondecreasing in V", mono));
    Ok(out)
}

/// Largest modulus deviation between theta-family coefficients at `v` and at `V = 0`.
pub fn continuity_deviation(v: f64, cutoff: FockCutoff) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for side in [Side::Ket, Side::Bra] {
        for branch in [Branch::Plus, Branch::Minus] {
            let a = theta_state(v, side, branch, cutoff)?;
            let b = theta_state(0.0, side, branch, cutoff)?;
            for (x, y) in a.upper.iter().chain(&a.lower).zip(b.upper.iter().chain(&b.lower)) {
                worst = worst.max((x.norm() - y.norm()).abs());
            }
        }
    }
    Ok(worst)
}

pub fn continuity(s: CheckScale) -> Result<Vec<Outcome>> {
    let d = continuity_deviation(1e-4, FockCutoff::new(1, s.nmax2)?)?;
    Ok(vec![Outcome::at_most(12, "theta-family moduli at V=1e-4 vs V=0", d, 1e-6)])
}

pub fn exceptional(s: CheckScale) -> Result<Vec<Outcome>> {
    let r = exceptional_diagnostics(4, 2.0, s.nmax2)?;
    let refused = matches!(build_pt_ladders(&pp(2.0)?, FockCutoff::new(1, s.nmax2)?), Err(Error::ExceptionalPoint { p: 4, .. }));
    Ok(vec![
        Outcome::at_most(13, "phi+_4 / phi-_4 coincidence, V=2", r.coincidence, 1e-10),
        Outcome::at_most(13, "<phi_4, psi_4> self-orthogonality, V=2", r.self_orthogonality, 1e-10),
        Outcome::holds(13, "ladder construction refuses at V=2", refused),
    ])
}

pub type Suite = fn(CheckScale, f64) -> Result<Vec<Outcome>>;

/// Every suite in criterion order.
pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("spectrum", |s, _| spectrum(s)),
        ("ccr", |s, _| ccr(s)),
        ("coherent", |s, _| coherent(s)),
        ("factorization-v0", |s, _| factorization_v0(s)),
        ("biorthonormality", |s, _| biorthonormality(s)),
        ("pt-spectrum", |s, _| pt_spectrum(s)),
        ("pt-factorization", |s, _| pt_factorization(s)),
        ("alpha", |s, _| alpha_identities(s)),
        ("norm-bounds", norm_bounds),
        ("bicoherent", |s, _| bicoherent(s)),
        ("densities", |s, _| densities(s)),
        ("continuity", |s, _| continuity(s)),
        ("exceptional", |s, _| exceptional(s)),
    ]
}

/// Runs all suites; a suite that errors is reported as a failed outcome.
pub fn run_all(scale: CheckScale, tol: f64) -> Vec<Outcome> {
    suites()
        .into_iter()
        .enumerate()
        .flat_map(|(i, (name, f))| {
            f(scale, tol).unwrap_or_else(|e| {
                vec![Outcome { criterion: i as u8 + 1, name: format!("{name}: {e}"), value: f64::NAN, tolerance: 0.0, pass: false }]
            })
        })
        .collect()
}
