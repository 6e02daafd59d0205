//! One PASS/FAIL line per acceptance criterion at desk scale
//! (nmax1 = nmax2 = 64, pmax = 32; strong-potential theta states use nmax2 = 128).

use lbcs::bicoherent::{
    bicoherent_eigen_residual, build_bicoherent, normalization_n, BiOperator, BicoherentFamily, BicoherentSpec, Side,
};
use lbcs::coherent::{
    build_coherent, combined_state_defect, eigen_residual, resolution_identity_check, Branch, CoherentSpec, Family,
};
use lbcs::density::{density, GridSpec};
use lbcs::fock::{FockCutoff, LadderMatrices};
use lbcs::ladder::{build_ladder, factorization_defect_v0, LadderKind};
use lbcs::pt::{
    alpha, build_pt_ladders, dense_hv_eigenvalues, eigenvalue_e, exceptional_diagnostics, factorization_defect,
    BiorthFamily, PotentialParams,
};
use lbcs::quadrature::GaussLaguerre;
use lbcs::spinor::{apply_hk, basis_vector_c, dense_hk_eigenvalues, fock_annihilator, ModeIndex, ModeWindow, Units};
use lbcs::sparse::SparseOperator;
use lbcs::state::SpinorState;
use lbcs::{Error, C64};
use std::time::Instant;

const NMAX1: usize = 64;
const NMAX2: usize = 64;
const PMAX: usize = 32;
const NMAX2_STRONG: usize = 128;

/// Sub-checks that cannot pass as written, with the reason.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "|alpha+_1(9.5)| = 0.0527864",
    "the stated constant is inconsistent with its own closed form: \
     |alpha+_1(9.5)| = 9.5 - sqrt(89.25) = 0.0527781862..., which differs from 0.0527864 by 8.2e-6 > 1e-6",
)];

struct Sub {
    name: String,
    value: f64,
    tol: f64,
    pass: bool,
}

fn le(name: impl Into<String>, value: f64, tol: f64) -> Sub {
    Sub { name: name.into(), value, tol, pass: value <= tol }
}

fn gt(name: impl Into<String>, value: f64, tol: f64) -> Sub {
    Sub { name: name.into(), value, tol, pass: value > tol }
}

fn holds(name: impl Into<String>, ok: bool) -> Sub {
    Sub { name: name.into(), value: ok as u8 as f64, tol: 1.0, pass: ok }
}

type Res = lbcs::Result<Vec<Sub>>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pp(v: f64) -> PotentialParams {
    PotentialParams::with_v(v).unwrap()
}

fn desk() -> FockCutoff {
    FockCutoff::new(NMAX1, NMAX2).unwrap()
}

/// `E_p` for `H(V)` with `v_f = xi = 1`: `2 i V` at `p = 0`, else `sign(p) 2 sqrt(|p| - V^2)`.
fn energy_oracle(p: i64, v: f64) -> C64 {
    if p == 0 {
        return c(0.0, 2.0 * v);
    }
    let r = c(p.unsigned_abs() as f64 - v * v, 0.0).sqrt() * 2.0;
    if p > 0 {
        r
    } else {
        -r
    }
}

fn criterion_1() -> Res {
    let units = Units::default();
    let cut = desk();
    let w = ModeWindow::new(NMAX1, PMAX);
    let mut worst: f64 = 0.0;
    for m in w.iter().filter(|m| w.is_interior(*m)) {
        let v = basis_vector_c(m, cut)?;
        let e = energy_oracle(m.p, 0.0);
        worst = worst.max(apply_hk(&v, units)?.add_scaled(&v, -e)?.norm());
    }
    let got = dense_hk_eigenvalues(units, NMAX2);
    let mut want: Vec<f64> = (-(NMAX2 as i64)..=NMAX2 as i64).map(|p| energy_oracle(p, 0.0).re).collect();
    want.sort_by(f64::total_cmp);
    let dev = if got.len() == want.len() {
        got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(vec![le("interior eigen-residual", worst, 1e-10), le("dense multiset", dev, 1e-9)])
}

/// `max |(a b^dag - b^dag a - delta) e_k|` over interior basis columns.
fn ccr_defect(a: &SparseOperator, b: &SparseOperator, delta: f64, interior: impl Fn(usize) -> bool) -> lbcs::Result<f64> {
    let bd = b.adjoint();
    let mut worst: f64 = 0.0;
    for col in (0..a.dim()).filter(|&k| interior(k)) {
        let mut e = vec![c(0.0, 0.0); a.dim()];
        e[col] = c(1.0, 0.0);
        let x = a.apply(&bd.apply(&e)?)?;
        let y = bd.apply(&a.apply(&e)?)?;
        for (row, (x, y)) in x.iter().zip(&y).enumerate() {
            let want = if row == col { delta } else { 0.0 };
            worst = worst.max((x - y - want).norm());
        }
    }
    Ok(worst)
}

fn criterion_2() -> Res {
    let lad = LadderMatrices::new(NMAX2);
    let interior = |k: usize| lad.is_interior(k);
    let mut out = Vec::new();
    for (name, m) in [("a_X", &lad.a_x), ("a_Y", &lad.a_y), ("A_1", &lad.a1), ("A_2", &lad.a2)] {
        out.push(le(format!("[{name}, {name}^dag]"), ccr_defect(m, m, 1.0, interior)?, 1e-12));
    }
    out.push(le("[A_1, A_2^dag]", ccr_defect(&lad.a1, &lad.a2, 0.0, interior)?, 1e-12));
    let a = fock_annihilator(NMAX1);
    out.push(le("[A_(1), A_(1)^dag]", ccr_defect(&a, &a, 1.0, |k| k < NMAX1)?, 1e-12));
    Ok(out)
}

fn criterion_3() -> Res {
    let cut = desk();
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
    let small = FockCutoff::new(6, 12)?;
    let cv = |n, p| basis_vector_c(ModeIndex::new(n, p), small);
    let mut gram: f64 = 0.0;
    for (family, branch, ps) in [
        (Family::A, Branch::Plus, vec![0i64, 1, 2, 5, 9]),
        (Family::A, Branch::Minus, vec![-1, -2, -6, -10]),
        (Family::B, Branch::Plus, vec![1, 2, 4, 11]),
        (Family::B, Branch::Minus, vec![0, -1, -3, -8]),
    ] {
        let mut f = SpinorState::zeros(small);
        let mut g = SpinorState::zeros(small);
        for (i, &p) in ps.iter().enumerate() {
            for n in [0usize, 1, 4] {
                let k = (i * 3 + n) as f64;
                f = f.add_scaled(&cv(n, p)?, c(0.3 + 0.1 * k, -0.2 * k.sin()))?;
                g = g.add_scaled(&cv(n, p)?, c(k.cos(), 0.05 * k))?;
                for (j, &r) in ps.iter().enumerate() {
                    let got = resolution_identity_check(family, branch, &cv(n, p)?, &cv(n, r)?, &q)?;
                    gram = gram.max((got - if i == j { 1.0 } else { 0.0 }).norm());
                }
            }
        }
        let got = resolution_identity_check(family, branch, &f, &g, &q)?;
        gram = gram.max((got - f.dot(&g)?).norm());
    }
    let c00 = cv(0, 0)?;
    let d = combined_state_defect(&c00, &c00, &q)?;
    Ok(vec![
        le("norms", norm_dev, 1e-8),
        le("legal eigen-residuals", res, 1e-8),
        le("resolution of identity vs subspace Gram", gram, 1e-6),
        gt("combined-state defect |d| at c_00", d.norm(), 0.1),
        le("combined-state defect vs -1/2", (d - c(-0.5, 0.0)).norm(), 1e-10),
    ])
}

fn criterion_4() -> Res {
    let r = factorization_defect_v0(Units::default(), FockCutoff::new(1, NMAX2)?)?;
    let mut dev: f64 = 0.0;
    let mut min = f64::INFINITY;
    let mut min_oracle = f64::INFINITY;
    for &(p, d) in r.per_p.iter().filter(|x| x.0 != 0 && x.0.unsigned_abs() <= NMAX2 as u64 - 2) {
        let k = p.unsigned_abs() as f64;
        let want = (energy_oracle(p, 0.0).re - k).abs();
        dev = dev.max((d - want).abs());
        min = min.min(d);
        min_oracle = min_oracle.min(want);
    }
    Ok(vec![
        le("per-level defect vs |2 sign(p) sqrt|p| - |p||", dev, 1e-10),
        le(format!("min defect {min:.3e} vs oracle min {min_oracle:.3e}"), (min - min_oracle).abs(), 1e-10),
    ])
}

fn criterion_5() -> Res {
    let mut out = Vec::new();
    for v in [0.5, 9.5] {
        let fam = BiorthFamily::new(pp(v), NMAX2, NMAX2)?;
        let mut dev: f64 = 0.0;
        for p in fam.p_range() {
            for q in fam.p_range() {
                let x = fam.phi(p).dot(fam.dual(q));
                dev = dev.max((x - if p == q { 1.0 } else { 0.0 }).norm());
            }
        }
        out.push(le(format!("Gram(x, {:?}) = I at V={v}", fam.dual_role()), dev, 1e-10));
    }
    Ok(out)
}

fn criterion_6() -> Res {
    let u = Units::default();
    let pm = NMAX2 as i64;
    let mut im_max: f64 = 0.0;
    let mut lib_dev: f64 = 0.0;
    for p in -pm..=pm {
        let e = eigenvalue_e(p, 0.5, u);
        lib_dev = lib_dev.max((e - energy_oracle(p, 0.5)).norm());
        if p != 0 {
            im_max = im_max.max(e.im.abs());
        }
    }
    let e0 = (eigenvalue_e(0, 0.5, u) - c(0.0, 1.0)).norm();
    let mut pattern = true;
    for k in 1..=120i64 {
        for p in [k, -k] {
            let e = eigenvalue_e(p, 9.5, u);
            lib_dev = lib_dev.max((e - energy_oracle(p, 9.5)).norm());
            pattern &= if k <= 90 { e.im.abs() > 0.0 } else { e.im == 0.0 };
        }
    }
    let ev = dense_hv_eigenvalues(&pp(9.5), 100);
    let complex = ev.iter().filter(|e| e.im.abs() > 1e-6).count();
    let dense_ok = ev.len() == 201 && complex == 2 * 90 + 1;
    let ev5 = dense_hv_eigenvalues(&pp(0.5), NMAX2);
    let dense_im = ev5.iter().filter(|e| (**e - c(0.0, 1.0)).norm() > 1e-8).map(|e| e.im.abs()).fold(0.0, f64::max);
    Ok(vec![
        le("V=0.5 max |imag E_p|, p != 0", im_max, 1e-12),
        le("V=0.5 E_0 - 1.0i", e0, 1e-12),
        le("closed form vs library E_p", lib_dev, 1e-12),
        holds("V=9.5 complex for 1<=|p|<=90, real for 91<=|p|<=120", pattern),
        holds(format!("V=9.5 dense: {complex} complex of {} eigenvalues (want 181 of 201)", ev.len()), dense_ok),
        le("V=0.5 dense max |imag| off the zero mode", dense_im, 1e-8),
    ])
}

fn criterion_7() -> Res {
    let cut = FockCutoff::new(1, NMAX2)?;
    [0.25, 0.5, 9.5].iter().map(|&v| Ok(le(format!("V={v}"), factorization_defect(&pp(v), cut)?, 1e-9))).collect()
}

fn criterion_8() -> Res {
    let mut unit: f64 = 0.0;
    for v in [0.1, 0.25, 0.5, 0.9, 0.99] {
        for p in 1..=PMAX as u64 {
            for b in [Branch::Plus, Branch::Minus] {
                unit = unit.max((alpha(p, v, b)?.norm() - 1.0).abs());
            }
        }
    }
    let mut exact = true;
    for p in 1..=PMAX as u64 {
        let v = (p as f64).sqrt();
        for b in [Branch::Plus, Branch::Minus] {
            exact &= alpha(p, v, b)? == c(-1.0, 0.0);
        }
    }
    let mut prod: f64 = 0.0;
    for p in 1..=90u64 {
        prod = prod.max((alpha(p, 9.5, Branch::Plus)?.norm() * alpha(p, 9.5, Branch::Minus)?.norm() - 1.0).abs());
    }
    let a1 = alpha(1, 9.5, Branch::Plus)?.norm();
    let closed = 9.5 - 89.25f64.sqrt();
    Ok(vec![
        le("|alpha| = 1 for V < 1", unit, 1e-12),
        holds("alpha = -1 exactly at p = V^2", exact),
        le("|alpha+||alpha-| = 1 in the broken region", prod, 1e-12),
        le(format!("|alpha+_1(9.5)| = {a1:.10} vs closed form"), (a1 - closed).abs(), 1e-12),
        le("|alpha+_1(9.5)| = 0.0527864", (a1 - 0.0527864).abs(), 1e-6),
    ])
}

fn criterion_9() -> Res {
    let weak = BiorthFamily::new(pp(0.5), NMAX2, NMAX2)?;
    let m_weak = weak.p_range().filter(|&p| p >= 0).map(|p| weak.phi(p).norm_sqr()).fold(0.0, f64::max);
    let top = 91 + NMAX2_STRONG;
    let strong = BiorthFamily::new(pp(9.5), top, top)?;
    let m_strong = (91..=top as i64).map(|p| strong.phi(p).norm_sqr()).fold(0.0, f64::max);
    Ok(vec![
        le("V=0.5 max ||phi_n||^2 vs 4/3", m_weak, 4.0 / 3.0),
        le(format!("V=9.5 max ||phi_n||^2, 91 <= n <= {top}"), m_strong, 121.34),
    ])
}

fn theta_spec(v: f64, z1: C64, z2: C64, side: Side, branch: Branch, cutoff: FockCutoff) -> BicoherentSpec {
    BicoherentSpec { z1, z2, family: BicoherentFamily::Theta, side, branch, params: pp(v), cutoff }
}

fn criterion_10() -> Res {
    let n_lib = normalization_n(c(1.0, 0.0), &pp(0.5), FockCutoff::new(1, NMAX2)?)?.0;
    // |theta_k| = 2 sqrt(k) when V < 1, so N(1)^-2 = sum 1 / (2^n sqrt(n!)).
    let mut term = 1.0f64;
    let mut sum = 0.0;
    for n in 0..200 {
        sum += term;
        term /= 2.0 * ((n + 1) as f64).sqrt();
    }
    let n_oracle = sum.powf(-0.5);
    let mut out = vec![
        le(format!("N(1) = {n_lib:.7} vs partial-sum oracle {n_oracle:.7}"), (n_lib - n_oracle).abs(), 1e-12),
        le("N(1) vs 0.75718", (n_lib - 0.75718).abs(), 1e-4),
    ];
    let cut = FockCutoff::new(48, NMAX2_STRONG)?;
    for v in [0.5, 9.5] {
        let mut bi: f64 = 0.0;
        for z2 in [c(1.0, 0.0), c(1.0, -1.0), c(-0.4, 0.7)] {
            for branch in [Branch::Plus, Branch::Minus] {
                let k = theta_spec(v, c(0.5, 0.5), z2, Side::Ket, branch, cut);
                let b = BicoherentSpec { side: Side::Bra, ..k };
                bi = bi.max((build_bicoherent(&k)?.dot(&build_bicoherent(&b)?)? - 1.0).norm());
            }
        }
        out.push(le(format!("<eta, xi> = 1 at V={v}"), bi, 1e-8));
        let mut res: f64 = 0.0;
        for (side, branch, op) in [
            (Side::Ket, Branch::Plus, BiOperator::C2),
            (Side::Ket, Branch::Minus, BiOperator::D2),
            (Side::Bra, Branch::Minus, BiOperator::C2Dag),
            (Side::Bra, Branch::Plus, BiOperator::D2Dag),
        ] {
            let s = theta_spec(v, c(2.0, 1.0), c(1.0, -1.0), side, branch, cut);
            res = res.max(bicoherent_eigen_residual(&s, op)?).max(bicoherent_eigen_residual(&s, BiOperator::A1)?);
        }
        out.push(le(format!("eigen-residuals at V={v}"), res, 1e-8));
    }
    Ok(out)
}

fn criterion_11() -> Res {
    let grid = GridSpec::default();
    let cut = FockCutoff::new(1, NMAX2_STRONG)?;
    let z2 = c(1.0, -1.0);
    let reference = build_coherent(&CoherentSpec {
        z1: c(0.0, 0.0),
        z2,
        family: Family::A,
        branch: Branch::Plus,
        cutoff: FockCutoff::new(1, NMAX2)?,
    })?;
    let eta = build_bicoherent(&theta_spec(9.5, c(0.0, 0.0), z2, Side::Ket, Branch::Plus, cut))?;
    let xi = build_bicoherent(&theta_spec(9.5, c(0.0, 0.0), z2, Side::Bra, Branch::Minus, cut))?;
    let mut out = Vec::new();
    let mut mass_dev: f64 = 0.0;
    let mut ratios = Vec::new();
    for st in [&reference, &eta, &xi] {
        let f = density(st, &grid, serde_json::Value::Null)?;
        let (t, u, l) = f.masses();
        let decomposition = f.total.iter().zip(f.upper.iter().zip(&f.lower)).all(|(t, (u, l))| (t - u - l).abs() <= 1e-12 && *u >= 0.0 && *l >= 0.0);
        out.push(holds("total = upper + lower, all >= 0", decomposition));
        mass_dev = mass_dev.max((t / st.norm().powi(2) - 1.0).abs());
        ratios.push(u / l);
    }
    out.push(holds(format!("(a) V=0 ratio {:.4} in [0.4, 2.5]", ratios[0]), (0.4..=2.5).contains(&ratios[0])));
    out.push(gt("(b) eta+ upper/lower at V=9.5", ratios[1], 10.0));
    out.push(gt("(c) xi- lower/upper at V=9.5", 1.0 / ratios[2], 10.0));
    out.push(le("(d) grid mass vs squared norm (relative)", mass_dev, 1e-3));
    Ok(out)
}

/// Moduli of the `V = 0` theta state at `z1 = 0`. With `t_n = |z|^n / (2^{n/2} (n!)^{1/4})` and
/// `rho_n! = (+-1)^n 2^n sqrt(n!)` (sign `-` on the minus branch), the ket carries `t_n / sqrt(S)`
/// and the bra `t_n sqrt(S) / |G|`, `S = sum t_n^2`, `G = sum (+-1)^n t_n^2`; terms sit on `v_n`
/// (plus) or `v_{-n-1}` (minus), whose entries have modulus `1/sqrt 2` except `v_0`.
fn continuity_oracle(z: C64, side: Side, branch: Branch, nmax2: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = Vec::new();
    let mut x = 1.0f64;
    for n in 0..nmax2 {
        t.push(x);
        x *= z.norm() / (2.0 * ((n + 1) as f64).sqrt()).sqrt();
    }
    let sgn: f64 = if branch == Branch::Minus { -1.0 } else { 1.0 };
    let s: f64 = t.iter().map(|x| x * x).sum();
    let g: f64 = t.iter().enumerate().map(|(n, x)| sgn.powi(n as i32) * x * x).sum();
    let scale = match side {
        Side::Ket => 1.0 / s.sqrt(),
        Side::Bra => s.sqrt() / g.abs(),
    };
    let mut up = vec![0.0; nmax2 + 1];
    let mut lo = vec![0.0; nmax2 + 1];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (n, x) in t.iter().map(|x| x * scale).enumerate() {
        match branch {
            Branch::Plus if n == 0 => up[0] = x,
            Branch::Plus => {
                up[n] = x * h;
                lo[n - 1] = x * h;
            }
            Branch::Minus => {
                up[n + 1] = x * h;
                lo[n] = x * h;
            }
        }
    }
    (up, lo)
}

fn criterion_12() -> Res {
    let cut = FockCutoff::new(0, NMAX2)?;
    let z = c(1.0, -1.0);
    let mut worst: f64 = 0.0;
    for side in [Side::Ket, Side::Bra] {
        for branch in [Branch::Plus, Branch::Minus] {
            let st = build_bicoherent(&theta_spec(1e-4, c(0.0, 0.0), z, side, branch, cut))?;
            let (up, lo) = continuity_oracle(z, side, branch, NMAX2);
            for n in 0..=NMAX2 {
                worst = worst.max((st.upper[n].norm() - up[n]).abs()).max((st.lower[n].norm() - lo[n]).abs());
            }
        }
    }
    Ok(vec![le("theta coefficient moduli at V=1e-4 vs V=0 closed form", worst, 1e-6)])
}

fn criterion_13() -> Res {
    let r = exceptional_diagnostics(4, 2.0, NMAX2)?;
    let formula = alpha(4, 2.0, Branch::Plus)? == alpha(4, 2.0, Branch::Minus)?;
    let refused = matches!(build_pt_ladders(&pp(2.0), desk()), Err(Error::ExceptionalPoint { p: 4, .. }));
    let others_ok = build_pt_ladders(&pp(2.1), FockCutoff::new(1, 16)?).is_ok();
    let ladder_on_a2 = build_ladder(LadderKind::A2, FockCutoff::new(1, 8)?).is_ok();
    Ok(vec![
        le("vector coincidence defect", r.coincidence, 1e-10),
        le("|<phi_4, psi_4>|", r.self_orthogonality, 1e-10),
        holds("alpha+_4 = alpha-_4 at V=2", formula),
        holds("ladder construction refuses with the exceptional-point error", refused),
        holds("ladders build away from exceptional points", others_ok && ladder_on_a2),
    ])
}

fn main() {
    let criteria: [(&str, fn() -> Res); 13] = [
        ("Spectrum of H_K", criterion_1),
        ("Canonical commutation relations", criterion_2),
        ("Coherent states", criterion_3),
        ("Non-factorizability at V=0", criterion_4),
        ("Biorthonormality", criterion_5),
        ("PT spectrum", criterion_6),
        ("Factorization d2 c2 = h(V)", criterion_7),
        ("alpha identities", criterion_8),
        ("Norm bounds", criterion_9),
        ("Bicoherent identities", criterion_10),
        ("Figure structure", criterion_11),
        ("V -> 0 continuity", criterion_12),
        ("Exceptional points", criterion_13),
    ];
    let mut failed_subs: Vec<String> = Vec::new();
    let mut failed_criteria = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let subs = f().unwrap_or_else(|e| vec![holds(format!("error: {e}"), false)]);
        let ok = subs.iter().all(|s| s.pass);
        failed_criteria += !ok as usize;
        println!("{} {:>2} {title} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, i + 1, t0.elapsed().as_secs_f64());
        for s in &subs {
            println!("       {} {}: {:.3e} (tol {:.1e})", if s.pass { "ok  " } else { "FAIL" }, s.name, s.value, s.tol);
            if !s.pass {
                failed_subs.push(s.name.clone());
            }
        }
    }
    let known: Vec<String> = KNOWN_UNATTAINABLE.iter().map(|k| k.0.to_string()).collect();
    for (name, why) in KNOWN_UNATTAINABLE {
        println!("known unattainable: {name}: {why}");
    }
    println!("{} of 13 criteria passed", 13 - failed_criteria);
    if failed_subs != known {
        eprintln!("unexpected failures: {failed_subs:?} (known: {known:?})");
        std::process::exit(1);
    }
}
