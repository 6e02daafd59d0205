use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::sparse::{Basis, SparseOperator};
use crate::spinor::{basis_vector_c, fock_annihilator, hk_operator, v_spinor, ModeIndex, ModeWindow, Units};
use crate::state::{Spinor, TensorOperator};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LadderKind {
    A1,
    A1Dag,
    A2,
    A2Dag,
    B2,
    B2Dag,
}

/// Half-spaces of the spinor register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceTag {
    /// `p >= 0`
    H2Plus,
    /// `p <= -1`
    H2Minus,
    /// `p >= 1`
    K2Plus,
    /// `p <= 0`
    K2Minus,
}

impl SubspaceTag {
    pub fn contains(&self, p: i64) -> bool {
        match self {
            SubspaceTag::H2Plus => p >= 0,
            SubspaceTag::H2Minus => p <= -1,
            SubspaceTag::K2Plus => p >= 1,
            SubspaceTag::K2Minus => p <= 0,
        }
    }
}

/// `sum_k coef_k |ket_k><bra_k|` on the spinor register.
pub fn rank_one_sum(name: &str, nmax2: usize, terms: &[(C64, Spinor, Spinor)]) -> SparseOperator {
    let mut trips = Vec::new();
    for (coef, ket, bra) in terms {
        let k = ket.to_flat();
        let b = bra.to_flat();
        for (r, kr) in k.iter().enumerate().filter(|(_, v)| v.norm() != 0.0) {
            for (c, bc) in b.iter().enumerate().filter(|(_, v)| v.norm() != 0.0) {
                trips.push((r, c, coef * kr * bc.conj()));
            }
        }
    }
    SparseOperator::from_triplets(name, Basis::SpinorRegister { nmax2 }, trips)
}

fn sq(p: i64) -> C64 {
    C64::new((p.unsigned_abs() as f64).sqrt(), 0.0)
}

/// Spinor-register part of the V = 0 ladders over `|p| <= pmax`.
pub fn spinor_ladder(kind: LadderKind, nmax2: usize, pmax: usize) -> Result<SparseOperator> {
    if pmax > nmax2 {
        return Err(Error::Cutoff(format!("pmax {pmax} > nmax2 {nmax2}")));
    }
    let pm = pmax as i64;
    let v = |p: i64| v_spinor(p, nmax2);
    let (base, dag) = match kind {
        LadderKind::A2 | LadderKind::A2Dag => {
            let mut t = Vec::new();
            for p in -pm..pm {
                t.push((sq(p + 1), v(p)?, v(p + 1)?));
            }
            (rank_one_sum("A_2", nmax2, &t), kind == LadderKind::A2Dag)
        }
        LadderKind::B2 | LadderKind::B2Dag => {
            let mut t = Vec::new();
            for p in -pm..pm {
                t.push((sq(p), v(p + 1)?, v(p)?));
            }
            (rank_one_sum("B_2", nmax2, &t), kind == LadderKind::B2Dag)
        }
        _ => return Err(Error::Contract(format!("{kind:?} does not act on the spinor register"))),
    };
    Ok(if dag { base.adjoint() } else { base })
}

pub fn build_ladder(kind: LadderKind, cutoff: FockCutoff) -> Result<TensorOperator> {
    Ok(match kind {
        LadderKind::A1 => TensorOperator::on_first(fock_annihilator(cutoff.nmax1)),
        LadderKind::A1Dag => TensorOperator::on_first(fock_annihilator(cutoff.nmax1).adjoint()),
        _ => TensorOperator::on_spinor(spinor_ladder(kind, cutoff.nmax2, cutoff.nmax2)?),
    })
}

/// `<v_q, S v_p>` for `|p|, |q| <= pmax`, indexed `[q + pmax][p + pmax]`.
pub fn spinor_mode_block(op: Option<&SparseOperator>, nmax2: usize, pmax: usize) -> Result<Vec<Vec<C64>>> {
    let pm = pmax as i64;
    let vs: Vec<Spinor> = (-pm..=pm).map(|p| v_spinor(p, nmax2)).collect::<Result<_>>()?;
    let imgs: Vec<Spinor> = match op {
        Some(o) => vs.iter().map(|v| v.apply(o)).collect::<Result<_>>()?,
        None => vs.clone(),
    };
    Ok(vs.iter().map(|q| imgs.iter().map(|s| q.dot(s)).collect()).collect())
}

/// Operator matrix in the c-basis, `<c_i, O c_j>`.
pub fn mode_matrix(op: &TensorOperator, window: ModeWindow, cutoff: FockCutoff) -> Result<SparseOperator> {
    if window.nmax1 > cutoff.nmax1 || window.pmax > cutoff.nmax2 {
        return Err(Error::Cutoff("window larger than cutoff".into()));
    }
    let s = spinor_mode_block(op.spinor.as_ref(), cutoff.nmax2, window.pmax)?;
    let f = op.first.as_ref().map(|o| o.to_dense());
    let pm = window.pmax as i64;
    let mut trips = Vec::new();
    for j in 0..window.len() {
        let mj = window.at(j);
        for m in 0..=window.nmax1 {
            let fmn = match &f {
                Some(d) => d[(m, mj.n)],
                None if m == mj.n => C64::new(1.0, 0.0),
                None => continue,
            };
            if fmn.norm() == 0.0 {
                continue;
            }
            for q in -pm..=pm {
                let v = fmn * s[(q + pm) as usize][(mj.p + pm) as usize];
                if v.norm() > 1e-15 {
                    trips.push((window.index_of(ModeIndex::new(m, q)).unwrap(), j, v));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(&op.name, window.basis(), trips))
}

/// Interior labels annihilated by the ladder.
pub fn quasi_vacua(kind: LadderKind, cutoff: FockCutoff) -> Result<Vec<ModeIndex>> {
    let op = build_ladder(kind, cutoff)?;
    let window = ModeWindow::from_cutoff(cutoff);
    let mut out = Vec::new();
    for m in window.iter().filter(|m| window.is_interior(*m)) {
        if op.apply(&basis_vector_c(m, cutoff)?)?.norm() < 1e-14 {
            out.push(m);
        }
    }
    Ok(out)
}

/// `max ||[H, N] c||` over interior labels of the window.
pub fn commutator_defect(
    h: &TensorOperator,
    n: &TensorOperator,
    window: ModeWindow,
    cutoff: FockCutoff,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in window.iter().filter(|m| window.is_interior(*m)) {
        let c = basis_vector_c(m, cutoff)?;
        let hn = h.apply(&n.apply(&c)?)?;
        let nh = n.apply(&h.apply(&c)?)?;
        worst = worst.max(hn.add_scaled(&nh, C64::new(-1.0, 0.0))?.norm());
    }
    Ok(worst)
}

/// Per-level defect of `H_K - A2^dag A2` on interior labels.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FactorizationReport {
    pub per_p: Vec<(i64, f64)>,
    pub max: f64,
}

pub fn factorization_defect_v0(units: Units, cutoff: FockCutoff) -> Result<FactorizationReport> {
    let nmax2 = cutoff.nmax2;
    let a2 = spinor_ladder(LadderKind::A2, nmax2, nmax2)?;
    let prod = a2.adjoint().matmul(&a2)?;
    let diff = hk_operator(units, nmax2).add_scaled(&prod, C64::new(-1.0, 0.0))?;
    let pm = nmax2 as i64 - 1;
    let mut per_p = Vec::new();
    for p in -pm..=pm {
        per_p.push((p, v_spinor(p, nmax2)?.apply(&diff)?.norm()));
    }
    let max = per_p.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(FactorizationReport { per_p, max })
}

/// Largest out-of-subspace weight of the image of an interior subspace label.
pub fn subspace_leak(kind: LadderKind, tag: SubspaceTag, cutoff: FockCutoff) -> Result<f64> {
    let op = build_ladder(kind, cutoff)?;
    let pmax = cutoff.nmax2;
    let pm = pmax as i64;
    let s = spinor_mode_block(op.spinor.as_ref(), cutoff.nmax2, pmax)?;
    let first_norm = match &op.first {
        Some(f) => (0..cutoff.nmax1)
            .map(|n| {
                let mut e = vec![C64::new(0.0, 0.0); cutoff.nmax1 + 1];
                e[n] = C64::new(1.0, 0.0);
                crate::sparse::vec_norm(&f.apply(&e).unwrap())
            })
            .fold(0.0, f64::max),
        None => 1.0,
    };
    let mut worst: f64 = 0.0;
    for p in (-pm + 1..pm).filter(|&p| tag.contains(p)) {
        let img = match &op.spinor {
            Some(o) => v_spinor(p, cutoff.nmax2)?.apply(o)?,
            None => v_spinor(p, cutoff.nmax2)?,
        };
        let inside: f64 = (-pm..=pm)
            .filter(|&q| tag.contains(q))
            .map(|q| s[(q + pm) as usize][(p + pm) as usize].norm_sqr())
            .sum();
        worst = worst.max((img.norm_sqr() - inside).max(0.0).sqrt() * first_norm);
    }
    Ok(worst)
}

pub fn subspace_closure_check(kind: LadderKind, tag: SubspaceTag, cutoff: FockCutoff) -> Result<bool> {
    Ok(subspace_leak(kind, tag, cutoff)? < 1e-12)
}
