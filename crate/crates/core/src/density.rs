use crate::error::{Error, Result};
use crate::fock::{oscillator_psi_table, FockCutoff, LadderMatrices};
use crate::coherent::Branch;
use crate::pt::{alpha, classify_level, LevelKind, PotentialParams};
use crate::state::{SeriesInfo, SpinorState};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Uniform grid including both endpoints on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_min: -8.0, x_max: 8.0, nx: 257, y_min: -8.0, y_max: 8.0, ny: 257 }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `xmin:xmax:nx,ymin:ymax:ny`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("grid '{s}' is not xmin:xmax:nx,ymin:ymax:ny"));
        let axes: Vec<&str> = s.split(',').collect();
        if axes.len() != 2 {
            return Err(bad());
        }
        let axis = |a: &str| -> Result<(f64, f64, usize)> {
            let p: Vec<&str> = a.trim().split(':').collect();
            if p.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = p[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = p[1].trim().parse().map_err(|_| bad())?;
            let n: usize = p[2].trim().parse().map_err(|_| bad())?;
            Ok((lo, hi, n))
        };
        let (x_min, x_max, nx) = axis(axes[0])?;
        let (y_min, y_max, ny) = axis(axes[1])?;
        let g = GridSpec { x_min, x_max, nx, y_min, y_max, ny };
        g.validate()?;
        Ok(g)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo.is_finite() && hi.is_finite() && lo < hi && n >= 2;
        if !ok(self.x_min, self.x_max, self.nx) || !ok(self.y_min, self.y_max, self.ny) {
            return Err(Error::Usage(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * h }).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityMeta {
    /// Caller-supplied description of the state and parameters.
    pub state: serde_json::Value,
    pub cutoff: FockCutoff,
    pub series: Option<SeriesInfo>,
    pub cartesian_window: usize,
    pub coefficient_norm_sq: f64,
    pub grid_mass: f64,
    pub mass_warning: bool,
}

/// Densities on a grid, stored row-major with `x` fastest.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub grid: GridSpec,
    pub total: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub meta: DensityMeta,
}

impl DensityField {
    pub fn at(&self, ix: usize, iy: usize) -> (f64, f64, f64) {
        let i = iy * self.grid.nx + ix;
        (self.total[i], self.upper[i], self.lower[i])
    }

    /// Trapezoidal integrals of `(total, upper, lower)`.
    pub fn masses(&self) -> (f64, f64, f64) {
        let g = &self.grid;
        let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut m = (0.0, 0.0, 0.0);
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let k = w(ix, g.nx) * w(iy, g.ny);
                let (t, u, l) = self.at(ix, iy);
                m.0 += k * t;
                m.1 += k * u;
                m.2 += k * l;
            }
        }
        let a = g.dx() * g.dy();
        (m.0 * a, m.1 * a, m.2 * a)
    }
}

/// Largest first- and second-register indices carrying nonzero weight.
fn support(s: &SpinorState) -> (usize, usize) {
    let mut n1 = 0;
    let mut n2 = 0;
    for a in 0..=s.cutoff.nmax1 {
        for b in 0..=s.cutoff.nmax2 {
            let i = s.idx(a, b);
            if s.upper[i].norm() != 0.0 || s.lower[i].norm() != 0.0 {
                n1 = n1.max(a);
                n2 = n2.max(b);
            }
        }
    }
    (n1, n2)
}

/// Cartesian coefficients of `sum U[n1][n2] e_{n1,n2}` by nested Horner schemes.
pub fn to_cartesian(coeffs: &[C64], n1max: usize, stride: usize, n2max: usize, lad: &LadderMatrices) -> Result<Vec<C64>> {
    let a1d = lad.a1.adjoint();
    let a2d = lad.a2.adjoint();
    let dim = lad.basis().dim();
    let mut outer = vec![C64::new(0.0, 0.0); dim];
    for n1 in (0..=n1max).rev() {
        let mut inner = vec![C64::new(0.0, 0.0); dim];
        for n2 in (0..=n2max).rev() {
            if n2 < n2max {
                inner = a2d.apply(&inner)?;
                let s = 1.0 / ((n2 + 1) as f64).sqrt();
                inner.iter_mut().for_each(|c| *c *= s);
            }
            inner[0] += coeffs[n1 * stride + n2];
        }
        if n1 < n1max {
            outer = a1d.apply(&outer)?;
            let s = 1.0 / ((n1 + 1) as f64).sqrt();
            outer.iter_mut().for_each(|c| *c *= s);
        }
        for (o, i) in outer.iter_mut().zip(&inner) {
            *o += i;
        }
    }
    Ok(outer)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = std::env::var("LB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))
}

/// Position-space densities of both spinor components; rows run in parallel,
/// capped by `LB_THREADS` (0 or unset = automatic).
pub fn density(state: &SpinorState, grid: &GridSpec, state_meta: serde_json::Value) -> Result<DensityField> {
    grid.validate()?;
    let (n1, n2) = support(state);
    let nmax = (n1 + n2).max(1);
    let lad = LadderMatrices::new(nmax);
    let stride = state.cutoff.nmax2 + 1;
    let cu = to_cartesian(&state.upper, n1, stride, n2, &lad)?;
    let cl = to_cartesian(&state.lower, n1, stride, n2, &lad)?;
    let xs = grid.xs();
    let ys = grid.ys();
    let px: Vec<Vec<f64>> = xs.iter().map(|&x| oscillator_psi_table(nmax, x)).collect();
    let w = nmax + 1;
    let row = |y: f64| -> Vec<(f64, f64)> {
        let py = oscillator_psi_table(nmax, y);
        let fold = |c: &[C64]| -> Vec<C64> {
            (0..w).map(|j| (0..w).map(|k| c[j * w + k] * py[k]).sum()).collect()
        };
        let bu = fold(&cu);
        let bl = fold(&cl);
        px.iter()
            .map(|p| {
                let u: C64 = bu.iter().zip(p).map(|(b, v)| b * v).sum();
                let l: C64 = bl.iter().zip(p).map(|(b, v)| b * v).sum();
                (u.norm_sqr(), l.norm_sqr())
            })
            .collect()
    };
    let rows: Vec<Vec<(f64, f64)>> = thread_pool()?.install(|| ys.par_iter().map(|&y| row(y)).collect());
    let n = grid.nx * grid.ny;
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for r in rows {
        for (u, l) in r {
            upper.push(u);
            lower.push(l);
        }
    }
    let total = upper.iter().zip(&lower).map(|(u, l)| u + l).collect();
    let norm_sq = state.norm().powi(2);
    let mut field = DensityField {
        grid: *grid,
        total,
        upper,
        lower,
        meta: DensityMeta {
            state: state_meta,
            cutoff: state.cutoff,
            series: state.series,
            cartesian_window: nmax,
            coefficient_norm_sq: norm_sq,
            grid_mass: 0.0,
            mass_warning: false,
        },
    };
    let mass = field.masses().0;
    field.meta.grid_mass = mass;
    field.meta.mass_warning = mass < 0.999 * norm_sq;
    Ok(field)
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaRow {
    pub p: u64,
    #[serde(rename = "class")]
    pub kind: LevelKind,
    pub abs_alpha_plus: f64,
    pub abs_alpha_minus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GainLossReport {
    pub mass_upper: f64,
    pub mass_lower: f64,
    pub ratio: f64,
    pub alpha_table: Vec<AlphaRow>,
}

/// Coefficient-space component masses and the `|alpha|` table for `p = 1 ..= pmax`.
pub fn gain_loss(state: &SpinorState, params: Option<&PotentialParams>, pmax: u64) -> GainLossReport {
    let (mass_upper, mass_lower) = state.component_masses();
    let alpha_table = params
        .map(|pp| {
            (1..=pmax)
                .map(|p| AlphaRow {
                    p,
                    kind: classify_level(p as i64, pp.v),
                    abs_alpha_plus: alpha(p, pp.v, Branch::Plus).map_or(f64::NAN, |a| a.norm()),
                    abs_alpha_minus: alpha(p, pp.v, Branch::Minus).map_or(f64::NAN, |a| a.norm()),
                })
                .collect()
        })
        .unwrap_or_default();
    GainLossReport { mass_upper, mass_lower, ratio: mass_upper / mass_lower, alpha_table }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub fn sci(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// CSV body: header `x,y,total,upper,lower`, one row per point, `x` fastest.
pub fn to_csv(field: &DensityField) -> String {
    let xs = field.grid.xs();
    let ys = field.grid.ys();
    let mut s = String::from("x,y,total,upper,lower\n");
    for (iy, y) in ys.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let (t, u, l) = field.at(ix, iy);
            let _ = writeln!(s, "{},{},{},{},{}", sci(*x), sci(*y), sci(t), sci(u), sci(l));
        }
    }
    s
}

#[derive(Serialize)]
struct JsonGrid {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize)]
struct JsonField<'a> {
    meta: &'a DensityMeta,
    grid: JsonGrid,
    total: Vec<&'a [f64]>,
    upper: Vec<&'a [f64]>,
    lower: Vec<&'a [f64]>,
}

pub fn to_json(field: &DensityField) -> Result<String> {
    let nx = field.grid.nx;
    fn rows(v: &[f64], nx: usize) -> Vec<&[f64]> {
        v.chunks(nx).collect()
    }
    let j = JsonField {
        meta: &field.meta,
        grid: JsonGrid { x: field.grid.xs(), y: field.grid.ys() },
        total: rows(&field.total, nx),
        upper: rows(&field.upper, nx),
        lower: rows(&field.lower, nx),
    };
    let mut s = serde_json::to_string(&j)?;
    s.push('\n');
    Ok(s)
}

/// Path of the metadata file written next to a CSV export.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the field; CSV exports also get a `.meta.json` sidecar.
pub fn export(field: &DensityField, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Json => std::fs::write(path, to_json(field)?)?,
        Format::Csv => {
            std::fs::write(path, to_csv(field))?;
            let mut m = serde_json::to_string_pretty(&field.meta)?;
            m.push('\n');
            std::fs::write(sidecar_path(path), m)?;
        }
    }
    Ok(())
}
