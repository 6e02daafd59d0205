use crate::bicoherent::{bicoherent_eigen_residual, build_bicoherent, BiOperator, BicoherentFamily, BicoherentSpec, Side};
use crate::checks::{run_all, CheckScale};
use crate::coherent::{build_coherent, eigen_residual, Branch, CoherentSpec, Family};
use crate::density::{density, export, gain_loss, sci, to_json, Format, GridSpec};
use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::ladder::LadderKind;
use crate::pt::{alpha, classify_level, eigenvalue_e, is_broken, LevelKind, PotentialParams};
use crate::spinor::Units;
use crate::state::SpinorState;
use crate::C64;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("'{s}' is not a complex literal like 1-1i");
    if t.is_empty() {
        return Err(err());
    }
    let num = |x: &str| x.parse::<f64>().map_err(|_| err());
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => num(x)?,
    };
    Ok(C64::new(re, im))
}

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    CoherentA,
    CoherentB,
    Phi,
    Psi,
    Eta,
    Xi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "lbcs", version, about = "Coherent and bicoherent states of graphene Landau levels")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Fermi velocity.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub vf: f64,
    /// Magnetic length.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub xi: f64,
    /// PT-symmetric potential strength.
    #[arg(long = "V", global = true, default_value_t = 0.0)]
    pub v: f64,
    /// Fock cutoff of both registers.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Level window |p| <= pmax.
    #[arg(long, global = true)]
    pub pmax: Option<usize>,
    #[arg(long, global = true, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
    pub z1: C64,
    #[arg(long, global = true, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
    pub z2: C64,
    /// xmin:xmax:nx,ymin:ymax:ny
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = BranchArg::Plus)]
    pub branch: BranchArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues and PT classification for p in [-pmax, pmax].
    Spectrum,
    /// Build a state and report norms, residuals and pairings.
    State(StateArgs),
    /// Export position densities on a grid.
    Density(StateArgs),
    /// Run every invariant suite; exit 1 on failure.
    Check,
    /// Sweep V and report trajectories, exceptional points and |alpha| tables.
    ScanV {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

const DEFAULT_NMAX: usize = 128;
const DEFAULT_PMAX: usize = 32;

impl Global {
    fn units(&self) -> Result<Units> {
        Units::new(self.vf, self.xi).map_err(|e| Error::Usage(e.to_string()))
    }

    fn params(&self) -> Result<PotentialParams> {
        let units = self.units()?;
        PotentialParams::new(self.v, units).map_err(|e| match e {
            Error::Contract(m) => Error::Usage(m),
            e => e,
        })
    }

    fn cutoff(&self) -> Result<FockCutoff> {
        let n = self.nmax.unwrap_or(DEFAULT_NMAX);
        FockCutoff::square(n).map_err(|e| Error::Usage(e.to_string()))
    }

    fn pmax(&self) -> usize {
        self.pmax.unwrap_or(DEFAULT_PMAX)
    }

    fn meta(&self, extra: serde_json::Value) -> serde_json::Value {
        let mut m = json!({
            "V": self.v,
            "z1": [self.z1.re, self.z1.im],
            "z2": [self.z2.re, self.z2.im],
            "units": { "v_f": self.vf, "xi": self.xi, "epsilon0": 2.0 * self.vf / self.xi },
        });
        if let (Some(a), serde_json::Value::Object(b)) = (m.as_object_mut(), extra) {
            a.extend(b);
        }
        m
    }
}

enum Built {
    Coherent(CoherentSpec),
    Bi(BicoherentSpec),
}

fn build_spec(g: &Global, a: &StateArgs) -> Result<Built> {
    let cutoff = g.cutoff()?;
    let branch: Branch = a.branch.into();
    let (family, side) = match a.family {
        FamilyArg::CoherentA | FamilyArg::CoherentB => {
            if g.v != 0.0 {
                return Err(Error::Usage("coherent families are defined at V = 0; use phi/psi/eta/xi".into()));
            }
            let family = if a.family == FamilyArg::CoherentA { Family::A } else { Family::B };
            return Ok(Built::Coherent(CoherentSpec { z1: g.z1, z2: g.z2, family, branch, cutoff }));
        }
        FamilyArg::Phi => (BicoherentFamily::Standard, Side::Ket),
        FamilyArg::Psi => (BicoherentFamily::Standard, Side::Bra),
        FamilyArg::Eta => (BicoherentFamily::Theta, Side::Ket),
        FamilyArg::Xi => (BicoherentFamily::Theta, Side::Bra),
    };
    Ok(Built::Bi(BicoherentSpec { z1: g.z1, z2: g.z2, family, side, branch, params: g.params()?, cutoff }))
}

fn build_state(b: &Built) -> Result<SpinorState> {
    match b {
        Built::Coherent(s) => build_coherent(s),
        Built::Bi(s) => build_bicoherent(s),
    }
}

fn coherent_op(s: &CoherentSpec) -> LadderKind {
    match (s.family, s.branch) {
        (Family::A, Branch::Plus) => LadderKind::A2,
        (Family::A, Branch::Minus) => LadderKind::A2Dag,
        (Family::B, Branch::Plus) => LadderKind::B2Dag,
        (Family::B, Branch::Minus) => LadderKind::B2,
    }
}

fn bi_op(s: &BicoherentSpec) -> BiOperator {
    use BiOperator::*;
    match (s.family, s.side, s.branch) {
        (BicoherentFamily::Standard, Side::Ket, Branch::Plus) => AK,
        (BicoherentFamily::Standard, Side::Ket, Branch::Minus) => BK,
        (BicoherentFamily::Standard, Side::Bra, Branch::Minus) => AKDag,
        (BicoherentFamily::Standard, Side::Bra, Branch::Plus) => BKDag,
        (BicoherentFamily::Theta, Side::Ket, Branch::Plus) => C2,
        (BicoherentFamily::Theta, Side::Ket, Branch::Minus) => D2,
        (BicoherentFamily::Theta, Side::Bra, Branch::Minus) => C2Dag,
        (BicoherentFamily::Theta, Side::Bra, Branch::Plus) => D2Dag,
    }
}

fn emit(g: &Global, body: &str) -> Result<()> {
    match &g.out {
        Some(p) => std::fs::write(p, body)?,
        None => to_stdout(body)?,
    }
    Ok(())
}

fn to_stdout(body: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn json_line<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct LevelRecord {
    p: i64,
    class: LevelKind,
    energy: String,
    re: f64,
    im: f64,
}

fn spectrum(g: &Global) -> Result<i32> {
    let units = g.units()?;
    let v = g.v;
    if v < 0.0 || !v.is_finite() {
        return Err(Error::Usage(format!("V = {v} must be finite and nonnegative")));
    }
    let pm = g.pmax() as i64;
    let recs: Vec<LevelRecord> = (-pm..=pm)
        .map(|p| {
            let e = eigenvalue_e(p, v, units);
            LevelRecord { p, class: classify_level(p, v), energy: format_complex(e), re: e.re, im: e.im }
        })
        .collect();
    let body = match g.format {
        Format::Json => json_line(&recs)?,
        Format::Csv => {
            let mut s = String::from("p,class,re,im\n");
            for r in &recs {
                let class = serde_json::to_value(r.class)?;
                let _ = writeln!(s, "{},{},{},{}", r.p, class.as_str().unwrap_or(""), sci(r.re), sci(r.im));
            }
            s
        }
    };
    emit(g, &body)?;
    Ok(0)
}

fn state(g: &Global, a: &StateArgs) -> Result<i32> {
    let b = build_spec(g, a)?;
    let st = build_state(&b)?;
    let (mu, ml) = st.component_masses();
    let mut residuals = serde_json::Map::new();
    let mut pairing = serde_json::Value::Null;
    let mut worst: f64 = 0.0;
    match &b {
        Built::Coherent(s) => {
            for op in [coherent_op(s), LadderKind::A1] {
                let r = eigen_residual(s, op)?;
                worst = worst.max(r);
                residuals.insert(format!("{op:?}"), json!(r));
            }
        }
        Built::Bi(s) => {
            for op in [bi_op(s), BiOperator::A1] {
                let r = bicoherent_eigen_residual(s, op)?;
                worst = worst.max(r);
                residuals.insert(format!("{op:?}"), json!(r));
            }
            let side = if s.side == Side::Ket { Side::Bra } else { Side::Ket };
            let other = build_bicoherent(&BicoherentSpec { side, ..*s })?;
            let x = if s.side == Side::Ket { st.dot(&other)? } else { other.dot(&st)? };
            pairing = json!({ "re": x.re, "im": x.im });
        }
    }
    let gl = gain_loss(&st, g.params().ok().filter(|_| g.v > 0.0).as_ref(), g.pmax().min(128) as u64);
    let report = json!({
        "spec": g.meta(json!({ "family": a.family, "branch": format!("{:?}", a.branch).to_lowercase() })),
        "cutoff": st.cutoff,
        "series": st.series,
        "norm": st.norm(),
        "mass_upper": mu,
        "mass_lower": ml,
        "residuals": residuals,
        "bi_product": pairing,
        "gain_loss": gl,
        "tolerance": g.tol,
        "pass": worst < g.tol,
    });
    let body = match g.format {
        Format::Json => json_line(&report)?,
        Format::Csv => {
            let mut s = String::from("n1,n2,upper_re,upper_im,lower_re,lower_im\n");
            for n1 in 0..=st.cutoff.nmax1 {
                for n2 in 0..=st.cutoff.nmax2 {
                    let i = st.idx(n1, n2);
                    let (u, l) = (st.upper[i], st.lower[i]);
                    if u.norm() != 0.0 || l.norm() != 0.0 {
                        let _ = writeln!(s, "{n1},{n2},{},{},{},{}", sci(u.re), sci(u.im), sci(l.re), sci(l.im));
                    }
                }
            }
            s
        }
    };
    emit(g, &body)?;
    Ok(0)
}

fn density_cmd(g: &Global, a: &StateArgs) -> Result<i32> {
    let b = build_spec(g, a)?;
    let st = build_state(&b)?;
    let grid = g.grid.unwrap_or_default();
    let meta = g.meta(json!({ "family": a.family, "branch": format!("{:?}", a.branch).to_lowercase(), "grid": grid }));
    let field = density(&st, &grid, meta)?;
    if field.meta.mass_warning {
        eprintln!(
            "warning: grid captures {:.6} of the coefficient mass {:.6}",
            field.meta.grid_mass, field.meta.coefficient_norm_sq
        );
    }
    match (&g.out, g.format) {
        (Some(p), f) => export(&field, f, p)?,
        (None, Format::Json) => to_stdout(&to_json(&field)?)?,
        (None, Format::Csv) => export(&field, Format::Csv, &PathBuf::from("density.csv"))?,
    }
    Ok(0)
}

fn check(g: &Global) -> Result<i32> {
    let d = CheckScale::default();
    let scale = CheckScale {
        nmax1: g.nmax.unwrap_or(d.nmax1),
        nmax2: g.nmax.unwrap_or(d.nmax2),
        pmax: g.pmax.unwrap_or(d.pmax),
        nmax2_strong: d.nmax2_strong.max(g.nmax.unwrap_or(0)),
    };
    if scale.pmax > scale.nmax2 {
        return Err(Error::Usage(format!("pmax {} exceeds nmax {}", scale.pmax, scale.nmax2)));
    }
    let out = run_all(scale, g.tol);
    let ok = out.iter().all(|o| o.pass);
    let body = match g.format {
        Format::Json => json_line(&out)?,
        Format::Csv => {
            let mut s = String::from("criterion,name,value,tolerance,pass\n");
            for o in &out {
                let _ = writeln!(s, "{},\"{}\",{:.6e},{:.6e},{}", o.criterion, o.name, o.value, o.tolerance, o.pass);
            }
            s
        }
    };
    emit(g, &body)?;
    for o in &out {
        eprintln!("{} [{}] {}: {:.3e} (tol {:.1e})", if o.pass { "PASS" } else { "FAIL" }, o.criterion, o.name, o.value, o.tolerance);
    }
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct ExceptionalPoint {
    p: u64,
    v: f64,
    bracket: [f64; 2],
}

#[derive(Serialize)]
struct ScanRow {
    v: f64,
    p: i64,
    class: LevelKind,
    re: f64,
    im: f64,
    abs_alpha_plus: f64,
    abs_alpha_minus: f64,
}

fn scan_v(g: &Global, from: f64, to: f64, steps: usize) -> Result<i32> {
    if !(from.is_finite() && to.is_finite() && from >= 0.0 && from < to && steps >= 1) {
        return Err(Error::Usage(format!("scan range {from}..{to} with {steps} steps is invalid")));
    }
    let units = g.units()?;
    let pm = g.pmax.unwrap_or(((to * to).ceil() as usize + 2).max(DEFAULT_PMAX)) as u64;
    let vs: Vec<f64> = (0..=steps).map(|i| if i == steps { to } else { from + (to - from) * i as f64 / steps as f64 }).collect();
    let mut rows = Vec::new();
    for &v in &vs {
        for p in 1..=pm as i64 {
            let e = eigenvalue_e(p, v, units);
            let k = p as u64;
            rows.push(ScanRow {
                v,
                p,
                class: classify_level(p, v),
                re: e.re,
                im: e.im,
                abs_alpha_plus: alpha(k, v, Branch::Plus).map_or(f64::NAN, |a| a.norm()),
                abs_alpha_minus: alpha(k, v, Branch::Minus).map_or(f64::NAN, |a| a.norm()),
            });
        }
    }
    let broken_or_ep = |p: u64, v: f64| is_broken(p, v) || classify_level(p as i64, v) == LevelKind::Exceptional;
    let mut eps = Vec::new();
    for p in 1..=pm {
        if let Some(i) = (0..vs.len()).find(|&i| broken_or_ep(p, vs[i])) {
            if i > 0 || classify_level(p as i64, vs[0]) == LevelKind::Exceptional {
                eps.push(ExceptionalPoint { p, v: (p as f64).sqrt(), bracket: [vs[i.saturating_sub(1)], vs[i]] });
            }
        }
    }
    let body = match g.format {
        Format::Json => json_line(&json!({
            "meta": g.meta(json!({ "from": from, "to": to, "steps": steps, "pmax": pm })),
            "v": vs,
            "exceptional_points": eps,
            "levels": rows,
        }))?,
        Format::Csv => {
            let mut s = String::from("v,p,class,re,im,abs_alpha_plus,abs_alpha_minus\n");
            for r in &rows {
                let class = serde_json::to_value(r.class)?;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    sci(r.v),
                    r.p,
                    class.as_str().unwrap_or(""),
                    sci(r.re),
                    sci(r.im),
                    sci(r.abs_alpha_plus),
                    sci(r.abs_alpha_minus)
                );
            }
            for e in &eps {
                eprintln!("exceptional point p={} V={} in [{}, {}]", e.p, e.v, e.bracket[0], e.bracket[1]);
            }
            s
        }
    };
    emit(g, &body)?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    if let Some(grid) = &g.grid {
        grid.validate()?;
    }
    if let (Some(n), Some(p)) = (g.nmax, g.pmax) {
        if p > n {
            return Err(Error::Usage(format!("pmax {p} exceeds nmax {n}")));
        }
    }
    match &cli.command {
        Command::Spectrum => spectrum(g),
        Command::State(a) => state(g, a),
        Command::Density(a) => density_cmd(g, a),
        Command::Check => check(g),
        Command::ScanV { from, to, steps } => scan_v(g, *from, *to, *steps),
    }
}

/// Entry point; returns the process exit code (0 ok, 1 failure, 2 usage).
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
