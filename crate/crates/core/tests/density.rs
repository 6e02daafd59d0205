use lbcs::bicoherent::{build_bicoherent, BicoherentFamily, BicoherentSpec, Side};
use lbcs::coherent::{build_coherent, Branch, CoherentSpec, Family};
use lbcs::density::{density, export, gain_loss, sidecar_path, to_csv, to_json, Format, GridSpec};
use lbcs::fock::{oscillator_psi, FockCutoff};
use lbcs::pt::PotentialParams;
use lbcs::state::SpinorState;
use lbcs::C64;

fn standard(v: f64, side: Side, branch: Branch) -> SpinorState {
    build_bicoherent(&BicoherentSpec {
        z1: C64::new(0.0, 0.0),
        z2: C64::new(1.0, -1.0),
        family: BicoherentFamily::Standard,
        side,
        branch,
        params: PotentialParams::with_v(v).unwrap(),
        cutoff: FockCutoff::new(1, 128).unwrap(),
    })
    .unwrap()
}

fn phi_a(z1: C64, z2: C64, n: usize) -> SpinorState {
    build_coherent(&CoherentSpec { z1, z2, family: Family::A, branch: Branch::Plus, cutoff: FockCutoff::square(n).unwrap() })
        .unwrap()
}

#[test]
fn v0_coherent_density_integrates_to_one() {
    let st = phi_a(C64::new(0.0, 0.0), C64::new(1.0, -1.0), 64);
    let f = density(&st, &GridSpec::default(), serde_json::Value::Null).unwrap();
    let (t, u, l) = f.masses();
    assert!((t - 1.0).abs() < 1e-3);
    assert!((t - u - l).abs() < 1e-12);
    assert!(f.total.iter().all(|x| *x >= 0.0));
    let r = gain_loss(&st, None, 0).ratio;
    assert!((0.4..=2.5).contains(&r), "{r}");
}

#[test]
fn pointwise_against_separable_oracle() {
    let st = phi_a(C64::new(0.6, -0.3), C64::new(0.4, 0.8), 30);
    let g: GridSpec = "-3:3:13,-2:2:9".parse().unwrap();
    let f = density(&st, &g, serde_json::Value::Null).unwrap();
    // Direct sum over circular modes e_{n1,n2}(x + i y) built from the complex Hermite closed form.
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mode = |m: usize, n: usize, z: C64| -> C64 {
        let binom = |a: usize, b: usize| fact(a) / (fact(b) * fact(a - b));
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=m.min(n) {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += s * fact(k) * binom(m, k) * binom(n, k) * z.powu((m - k) as u32) * z.conj().powu((n - k) as u32);
        }
        acc * (-z.norm_sqr() / 2.0).exp() / (std::f64::consts::PI * fact(m) * fact(n)).sqrt()
    };
    let xs = g.xs();
    let ys = g.ys();
    for (iy, &y) in ys.iter().enumerate().step_by(2) {
        for (ix, &x) in xs.iter().enumerate().step_by(3) {
            let z = C64::new(x, y);
            let mut u = C64::new(0.0, 0.0);
            let mut l = C64::new(0.0, 0.0);
            for n1 in 0..=30 {
                for n2 in 0..=30 {
                    let i = st.idx(n1, n2);
                    if st.upper[i].norm() + st.lower[i].norm() > 1e-17 {
                        let e = mode(n1, n2, z);
                        u += st.upper[i] * e;
                        l += st.lower[i] * e;
                    }
                }
            }
            let (_, fu, fl) = f.at(ix, iy);
            assert!((fu - u.norm_sqr()).abs() < 1e-12, "({x},{y}) {fu} {}", u.norm_sqr());
            assert!((fl - l.norm_sqr()).abs() < 1e-12);
        }
    }
    let vac = oscillator_psi(0, 0.0).unwrap().powi(4);
    assert!(vac > 0.0);
}

#[test]
fn gain_loss_examples() {
    let phi = gain_loss(&standard(9.5, Side::Ket, Branch::Plus), Some(&PotentialParams::with_v(9.5).unwrap()), 92);
    assert!(phi.ratio > 10.0);
    assert!((phi.ratio - phi.mass_upper / phi.mass_lower).abs() == 0.0);
    let row = &phi.alpha_table[0];
    assert_eq!(row.p, 1);
    assert!((row.abs_alpha_plus * row.abs_alpha_minus - 1.0).abs() < 1e-12);
    assert_eq!(phi.alpha_table.len(), 92);
    let xi = build_bicoherent(&BicoherentSpec {
        z1: C64::new(0.0, 0.0),
        z2: C64::new(1.0, -1.0),
        family: BicoherentFamily::Theta,
        side: Side::Bra,
        branch: Branch::Minus,
        params: PotentialParams::with_v(9.5).unwrap(),
        cutoff: FockCutoff::new(1, 128).unwrap(),
    })
    .unwrap();
    assert!(gain_loss(&xi, None, 0).ratio < 0.1);
}

#[test]
fn gain_ratio_monotone_in_v() {
    let mut prev = 0.0;
    for v in [0.5, 3.01, 6.01, 9.5] {
        let r = gain_loss(&standard(v, Side::Ket, Branch::Plus), None, 0).ratio;
        assert!(r >= prev, "V={v}: {r} < {prev}");
        prev = r;
    }
}

#[test]
fn exports_round_trip_and_are_stable() {
    let st = phi_a(C64::new(0.0, 0.0), C64::new(1.0, -1.0), 32);
    let g: GridSpec = "-5:5:41,-5:5:21".parse().unwrap();
    let meta = serde_json::json!({ "family": "coherent-a", "z2": [1.0, -1.0] });
    let f = density(&st, &g, meta.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    export(&f, Format::Csv, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text, to_csv(&f));
    for (i, line) in text.lines().skip(1).enumerate() {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (t, u, l) = f.at(i % 41, i / 41);
        assert_eq!(v[2..], [t, u, l]);
        assert_eq!(v[0], g.xs()[i % 41]);
        assert_eq!(v[1], g.ys()[i / 41]);
    }
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
    assert_eq!(side["state"], meta);
    let j = dir.path().join("f.json");
    export(&f, Format::Json, &j).unwrap();
    let bytes = std::fs::read(&j).unwrap();
    let again = density(&st, &g, meta).unwrap();
    assert_eq!(bytes, to_json(&again).unwrap().into_bytes());
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    let total: Vec<Vec<f64>> = serde_json::from_value(v["total"].clone()).unwrap();
    assert_eq!(total.concat(), f.total);
    assert!(export(&f, Format::Json, &dir.path().join("missing/f.json")).is_err());
}

#[test]
fn small_grid_sets_mass_warning() {
    let st = phi_a(C64::new(0.0, 0.0), C64::new(2.0, 0.0), 40);
    let f = density(&st, &"-1:1:21,-1:1:21".parse().unwrap(), serde_json::Value::Null).unwrap();
    assert!(f.meta.mass_warning);
}
