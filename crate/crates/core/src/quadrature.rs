use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Laguerre rule for `int_0^inf f(t) e^{-t} dt`.
#[derive(Clone, Debug)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    /// Natural logarithms of the weights; small weights underflow otherwise.
    pub log_weights: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 128;

/// `(L_n(t), L_{n-1}(t))` scaled by `exp(-shift)`.
fn laguerre_pair(n: usize, t: f64) -> (f64, f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 1.0 - t;
    let mut shift = 0.0;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 - t) * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        if p1.abs() > 1e100 {
            p0 *= 1e-100;
            p1 *= 1e-100;
            shift += 100.0 * std::f64::consts::LN_10;
        }
    }
    (p1, p0, shift)
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("Gauss-Laguerre needs at least 2 nodes".into()));
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = 2.0 * i as f64 + 1.0;
            if i + 1 < n {
                jac[(i, i + 1)] = (i + 1) as f64;
                jac[(i + 1, i)] = (i + 1) as f64;
            }
        }
        let mut guess: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        guess.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        for mut t in guess {
            for _ in 0..100 {
                let (ln, lm, _) = laguerre_pair(n, t);
                let deriv = nf * (ln - lm) / t;
                let step = ln / deriv;
                t -= step;
                if step.abs() <= 1e-15 * t.abs() {
                    break;
                }
            }
            let (_, lm, shift) = laguerre_pair(n, t);
            // L_{n+1}(t) = -n L_{n-1}(t) / (n + 1) at a root of L_n.
            let lnext_log = (nf * lm.abs() / (nf + 1.0)).ln() + shift;
            nodes.push(t);
            log_weights.push(t.ln() - 2.0 * (nf + 1.0).ln() - 2.0 * lnext_log);
        }
        Ok(GaussLaguerre { nodes, log_weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_0^inf f(t) e^{-t} dt`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| lw.exp() * f(t))
            .sum()
    }

    /// `int_0^inf t^n e^{-t} dt / n!`, exactly 1 for an exact rule.
    pub fn normalized_moment(&self, n: usize) -> f64 {
        let lf = ln_factorial(n);
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| (lw + n as f64 * t.ln() - lf).exp())
            .sum()
    }
}

impl Default for GaussLaguerre {
    fn default() -> Self {
        GaussLaguerre::new(DEFAULT_NODES).expect("default rule")
    }
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
