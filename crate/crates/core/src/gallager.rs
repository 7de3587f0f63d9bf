//! Gallager-type functionals φ and ψ over `U → V → Z`, and the input-optimised φ_max.
//!
//! φ accepts `ρ ∈ [−1, 1)`; negative arguments are what the error exponents use. ψ
//! accepts `ρ ∈ [0, 1]`.

use nalgebra::{DMatrix, DVector};

use crate::numeric::{log_sum_exp, KahanSum};
use crate::probability::{Channel, Distribution};
use crate::renyi::psi_channel;
use crate::{Error, Result};

fn check_chain(p_z_given_v: &Channel, p_v_given_u: &Channel, p_u: &Distribution) -> Result<()> {
    if p_v_given_u.inputs() != p_u.len() {
        return Err(Error::dims("P_{V|U} rows must match |U|"));
    }
    if p_z_given_v.inputs() != p_v_given_u.outputs() {
        return Err(Error::dims("P_{Z|V} rows must match |V|"));
    }
    Ok(())
}

/// `ln Σ_z (Σ_v p(v) W(z|v)^{1/(1−ρ)})^{1−ρ}`, evaluated in the log domain.
fn phi_row(rho: f64, w: &Channel, p: &[f64]) -> f64 {
    let s = 1.0 / (1.0 - rho);
    let mut per_z = Vec::with_capacity(w.outputs());
    let mut terms = Vec::with_capacity(p.len());
    for z in 0..w.outputs() {
        terms.clear();
        for (v, &pv) in p.iter().enumerate() {
            let wz = w.get(v, z);
            if pv > 0.0 && wz > 0.0 {
                terms.push(pv.ln() + s * wz.ln());
            }
        }
        let lse = log_sum_exp(&terms);
        if lse > f64::NEG_INFINITY {
            per_z.push(lse / s);
        }
    }
    log_sum_exp(&per_z)
}

/// Two-level φ(ρ, P_{Z|V}, P_{V|U}, P_U).
pub fn phi(rho: f64, p_z_given_v: &Channel, p_v_given_u: &Channel, p_u: &Distribution) -> Result<f64> {
    if !(-1.0..1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    check_chain(p_z_given_v, p_v_given_u, p_u)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let terms: Vec<f64> = p_u
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &pu)| pu > 0.0)
        .map(|(u, &pu)| pu.ln() + phi_row(rho, p_z_given_v, p_v_given_u.row(u)))
        .collect();
    Ok(log_sum_exp(&terms))
}

/// Single-level φ(ρ, W, p).
pub fn phi_single(rho: f64, w: &Channel, p: &Distribution) -> Result<f64> {
    phi(rho, w, &Channel::constant(1, p), &Distribution::uniform(1))
}

/// Two-level ψ(ρ, P_{Z|V}, P_{V|U}, P_U) with `P_{Z|U}` induced by the chain.
///
/// This is `ln Σ_u P_U(u) e^{ψ(ρ | P_{Z|V}, P_{V|U=u})}`.
pub fn psi(rho: f64, p_z_given_v: &Channel, p_v_given_u: &Channel, p_u: &Distribution) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    check_chain(p_z_given_v, p_v_given_u, p_u)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let mut terms = Vec::with_capacity(p_u.len());
    for (u, &pu) in p_u.probs().iter().enumerate() {
        if pu > 0.0 {
            let row = p_v_given_u.row_distribution(u);
            terms.push(pu.ln() + psi_channel(p_z_given_v, &row, rho)?);
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Single-level ψ(ρ, W, p).
pub fn psi_single(rho: f64, w: &Channel, p: &Distribution) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    psi_channel(w, p, rho)
}

/// Maximum of single-level φ over input laws.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMax {
    pub value: f64,
    pub argmax: Distribution,
    pub iterations: usize,
}

const MAX_ITER: usize = 1_000;
const TOL: f64 = 1e-12;
const LOOSE_TOL: f64 = 1e-6;

/// `f(P) = Σ_z A_z^{1−ρ}` with `A_z = Σ_v P_v W^{s}`, plus its gradient.
fn objective(rho: f64, w: &Channel, ws: &[f64], p: &[f64]) -> (f64, Vec<f64>) {
    let nz = w.outputs();
    let mut a = vec![0.0; nz];
    for (v, &pv) in p.iter().enumerate() {
        if pv > 0.0 {
            for z in 0..nz {
                a[z] += pv * ws[v * nz + z];
            }
        }
    }
    let f: KahanSum = a
        .iter()
        .map(|&az| if az > 0.0 { az.powf(1.0 - rho) } else { 0.0 })
        .collect();
    let coef: Vec<f64> = a
        .iter()
        .map(|&az| if az > 0.0 { (1.0 - rho) * az.powf(-rho) } else { 0.0 })
        .collect();
    let grad = (0..p.len())
        .map(|v| (0..nz).map(|z| coef[z] * ws[v * nz + z]).sum())
        .collect();
    (f.value(), grad)
}

/// `f`'s Hessian restricted to `support`: `−ρ(1−ρ) Σ_z A_z^{−ρ−1} W_v^s W_w^s`.
fn hessian(rho: f64, nz: usize, ws: &[f64], p: &[f64], support: &[usize]) -> Vec<Vec<f64>> {
    let mut a = vec![0.0; nz];
    for (v, &pv) in p.iter().enumerate() {
        for z in 0..nz {
            a[z] += pv * ws[v * nz + z];
        }
    }
    let c: Vec<f64> = a
        .iter()
        .map(|&az| {
            if az > 0.0 {
                -rho * (1.0 - rho) * az.powf(-rho - 1.0)
            } else {
                0.0
            }
        })
        .collect();
    support
        .iter()
        .map(|&v| {
            support
                .iter()
                .map(|&u| (0..nz).map(|z| c[z] * ws[v * nz + z] * ws[u * nz + z]).sum())
                .collect()
        })
        .collect()
}

/// Newton direction on the face spanned by `support`, summing to zero.
fn newton_direction(hess: Vec<Vec<f64>>, g: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let scale = (0..k).map(|i| hess[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    // m = −H + μ I is positive definite even on flat directions
    let m = DMatrix::from_fn(k, k, |i, j| -hess[i][j] + if i == j { 1e-12 * scale } else { 0.0 });
    let chol = m.cholesky()?;
    let x = chol.solve(&DVector::from_iterator(k, support.iter().map(|&v| g[v])));
    let y = chol.solve(&DVector::from_element(k, 1.0));
    let nu = x.sum() / y.sum();
    Some((x - y * nu).iter().copied().collect())
}

/// Largest `t ≤ 1` keeping `p + t d` on the simplex, with the coordinate that blocks it.
fn max_step(p: &[f64], d: &[f64]) -> (f64, Option<usize>) {
    let mut t = 1.0;
    let mut block = None;
    for (v, (&pv, &dv)) in p.iter().zip(d).enumerate() {
        if dv < 0.0 && pv + t * dv < 0.0 {
            t = pv / -dv;
            block = Some(v);
        }
    }
    (t, block)
}

/// Backtracking search for an improving step along `d`.
fn line_search(rho: f64, w: &Channel, ws: &[f64], p: &[f64], f: f64, d: &[f64]) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let (mut t, block) = max_step(p, d);
    let mut first = true;
    while t > 1e-18 {
        let mut c: Vec<f64> = p.iter().zip(d).map(|(a, b)| (a + t * b).max(0.0)).collect();
        if first {
            if let Some(v) = block {
                c[v] = 0.0;
            }
        }
        let z: f64 = c.iter().sum();
        c.iter_mut().for_each(|x| *x /= z);
        let (nf, ng) = objective(rho, w, ws, &c);
        if nf > f {
            return Some((c, nf, ng));
        }
        t *= 0.5;
        first = false;
    }
    None
}

/// max over `P_V` of `φ(ρ, W, P_V)`.
///
/// The objective `e^{φ}` is concave in `P_V`. Active-set Newton: each step solves the
/// quadratic model on the face of the current support; when that fails to improve, a
/// Frank-Wolfe step toward the best vertex is taken instead, which also brings new inputs
/// into the support. Iteration stops once the duality gap certifies the optimum.
pub fn phi_max(rho: f64, w: &Channel) -> Result<PhiMax> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let s = 1.0 / (1.0 - rho);
    let ws: Vec<f64> = w.rows().flatten().map(|&x| x.powf(s)).collect();
    let nv = w.inputs();
    let nz = w.outputs();
    let mut p = vec![1.0 / nv as f64; nv];
    let (mut f, mut g) = objective(rho, w, &ws, &p);
    for it in 1..=MAX_ITER {
        let gap = duality_gap(&p, &g);
        if gap < TOL * f {
            return Ok(PhiMax {
                value: f.ln(),
                argmax: Distribution::from_weights(p)?,
                iterations: it,
            });
        }
        let support: Vec<usize> = (0..nv).filter(|&v| p[v] > 0.0).collect();
        let newton = newton_direction(hessian(rho, nz, &ws, &p, &support), &g, &support).and_then(|ds| {
            let mut d = vec![0.0; nv];
            for (&v, &x) in support.iter().zip(&ds) {
                d[v] = x;
            }
            line_search(rho, w, &ws, &p, f, &d)
        });
        let step = newton.or_else(|| {
            let best = (0..nv).max_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap_or(0);
            let d: Vec<f64> = (0..nv).map(|v| f64::from(u8::from(v == best)) - p[v]).collect();
            line_search(rho, w, &ws, &p, f, &d)
        });
        match step {
            Some((c, nf, ng)) => {
                p = c;
                f = nf;
                g = ng;
            }
            None => break,
        }
    }
    // No representable improvement is left. The gap is a first-order bound; the actual
    // remaining improvement is of order gap²/curvature, well below rounding.
    if duality_gap(&p, &g) < LOOSE_TOL * f {
        return Ok(PhiMax {
            value: f.ln(),
            argmax: Distribution::from_weights(p)?,
            iterations: MAX_ITER,
        });
    }
    Err(Error::ConvergenceFailure { iterations: MAX_ITER })
}

/// `max_v g_v − ⟨p, g⟩`, an upper bound on `f* − f(p)` for concave `f` on the simplex.
fn duality_gap(p: &[f64], g: &[f64]) -> f64 {
    let inner: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - inner
}
