//! Rényi and Shannon entropies, the ψ divergence functionals, and finite-n entropy
//! bounds for laws with little low-surprisal mass.

use serde::{Deserialize, Serialize};

use crate::numeric::{log_sum_exp, neg_xlogx, KahanSum};
use crate::probability::{kl_divergence, push_forward, Channel, Distribution};
use crate::{Error, Result};

/// A joint law over a product alphabet, with coordinate roles for `A` and `B`.
///
/// Coordinates are indexed little-endian: coordinate 0 varies fastest. Coordinates that
/// are in neither role are marginalised out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource")]
pub struct JointSource {
    shape: Vec<usize>,
    probs: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_coords: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    b_coords: Vec<usize>,
}

#[derive(Deserialize)]
struct RawSource {
    shape: Vec<usize>,
    probs: Distribution,
    #[serde(default)]
    a_coords: Option<Vec<usize>>,
    #[serde(default)]
    b_coords: Vec<usize>,
}

impl TryFrom<RawSource> for JointSource {
    type Error = Error;
    fn try_from(r: RawSource) -> Result<Self> {
        let s = JointSource::new(r.shape, r.probs)?;
        match r.a_coords {
            Some(a) => s.with_roles(a, r.b_coords),
            None if r.b_coords.is_empty() => Ok(s),
            None => Err(Error::dims("b_coords given without a_coords")),
        }
    }
}

impl JointSource {
    /// Joint law with `A` = every coordinate and `B` empty.
    pub fn new(shape: Vec<usize>, probs: Distribution) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dims("shape entries must be positive"));
        }
        let total: usize = shape.iter().product();
        if total != probs.len() {
            return Err(Error::dims(format!(
                "shape product {total} differs from {} probabilities",
                probs.len()
            )));
        }
        Ok(Self {
            shape,
            probs,
            a_coords: None,
            b_coords: Vec::new(),
        })
    }

    /// Single-variable source.
    pub fn single(p: Distribution) -> Self {
        let n = p.len();
        Self::new(vec![n], p).expect("consistent shape")
    }

    /// Product of independent marginals.
    pub fn independent(marginals: &[Distribution]) -> Result<Self> {
        let (first, rest) = marginals.split_first().ok_or_else(|| Error::dims("no marginals"))?;
        let joint = rest.iter().fold(first.clone(), |acc, m| acc.product(m));
        Self::new(marginals.iter().map(Distribution::len).collect(), joint)
    }

    /// Uniform law over the product alphabet.
    pub fn uniform(shape: Vec<usize>) -> Result<Self> {
        let total: usize = shape.iter().product();
        Self::new(shape, Distribution::uniform(total.max(1)))
    }

    /// Assign roles. `a` and `b` must be disjoint coordinate lists.
    pub fn with_roles(mut self, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        for &c in a.iter().chain(&b) {
            if c >= self.shape.len() {
                return Err(Error::dims(format!("coordinate {c} out of range")));
            }
        }
        if a.iter().any(|c| b.contains(c)) {
            return Err(Error::dims("A and B roles overlap"));
        }
        self.a_coords = Some(a);
        self.b_coords = b;
        Ok(self)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &Distribution {
        &self.probs
    }

    pub fn a_coords(&self) -> Vec<usize> {
        self.a_coords.clone().unwrap_or_else(|| (0..self.shape.len()).collect())
    }

    pub fn b_coords(&self) -> &[usize] {
        &self.b_coords
    }

    /// Split a flat index into per-coordinate digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&s| {
                let d = index % s;
                index /= s;
                d
            })
            .collect()
    }

    /// Flat index of a digit tuple.
    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.shape)
            .rev()
            .fold(0, |acc, (&d, &s)| acc * s + d)
    }

    fn sub_index(&self, digits: &[usize], coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.shape[c] + digits[c])
    }

    fn sub_size(&self, coords: &[usize]) -> usize {
        coords.iter().map(|&c| self.shape[c]).product()
    }

    /// Marginal law over `coords`, indexed little-endian in the listed order.
    pub fn marginal(&self, coords: &[usize]) -> Distribution {
        let mut out = vec![0.0; self.sub_size(coords)];
        for (i, &p) in self.probs.probs().iter().enumerate() {
            if p > 0.0 {
                out[self.sub_index(&self.digits(i), coords)] += p;
            }
        }
        Distribution::from_normalized(out)
    }

    /// The pair law `P(a, b)` as a flat table `a + |A|·b`, with `(|A|, |B|)`.
    pub fn pair_table(&self) -> (Vec<f64>, usize, usize) {
        let a = self.a_coords();
        let na = self.sub_size(&a);
        let nb = self.sub_size(&self.b_coords);
        let mut out = vec![0.0; na * nb];
        for (i, &p) in self.probs.probs().iter().enumerate() {
            if p > 0.0 {
                let d = self.digits(i);
                out[self.sub_index(&d, &a) + na * self.sub_index(&d, &self.b_coords)] += p;
            }
        }
        (out, na, nb)
    }

    /// `P_{A,B}{ -ln P_{A|B}(a|b) ≤ ln m − eps1 }`: the mass of low-surprisal pairs.
    pub fn low_surprisal_mass(&self, eps1: f64, m: usize) -> f64 {
        let (pab, na, nb) = self.pair_table();
        let threshold = (m as f64).ln() - eps1;
        let mut mass = KahanSum::new();
        for b in 0..nb {
            let col = &pab[na * b..na * (b + 1)];
            let pb: f64 = col.iter().sum();
            for &p in col {
                if p > 0.0 && -(p / pb).ln() <= threshold {
                    mass.add(p);
                }
            }
        }
        mass.value()
    }
}

/// `H_{1+ρ}(A|B)` of a pair table `a + na·b`; Shannon at `ρ = 0`.
pub fn renyi_pair(pab: &[f64], na: usize, rho: f64) -> Result<f64> {
    if rho < 0.0 || rho.is_nan() {
        return Err(Error::NegativeRho(rho));
    }
    let nb = pab.len() / na;
    let pb: Vec<f64> = (0..nb).map(|b| pab[na * b..na * (b + 1)].iter().sum()).collect();
    if rho == 0.0 {
        let joint: KahanSum = pab.iter().map(|&p| neg_xlogx(p)).collect();
        let marg: KahanSum = pb.iter().map(|&p| neg_xlogx(p)).collect();
        return Ok((joint.value() - marg.value()).max(0.0));
    }
    let mut terms = Vec::with_capacity(pab.len());
    for b in 0..nb {
        if pb[b] <= 0.0 {
            continue;
        }
        let lb = pb[b].ln();
        for &p in &pab[na * b..na * (b + 1)] {
            if p > 0.0 {
                terms.push((1.0 + rho) * p.ln() - rho * lb);
            }
        }
    }
    Ok((-log_sum_exp(&terms) / rho).max(0.0))
}

/// `H_{1+ρ}(A)` (or `H_{1+ρ}(A|B)` when `conditional`) under the source's roles.
///
/// With `conditional = false` the `B` role is ignored.
pub fn renyi_entropy(src: &JointSource, rho: f64, conditional: bool) -> Result<f64> {
    if conditional {
        let (pab, na, _) = src.pair_table();
        renyi_pair(&pab, na, rho)
    } else {
        let pa = src.marginal(&src.a_coords());
        renyi_pair(pa.probs(), pa.len(), rho)
    }
}

/// `H_{1+ρ}` of a single distribution.
pub fn renyi_of(p: &Distribution, rho: f64) -> Result<f64> {
    renyi_pair(p.probs(), p.len(), rho)
}

/// Shannon conditional mutual information `I(A;B|C)` of three coordinate groups.
pub fn conditional_mutual_information(src: &JointSource, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
    let h = |coords: Vec<usize>| src.marginal(&coords).entropy();
    let cat = |x: &[usize], y: &[usize]| x.iter().chain(y).copied().collect::<Vec<_>>();
    let v = h(cat(a, c)) + h(cat(b, c)) - h(cat(&cat(a, b), c)) - h(c.to_vec());
    v.max(0.0)
}

/// `ψ(ρ|Q‖P) = ln Σ Q^{1+ρ} P^{−ρ}`; `+∞` on a support mismatch when `ρ > 0`.
pub fn divergence(q: &Distribution, p: &Distribution, rho: f64) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::dims("divergence between different alphabets"));
    }
    psi_slices(q.probs(), p.probs(), rho)
}

pub(crate) fn psi_slices(q: &[f64], p: &[f64], rho: f64) -> Result<f64> {
    if rho < 0.0 || rho.is_nan() {
        return Err(Error::NegativeRho(rho));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let mut terms = Vec::with_capacity(q.len());
    for (&a, &b) in q.iter().zip(p) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push((1.0 + rho) * a.ln() - rho * b.ln());
    }
    Ok(log_sum_exp(&terms))
}

/// Kullback–Leibler divergence (the `kl` mode of [`divergence`]).
pub fn kl(q: &Distribution, p: &Distribution) -> Result<f64> {
    kl_divergence(q, p)
}

/// `ψ(ρ|W,p) = ln Σ_x p(x) e^{ψ(ρ|W_x‖W_p)}`.
pub fn psi_channel(w: &Channel, p: &Distribution, rho: f64) -> Result<f64> {
    let wp = push_forward(p, w)?;
    let mut terms = Vec::with_capacity(p.len());
    for (x, &px) in p.probs().iter().enumerate() {
        if px > 0.0 {
            terms.push(px.ln() + psi_slices(w.row(x), wp.probs(), rho)?);
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Entropy bounds over joint laws whose low-surprisal mass is at most `eps2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassEntropyBounds {
    /// `ln m − eps2 (e^{−eps1} − 1 + eps1)`
    pub upper_h: f64,
    /// `−(1/ρ) ln((1 − eps2) e^{ρ eps1} / m^ρ + eps2)`
    pub lower_renyi: f64,
}

/// Evaluate both bounds. `eps1 = 0` and `eps2 = 0` are accepted as degenerate limits.
pub fn class_entropy_bounds(eps1: f64, eps2: f64, m: usize, rho: f64) -> Result<ClassEntropyBounds> {
    if !(eps1 >= 0.0 && eps1.is_finite()) {
        return Err(Error::RangeViolation(format!("eps1 = {eps1}")));
    }
    if !(0.0..=1.0).contains(&eps2) {
        return Err(Error::RangeViolation(format!("eps2 = {eps2}")));
    }
    if m == 0 {
        return Err(Error::RangeViolation("m must be positive".into()));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RangeViolation(format!("rho = {rho}")));
    }
    let ln_m = (m as f64).ln();
    let upper_h = ln_m - eps2 * ((-eps1).exp() - 1.0 + eps1);
    let inner = (1.0 - eps2) * (rho * eps1 - rho * ln_m).exp() + eps2;
    Ok(ClassEntropyBounds {
        upper_h,
        lower_renyi: -inner.ln() / rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_is_log_m() {
        let s = JointSource::single(Distribution::uniform(8));
        for rho in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(renyi_entropy(&s, rho, false).unwrap(), 8f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn bernoulli_quarter() {
        let s = JointSource::single(d(&[0.25, 0.75]));
        let direct = -2.0 * (0.25f64.powf(1.5) + 0.75f64.powf(1.5)).ln();
        let h = renyi_entropy(&s, 0.5, false).unwrap();
        assert_abs_diff_eq!(h, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.511_026, epsilon = 1e-6);
        assert!(matches!(renyi_entropy(&s, -0.1, false), Err(Error::NegativeRho(_))));
    }

    #[test]
    fn independence_kills_conditioning() {
        let s = JointSource::independent(&[d(&[0.2, 0.8]), d(&[0.6, 0.3, 0.1])])
            .unwrap()
            .with_roles(vec![0], vec![1])
            .unwrap();
        for rho in [0.0, 0.5, 1.0] {
            let c = renyi_entropy(&s, rho, true).unwrap();
            let u = renyi_entropy(&s, rho, false).unwrap();
            assert_abs_diff_eq!(c, u, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_examples() {
        let q = d(&[0.9, 0.1]);
        let p = Distribution::uniform(2);
        assert_abs_diff_eq!(divergence(&q, &q, 0.7).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(divergence(&q, &p, 1.0).unwrap(), 1.64f64.ln(), epsilon = 1e-12);
        assert_eq!(
            divergence(&Distribution::point(2, 0), &Distribution::point(2, 1), 0.5).unwrap(),
            f64::INFINITY
        );
        let w = Channel::bsc(0.1);
        assert_abs_diff_eq!(psi_channel(&w, &p, 1.0).unwrap(), 1.64f64.ln(), epsilon = 1e-12);
        assert_eq!(psi_channel(&w, &p, 0.0).unwrap(), 0.0);
        let flat = Channel::constant(3, &q);
        assert_abs_diff_eq!(
            psi_channel(&flat, &Distribution::uniform(3), 0.8).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn class_bound_values() {
        let b = class_entropy_bounds(0.5, 0.1, 4, 1.0).unwrap();
        assert_abs_diff_eq!(b.upper_h, 1.375_641, epsilon = 1e-6);
        let direct = -(0.9 * 0.5f64.exp() / 4.0 + 0.1).ln();
        assert_abs_diff_eq!(b.lower_renyi, direct, epsilon = 1e-12);
        let b = class_entropy_bounds(0.0, 0.0, 5, 0.5).unwrap();
        assert_abs_diff_eq!(b.upper_h, 5f64.ln(), epsilon = 1e-15);
        assert!(class_entropy_bounds(0.5, 1.5, 4, 1.0).is_err());
        assert!(class_entropy_bounds(0.5, 0.1, 4, 0.0).is_err());
    }

    #[test]
    fn low_surprisal_mass_of_uniform_is_zero() {
        let s = JointSource::uniform(vec![4, 3])
            .unwrap()
            .with_roles(vec![0], vec![1])
            .unwrap();
        assert_eq!(s.low_surprisal_mass(0.5, 4), 0.0);
        let s = JointSource::single(d(&[0.7, 0.1, 0.1, 0.1]));
        assert_abs_diff_eq!(s.low_surprisal_mass(0.5, 4), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn index_round_trip() {
        let s = JointSource::uniform(vec![2, 3, 4]).unwrap();
        for i in 0..24 {
            assert_eq!(s.flat_index(&s.digits(i)), i);
        }
        assert_eq!(s.digits(1), vec![1, 0, 0]);
    }
}
