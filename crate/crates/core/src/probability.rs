//! Finite distributions, stochastic kernels and Shannon information quantities.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::numeric::{checked_count, neg_xlogx, xlog_ratio, KahanSum};
use crate::{Error, Result};

/// Input rows may deviate from stochastic by at most this much before rejection.
pub const INPUT_TOLERANCE: f64 = 1e-9;

fn normalize_row(row: usize, raw: &[f64]) -> Result<Vec<f64>> {
    for (col, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeEntry { row, col, value });
        }
    }
    let sum: f64 = raw.iter().sum();
    if raw.is_empty() || (sum - 1.0).abs() > INPUT_TOLERANCE {
        return Err(Error::RowSumOutOfTolerance { row, sum });
    }
    if sum == 1.0 {
        Ok(raw.to_vec())
    } else {
        Ok(raw.iter().map(|&p| p / sum).collect())
    }
}

/// A probability vector over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(raw: Vec<f64>) -> Result<Self> {
        Distribution::new(raw)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

impl Distribution {
    /// Validate raw weights; rows within 1e-9 of stochastic are renormalised.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        normalize_row(0, &raw).map(|probs| Self { probs })
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { probs }
    }

    /// Normalise arbitrary nonnegative weights (used for sampled or computed laws).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::RowSumOutOfTolerance { row: 0, sum });
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "empty alphabet");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs.iter().map(|&p| neg_xlogx(p)).sum()
    }

    /// Product law with `self` on the least-significant coordinate.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &q in &other.probs {
            for &p in &self.probs {
                probs.push(p * q);
            }
        }
        Distribution { probs }
    }

    /// i.i.d. law over `n`-tuples, little-endian mixed radix.
    pub fn tensor_power(&self, n: usize, cap: u64) -> Result<Distribution> {
        if n == 0 {
            return Err(Error::RangeViolation("tensor power needs n >= 1".into()));
        }
        checked_count(self.len() as u64, n as u32, cap)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.product(self);
        }
        Ok(acc)
    }

    /// Draw one index by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left a sliver above the cumulative sum: take the last atom with mass
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Total-variation distance.
    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Row-stochastic kernel `W(out | in)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(rows)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.rows().map(|r| r.to_vec()).collect()
    }
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::dims("channel has no rows"));
        }
        let outputs = rows[0].len();
        let mut data = Vec::with_capacity(inputs * outputs);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::dims(format!(
                    "row {i} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            data.extend(normalize_row(i, row)?);
        }
        Ok(Self { inputs, outputs, data })
    }

    pub(crate) fn from_flat(inputs: usize, outputs: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), inputs * outputs);
        Self { inputs, outputs, data }
    }

    pub fn from_rows(rows: &[Distribution]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.probs().to_vec()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_flat(n, n, data)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Self {
        Self::from_flat(2, 2, vec![1.0 - p, p, p, 1.0 - p])
    }

    /// Every input mapped to the same output law.
    pub fn constant(inputs: usize, row: &Distribution) -> Self {
        let mut data = Vec::with_capacity(inputs * row.len());
        for _ in 0..inputs {
            data.extend_from_slice(row.probs());
        }
        Self::from_flat(inputs, row.len(), data)
    }

    /// Deterministic kernel `x -> f(x)`.
    pub fn deterministic(inputs: usize, outputs: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut data = vec![0.0; inputs * outputs];
        for x in 0..inputs {
            data[x * outputs + f(x)] = 1.0;
        }
        Self::from_flat(inputs, outputs, data)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.outputs)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.outputs + y]
    }

    pub fn row_distribution(&self, x: usize) -> Distribution {
        Distribution::from_normalized(self.row(x).to_vec())
    }

    /// Kernel of "apply `self`, then `next`": `(next∘self)(c|a) = Σ_b next(c|b) self(b|a)`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        compose(self, next)
    }

    /// Product kernel with `self` on the least-significant coordinate of both sides.
    pub fn product(&self, other: &Channel) -> Channel {
        let inputs = self.inputs * other.inputs;
        let outputs = self.outputs * other.outputs;
        let mut data = vec![0.0; inputs * outputs];
        for x2 in 0..other.inputs {
            for x1 in 0..self.inputs {
                let x = x1 + self.inputs * x2;
                for y2 in 0..other.outputs {
                    let w2 = other.get(x2, y2);
                    for y1 in 0..self.outputs {
                        data[x * outputs + y1 + self.outputs * y2] = self.get(x1, y1) * w2;
                    }
                }
            }
        }
        Channel::from_flat(inputs, outputs, data)
    }

    /// Memoryless extension over `n`-tuples.
    pub fn tensor_power(&self, n: usize, cap: u64) -> Result<Channel> {
        if n == 0 {
            return Err(Error::RangeViolation("tensor power needs n >= 1".into()));
        }
        checked_count((self.inputs * self.outputs) as u64, n as u32, cap)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.product(self);
        }
        Ok(acc)
    }

    /// Likelihood of an output string given an input string under the memoryless extension.
    pub fn string_likelihood(&self, input: &[u32], output: &[u32]) -> f64 {
        input
            .iter()
            .zip(output)
            .map(|(&x, &y)| self.get(x as usize, y as usize))
            .product()
    }
}

/// Channel concatenation: rows `Σ_b second(c|b) first(b|a)`.
pub fn compose(first: &Channel, second: &Channel) -> Result<Channel> {
    if first.outputs != second.inputs {
        return Err(Error::dims(format!(
            "cannot feed {} outputs into a channel with {} inputs",
            first.outputs, second.inputs
        )));
    }
    let mut data = vec![0.0; first.inputs * second.outputs];
    for a in 0..first.inputs {
        let out = &mut data[a * second.outputs..(a + 1) * second.outputs];
        for (b, &wb) in first.row(a).iter().enumerate() {
            if wb == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += wb * second.get(b, c);
            }
        }
    }
    Ok(Channel::from_flat(first.inputs, second.outputs, data))
}

/// Average output law `W_p(y) = Σ_x p(x) W(y|x)`.
pub fn push_forward(p: &Distribution, w: &Channel) -> Result<Distribution> {
    if p.len() != w.inputs {
        return Err(Error::dims(format!(
            "distribution over {} symbols, channel with {} inputs",
            p.len(),
            w.inputs
        )));
    }
    let mut out = vec![0.0; w.outputs];
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (o, &wy) in out.iter_mut().zip(w.row(x)) {
            *o += px * wy;
        }
    }
    Ok(Distribution::from_normalized(out))
}

/// Kullback–Leibler divergence `D(q‖p)` in nats.
pub fn kl_divergence(q: &Distribution, p: &Distribution) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::dims("divergence between different alphabets"));
    }
    let d: KahanSum = q
        .probs()
        .iter()
        .zip(p.probs())
        .map(|(&a, &b)| xlog_ratio(a, b))
        .collect();
    Ok(d.value().max(0.0))
}

/// `I(X;Y)` for input law `p` through `w`.
pub fn mutual_information(p: &Distribution, w: &Channel) -> Result<f64> {
    let out = push_forward(p, w)?;
    let mut acc = KahanSum::new();
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let row = w.row_distribution(x);
        acc.add(px * kl_divergence(&row, &out)?);
    }
    Ok(acc.value().max(0.0))
}

/// Selects one of the four mutual informations of a [`ChainSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfoKind {
    /// `I(U;Y)`
    UY,
    /// `I(U;Z)`
    UZ,
    /// `I(V;Y|U)`
    VYGivenU,
    /// `I(V;Z|U)`
    VZGivenU,
}

/// Markov chain `U → V → X → (Y, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain", into = "RawChain")]
pub struct ChainSpec {
    p_u: Distribution,
    p_v_given_u: Channel,
    xi: Channel,
    w_y: Channel,
    w_z: Channel,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    p_u: Distribution,
    p_v_given_u: Channel,
    xi: Channel,
    w_y: Channel,
    w_z: Channel,
}

impl TryFrom<RawChain> for ChainSpec {
    type Error = Error;
    fn try_from(r: RawChain) -> Result<Self> {
        ChainSpec::new(r.p_u, r.p_v_given_u, r.xi, r.w_y, r.w_z)
    }
}

impl From<ChainSpec> for RawChain {
    fn from(c: ChainSpec) -> Self {
        RawChain {
            p_u: c.p_u,
            p_v_given_u: c.p_v_given_u,
            xi: c.xi,
            w_y: c.w_y,
            w_z: c.w_z,
        }
    }
}

impl ChainSpec {
    pub fn new(p_u: Distribution, p_v_given_u: Channel, xi: Channel, w_y: Channel, w_z: Channel) -> Result<Self> {
        if p_v_given_u.inputs() != p_u.len() {
            return Err(Error::dims("p_v_given_u rows must match |U|"));
        }
        if xi.inputs() != p_v_given_u.outputs() {
            return Err(Error::dims("xi rows must match |V|"));
        }
        if w_y.inputs() != xi.outputs() || w_z.inputs() != xi.outputs() {
            return Err(Error::dims("w_y and w_z rows must match |X|"));
        }
        Ok(Self {
            p_u,
            p_v_given_u,
            xi,
            w_y,
            w_z,
        })
    }

    /// Wiretap chain with trivial `U`, input law `p_v` and `X = V`.
    pub fn wiretap(p_v: Distribution, w_y: Channel, w_z: Channel) -> Result<Self> {
        let v = p_v.len();
        Self::new(
            Distribution::uniform(1),
            Channel::constant(1, &p_v),
            Channel::identity(v),
            w_y,
            w_z,
        )
    }

    /// Parse the JSON file format; errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::spec("<root>", e))?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        fn field<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T> {
            let raw = v.get(key).ok_or_else(|| Error::spec(key, "missing"))?;
            serde_json::from_value(raw.clone()).map_err(|e| Error::spec(key, e))
        }
        if !value.is_object() {
            return Err(Error::spec("<root>", "expected a JSON object"));
        }
        let p_u: Distribution = field(value, "p_u")?;
        let p_v_given_u: Channel = field(value, "p_v_given_u")?;
        let xi: Channel = field(value, "xi")?;
        let w_y: Channel = field(value, "w_y")?;
        let w_z: Channel = field(value, "w_z")?;
        if p_v_given_u.inputs() != p_u.len() {
            return Err(Error::spec("p_v_given_u", "row count must equal len(p_u)"));
        }
        if xi.inputs() != p_v_given_u.outputs() {
            return Err(Error::spec("xi", "row count must equal |V|"));
        }
        if w_y.inputs() != xi.outputs() {
            return Err(Error::spec("w_y", "row count must equal |X|"));
        }
        if w_z.inputs() != xi.outputs() {
            return Err(Error::spec("w_z", "row count must equal |X|"));
        }
        Self::new(p_u, p_v_given_u, xi, w_y, w_z)
    }

    pub fn p_u(&self) -> &Distribution {
        &self.p_u
    }
    pub fn p_v_given_u(&self) -> &Channel {
        &self.p_v_given_u
    }
    pub fn xi(&self) -> &Channel {
        &self.xi
    }
    pub fn w_y(&self) -> &Channel {
        &self.w_y
    }
    pub fn w_z(&self) -> &Channel {
        &self.w_z
    }
    pub fn u_size(&self) -> usize {
        self.p_u.len()
    }
    pub fn v_size(&self) -> usize {
        self.p_v_given_u.outputs()
    }

    /// `P_{Y|V} = W_Y ∘ Ξ`.
    pub fn p_y_given_v(&self) -> Channel {
        compose(&self.xi, &self.w_y).expect("validated chain")
    }

    /// `P_{Z|V} = W_Z ∘ Ξ`.
    pub fn p_z_given_v(&self) -> Channel {
        compose(&self.xi, &self.w_z).expect("validated chain")
    }

    pub fn p_y_given_u(&self) -> Channel {
        compose(&self.p_v_given_u, &self.p_y_given_v()).expect("validated chain")
    }

    pub fn p_z_given_u(&self) -> Channel {
        compose(&self.p_v_given_u, &self.p_z_given_v()).expect("validated chain")
    }

    pub fn p_v(&self) -> Distribution {
        push_forward(&self.p_u, &self.p_v_given_u).expect("validated chain")
    }

    /// Joint law of `(U, V)` indexed `u + |U|·v`.
    pub fn p_uv(&self) -> Distribution {
        let (nu, nv) = (self.u_size(), self.v_size());
        let mut probs = vec![0.0; nu * nv];
        for u in 0..nu {
            for v in 0..nv {
                probs[u + nu * v] = self.p_u.get(u) * self.p_v_given_u.get(u, v);
            }
        }
        Distribution::from_normalized(probs)
    }

    /// Kernel from the pair `(U, V)` (indexed as in [`ChainSpec::p_uv`]) to `Y`.
    pub fn p_y_given_uv(&self) -> Channel {
        self.pair_kernel(&self.p_y_given_v())
    }

    fn pair_kernel(&self, per_v: &Channel) -> Channel {
        let nu = self.u_size();
        let nv = self.v_size();
        let mut data = Vec::with_capacity(nu * nv * per_v.outputs());
        for idx in 0..nu * nv {
            data.extend_from_slice(per_v.row(idx / nu));
        }
        Channel::from_flat(nu * nv, per_v.outputs(), data)
    }

    /// Replace both physical channels by their `n`-fold extensions and the auxiliary
    /// laws by i.i.d. products (the chain of the memoryless extension).
    pub fn tensor_power(&self, n: usize, cap: u64) -> Result<ChainSpec> {
        ChainSpec::new(
            self.p_u.tensor_power(n, cap)?,
            self.p_v_given_u.tensor_power(n, cap)?,
            self.xi.tensor_power(n, cap)?,
            self.w_y.tensor_power(n, cap)?,
            self.w_z.tensor_power(n, cap)?,
        )
    }

    pub fn mutual_info(&self, kind: InfoKind) -> f64 {
        mutual_info(self, kind)
    }
}

/// `Σ_u P(u) I(V; Out | U=u)`.
fn conditional_mi(p_u: &Distribution, v_given_u: &Channel, out_given_v: &Channel) -> f64 {
    let mut acc = KahanSum::new();
    for (u, &pu) in p_u.probs().iter().enumerate() {
        if pu == 0.0 {
            continue;
        }
        let pv = v_given_u.row_distribution(u);
        acc.add(pu * mutual_information(&pv, out_given_v).expect("validated chain"));
    }
    acc.value().max(0.0)
}

/// Exact Shannon (conditional) mutual information of the chain's joint law, in nats.
pub fn mutual_info(chain: &ChainSpec, kind: InfoKind) -> f64 {
    match kind {
        InfoKind::UY => mutual_information(chain.p_u(), &chain.p_y_given_u()).expect("validated"),
        InfoKind::UZ => mutual_information(chain.p_u(), &chain.p_z_given_u()).expect("validated"),
        InfoKind::VYGivenU => conditional_mi(chain.p_u(), chain.p_v_given_u(), &chain.p_y_given_v()),
        InfoKind::VZGivenU => conditional_mi(chain.p_u(), chain.p_v_given_u(), &chain.p_z_given_v()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validation_accepts_and_renormalises() {
        let d = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let d = Distribution::new(vec![0.5, 0.500_000_000_1]).unwrap();
        assert_abs_diff_eq!(d.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            Distribution::new(vec![0.7, 0.4]),
            Err(Error::RowSumOutOfTolerance { .. })
        ));
        assert!(matches!(
            Distribution::new(vec![1.2, -0.2]),
            Err(Error::NegativeEntry { .. })
        ));
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![0.9]]).is_err());
    }

    #[test]
    fn composition_examples() {
        let w = Channel::bsc(0.1);
        let id = Channel::identity(2);
        assert_eq!(compose(&id, &w).unwrap(), w);
        let ww = compose(&w, &w).unwrap();
        assert_abs_diff_eq!(ww.get(0, 1), 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(ww.get(1, 1), 0.82, epsilon = 1e-15);

        let q = Distribution::new(vec![0.2, 0.8]).unwrap();
        let constant = Channel::constant(3, &q);
        let out = compose(&constant, &w).unwrap();
        let expected = push_forward(&q, &w).unwrap();
        for row in out.rows() {
            for (a, b) in row.iter().zip(expected.probs()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
        assert!(compose(&Channel::identity(3), &w).is_err());
    }

    #[test]
    fn push_forward_examples() {
        let w = Channel::bsc(0.1);
        let out = push_forward(&Distribution::uniform(2), &w).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.5, epsilon = 1e-15);
        let out = push_forward(&Distribution::point(2, 0), &w).unwrap();
        assert_eq!(out.probs(), w.row(0));
        let p = Distribution::new(vec![0.75, 0.25]).unwrap();
        let out = push_forward(&p, &w).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(1), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn tensor_power_examples() {
        let w = Channel::bsc(0.1);
        assert_eq!(w.tensor_power(1, 100).unwrap(), w);
        let w2 = w.tensor_power(2, 100).unwrap();
        assert_eq!((w2.inputs(), w2.outputs()), (4, 4));
        assert_abs_diff_eq!(w2.get(0, 0), 0.81, epsilon = 1e-15);
        // input (1,0) little-endian = index 1, output (1,1) = index 3
        assert_abs_diff_eq!(w2.get(1, 3), 0.9 * 0.1, epsilon = 1e-15);
        let d = Distribution::uniform(2).tensor_power(2, 100).unwrap();
        assert_eq!(d.probs(), &[0.25; 4]);
        assert!(matches!(w.tensor_power(20, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn mutual_info_examples() {
        let h01 = crate::numeric::binary_entropy(0.1);
        assert_abs_diff_eq!(h01, 0.325_082_973_391_448, epsilon = 1e-12);
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(0.1), Channel::identity(2)).unwrap();
        assert_abs_diff_eq!(chain.mutual_info(InfoKind::VYGivenU), 2f64.ln() - h01, epsilon = 1e-12);
        assert_abs_diff_eq!(chain.mutual_info(InfoKind::VZGivenU), 2f64.ln(), epsilon = 1e-12);
        // |U| = 1 so the common-message informations vanish
        assert_abs_diff_eq!(chain.mutual_info(InfoKind::UY), 0.0, epsilon = 1e-15);

        let dead = Channel::constant(2, &Distribution::uniform(3));
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(0.2), dead).unwrap();
        assert_abs_diff_eq!(chain.mutual_info(InfoKind::VZGivenU), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn chain_json_names_bad_key() {
        let good = r#"{"p_u":[1.0],"p_v_given_u":[[0.5,0.5]],"xi":[[1,0],[0,1]],
                      "w_y":[[0.9,0.1],[0.1,0.9]],"w_z":[[0.8,0.2],[0.2,0.8]]}"#;
        let c = ChainSpec::from_json_str(good).unwrap();
        assert_eq!(c.v_size(), 2);
        let bad = good.replace(r#""xi":[[1,0],[0,1]]"#, r#""xi":[[1,0],[0.3,0.3]]"#);
        match ChainSpec::from_json_str(&bad) {
            Err(Error::Spec { key, .. }) => assert_eq!(key, "xi"),
            other => panic!("unexpected {other:?}"),
        }
        let missing = good.replace(r#""w_z""#, r#""w_q""#);
        match ChainSpec::from_json_str(&missing) {
            Err(Error::Spec { key, .. }) => assert_eq!(key, "w_z"),
            other => panic!("unexpected {other:?}"),
        }
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ChainSpec::from_json_str(&text).unwrap(), c);
    }
}
