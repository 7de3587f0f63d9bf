//! Error and secrecy exponents, finite-blocklength leakage bounds and the universal
//! exponent quadruple.
//!
//! Every exponent is a maximisation over `ρ ∈ [0, 1]` done by
//! [`crate::numeric::maximize_1d`]. Results are clamped at zero.

use serde::{Deserialize, Serialize};

use crate::gallager::{phi, phi_max, phi_single, psi};
use crate::numeric::{maximize_1d, positive_part, Maximum};
use crate::probability::{ChainSpec, Channel, Distribution, InfoKind};
use crate::renyi::{renyi_entropy, JointSource};
use crate::{Error, Result};

/// Upper end of the ρ range whenever φ (undefined at ρ = 1) is involved.
pub const PHI_RHO_MAX: f64 = 1.0 - 1e-9;

/// Rates `R_0..R_T` together with the private/common split `(R_p, R_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub r: Vec<f64>,
    pub r_p: f64,
    pub r_c: f64,
}

impl RateSpec {
    pub fn new(r: Vec<f64>, r_p: f64, r_c: f64) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidRates("need at least R_0".into()));
        }
        if r.iter().chain([&r_p, &r_c]).any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidRates("rates must be finite and nonnegative".into()));
        }
        let total: f64 = r.iter().sum();
        if (r_p + r_c - total).abs() > 1e-9 {
            return Err(Error::InvalidRates(format!(
                "R_c + R_p = {} but the message rates sum to {total}",
                r_p + r_c
            )));
        }
        if r_c < r[0] - 1e-12 {
            return Err(Error::InvalidRates("R_c must be at least R_0".into()));
        }
        Ok(Self { r, r_p, r_c })
    }

    /// Number of secret messages.
    pub fn t(&self) -> usize {
        self.r.len() - 1
    }

    /// `Σ_{i∈I} R_i`.
    pub fn sum_over(&self, set: IndexSet) -> f64 {
        set.iter().map(|i| self.r[i]).sum()
    }
}

/// Subset of the secret indices `{1..T}`, stored as a bitmask (bit `i−1` for message `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexSet(pub u32);

impl IndexSet {
    pub fn from_members(members: &[usize], t: usize) -> Result<Self> {
        let mut bits = 0u32;
        for &i in members {
            if i == 0 || i > t {
                return Err(Error::RangeViolation(format!("message index {i} not in 1..={t}")));
            }
            bits |= 1 << (i - 1);
        }
        Ok(Self(bits))
    }

    pub fn full(t: usize) -> Self {
        Self(((1u64 << t) - 1) as u32)
    }

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i >= 1 && self.0 & (1 << (i - 1)) != 0
    }

    pub fn complement(self, t: usize) -> Self {
        Self(Self::full(t).0 & !self.0)
    }

    pub fn is_subset(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=32).filter(move |&i| self.contains(i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// All nonempty subsets of `{1..t}` in increasing bitmask order.
    pub fn nonempty_subsets(t: usize) -> impl Iterator<Item = IndexSet> {
        (1u32..(1u32 << t)).map(IndexSet)
    }
}

impl std::fmt::Display for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let members: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", members.join(" "))
    }
}

/// How `H_{1+ρ}(S_{I^c} | S_I, S_0)` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceProfile {
    /// Exact values from a joint law over `(S_0, S_1, …, S_T)` (coordinate `i` = `S_i`).
    Exact(JointSource),
    /// Independent uniform messages with `ln|S_i|` given for `i = 0..T`
    /// (for rate `R_i` at blocklength `n` this is `n·R_i`).
    Uniform { log_sizes: Vec<f64> },
    /// The same value for every `I` and `ρ`.
    Constant(f64),
}

impl SourceProfile {
    pub fn uniform_rates(n: usize, rates: &[f64]) -> Self {
        SourceProfile::Uniform {
            log_sizes: rates.iter().map(|r| n as f64 * r).collect(),
        }
    }

    /// `H_{1+ρ}(S_{I^c} | S_I, S_0)` for a profile over `t` secrets.
    pub fn value(&self, set: IndexSet, t: usize, rho: f64) -> Result<f64> {
        let rest = set.complement(t);
        match self {
            SourceProfile::Constant(v) => Ok(*v),
            SourceProfile::Uniform { log_sizes } => {
                if log_sizes.len() != t + 1 {
                    return Err(Error::dims("profile needs ln|S_i| for i = 0..T"));
                }
                Ok(rest.iter().map(|i| log_sizes[i]).fold(0.0, |a, b| a + b))
            }
            SourceProfile::Exact(src) => {
                if src.shape().len() != t + 1 {
                    return Err(Error::dims("source must have one coordinate per message"));
                }
                if rest.is_empty() {
                    return Ok(0.0);
                }
                let a: Vec<usize> = rest.iter().collect();
                let mut b: Vec<usize> = vec![0];
                b.extend(set.iter());
                let roles = src.clone().with_roles(a, b)?;
                renyi_entropy(&roles, rho, true)
            }
        }
    }
}

/// Bob's exponent for the pair `(R_p, R_c)`.
pub fn error_exponent_bob(r_p: f64, r_c: f64, chain: &ChainSpec) -> Result<f64> {
    let p_y_v = chain.p_y_given_v();
    let p_y_uv = chain.p_y_given_uv();
    let p_uv = chain.p_uv();
    let pair_row = Channel::constant(1, &p_uv);
    let one = Distribution::uniform(1);
    let objective = |rho: f64| -> f64 {
        let a = -rho * r_p - phi(-rho, &p_y_v, chain.p_v_given_u(), chain.p_u()).unwrap();
        let b = -rho * (r_p + r_c) - phi(-rho, &p_y_uv, &pair_row, &one).unwrap();
        a.min(b)
    };
    Ok(positive_part(maximize_1d(objective, 0.0, 1.0).value))
}

/// Eve's exponent for the common message at rate `R_c`.
pub fn error_exponent_eve(r_c: f64, chain: &ChainSpec) -> Result<f64> {
    let p_z_u = chain.p_z_given_u();
    let objective = |rho: f64| -r_c * rho - phi_single(-rho, &p_z_u, chain.p_u()).unwrap();
    Ok(positive_part(maximize_1d(objective, 0.0, 1.0).value))
}

/// Which Gallager functional drives a secrecy exponent or leakage bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Phi,
    Psi,
}

/// Evaluate the chosen kernel at `ρ` on Eve's side of the chain.
pub fn kernel_value(kernel: Kernel, rho: f64, chain: &ChainSpec) -> Result<f64> {
    let w = chain.p_z_given_v();
    match kernel {
        Kernel::Phi => phi(rho, &w, chain.p_v_given_u(), chain.p_u()),
        Kernel::Psi => psi(rho, &w, chain.p_v_given_u(), chain.p_u()),
    }
}

/// `max_ρ ρ r − kernel(ρ)`, with the maximiser.
pub fn secrecy_exponent_arg(r: f64, chain: &ChainSpec, kernel: Kernel) -> Result<Maximum> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::RangeViolation(format!("rate {r} must be nonnegative")));
    }
    let hi = match kernel {
        Kernel::Phi => PHI_RHO_MAX,
        Kernel::Psi => 1.0,
    };
    let m = maximize_1d(|rho| rho * r - kernel_value(kernel, rho, chain).unwrap(), 0.0, hi);
    Ok(Maximum {
        arg: m.arg,
        value: positive_part(m.value),
    })
}

/// Strong-secrecy exponent `max_ρ ρ r − kernel(ρ, P_{Z|V}, P_{V|U}, P_U)`.
pub fn secrecy_exponent(r: f64, chain: &ChainSpec, kernel: Kernel) -> Result<f64> {
    secrecy_exponent_arg(r, chain, kernel).map(|m| m.value)
}

/// The two random constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Affine mixing of the secrets, then a superposition codebook.
    First,
    /// Secrets index the private codebook directly.
    Second,
}

/// Inputs of the leakage bound once the kernel and the Rényi profile are known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageTerms {
    pub construction: Construction,
    /// Number of secret messages.
    pub t: usize,
    /// `ln|B_1|` (only used by the first construction).
    pub log_b1: f64,
    /// `φ` (first construction) or `ψ` (second) at the blocklength of interest.
    pub kernel: f64,
    /// `H_{1+ρ}(S_{I^c} | S_I, S_0)`.
    pub renyi: f64,
    pub rho: f64,
}

/// Upper bound on `I(S_I ; Z | S_0)` in nats.
///
/// With `overhead = true` this is the bound for a single selected code, which pays
/// `(T+3) ln 2 / ρ` for the Markov-inequality selection over all index sets. With
/// `overhead = false` it is the ensemble-average bound `(1/ρ) ln(1 + e^{…})`.
///
/// The per-message version of the selection argument carries `2^{T+2}`; the final
/// optimised statement uses `2^{T+3}`, which is what is implemented here.
pub fn leakage_bound_terms(terms: &LeakageTerms, overhead: bool) -> Result<f64> {
    let rho = terms.rho;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let excess = match terms.construction {
        Construction::First => terms.log_b1 + terms.kernel / rho - terms.renyi,
        Construction::Second => terms.kernel / rho - terms.renyi,
    };
    if overhead {
        Ok(positive_part(excess) + (terms.t as f64 + 3.0) * std::f64::consts::LN_2 / rho)
    } else {
        Ok((rho * excess).exp().ln_1p() / rho)
    }
}

/// Everything needed to evaluate a leakage bound from a chain at blocklength `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageSetup {
    pub construction: Construction,
    pub t: usize,
    pub log_b1: f64,
    pub n: usize,
    pub profile: SourceProfile,
    pub chain: ChainSpec,
    /// Include the `(T+3) ln 2 / ρ` selection overhead.
    pub overhead: bool,
}

/// Leakage bound for index set `I` at `ρ`; the kernel is `n` times its single-letter value.
pub fn leakage_bound(setup: &LeakageSetup, set: IndexSet, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let kernel = match setup.construction {
        Construction::First => kernel_value(Kernel::Phi, rho, &setup.chain)?,
        Construction::Second => kernel_value(Kernel::Psi, rho, &setup.chain)?,
    };
    let terms = LeakageTerms {
        construction: setup.construction,
        t: setup.t,
        log_b1: setup.log_b1,
        kernel: setup.n as f64 * kernel,
        renyi: setup.profile.value(set, setup.t, rho)?,
        rho,
    };
    leakage_bound_terms(&terms, setup.overhead)
}

/// Smallest bound over a ρ grid, with the minimising ρ. Grid points where the bound is
/// undefined (φ at ρ = 1) are skipped.
pub fn best_leakage_bound(setup: &LeakageSetup, set: IndexSet, grid: &[f64]) -> Result<Maximum> {
    let values = crate::exec::map_indexed(grid.len(), |i| leakage_bound(setup, set, grid[i]));
    let mut best: Option<Maximum> = None;
    let mut first_err = None;
    for (&rho, v) in grid.iter().zip(values) {
        match v {
            Ok(b) if best.is_none_or(|m| b < m.value) => best = Some(Maximum { arg: rho, value: b }),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::RangeViolation("empty rho grid".into())))
}

/// Outcome of the practical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PracticalBound {
    /// Bound on `E e^{ρ I}`.
    pub exp_moment: f64,
    /// The induced bound `(1/ρ) ln(exp_moment)` on `E I`.
    pub leakage: f64,
    /// The per-letter kernel that was used (`φ_max` or φ at the uniform input).
    pub phi_star: f64,
}

/// `1 + e^{−ρ·renyi + ρ·log_b1 + n·φ*}` for a fixed base code over Eve's channel.
///
/// `φ*` is `φ_max(ρ)` when there is a common message and φ at the uniform input
/// otherwise.
pub fn practical_bound(
    rho: f64,
    channel_to_eve: &Channel,
    n: usize,
    renyi_value: f64,
    log_b1: f64,
    has_common: bool,
) -> Result<PracticalBound> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let phi_star = if has_common {
        phi_max(rho, channel_to_eve)?.value
    } else {
        phi_single(rho, channel_to_eve, &Distribution::uniform(channel_to_eve.inputs()))?
    };
    Ok(practical_from_phi(rho, phi_star, n, renyi_value, log_b1))
}

pub(crate) fn practical_from_phi(rho: f64, phi_star: f64, n: usize, renyi_value: f64, log_b1: f64) -> PracticalBound {
    let x = (-rho * renyi_value + rho * log_b1 + n as f64 * phi_star).exp();
    PracticalBound {
        exp_moment: 1.0 + x,
        leakage: x.ln_1p() / rho,
        phi_star,
    }
}

/// The universally attainable exponent quadruple for index set `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadruple {
    pub e_b: f64,
    pub e_e: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

pub fn universal_quadruple(
    r_p: f64,
    r_c: f64,
    rates: &RateSpec,
    chain: &ChainSpec,
    set: IndexSet,
) -> Result<Quadruple> {
    if set.iter().any(|i| i > rates.t()) {
        return Err(Error::InvalidRates("index set exceeds T".into()));
    }
    let sum_i = rates.sum_over(set);
    let i_vz = chain.mutual_info(InfoKind::VZGivenU);
    Ok(Quadruple {
        e_b: error_exponent_bob(r_p, r_c, chain)?,
        e_e: error_exponent_eve(r_c, chain)?,
        e_plus: secrecy_exponent((r_p - sum_i).max(0.0), chain, Kernel::Phi)?,
        e_minus: i_vz - r_p + sum_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn noiseless_bob() -> ChainSpec {
        ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::bsc(0.2)).unwrap()
    }

    fn noiseless_eve() -> ChainSpec {
        ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(0.1), Channel::identity(2)).unwrap()
    }

    #[test]
    fn bob_noiseless() {
        let c = noiseless_bob();
        assert_abs_diff_eq!(error_exponent_bob(0.3, 0.0, &c).unwrap(), LN_2 - 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(error_exponent_bob(0.0, 0.0, &c).unwrap(), LN_2, epsilon = 1e-9);
        assert_eq!(error_exponent_bob(0.8, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn eve_noiseless_common() {
        let c = ChainSpec::new(
            Distribution::uniform(2),
            Channel::identity(2),
            Channel::identity(2),
            Channel::identity(2),
            Channel::identity(2),
        )
        .unwrap();
        assert_abs_diff_eq!(error_exponent_eve(0.3, &c).unwrap(), LN_2 - 0.3, epsilon = 1e-9);
        assert_eq!(error_exponent_eve(0.7, &c).unwrap(), 0.0);
        assert_eq!(error_exponent_eve(0.0, &noiseless_eve()).unwrap(), 0.0);
    }

    #[test]
    fn secrecy_noiseless_eve() {
        let c = noiseless_eve();
        assert_abs_diff_eq!(
            secrecy_exponent(1.0, &c, Kernel::Phi).unwrap(),
            1.0 - LN_2,
            epsilon = 1e-8
        );
        assert_eq!(secrecy_exponent(0.0, &c, Kernel::Phi).unwrap(), 0.0);
        let p = secrecy_exponent(1.0, &c, Kernel::Psi).unwrap();
        assert!(p >= 1.0 - LN_2 - 1e-9);
    }

    #[test]
    fn leakage_examples() {
        let first = LeakageTerms {
            construction: Construction::First,
            t: 2,
            log_b1: LN_2,
            kernel: 0.247_337,
            renyi: 2.0 * LN_2,
            rho: 1.0,
        };
        assert_abs_diff_eq!(leakage_bound_terms(&first, true).unwrap(), 5.0 * LN_2, epsilon = 1e-12);
        let second = LeakageTerms {
            construction: Construction::Second,
            t: 1,
            log_b1: 0.0,
            kernel: 0.224_899,
            renyi: 0.1,
            rho: 1.0,
        };
        assert_abs_diff_eq!(
            leakage_bound_terms(&second, true).unwrap(),
            0.124_899 + 4.0 * LN_2,
            epsilon = 1e-12
        );
        assert!(leakage_bound_terms(&LeakageTerms { rho: 0.0, ..second }, true).is_err());
    }

    #[test]
    fn practical_example() {
        let w = Channel::bsc(0.1);
        let b = practical_bound(0.5, &w, 1, LN_2, 0.0, false).unwrap();
        let phi = (2.0 * (0.5f64 * 0.82).sqrt()).ln();
        assert_abs_diff_eq!(b.exp_moment, 1.0 + (-0.5 * LN_2 + phi).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.exp_moment, 1.905_539, epsilon = 1e-6);
        let far = practical_bound(0.5, &w, 1, 1e6, 0.0, false).unwrap();
        assert_eq!(far.exp_moment, 1.0);
    }

    #[test]
    fn rate_spec_validation() {
        assert!(RateSpec::new(vec![0.1, 0.2, 0.3], 0.4, 0.2).is_ok());
        assert!(RateSpec::new(vec![0.1, 0.2], 0.4, 0.2).is_err());
        assert!(RateSpec::new(vec![0.3, 0.2], 0.5, 0.0).is_err());
    }

    #[test]
    fn index_sets() {
        let s = IndexSet::from_members(&[1, 3], 3).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(s.complement(3).iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(IndexSet::nonempty_subsets(3).count(), 7);
        assert!(IndexSet::from_members(&[0], 3).is_err());
        assert_eq!(s.to_string(), "{1 3}");
    }

    #[test]
    fn profiles() {
        let u = SourceProfile::Uniform {
            log_sizes: vec![0.0, 1.0, 2.0],
        };
        let i1 = IndexSet::from_members(&[1], 2).unwrap();
        assert_eq!(u.value(i1, 2, 0.5).unwrap(), 2.0);
        let src = JointSource::uniform(vec![1, 2, 4]).unwrap();
        let e = SourceProfile::Exact(src);
        assert_abs_diff_eq!(e.value(i1, 2, 0.5).unwrap(), 4f64.ln(), epsilon = 1e-12);
        assert_eq!(e.value(IndexSet::full(2), 2, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quadruple_noiseless_eve() {
        let c = noiseless_eve();
        let rates = RateSpec::new(vec![0.0, 1.0], 1.0, 0.0).unwrap();
        let q = universal_quadruple(1.0, 0.0, &rates, &c, IndexSet::empty()).unwrap();
        assert_abs_diff_eq!(q.e_plus, 1.0 - LN_2, epsilon = 1e-8);
        assert_abs_diff_eq!(q.e_minus, LN_2 - 1.0, epsilon = 1e-12);
    }
}
