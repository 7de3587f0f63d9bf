//! Rate-region evaluators over a fixed auxiliary chain, an inner-bound sampler over
//! random chains, and the secrecy capacity of binary-input wiretap pairs.
//!
//! Nothing here certifies an outer bound: sampled points are achievable only.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, stream_rng};
use crate::exponents::IndexSet;
use crate::numeric::{golden_section, linspace, positive_part};
use crate::probability::{mutual_information, ChainSpec, Channel, Distribution, InfoKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionModel {
    /// Common rate, one confidential rate and an equivocation rate.
    BccEquivocation,
    /// Common rate, one confidential rate and a leakage floor.
    BccLeaked,
    /// Common and private rates, no secrecy requirement.
    Bcd,
    /// Common rate and `T` secret rates with a floor per nonempty index set.
    Smc,
}

/// Rate tuple queried against a chain. `secrets` holds `R_1, …, R_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRates {
    pub r0: f64,
    pub secrets: Vec<f64>,
    /// Equivocation rate, checked only by the equivocation model.
    #[serde(default)]
    pub r_e: Option<f64>,
}

/// The four mutual informations every region is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainInfo {
    pub i_uy: f64,
    pub i_uz: f64,
    pub i_vy_u: f64,
    pub i_vz_u: f64,
}

impl ChainInfo {
    pub fn of(chain: &ChainSpec) -> Self {
        Self {
            i_uy: chain.mutual_info(InfoKind::UY),
            i_uz: chain.mutual_info(InfoKind::UZ),
            i_vy_u: chain.mutual_info(InfoKind::VYGivenU),
            i_vz_u: chain.mutual_info(InfoKind::VZGivenU),
        }
    }

    pub fn common(&self) -> f64 {
        self.i_uy.min(self.i_uz)
    }

    /// `I(V;Y|U) − I(V;Z|U)`, possibly negative.
    pub fn secrecy_gap(&self) -> f64 {
        self.i_vy_u - self.i_vz_u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionEval {
    pub feasible: bool,
    /// Smallest admissible leakage rate for each requested index set.
    pub floors: Vec<(IndexSet, f64)>,
    pub info: ChainInfo,
}

const RATE_SLACK: f64 = 1e-12;

/// Evaluate a model's inequalities at one chain.
///
/// `sets` selects the index sets whose leakage floors are reported; `None` means every
/// nonempty subset of the secrets. The BCC models take exactly one secret rate.
pub fn region_point(
    chain: &ChainSpec,
    rates: &RegionRates,
    model: RegionModel,
    sets: Option<&[IndexSet]>,
) -> Result<RegionEval> {
    let t = rates.secrets.len();
    if rates.r0 < 0.0 || rates.secrets.iter().any(|&r| r < 0.0) || rates.r_e.is_some_and(|r| r < 0.0) {
        return Err(Error::InvalidRates("rates must be nonnegative".into()));
    }
    let single = matches!(
        model,
        RegionModel::BccEquivocation | RegionModel::BccLeaked | RegionModel::Bcd
    );
    if single && t != 1 {
        return Err(Error::dims("this model takes exactly one non-common rate"));
    }
    if t == 0 || t > 31 {
        return Err(Error::dims("need between 1 and 31 secret rates"));
    }
    let info = ChainInfo::of(chain);
    let common = info.common();
    let total: f64 = rates.secrets.iter().sum();
    let mut feasible = rates.r0 <= common + RATE_SLACK && rates.r0 + total <= info.i_vy_u + common + RATE_SLACK;
    if model == RegionModel::BccEquivocation {
        if let Some(r_e) = rates.r_e {
            feasible &= r_e <= info.secrecy_gap() + RATE_SLACK && r_e <= rates.secrets[0] + RATE_SLACK;
        }
    }
    let floors = match model {
        RegionModel::Bcd | RegionModel::BccEquivocation => Vec::new(),
        RegionModel::BccLeaked | RegionModel::Smc => {
            let chosen: Vec<IndexSet> = match sets {
                Some(s) => {
                    if s.iter().any(|x| x.is_empty() || !x.is_subset(IndexSet::full(t))) {
                        return Err(Error::dims("index set outside 1..=T"));
                    }
                    s.to_vec()
                }
                None => IndexSet::nonempty_subsets(t).collect(),
            };
            chosen
                .into_iter()
                .map(|set| {
                    let sum: f64 = set.iter().map(|i| rates.secrets[i - 1]).sum();
                    (set, positive_part(sum - info.secrecy_gap()))
                })
                .collect()
        }
    };
    Ok(RegionEval { feasible, floors, info })
}

/// An achievable point together with the chain that witnesses it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPoint {
    pub model: RegionModel,
    pub r0: f64,
    pub secrets: Vec<f64>,
    /// Equivocation rate (equivocation model only).
    pub r_e: Option<f64>,
    pub floors: Vec<(IndexSet, f64)>,
    pub chain: ChainSpec,
}

impl RegionPoint {
    pub fn rates(&self) -> RegionRates {
        RegionRates {
            r0: self.r0,
            secrets: self.secrets.clone(),
            r_e: self.r_e,
        }
    }
}

fn softmax_normal<R: Rng>(rng: &mut R, n: usize) -> Distribution {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let m = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Distribution::from_weights(g.iter().map(|x| (x - m).exp()).collect()).expect("positive weights")
}

fn random_channel<R: Rng>(rng: &mut R, inputs: usize, outputs: usize) -> Channel {
    let rows: Vec<Distribution> = (0..inputs).map(|_| softmax_normal(rng, outputs)).collect();
    Channel::from_rows(&rows).expect("rows share a length")
}

/// The chain used for sample `i`. The first samples are fixed boundary chains.
fn sample_chain(w_y: &Channel, w_z: &Channel, u: usize, v: usize, seed: u64, i: usize) -> ChainSpec {
    let x = w_y.inputs();
    let vertex_xi = Channel::deterministic(v, x, |a| a % x);
    let build = |p_u, p_vu, xi| ChainSpec::new(p_u, p_vu, xi, w_y.clone(), w_z.clone()).expect("sizes agree");
    match i {
        0 => build(
            Distribution::uniform(u),
            Channel::constant(u, &Distribution::uniform(v)),
            vertex_xi,
        ),
        1 => build(
            Distribution::uniform(u),
            Channel::deterministic(u, v, |a| a % v),
            vertex_xi,
        ),
        _ => {
            let mut rng = stream_rng(seed, i as u64);
            let p_u = softmax_normal(&mut rng, u);
            let p_vu = random_channel(&mut rng, u, v);
            let xi = random_channel(&mut rng, v, x);
            build(p_u, p_vu, xi)
        }
    }
}

fn extreme_points(chain: ChainSpec, model: RegionModel, t: usize) -> Vec<RegionPoint> {
    let info = ChainInfo::of(&chain);
    let r0 = info.common();
    let gap = positive_part(info.secrecy_gap());
    let split = |total: f64| vec![total / t as f64; t];
    let point = |secrets: Vec<f64>, r_e: Option<f64>| {
        let floors = match model {
            RegionModel::BccLeaked | RegionModel::Smc => IndexSet::nonempty_subsets(t)
                .map(|set| {
                    let sum: f64 = set.iter().map(|i| secrets[i - 1]).sum();
                    (set, positive_part(sum - info.secrecy_gap()))
                })
                .collect(),
            _ => Vec::new(),
        };
        RegionPoint {
            model,
            r0,
            secrets,
            r_e,
            floors,
            chain: chain.clone(),
        }
    };
    let equivocation = (model == RegionModel::BccEquivocation).then_some(gap.min(info.i_vy_u));
    let mut out = vec![point(split(info.i_vy_u), equivocation)];
    if model != RegionModel::Bcd {
        out.push(point(split(gap), equivocation.map(|_| gap)));
    }
    out
}

/// Sample `samples` chains over the given channels and return their extreme achievable
/// points: the largest total rate and the largest fully secret rate.
///
/// Points with identical rate coordinates are reported once, first witness kept.
/// `t` is the number of secrets and must be 1 for the BCC and BCD models.
#[allow(clippy::too_many_arguments)]
pub fn region_sample(
    w_y: &Channel,
    w_z: &Channel,
    model: RegionModel,
    u_size: usize,
    v_size: usize,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<RegionPoint>> {
    if u_size == 0 || v_size == 0 {
        return Err(Error::dims("auxiliary alphabets must be nonempty"));
    }
    if w_y.inputs() != w_z.inputs() {
        return Err(Error::dims("w_y and w_z must share an input alphabet"));
    }
    if t == 0 || t > 31 || (model != RegionModel::Smc && t != 1) {
        return Err(Error::dims("bad number of secrets for the model"));
    }
    let per_chain = map_indexed(samples, |i| {
        extreme_points(sample_chain(w_y, w_z, u_size, v_size, seed, i), model, t)
    });
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in per_chain.into_iter().flatten() {
        let key: Vec<u64> = std::iter::once(p.r0)
            .chain(p.secrets.iter().copied())
            .chain(p.r_e)
            .map(f64::to_bits)
            .collect();
        if seen.insert(key) {
            out.push(p);
        }
    }
    Ok(out)
}

/// `max_{P_X} [I(X;Y) − I(X;Z)]_+` for binary-input channels.
///
/// `grid` points on `[0, 1]` bracket the optimum, then golden-section search refines it.
pub fn secrecy_capacity_degraded(w_b: &Channel, w_e: &Channel, grid: usize) -> Result<f64> {
    if w_b.inputs() != 2 || w_e.inputs() != 2 {
        return Err(Error::dims("the 1-D search needs binary-input channels"));
    }
    let grid = grid.max(3);
    let gap = |p: f64| {
        let px = Distribution::new(vec![p, 1.0 - p]).expect("valid binary law");
        mutual_information(&px, w_b).expect("sizes agree") - mutual_information(&px, w_e).expect("sizes agree")
    };
    let xs = linspace(0.0, 1.0, grid);
    let values = map_indexed(grid, |i| gap(xs[i]));
    let best = (0..grid).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(grid - 1)];
    let refined = golden_section(&gap, lo, hi, 1e-10).value;
    Ok(positive_part(refined.max(values[best])))
}
