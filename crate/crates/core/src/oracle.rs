//! Exhaustive ground truth on tiny instances: exact leakage, exact resolvability,
//! ensemble averages for the resolvability and fixed-code bounds, and exact error
//! probabilities.
//!
//! Every computation first counts its terms and refuses to run past the cap. Large sums
//! use compensated summation, and ensemble members are reduced in index order so results
//! do not depend on the worker count.

use serde::{Deserialize, Serialize};

use crate::affine::{affine_family, enumerate_family, AffineMap, FieldVec, FAMILY_CAP};
use crate::codec::{word_law, SmcCode};
use crate::exec::map_indexed;
use crate::exponents::IndexSet;
use crate::numeric::{checked_count, checked_product, xlog_ratio, KahanSum};
use crate::probability::{kl_divergence, push_forward, Channel, Distribution};
use crate::renyi::{psi_channel, psi_slices, renyi_of, JointSource};
use crate::{Error, Result};

fn check_source(code: &SmcCode, source: &JointSource) -> Result<()> {
    let mut shape = vec![code.layout().s0_count() as usize];
    shape.extend(code.layout().message_counts().iter().map(|&c| c as usize));
    if source.shape() != shape.as_slice() {
        return Err(Error::dims(format!(
            "source shape {:?} differs from the code's message shape {shape:?}",
            source.shape()
        )));
    }
    Ok(())
}

fn z_outputs(code: &SmcCode, cap: u64) -> Result<u64> {
    checked_count(code.chain().w_z().outputs() as u64, code.n() as u32, cap)
}

/// Number of weighted terms [`exact_leakage`] would touch.
pub fn leakage_term_count(code: &SmcCode, source: &JointSource, cap: u64) -> Result<u64> {
    let z = z_outputs(code, cap)?;
    checked_product(&[z, source.probs().len() as u64, code.layout().pad_count()], cap)
}

/// Law of `Z^n` given `(s0, secrets)`, with the padding marginalised.
pub fn z_law_of_message(code: &SmcCode, s0: usize, secrets: &[u64]) -> Vec<f64> {
    let pads = code.layout().pad_count();
    let mut acc: Vec<f64> = Vec::new();
    for pad in 0..pads {
        let (b1, b2) = code.mix(secrets, pad).expect("in-range messages");
        let law = code.z_law_of_word(code.codeword(s0, b1, b2));
        if acc.is_empty() {
            acc = law;
        } else {
            acc.iter_mut().zip(law).for_each(|(a, b)| *a += b);
        }
    }
    let scale = 1.0 / pads as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    acc
}

/// Group id `(s0, s_I)` of a message digit tuple.
fn group_of(digits: &[usize], shape: &[usize], set: IndexSet) -> usize {
    let mut g = 0;
    for i in set.iter().collect::<Vec<_>>().into_iter().rev() {
        g = g * shape[i] + digits[i];
    }
    g * shape[0] + digits[0]
}

fn group_count(shape: &[usize], set: IndexSet) -> usize {
    shape[0] * set.iter().map(|i| shape[i]).product::<usize>()
}

/// `Σ_g P_g Σ_z law_g(z) ln(law_g(z) / mix_{s0(g)}(z))` from group laws
/// (`joint[g][z] = P(g) P(z|g)`).
fn conditional_mi(joint: &[Vec<f64>], s0_count: usize) -> f64 {
    let n_z = joint.first().map_or(0, Vec::len);
    let mut mix = vec![vec![0.0; n_z]; s0_count];
    let mut p_s0 = vec![0.0; s0_count];
    let mut p_g = vec![0.0; joint.len()];
    for (g, j) in joint.iter().enumerate() {
        let s0 = g % s0_count;
        let pg: f64 = j.iter().sum();
        p_g[g] = pg;
        p_s0[s0] += pg;
        mix[s0].iter_mut().zip(j).for_each(|(m, x)| *m += x);
    }
    let mut acc = KahanSum::new();
    for (g, j) in joint.iter().enumerate() {
        if p_g[g] <= 0.0 {
            continue;
        }
        let s0 = g % s0_count;
        for (z, &x) in j.iter().enumerate() {
            // x ln(x·P(s0) / (P(g)·mix(z)))
            acc.add(xlog_ratio(x, p_g[g] * mix[s0][z] / p_s0[s0]));
        }
    }
    acc.value().max(0.0)
}

/// `I(S_I ; Z^n | S_0)` of a code under a message source, by full enumeration.
///
/// The source has shape `[|S_0|, |S_1|, …, |S_T|]`.
pub fn exact_leakage(code: &SmcCode, source: &JointSource, set: IndexSet, cap: u64) -> Result<f64> {
    check_source(code, source)?;
    if set.iter().any(|i| i > code.layout().t()) {
        return Err(Error::dims("index set exceeds T"));
    }
    leakage_term_count(code, source, cap)?;
    let shape = source.shape().to_vec();
    let groups = group_count(&shape, set);
    let probs = source.probs().probs();
    let members: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); groups];
        for (idx, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                m[group_of(&source.digits(idx), &shape, set)].push(idx);
            }
        }
        m
    };
    let n_z = z_outputs(code, cap)? as usize;
    let joint = map_indexed(groups, |g| {
        let mut acc = vec![KahanSum::new(); n_z];
        for &idx in &members[g] {
            let d = source.digits(idx);
            let secrets: Vec<u64> = d[1..].iter().map(|&x| x as u64).collect();
            let law = z_law_of_message(code, d[0], &secrets);
            for (a, l) in acc.iter_mut().zip(law) {
                a.add(probs[idx] * l);
            }
        }
        acc.iter().map(KahanSum::value).collect::<Vec<f64>>()
    });
    Ok(conditional_mi(&joint, shape[0]))
}

/// Divergence and ψ of an induced output mixture from a reference output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolvability {
    pub d: f64,
    pub psi: f64,
}

/// For the assignment `Λ: A → X` (as `map[a] = x`), compare `W_{P^A∘Λ^{−1}}` with
/// `W_{p_ref}`.
pub fn exact_resolvability(
    map: &[usize],
    p_a: &Distribution,
    w: &Channel,
    p_ref: &Distribution,
    rho: f64,
) -> Result<Resolvability> {
    if map.len() != p_a.len() {
        return Err(Error::dims("assignment length differs from |A|"));
    }
    if p_ref.len() != w.inputs() || map.iter().any(|&x| x >= w.inputs()) {
        return Err(Error::dims("assignment or reference outside the channel input"));
    }
    let mut q = vec![0.0; w.inputs()];
    for (&x, &p) in map.iter().zip(p_a.probs()) {
        q[x] += p;
    }
    let q = Distribution::from_weights(q)?;
    let out = push_forward(&q, w)?;
    let target = push_forward(p_ref, w)?;
    Ok(Resolvability {
        d: kl_divergence(&out, &target)?,
        psi: psi_slices(out.probs(), target.probs(), rho)?,
    })
}

/// Random-assignment ensemble: all maps `A → X` with weights `Π_a p(Λ(a))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSpec {
    pub p_a: Distribution,
    pub w: Channel,
    pub p: Distribution,
}

/// Affine ensemble on `A = X = F_q^dim`: every invertible `F` and offset `G`, uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSpec {
    pub q: u64,
    pub dim: usize,
    pub p_a: Distribution,
    pub w: Channel,
}

/// Fixed-code ensemble: every mixing layer `(F′, G′)` on top of `code`'s codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSpec {
    pub code: SmcCode,
    pub source: JointSource,
    /// Leaked index set; every secret when absent.
    #[serde(default)]
    pub set: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSpec {
    Assignment(AssignmentSpec),
    Affine(AffineSpec),
    Mixing(Box<MixingSpec>),
}

/// Exact ensemble averages against the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// Average of `e^{ρ D}`.
    pub lhs_d: f64,
    /// Average of `e^{ψ}`.
    pub lhs_psi: f64,
    /// Average of `e^{ρ I}` (fixed-code ensemble only).
    pub lhs_mi: Option<f64>,
    pub rhs: f64,
    pub holds: bool,
    pub members: u64,
}

const SLACK: f64 = 1e-9;

fn finish(weights_and_values: Vec<(f64, f64, f64, f64)>, rhs: f64, with_mi: bool) -> BoundCheck {
    let mut d = KahanSum::new();
    let mut p = KahanSum::new();
    let mut m = KahanSum::new();
    for &(w, vd, vp, vm) in &weights_and_values {
        d.add(w * vd);
        p.add(w * vp);
        m.add(w * vm);
    }
    let lhs_mi = with_mi.then(|| m.value());
    let holds = d.value() <= rhs + SLACK && p.value() <= rhs + SLACK && lhs_mi.is_none_or(|x| x <= rhs + SLACK);
    BoundCheck {
        lhs_d: d.value(),
        lhs_psi: p.value(),
        lhs_mi,
        rhs,
        holds,
        members: weights_and_values.len() as u64,
    }
}

/// Number of ensemble members a check would enumerate.
pub fn ensemble_term_count(spec: &EnsembleSpec, cap: u64) -> Result<u64> {
    match spec {
        EnsembleSpec::Assignment(s) => checked_count(s.w.inputs() as u64, s.p_a.len() as u32, cap),
        EnsembleSpec::Affine(s) => {
            checked_count(s.q, (s.dim * s.dim) as u32, cap.min(FAMILY_CAP))?;
            checked_count(s.q, (s.dim * s.dim + s.dim) as u32, cap)
        }
        EnsembleSpec::Mixing(s) => {
            let dim = s.code.layout().total_dim();
            checked_count(s.code.layout().q, (dim * dim) as u32, cap.min(FAMILY_CAP))?;
            let members = checked_count(s.code.layout().q, (dim * dim + dim) as u32, cap)?;
            let per = leakage_term_count(&s.code, &s.source, cap)?;
            checked_product(&[members, per], cap)
        }
    }
}

/// Enumerate the ensemble and compare its exact averages with the bound.
pub fn ensemble_bound_check(spec: &EnsembleSpec, rho: f64, cap: u64) -> Result<BoundCheck> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    ensemble_term_count(spec, cap)?;
    match spec {
        EnsembleSpec::Assignment(s) => assignment_check(s, rho),
        EnsembleSpec::Affine(s) => affine_check(s, rho, cap),
        EnsembleSpec::Mixing(s) => mixing_check(s, rho, cap),
    }
}

fn assignment_check(s: &AssignmentSpec, rho: f64) -> Result<BoundCheck> {
    let (na, nx) = (s.p_a.len(), s.w.inputs());
    if s.p.len() != nx {
        return Err(Error::dims("p must live on the channel input"));
    }
    let total = (nx as u64).pow(na as u32) as usize;
    let rows = map_indexed(total, |idx| {
        let map: Vec<usize> = FieldVec::from_index(nx as u64, na, idx as u64)
            .coords
            .iter()
            .map(|&x| x as usize)
            .collect();
        let weight: f64 = map.iter().map(|&x| s.p.get(x)).product();
        if weight == 0.0 {
            return Ok((0.0, 0.0, 0.0, 0.0));
        }
        let r = exact_resolvability(&map, &s.p_a, &s.w, &s.p, rho)?;
        Ok((weight, (rho * r.d).exp(), r.psi.exp(), 0.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let h = renyi_of(&s.p_a, rho)?;
    let rhs = 1.0 + (-rho * h).exp() * psi_channel(&s.w, &s.p, rho)?.exp();
    Ok(finish(rows, rhs, false))
}

fn affine_check(s: &AffineSpec, rho: f64, cap: u64) -> Result<BoundCheck> {
    let size = checked_count(s.q, s.dim as u32, cap)? as usize;
    if s.p_a.len() != size || s.w.inputs() != size {
        return Err(Error::dims("p_a and w must live on F_q^dim"));
    }
    let family = enumerate_family(s.q, s.dim, cap.min(FAMILY_CAP))?;
    let maps = affine_family(s.q, &family, cap)?;
    let uniform = Distribution::uniform(size);
    let weight = 1.0 / maps.len() as f64;
    let rows = map_indexed(maps.len(), |i| {
        let m = &maps[i];
        let assignment: Vec<usize> = (0..size as u64).map(|a| m.apply_index(a) as usize).collect();
        let r = exact_resolvability(&assignment, &s.p_a, &s.w, &uniform, rho)?;
        Ok((weight, (rho * r.d).exp(), r.psi.exp(), 0.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let h = renyi_of(&s.p_a, rho)?;
    let rhs = 1.0 + (-rho * h).exp() * psi_channel(&s.w, &uniform, rho)?.exp();
    Ok(finish(rows, rhs, false))
}

fn mixing_check(s: &MixingSpec, rho: f64, cap: u64) -> Result<BoundCheck> {
    let code = &s.code;
    let layout = code.layout();
    check_source(code, &s.source)?;
    let t = layout.t();
    let set = match &s.set {
        Some(members) => IndexSet::from_members(members, t)?,
        None => IndexSet::full(t),
    };
    let shape = s.source.shape().to_vec();
    let s0_count = shape[0];
    let (nb1, nb2) = (layout.b1_count() as usize, layout.b2_count() as usize);
    let nb = nb1 * nb2;
    let n_z = z_outputs(code, cap)? as usize;
    let pads = layout.pad_count();
    let w_zv = code.p_z_given_v();

    // laws[s0][b] with b = b1 + |B_1| b2
    let laws: Vec<Vec<Vec<f64>>> = (0..s0_count)
        .map(|s0| {
            (0..nb)
                .map(|b| word_law(w_zv, code.codeword(s0, b % nb1, b / nb1)))
                .collect()
        })
        .collect();
    let reference: Vec<Vec<f64>> = laws
        .iter()
        .map(|per_b| {
            let mut r = vec![0.0; n_z];
            for l in per_b {
                r.iter_mut().zip(l).for_each(|(a, x)| *a += x / nb as f64);
            }
            r
        })
        .collect();

    // group structure of the source
    let probs = s.source.probs().probs();
    let groups = group_count(&shape, set);
    let mut members = vec![Vec::new(); groups];
    for (idx, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            members[group_of(&s.source.digits(idx), &shape, set)].push(idx);
        }
    }
    let p_group: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| probs[i]).sum()).collect();

    // right-hand side
    let mut rhs = KahanSum::new();
    rhs.add(1.0);
    let psi_s0: Vec<f64> = (0..s0_count)
        .map(|s0| {
            let data: Vec<f64> = laws[s0].iter().flatten().copied().collect();
            let w = Channel::from_flat(nb, n_z, data);
            psi_channel(&w, &Distribution::uniform(nb), rho)
        })
        .collect::<Result<_>>()?;
    for (g, m) in members.iter().enumerate() {
        if p_group[g] <= 0.0 {
            continue;
        }
        let cond: Vec<f64> = m.iter().map(|&i| probs[i] / p_group[g]).collect();
        let h = renyi_of(&Distribution::from_weights(cond)?, rho)? + (pads as f64).ln();
        rhs.add(p_group[g] * (-rho * h + psi_s0[g % s0_count]).exp());
    }
    let rhs = rhs.value();

    let family = enumerate_family(layout.q, layout.total_dim(), cap.min(FAMILY_CAP))?;
    let maps = affine_family(layout.q, &family, cap)?;
    let weight = 1.0 / maps.len() as f64;
    let scratch = code.clone();
    let rows = map_indexed(maps.len(), |i| {
        let mixed = with_mixer(&scratch, &maps[i])?;
        let mut joint = Vec::with_capacity(groups);
        let (mut ed, mut ep) = (KahanSum::new(), KahanSum::new());
        for (g, m) in members.iter().enumerate() {
            let s0 = g % s0_count;
            let mut law = vec![0.0; n_z];
            for &idx in m {
                let d = s.source.digits(idx);
                let secrets: Vec<u64> = d[1..].iter().map(|&x| x as u64).collect();
                for pad in 0..pads {
                    let (b1, b2) = mixed.mix(&secrets, pad)?;
                    let l = &laws[s0][b1 + nb1 * b2];
                    let wgt = probs[idx] / pads as f64;
                    law.iter_mut().zip(l).for_each(|(a, x)| *a += wgt * x);
                }
            }
            if p_group[g] > 0.0 {
                let cond: Vec<f64> = law.iter().map(|x| x / p_group[g]).collect();
                let q = Distribution::from_weights(cond)?;
                let r = Distribution::from_weights(reference[s0].clone())?;
                ed.add(p_group[g] * (rho * kl_divergence(&q, &r)?).exp());
                ep.add(p_group[g] * psi_slices(q.probs(), r.probs(), rho)?.exp());
            }
            joint.push(law);
        }
        let mi = conditional_mi(&joint, s0_count);
        Ok((weight, ed.value(), ep.value(), (rho * mi).exp()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(finish(rows, rhs, true))
}

fn with_mixer(code: &SmcCode, mixer: &AffineMap) -> Result<SmcCode> {
    SmcCode::new(
        code.layout().clone(),
        code.codebook().clone(),
        mixer.clone(),
        code.construction(),
        code.chain().clone(),
        code.coset_shift().map(<[u32]>::to_vec),
    )
}

/// Number of terms [`exact_error`] would touch.
pub fn error_term_count(code: &SmcCode, source: &JointSource, cap: u64) -> Result<u64> {
    let y = checked_count(code.chain().w_y().outputs() as u64, code.n() as u32, cap)?;
    let z = z_outputs(code, cap)?;
    let m = source.probs().len() as u64 * code.layout().pad_count();
    checked_product(&[y.max(z), m], cap)
}

/// Exact `(P_b, P_e)`: Bob errs when `(s0, secrets)` is wrong, Eve when `s0` is.
pub fn exact_error(code: &SmcCode, source: &JointSource, cap: u64) -> Result<(f64, f64)> {
    check_source(code, source)?;
    error_term_count(code, source, cap)?;
    let n = code.n();
    let ny = code.chain().w_y().outputs();
    let nz = code.chain().w_z().outputs();
    let y_count = ny.pow(n as u32);
    let z_count = nz.pow(n as u32);
    let digits = |mut i: usize, base: usize| -> Vec<u32> {
        (0..n)
            .map(|_| {
                let d = i % base;
                i /= base;
                d as u32
            })
            .collect()
    };
    let bob = map_indexed(y_count, |y| code.decode_bob(&digits(y, ny)));
    let eve = map_indexed(z_count, |z| code.decode_eve(&digits(z, nz)));
    let p_yv = code.chain().p_y_given_v();
    let pads = code.layout().pad_count();
    let probs = source.probs().probs();
    let terms = map_indexed(probs.len(), |idx| {
        let p = probs[idx];
        if p == 0.0 {
            return (0.0, 0.0);
        }
        let d = source.digits(idx);
        let s0 = d[0];
        let secrets: Vec<u64> = d[1..].iter().map(|&x| x as u64).collect();
        let (mut ok_b, mut ok_e) = (KahanSum::new(), KahanSum::new());
        for pad in 0..pads {
            let (b1, b2) = code.mix(&secrets, pad).expect("in-range messages");
            let v = code.codeword(s0, b1, b2);
            for (y, py) in word_law(&p_yv, v).into_iter().enumerate() {
                if py > 0.0 && bob[y].0 == s0 && bob[y].1 == secrets {
                    ok_b.add(py);
                }
            }
            for (z, pz) in code.z_law_of_word(v).into_iter().enumerate() {
                if pz > 0.0 && eve[z] == s0 {
                    ok_e.add(pz);
                }
            }
        }
        let scale = p / pads as f64;
        (scale * ok_b.value(), scale * ok_e.value())
    });
    let (ob, oe): (KahanSum, KahanSum) = (terms.iter().map(|t| t.0).collect(), terms.iter().map(|t| t.1).collect());
    Ok(((1.0 - ob.value()).max(0.0), (1.0 - oe.value()).max(0.0)))
}
