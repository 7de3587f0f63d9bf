//! Superposition codebooks, the two encoder constructions, maximum-likelihood decoders,
//! Monte Carlo simulation and the practical rate-allocation search.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::{sample_map_with, AffineMap, FieldVec, MessageLayout};
use crate::exec::{map_indexed, stream_rng};
use crate::exponents::{practical_from_phi, Construction, IndexSet};
use crate::gallager::{phi_max, phi_single};
use crate::numeric::{checked_product, log_sum_exp};
use crate::probability::{ChainSpec, Channel, Distribution};
use crate::renyi::JointSource;
use crate::{Error, Result};

/// Explicit superposition codebook.
///
/// Cloud index `c = s0 + |S_0|·b1`; satellite index `c + |S_0||B_1|·b2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCodebook")]
pub struct BcdCodebook {
    pub n: usize,
    pub u_size: usize,
    pub v_size: usize,
    pub s0_count: usize,
    pub b1_count: usize,
    pub b2_count: usize,
    /// Cloud centres, `U`-strings.
    pub table_c: Vec<Vec<u32>>,
    /// Satellites, `V`-strings.
    pub table_p: Vec<Vec<u32>>,
}

#[derive(Deserialize)]
struct RawCodebook {
    n: usize,
    u_size: usize,
    v_size: usize,
    s0_count: usize,
    b1_count: usize,
    b2_count: usize,
    table_c: Vec<Vec<u32>>,
    table_p: Vec<Vec<u32>>,
}

impl TryFrom<RawCodebook> for BcdCodebook {
    type Error = Error;
    fn try_from(r: RawCodebook) -> Result<Self> {
        let cb = BcdCodebook {
            n: r.n,
            u_size: r.u_size,
            v_size: r.v_size,
            s0_count: r.s0_count,
            b1_count: r.b1_count,
            b2_count: r.b2_count,
            table_c: r.table_c,
            table_p: r.table_p,
        };
        cb.validate()?;
        Ok(cb)
    }
}

impl BcdCodebook {
    pub fn validate(&self) -> Result<()> {
        let clouds = self.s0_count * self.b1_count;
        if self.table_c.len() != clouds || self.table_p.len() != clouds * self.b2_count {
            return Err(Error::dims("codebook tables do not match the message counts"));
        }
        if self.n == 0 || self.u_size == 0 || self.v_size == 0 {
            return Err(Error::dims("empty codebook alphabet or blocklength"));
        }
        for (s, size) in [(&self.table_c, self.u_size), (&self.table_p, self.v_size)] {
            for w in s {
                if w.len() != self.n {
                    return Err(Error::dims("codeword of the wrong length"));
                }
                if w.iter().any(|&x| x as usize >= size) {
                    return Err(Error::dims("codeword symbol outside the alphabet"));
                }
            }
        }
        Ok(())
    }

    pub fn clouds(&self) -> usize {
        self.s0_count * self.b1_count
    }

    pub fn cloud_index(&self, s0: usize, b1: usize) -> usize {
        s0 + self.s0_count * b1
    }

    pub fn satellite_index(&self, s0: usize, b1: usize, b2: usize) -> usize {
        self.cloud_index(s0, b1) + self.clouds() * b2
    }

    pub fn satellite(&self, s0: usize, b1: usize, b2: usize) -> &[u32] {
        &self.table_p[self.satellite_index(s0, b1, b2)]
    }

    /// Random codebook: U-strings i.i.d. from `P_U`, V-strings letterwise from `P_{V|U}`.
    pub fn sample(chain: &ChainSpec, counts: (usize, usize, usize), n: usize, seed: u64) -> Result<Self> {
        let (s0_count, b1_count, b2_count) = counts;
        if n == 0 || s0_count == 0 || b1_count == 0 || b2_count == 0 {
            return Err(Error::RangeViolation("codebook sizes must be positive".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let p_u = chain.p_u();
        let rows: Vec<Distribution> = (0..chain.u_size())
            .map(|u| chain.p_v_given_u().row_distribution(u))
            .collect();
        let clouds = s0_count * b1_count;
        let table_c: Vec<Vec<u32>> = (0..clouds)
            .map(|_| (0..n).map(|_| p_u.sample(&mut rng) as u32).collect())
            .collect();
        let mut table_p = Vec::with_capacity(clouds * b2_count);
        for _ in 0..b2_count {
            for c in &table_c {
                table_p.push(c.iter().map(|&u| rows[u as usize].sample(&mut rng) as u32).collect());
            }
        }
        Ok(Self {
            n,
            u_size: chain.u_size(),
            v_size: chain.v_size(),
            s0_count,
            b1_count,
            b2_count,
            table_c,
            table_p,
        })
    }

    /// Linear code `m ↦ m·G` over `F_q`, symbols mapped to `V = F_q`.
    ///
    /// `generator` has one row per message coordinate. The message vector is
    /// `(s0 digits, b1 digits, b2 digits)`, each little-endian.
    pub fn from_generator(q: u64, generator: &[Vec<u64>], k0_dim: usize, b1_dim: usize) -> Result<Self> {
        let k = generator.len();
        let n = generator.first().map_or(0, Vec::len);
        if n == 0 || generator.iter().any(|r| r.len() != n) {
            return Err(Error::dims("generator rows must be nonempty and equal length"));
        }
        if generator.iter().flatten().any(|&g| g >= q) {
            return Err(Error::RangeViolation(format!("generator digits must be below {q}")));
        }
        if k0_dim + b1_dim > k {
            return Err(Error::dims("message split exceeds the code dimension"));
        }
        let b2_dim = k - k0_dim - b1_dim;
        let pw = |d: usize| q.pow(d as u32) as usize;
        let (s0_count, b1_count, b2_count) = (pw(k0_dim), pw(b1_dim), pw(b2_dim));
        let encode = |m: &[u64]| -> Vec<u32> {
            (0..n)
                .map(|j| (m.iter().zip(generator).map(|(a, row)| a * row[j]).sum::<u64>() % q) as u32)
                .collect()
        };
        let clouds = s0_count * b1_count;
        let mut table_p = Vec::with_capacity(clouds * b2_count);
        for b2 in 0..b2_count {
            for b1 in 0..b1_count {
                for s0 in 0..s0_count {
                    let mut m = FieldVec::from_index(q, k0_dim, s0 as u64).coords;
                    m.extend(FieldVec::from_index(q, b1_dim, b1 as u64).coords);
                    m.extend(FieldVec::from_index(q, b2_dim, b2 as u64).coords);
                    table_p.push(encode(&m));
                }
            }
        }
        Ok(Self {
            n,
            u_size: 1,
            v_size: q as usize,
            s0_count,
            b1_count,
            b2_count,
            table_c: vec![vec![0; n]; clouds],
            table_p,
        })
    }
}

/// Parse plain-text generator rows: one row per line, base-q digits separated by
/// whitespace or commas (or packed without separators when `q ≤ 10`).
pub fn parse_generator(text: &str, q: u64) -> Result<Vec<Vec<u64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let digits: Result<Vec<u64>> = if parts.len() == 1 && q <= 10 {
            parts[0]
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(u64::from)
                        .ok_or_else(|| Error::spec(format!("row {i}"), "bad digit"))
                })
                .collect()
        } else {
            parts
                .iter()
                .map(|p| p.parse::<u64>().map_err(|e| Error::spec(format!("row {i}"), e)))
                .collect()
        };
        let digits = digits?;
        if digits.iter().any(|&d| d >= q) {
            return Err(Error::spec(format!("row {i}"), format!("digit not below {q}")));
        }
        rows.push(digits);
    }
    if rows.is_empty() {
        return Err(Error::spec("generator", "no rows"));
    }
    Ok(rows)
}

/// What the encoder did, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub b1: usize,
    pub b2: usize,
    pub pad: u64,
    pub v: Vec<u32>,
}

/// A concrete secure multiplex code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCode", into = "RawCode")]
pub struct SmcCode {
    layout: MessageLayout,
    codebook: BcdCodebook,
    mixer: AffineMap,
    construction: Construction,
    chain: ChainSpec,
    coset_shift: Option<Vec<u32>>,
    words: Vec<u32>,
    log_y: Vec<f64>,
    log_z: Vec<f64>,
    p_z_v: Channel,
}

#[derive(Serialize, Deserialize)]
struct RawCode {
    layout: MessageLayout,
    codebook: BcdCodebook,
    mixer: AffineMap,
    construction: Construction,
    chain: ChainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coset_shift: Option<Vec<u32>>,
}

impl TryFrom<RawCode> for SmcCode {
    type Error = Error;
    fn try_from(r: RawCode) -> Result<Self> {
        SmcCode::new(r.layout, r.codebook, r.mixer, r.construction, r.chain, r.coset_shift)
    }
}

impl From<SmcCode> for RawCode {
    fn from(c: SmcCode) -> Self {
        RawCode {
            layout: c.layout,
            codebook: c.codebook,
            mixer: c.mixer,
            construction: c.construction,
            chain: c.chain,
            coset_shift: c.coset_shift,
        }
    }
}

/// `m` with `v_size = q^m`, if any.
fn field_power(q: u64, v_size: usize) -> Option<usize> {
    let mut acc = 1usize;
    for m in 0..=32 {
        if acc == v_size {
            return Some(m);
        }
        acc = acc.checked_mul(q as usize)?;
    }
    None
}

fn add_symbol(q: u64, m: usize, v: u32, g: u32) -> u32 {
    let a = FieldVec::from_index(q, m, v as u64);
    let b = FieldVec::from_index(q, m, g as u64);
    a.add(&b).to_index() as u32
}

fn log_table(w: &Channel) -> Vec<f64> {
    w.rows().flatten().map(|&p| p.ln()).collect()
}

impl SmcCode {
    pub fn new(
        layout: MessageLayout,
        codebook: BcdCodebook,
        mixer: AffineMap,
        construction: Construction,
        chain: ChainSpec,
        coset_shift: Option<Vec<u32>>,
    ) -> Result<Self> {
        codebook.validate()?;
        let counts = (
            layout.s0_count() as usize,
            layout.b1_count() as usize,
            layout.b2_count() as usize,
        );
        if counts != (codebook.s0_count, codebook.b1_count, codebook.b2_count) {
            return Err(Error::dims(format!(
                "layout has (|S_0|, |B_1|, |B_2|) = {counts:?}, codebook has ({}, {}, {})",
                codebook.s0_count, codebook.b1_count, codebook.b2_count
            )));
        }
        if codebook.u_size != chain.u_size() || codebook.v_size != chain.v_size() {
            return Err(Error::dims("codebook alphabets differ from the chain"));
        }
        if mixer.q() != layout.q || mixer.dim() != layout.total_dim() {
            return Err(Error::dims("mixer must act on B_1 × B_2"));
        }
        if construction == Construction::Second {
            if layout.b1_dim != 0 {
                return Err(Error::dims("second construction has no B_1"));
            }
            if mixer != AffineMap::identity(layout.q, layout.total_dim()) {
                return Err(Error::dims("second construction uses the identity mixer"));
            }
        }
        let n = codebook.n;
        let mut words = Vec::with_capacity(codebook.table_p.len() * n);
        match &coset_shift {
            None => words.extend(codebook.table_p.iter().flatten()),
            Some(g) => {
                let m = field_power(layout.q, codebook.v_size)
                    .ok_or_else(|| Error::dims("a coset shift needs |V| to be a power of q"))?;
                if g.len() != n || g.iter().any(|&x| x as usize >= codebook.v_size) {
                    return Err(Error::dims("coset shift must be a V-string of length n"));
                }
                for w in &codebook.table_p {
                    words.extend(w.iter().zip(g).map(|(&v, &s)| add_symbol(layout.q, m, v, s)));
                }
            }
        }
        let p_z_v = chain.p_z_given_v();
        Ok(Self {
            log_y: log_table(&chain.p_y_given_v()),
            log_z: log_table(&p_z_v),
            p_z_v,
            words,
            layout,
            codebook,
            mixer,
            construction,
            chain,
            coset_shift,
        })
    }

    /// Second construction: the packed secrets index the private codebook directly.
    pub fn second(layout: MessageLayout, codebook: BcdCodebook, chain: ChainSpec) -> Result<Self> {
        let mixer = AffineMap::identity(layout.q, layout.total_dim());
        Self::new(layout, codebook, mixer, Construction::Second, chain, None)
    }

    pub fn layout(&self) -> &MessageLayout {
        &self.layout
    }
    pub fn codebook(&self) -> &BcdCodebook {
        &self.codebook
    }
    pub fn mixer(&self) -> &AffineMap {
        &self.mixer
    }
    pub fn construction(&self) -> Construction {
        self.construction
    }
    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }
    pub fn coset_shift(&self) -> Option<&[u32]> {
        self.coset_shift.as_deref()
    }
    pub fn n(&self) -> usize {
        self.codebook.n
    }
    /// Per-letter `P_{Z|V}`.
    pub fn p_z_given_v(&self) -> &Channel {
        &self.p_z_v
    }

    /// Transmitted V-string (after any coset shift) for `(s0, b1, b2)`.
    pub fn codeword(&self, s0: usize, b1: usize, b2: usize) -> &[u32] {
        let n = self.n();
        let i = self.codebook.satellite_index(s0, b1, b2);
        &self.words[i * n..(i + 1) * n]
    }

    /// Pick `(b1, b2)` for secrets and padding.
    pub fn mix(&self, secrets: &[u64], pad: u64) -> Result<(usize, usize)> {
        let a = self.layout.pack(secrets, pad)?;
        let b = self.mixer.apply(&a)?;
        let (b1, b2) = self.layout.split(&b);
        Ok((b1 as usize, b2 as usize))
    }

    /// Inverse of [`SmcCode::mix`].
    pub fn unmix(&self, b1: usize, b2: usize) -> (Vec<u64>, u64) {
        let b = self.layout.join(b1 as u64, b2 as u64);
        let a = self.mixer.invert(&b).expect("layout-sized vector");
        self.layout.unpack(&a).expect("layout-sized vector")
    }

    fn check_messages(&self, s0: usize, secrets: &[u64]) -> Result<()> {
        let limit = self.layout.s0_count();
        if s0 as u64 >= limit {
            return Err(Error::IndexOutOfRange {
                index: s0 as u64,
                limit,
            });
        }
        if secrets.len() != self.layout.t() {
            return Err(Error::dims(format!("expected {} secrets", self.layout.t())));
        }
        Ok(())
    }

    /// Encode with the encoder's private randomness (padding and Ξ) drawn from `rng`.
    pub fn encode_with<R: Rng + ?Sized>(
        &self,
        s0: usize,
        secrets: &[u64],
        rng: &mut R,
    ) -> Result<(Vec<u32>, Transcript)> {
        self.check_messages(s0, secrets)?;
        let pad = if self.layout.pad_count() > 1 {
            rng.random_range(0..self.layout.pad_count())
        } else {
            0
        };
        let (b1, b2) = self.mix(secrets, pad)?;
        let v = self.codeword(s0, b1, b2).to_vec();
        let xi = self.chain.xi();
        let x = v
            .iter()
            .map(|&sym| row_sample(xi.row(sym as usize), rng) as u32)
            .collect();
        Ok((x, Transcript { b1, b2, pad, v }))
    }

    /// Deterministic encoding keyed by `channel_seed`.
    pub fn encode(&self, s0: usize, secrets: &[u64], channel_seed: u64) -> Result<(Vec<u32>, Transcript)> {
        self.encode_with(s0, secrets, &mut stream_rng(channel_seed, 0))
    }

    fn log_likelihood(table: &[f64], outputs: usize, word: &[u32], obs: &[u32]) -> f64 {
        word.iter()
            .zip(obs)
            .map(|(&v, &y)| table[v as usize * outputs + y as usize])
            .sum()
    }

    /// Maximum-likelihood decoding of `(s0, b1, b2)` under `P_{Y|V}`; ties go to the
    /// first candidate in `(s0, b1, b2)` lexicographic order.
    pub fn decode_bob_indices(&self, y: &[u32]) -> (usize, usize, usize) {
        let outputs = self.chain.w_y().outputs();
        let cb = &self.codebook;
        let mut best = (0, 0, 0);
        let mut best_ll = f64::NEG_INFINITY;
        for s0 in 0..cb.s0_count {
            for b1 in 0..cb.b1_count {
                for b2 in 0..cb.b2_count {
                    let ll = Self::log_likelihood(&self.log_y, outputs, self.codeword(s0, b1, b2), y);
                    if ll > best_ll {
                        best_ll = ll;
                        best = (s0, b1, b2);
                    }
                }
            }
        }
        best
    }

    /// Bob's estimate of `(s0, secrets)`.
    pub fn decode_bob(&self, y: &[u32]) -> (usize, Vec<u64>) {
        let (s0, b1, b2) = self.decode_bob_indices(y);
        (s0, self.unmix(b1, b2).0)
    }

    /// Eve's ML estimate of `s0`, with the likelihood averaged over uniform `(b1, b2)`.
    pub fn decode_eve(&self, z: &[u32]) -> usize {
        let outputs = self.chain.w_z().outputs();
        let cb = &self.codebook;
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(cb.b1_count * cb.b2_count);
        for s0 in 0..cb.s0_count {
            terms.clear();
            for b1 in 0..cb.b1_count {
                for b2 in 0..cb.b2_count {
                    terms.push(Self::log_likelihood(&self.log_z, outputs, self.codeword(s0, b1, b2), z));
                }
            }
            let ll = log_sum_exp(&terms);
            if ll > best_ll {
                best_ll = ll;
                best = s0;
            }
        }
        best
    }

    /// Law of `Z^n` given the V-string `v`, over `|Z|^n` outputs (little-endian).
    pub fn z_law_of_word(&self, v: &[u32]) -> Vec<f64> {
        word_law(&self.p_z_v, v)
    }

    /// Law of `Y^n` given the V-string `v`.
    pub fn y_law_of_word(&self, v: &[u32]) -> Vec<f64> {
        word_law(&self.chain.p_y_given_v(), v)
    }
}

/// `Π_t W(·|v_t)` as a flat vector over output strings, first letter fastest.
pub fn word_law(w: &Channel, v: &[u32]) -> Vec<f64> {
    let mut law = vec![1.0];
    for &sym in v {
        let row = w.row(sym as usize);
        let mut next = Vec::with_capacity(law.len() * row.len());
        for &p in row {
            next.extend(law.iter().map(|&q| q * p));
        }
        law = next;
    }
    law
}

fn row_sample<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Monte Carlo error rates with Wilson 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: u64,
    pub bob_errors: u64,
    pub eve_errors: u64,
    pub p_b: f64,
    pub p_e: f64,
    pub ci_b: (f64, f64),
    pub ci_e: (f64, f64),
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Trials per work unit; each unit draws from its own generator stream.
pub const SIM_CHUNK: u64 = 4096;

fn message_shape(code: &SmcCode) -> Vec<usize> {
    let mut shape = vec![code.layout.s0_count() as usize];
    shape.extend(code.layout.message_counts().iter().map(|&c| c as usize));
    shape
}

/// Simulate `trials` transmissions with messages drawn from `source`, whose shape must
/// be `[|S_0|, |S_1|, …, |S_T|]`.
pub fn simulate(code: &SmcCode, source: &JointSource, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::RangeViolation("trials must be at least 1".into()));
    }
    if source.shape() != message_shape(code).as_slice() {
        return Err(Error::dims(format!(
            "source shape {:?} differs from the code's message shape {:?}",
            source.shape(),
            message_shape(code)
        )));
    }
    let chunks = trials.div_ceil(SIM_CHUNK);
    let w_y = code.chain.w_y();
    let w_z = code.chain.w_z();
    let counts = map_indexed(chunks as usize, |chunk| {
        let mut rng: ChaCha8Rng = stream_rng(seed, chunk as u64);
        let start = chunk as u64 * SIM_CHUNK;
        let len = SIM_CHUNK.min(trials - start);
        let (mut eb, mut ee) = (0u64, 0u64);
        for _ in 0..len {
            let digits = source.digits(source.probs().sample(&mut rng));
            let s0 = digits[0];
            let secrets: Vec<u64> = digits[1..].iter().map(|&d| d as u64).collect();
            let (x, _) = code.encode_with(s0, &secrets, &mut rng).expect("in-range messages");
            let y: Vec<u32> = x
                .iter()
                .map(|&s| row_sample(w_y.row(s as usize), &mut rng) as u32)
                .collect();
            let z: Vec<u32> = x
                .iter()
                .map(|&s| row_sample(w_z.row(s as usize), &mut rng) as u32)
                .collect();
            if code.decode_bob(&y) != (s0, secrets) {
                eb += 1;
            }
            if code.decode_eve(&z) != s0 {
                ee += 1;
            }
        }
        (eb, ee)
    });
    let (bob_errors, eve_errors) = counts.iter().fold((0, 0), |(a, b), &(x, y)| (a + x, b + y));
    Ok(SimReport {
        trials,
        bob_errors,
        eve_errors,
        p_b: bob_errors as f64 / trials as f64,
        p_e: eve_errors as f64 / trials as f64,
        ci_b: wilson_interval(bob_errors, trials),
        ci_e: wilson_interval(eve_errors, trials),
    })
}

/// Draw a codebook for `layout` at blocklength `n`. With `oracle_cap` set, the draw is
/// refused when exhaustive oracles on the result would exceed the cap.
pub fn sample_codebook(
    chain: &ChainSpec,
    layout: &MessageLayout,
    n: usize,
    seed: u64,
    oracle_cap: Option<u64>,
) -> Result<BcdCodebook> {
    let counts = (
        layout.s0_count() as usize,
        layout.b1_count() as usize,
        layout.b2_count() as usize,
    );
    if let Some(cap) = oracle_cap {
        let mut factors = vec![counts.0 as u64, counts.1 as u64, counts.2 as u64];
        factors.extend(std::iter::repeat_n(
            chain.w_z().outputs().max(chain.w_y().outputs()) as u64,
            n,
        ));
        checked_product(&factors, cap)?;
    }
    BcdCodebook::sample(chain, counts, n, seed)
}

/// Rényi profile of a candidate layout: `H_{1+ρ}(S_{I^c}, pad | S_I, S_0)`.
pub trait LayoutProfile: Sync {
    fn renyi(&self, layout: &MessageLayout, set: IndexSet, rho: f64) -> f64;
}

/// Independent uniform secrets: `(Σ_{i∉I} k_i + pad) ln q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformProfile;

impl LayoutProfile for UniformProfile {
    fn renyi(&self, layout: &MessageLayout, set: IndexSet, _rho: f64) -> f64 {
        let t = layout.t();
        let dims: usize = set.complement(t).iter().map(|i| layout.k[i - 1]).sum::<usize>() + layout.pad_dim();
        dims as f64 * (layout.q as f64).ln()
    }
}

/// A fixed base code handed to the practical construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCode {
    pub q: u64,
    pub k0: usize,
    pub b1_dim: usize,
    pub b2_dim: usize,
    pub codebook: BcdCodebook,
}

impl BaseCode {
    pub fn new(q: u64, k0: usize, b1_dim: usize, b2_dim: usize, codebook: BcdCodebook) -> Result<Self> {
        let pw = |d: usize| q.pow(d as u32) as usize;
        if (pw(k0), pw(b1_dim), pw(b2_dim)) != (codebook.s0_count, codebook.b1_count, codebook.b2_count) {
            return Err(Error::dims("base code dimensions disagree with its tables"));
        }
        Ok(Self {
            q,
            k0,
            b1_dim,
            b2_dim,
            codebook,
        })
    }

    /// From a generator matrix (see [`BcdCodebook::from_generator`]).
    pub fn from_generator(q: u64, generator: &[Vec<u64>], k0: usize, b1_dim: usize) -> Result<Self> {
        let codebook = BcdCodebook::from_generator(q, generator, k0, b1_dim)?;
        let b2_dim = generator.len() - k0 - b1_dim;
        Self::new(q, k0, b1_dim, b2_dim, codebook)
    }

    /// Total dimension of `B_1 × B_2`.
    pub fn dim(&self) -> usize {
        self.b1_dim + self.b2_dim
    }
}

/// Parameters of the practical rate allocation.
#[derive(Clone)]
pub struct PracticalParams<'a> {
    pub base: &'a BaseCode,
    pub chain: &'a ChainSpec,
    pub t: usize,
    /// `ε_I` for each nonempty `I`, indexed by `I.0 − 1`.
    pub targets: Vec<f64>,
    pub eps2: f64,
    pub rho_grid: Vec<f64>,
    pub profile: &'a dyn LayoutProfile,
    pub has_common: bool,
}

/// Bound check for one index set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PracticalRow {
    pub set: IndexSet,
    pub bound: f64,
    pub target: f64,
    pub slack: f64,
    pub rho: f64,
}

/// Output of [`construct_practical`].
#[derive(Debug, Clone)]
pub struct PracticalResult {
    pub layout: MessageLayout,
    pub code: SmcCode,
    pub report: Vec<PracticalRow>,
}

impl<'a> PracticalParams<'a> {
    fn validate(&self) -> Result<()> {
        if self.t == 0 || self.t > 16 {
            return Err(Error::RangeViolation("T must be in 1..=16".into()));
        }
        if self.targets.len() != (1 << self.t) - 1 {
            return Err(Error::dims(format!(
                "need {} targets, one per nonempty index set",
                (1 << self.t) - 1
            )));
        }
        if self.targets.iter().any(|&e| e.is_nan() || e <= 0.0) {
            return Err(Error::RangeViolation("targets must be positive".into()));
        }
        if !(self.eps2 > 0.0 && self.eps2 <= 1.0) {
            return Err(Error::RangeViolation("eps2 must lie in (0, 1]".into()));
        }
        if self.rho_grid.is_empty() || self.rho_grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::RhoOutOfRange(
                self.rho_grid
                    .iter()
                    .copied()
                    .find(|&r| !(r > 0.0 && r < 1.0))
                    .unwrap_or(f64::NAN),
            ));
        }
        if self.chain.v_size() != self.base.codebook.v_size || self.chain.u_size() != self.base.codebook.u_size {
            return Err(Error::dims("chain alphabets differ from the base code"));
        }
        Ok(())
    }

    /// `φ*(ρ)` on the grid.
    pub fn phi_star(&self) -> Result<Vec<f64>> {
        let w = self.chain.p_z_given_v();
        let uniform = Distribution::uniform(w.inputs());
        let has_common = self.has_common;
        crate::exec::try_map_indexed(self.rho_grid.len(), |i| {
            let rho = self.rho_grid[i];
            if has_common {
                phi_max(rho, &w).map(|m| m.value)
            } else {
                phi_single(rho, &w, &uniform)
            }
        })
    }

    pub fn layout_for(&self, k: &[usize]) -> Result<MessageLayout> {
        MessageLayout::new(
            self.base.q,
            self.base.k0,
            k.to_vec(),
            self.base.b1_dim,
            self.base.b2_dim,
        )
    }

    /// Evaluate every index set's bound for a layout, from scratch.
    pub fn evaluate(&self, layout: &MessageLayout, phi_star: &[f64]) -> Vec<PracticalRow> {
        let n = self.base.codebook.n;
        let scale = 2f64.powi(self.t as i32);
        IndexSet::nonempty_subsets(self.t)
            .map(|set| {
                let target = self.eps2 * self.targets[set.0 as usize - 1] / scale;
                let (mut bound, mut arg) = (f64::INFINITY, self.rho_grid[0]);
                for (&rho, &phi) in self.rho_grid.iter().zip(phi_star) {
                    let h = self.profile.renyi(layout, set, rho);
                    let b = practical_from_phi(rho, phi, n, h, 0.0).leakage;
                    if b < bound {
                        bound = b;
                        arg = rho;
                    }
                }
                PracticalRow {
                    set,
                    bound,
                    target,
                    slack: target - bound,
                    rho: arg,
                }
            })
            .collect()
    }
}

/// Every dimension vector of length `t` with entry sum at most `total`, sorted by
/// decreasing sum and then lexicographically.
fn candidate_dims(t: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(t: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(t, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(t, total, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| {
        let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
        sb.cmp(&sa).then_with(|| a.cmp(b))
    });
    out
}

/// Sample the mixing layer for a layout. With a common message this is `(F′, G′)`;
/// without one the offset is replaced by a uniform coset shift of V-space.
pub fn practical_code(
    base: &BaseCode,
    chain: &ChainSpec,
    layout: &MessageLayout,
    has_common: bool,
    rng: &mut ChaCha8Rng,
) -> Result<SmcCode> {
    let dim = layout.total_dim();
    if dim == 0 {
        return Err(Error::Infeasible("base code carries no secret dimensions".into()));
    }
    let mut mixer = sample_map_with(layout.q, dim, rng)?;
    let shift = if has_common {
        None
    } else {
        mixer = mixer.with_offset(vec![0; dim])?;
        let v = base.codebook.v_size as u32;
        Some((0..base.codebook.n).map(|_| rng.random_range(0..v)).collect())
    };
    SmcCode::new(
        layout.clone(),
        base.codebook.clone(),
        mixer,
        Construction::First,
        chain.clone(),
        shift,
    )
}

/// Exhaustive search for the largest dimension vector whose ensemble-average leakage
/// bound meets `ε_2 ε_I / 2^T` for every nonempty `I`, followed by a draw of the mixing
/// layer. By Markov's inequality the draw violates some `ε_I` with probability at most
/// `ε_2`.
pub fn construct_practical(params: &PracticalParams, seed: u64) -> Result<PracticalResult> {
    params.validate()?;
    let phi_star = params.phi_star()?;
    for k in candidate_dims(params.t, params.base.dim()) {
        if k.iter().all(|&x| x == 0) {
            break;
        }
        let layout = params.layout_for(&k)?;
        let report = params.evaluate(&layout, &phi_star);
        if report.iter().all(|r| r.bound <= r.target) {
            let mut rng = stream_rng(seed, 0);
            let code = practical_code(params.base, params.chain, &layout, params.has_common, &mut rng)?;
            return Ok(PracticalResult { layout, code, report });
        }
    }
    Err(Error::Infeasible(
        "no nonzero layout meets every leakage target on the rho grid".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repetition_code(p: f64) -> SmcCode {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(p), Channel::bsc(0.3)).unwrap();
        let layout = MessageLayout::exact(2, 0, vec![1], 0).unwrap();
        let cb = BcdCodebook::from_generator(2, &[vec![1, 1, 1]], 0, 0).unwrap();
        SmcCode::second(layout, cb, chain).unwrap()
    }

    #[test]
    fn repetition_decodes_majority() {
        let code = repetition_code(0.1);
        assert_eq!(code.decode_bob(&[0, 1, 0]), (0, vec![0]));
        assert_eq!(code.decode_bob(&[1, 1, 0]), (0, vec![1]));
    }

    #[test]
    fn tie_goes_to_smallest() {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(0.1), Channel::bsc(0.1)).unwrap();
        let layout = MessageLayout::exact(2, 0, vec![1], 0).unwrap();
        let cb = BcdCodebook::from_generator(2, &[vec![1, 1]], 0, 0).unwrap();
        let code = SmcCode::second(layout, cb, chain).unwrap();
        assert_eq!(code.decode_bob(&[0, 1]), (0, vec![0]));
        assert_eq!(code.decode_bob(&[1, 0]), (0, vec![0]));
    }

    #[test]
    fn noiseless_round_trip_first_construction() {
        let chain = ChainSpec::new(
            Distribution::uniform(2),
            Channel::new(vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]]).unwrap(),
            Channel::identity(4),
            Channel::identity(4),
            Channel::identity(4),
        )
        .unwrap();
        let layout = MessageLayout::exact(2, 1, vec![1, 2], 1).unwrap();
        for seed in 0..5 {
            let cb = sample_codebook(&chain, &layout, 6, seed, None).unwrap();
            let distinct: std::collections::HashSet<_> = cb.table_p.iter().collect();
            if distinct.len() != cb.table_p.len() {
                continue;
            }
            let mixer = crate::affine::sample_map(2, 3, seed).unwrap();
            let code = SmcCode::new(layout.clone(), cb, mixer, Construction::First, chain.clone(), None).unwrap();
            for s0 in 0..2 {
                for s1 in 0..2 {
                    for s2 in 0..4 {
                        let (x, tr) = code.encode(s0, &[s1, s2], 11).unwrap();
                        assert_eq!(x, tr.v);
                        assert_eq!(code.decode_bob(&x), (s0, vec![s1, s2]));
                        assert_eq!(code.decode_eve(&x), s0);
                    }
                }
            }
        }
    }

    #[test]
    fn one_time_pad_encoding() {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::identity(2)).unwrap();
        let layout = MessageLayout::exact(2, 0, vec![1, 1], 0).unwrap();
        let cb = BcdCodebook {
            n: 1,
            u_size: 1,
            v_size: 2,
            s0_count: 1,
            b1_count: 1,
            b2_count: 4,
            table_c: vec![vec![0]],
            table_p: vec![vec![0], vec![1], vec![0], vec![1]],
        };
        let mixer = AffineMap::new(2, vec![vec![1, 1], vec![0, 1]], vec![0, 0]).unwrap();
        let code = SmcCode::new(layout, cb, mixer, Construction::First, chain, None).unwrap();
        for s1 in 0..2u64 {
            for s2 in 0..2u64 {
                let (x, _) = code.encode(0, &[s1, s2], 0).unwrap();
                assert_eq!(x, vec![((s1 + s2) % 2) as u32]);
            }
        }
    }

    #[test]
    fn codebook_determinism_and_constant_clouds() {
        let chain = ChainSpec::wiretap(Distribution::uniform(3), Channel::identity(3), Channel::identity(3)).unwrap();
        let a = BcdCodebook::sample(&chain, (2, 2, 3), 3, 5).unwrap();
        let b = BcdCodebook::sample(&chain, (2, 2, 3), 3, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.table_c.iter().all(|c| c.iter().all(|&u| u == 0)));
    }

    #[test]
    fn simulate_noiseless_and_single_trial() {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::identity(2)).unwrap();
        let layout = MessageLayout::exact(2, 0, vec![2], 0).unwrap();
        let cb = BcdCodebook::from_generator(2, &[vec![1, 0, 1], vec![0, 1, 1]], 0, 0).unwrap();
        let code = SmcCode::second(layout, cb, chain).unwrap();
        let src = JointSource::uniform(vec![1, 4]).unwrap();
        let r = simulate(&code, &src, 5000, 3).unwrap();
        assert_eq!((r.p_b, r.p_e), (0.0, 0.0));
        let noisy = repetition_code(0.4);
        let r = simulate(&noisy, &JointSource::uniform(vec![1, 2]).unwrap(), 1, 9).unwrap();
        assert!(r.p_b == 0.0 || r.p_b == 1.0);
        assert!(simulate(&noisy, &src, 10, 0).is_err());
    }

    #[test]
    fn simulate_is_replayable() {
        let code = repetition_code(0.2);
        let src = JointSource::uniform(vec![1, 2]).unwrap();
        assert_eq!(
            simulate(&code, &src, 9000, 4).unwrap(),
            simulate(&code, &src, 9000, 4).unwrap()
        );
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(28, 1000);
        assert!(lo < 0.028 && 0.028 < hi);
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn generator_parsing() {
        assert_eq!(
            parse_generator("101\n011\n", 2).unwrap(),
            vec![vec![1, 0, 1], vec![0, 1, 1]]
        );
        assert_eq!(
            parse_generator("1 2\n# c\n0,4", 5).unwrap(),
            vec![vec![1, 2], vec![0, 4]]
        );
        assert!(parse_generator("102", 2).is_err());
    }

    #[test]
    fn candidate_order() {
        let c = candidate_dims(2, 2);
        assert_eq!(c[0], vec![0, 2]);
        assert_eq!(c[1], vec![1, 1]);
        assert_eq!(c.last().unwrap(), &vec![0, 0]);
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn coset_shift_requires_field_power() {
        let chain = ChainSpec::wiretap(Distribution::uniform(3), Channel::identity(3), Channel::identity(3)).unwrap();
        let layout = MessageLayout::exact(2, 0, vec![1], 0).unwrap();
        let cb = BcdCodebook {
            n: 1,
            u_size: 1,
            v_size: 3,
            s0_count: 1,
            b1_count: 1,
            b2_count: 2,
            table_c: vec![vec![0]],
            table_p: vec![vec![0], vec![1]],
        };
        let r = SmcCode::new(
            layout,
            cb,
            AffineMap::identity(2, 1),
            Construction::First,
            chain,
            Some(vec![1]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn practical_infeasible_tiny_target() {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::bsc(0.1)).unwrap();
        let base = BaseCode::from_generator(2, &[vec![1]], 0, 0).unwrap();
        let params = PracticalParams {
            base: &base,
            chain: &chain,
            t: 1,
            targets: vec![1e-12],
            eps2: 0.5,
            rho_grid: crate::numeric::linspace(0.05, 0.95, 19),
            profile: &UniformProfile,
            has_common: false,
        };
        assert!(matches!(construct_practical(&params, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn practical_huge_target_fills_space() {
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::bsc(0.2)).unwrap();
        let gen = vec![vec![1, 0, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]];
        let base = BaseCode::from_generator(2, &gen, 0, 0).unwrap();
        let params = PracticalParams {
            base: &base,
            chain: &chain,
            t: 2,
            targets: vec![1e9; 3],
            eps2: 0.5,
            rho_grid: crate::numeric::linspace(0.1, 0.9, 9),
            profile: &UniformProfile,
            has_common: false,
        };
        let r = construct_practical(&params, 1).unwrap();
        assert_eq!(r.layout.secret_dim(), 3);
        assert_eq!(r.layout.k, vec![0, 3]);
        assert!(r.report.iter().all(|x| x.slack >= 0.0));
    }
}
