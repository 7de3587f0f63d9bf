//! Prime-field vector spaces, invertible affine maps `a ↦ F a + G` and the layout that
//! identifies a tuple of secret messages with `B_1 × B_2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::stream_rng;
use crate::numeric::checked_count;
use crate::{Error, Result};

/// Default cap on `q^{dim²}` for [`enumerate_family`].
pub const FAMILY_CAP: u64 = 1_000_000;

/// Trial-division primality test.
pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn check_prime(q: u64) -> Result<()> {
    if is_prime(q) {
        Ok(())
    } else {
        Err(Error::NotPrime(q))
    }
}

fn pow_mod(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// A vector in `F_q^dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldVec {
    pub q: u64,
    pub coords: Vec<u64>,
}

impl FieldVec {
    pub fn new(q: u64, coords: Vec<u64>) -> Result<Self> {
        check_prime(q)?;
        if let Some(&c) = coords.iter().find(|&&c| c >= q) {
            return Err(Error::RangeViolation(format!("coordinate {c} not below q = {q}")));
        }
        Ok(Self { q, coords })
    }

    pub fn zero(q: u64, dim: usize) -> Self {
        Self {
            q,
            coords: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Little-endian base-q integer of the coordinates.
    pub fn to_index(&self) -> u64 {
        self.coords.iter().rev().fold(0, |acc, &c| acc * self.q + c)
    }

    pub fn from_index(q: u64, dim: usize, mut index: u64) -> Self {
        let coords = (0..dim)
            .map(|_| {
                let c = index % q;
                index /= q;
                c
            })
            .collect();
        Self { q, coords }
    }

    pub fn add(&self, other: &FieldVec) -> FieldVec {
        FieldVec {
            q: self.q,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| (a + b) % self.q)
                .collect(),
        }
    }

    pub fn sub(&self, other: &FieldVec) -> FieldVec {
        FieldVec {
            q: self.q,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| (a + self.q - b) % self.q)
                .collect(),
        }
    }
}

/// Row-major square matrix over `F_q`.
pub type Matrix = Vec<Vec<u64>>;

fn mat_vec(q: u64, m: &Matrix, v: &[u64]) -> Vec<u64> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(0, |acc, (a, b)| (acc + a * b) % q))
        .collect()
}

/// Inverse of a square matrix over `F_q`, or `None` when singular.
pub fn invert_matrix(q: u64, m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Vec<Vec<u64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u64::from(i == j)));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        let inv = inv_mod(a[col][col], q);
        for x in a[col].iter_mut() {
            *x = *x * inv % q;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                let pivot = a[col].clone();
                for (x, &p) in a[r].iter_mut().zip(&pivot) {
                    *x = (*x + q * q - f * p % q) % q;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Determinant modulo `q`.
pub fn determinant(q: u64, m: &Matrix) -> u64 {
    let n = m.len();
    let mut a = m.clone();
    let mut det = 1u64;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| a[r][col] != 0) else {
            return 0;
        };
        if pivot != col {
            a.swap(col, pivot);
            det = (q - det) % q;
        }
        det = det * a[col][col] % q;
        let inv = inv_mod(a[col][col], q);
        for r in col + 1..n {
            let f = a[r][col] * inv % q;
            let pivot = a[col].clone();
            for (x, &p) in a[r].iter_mut().zip(&pivot).skip(col) {
                *x = (*x + q * q - f * p % q) % q;
            }
        }
    }
    det
}

/// `Λ_{F,G}(a) = F a + G` with `F` invertible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMap")]
pub struct AffineMap {
    q: u64,
    dim: usize,
    matrix: Matrix,
    offset: Vec<u64>,
    #[serde(skip)]
    inverse: Matrix,
}

#[derive(Deserialize)]
struct RawMap {
    q: u64,
    dim: usize,
    matrix: Matrix,
    offset: Vec<u64>,
}

impl TryFrom<RawMap> for AffineMap {
    type Error = Error;
    fn try_from(r: RawMap) -> Result<Self> {
        let m = AffineMap::new(r.q, r.matrix, r.offset)?;
        if m.dim != r.dim {
            return Err(Error::dims("dim disagrees with the matrix size"));
        }
        Ok(m)
    }
}

impl AffineMap {
    pub fn new(q: u64, matrix: Matrix, offset: Vec<u64>) -> Result<Self> {
        check_prime(q)?;
        let dim = matrix.len();
        if matrix.iter().any(|r| r.len() != dim) || offset.len() != dim {
            return Err(Error::dims("matrix must be square and match the offset"));
        }
        if matrix.iter().flatten().chain(&offset).any(|&x| x >= q) {
            return Err(Error::RangeViolation(format!("entries must be below q = {q}")));
        }
        let inverse = invert_matrix(q, &matrix).ok_or_else(|| Error::RangeViolation("matrix is singular".into()))?;
        Ok(Self {
            q,
            dim,
            matrix,
            offset,
            inverse,
        })
    }

    pub fn identity(q: u64, dim: usize) -> Self {
        let matrix: Matrix = (0..dim)
            .map(|i| (0..dim).map(|j| u64::from(i == j)).collect())
            .collect();
        Self {
            q,
            dim,
            inverse: matrix.clone(),
            matrix,
            offset: vec![0; dim],
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
    pub fn offset(&self) -> &[u64] {
        &self.offset
    }

    pub fn with_offset(&self, offset: Vec<u64>) -> Result<Self> {
        Self::new(self.q, self.matrix.clone(), offset)
    }

    fn check(&self, a: &FieldVec) -> Result<()> {
        if a.q != self.q || a.dim() != self.dim {
            return Err(Error::dims(format!(
                "vector over F_{}^{} fed to a map on F_{}^{}",
                a.q,
                a.dim(),
                self.q,
                self.dim
            )));
        }
        Ok(())
    }

    pub fn apply(&self, a: &FieldVec) -> Result<FieldVec> {
        self.check(a)?;
        let fa = mat_vec(self.q, &self.matrix, &a.coords);
        Ok(FieldVec {
            q: self.q,
            coords: fa.iter().zip(&self.offset).map(|(x, g)| (x + g) % self.q).collect(),
        })
    }

    pub fn invert(&self, x: &FieldVec) -> Result<FieldVec> {
        self.check(x)?;
        let shifted: Vec<u64> = x
            .coords
            .iter()
            .zip(&self.offset)
            .map(|(a, g)| (a + self.q - g) % self.q)
            .collect();
        Ok(FieldVec {
            q: self.q,
            coords: mat_vec(self.q, &self.inverse, &shifted),
        })
    }

    /// Apply to the vector with little-endian index `a`, returning the image's index.
    pub fn apply_index(&self, a: u64) -> u64 {
        let v = FieldVec::from_index(self.q, self.dim, a);
        self.apply(&v).expect("matching space").to_index()
    }

    pub fn invert_index(&self, x: u64) -> u64 {
        let v = FieldVec::from_index(self.q, self.dim, x);
        self.invert(&v).expect("matching space").to_index()
    }
}

/// Draw a uniformly random invertible matrix by rejection.
pub fn sample_matrix<R: Rng + ?Sized>(q: u64, dim: usize, rng: &mut R) -> Matrix {
    loop {
        let m: Matrix = (0..dim)
            .map(|_| (0..dim).map(|_| rng.random_range(0..q)).collect())
            .collect();
        if determinant(q, &m) != 0 {
            return m;
        }
    }
}

/// Uniform invertible `F` and uniform offset `G` drawn from `rng`.
pub fn sample_map_with<R: Rng + ?Sized>(q: u64, dim: usize, rng: &mut R) -> Result<AffineMap> {
    check_prime(q)?;
    if dim == 0 {
        return Err(Error::RangeViolation("dim must be at least 1".into()));
    }
    let matrix = sample_matrix(q, dim, rng);
    let offset = (0..dim).map(|_| rng.random_range(0..q)).collect();
    AffineMap::new(q, matrix, offset)
}

/// Deterministic sample keyed by `seed`.
pub fn sample_map(q: u64, dim: usize, seed: u64) -> Result<AffineMap> {
    sample_map_with(q, dim, &mut stream_rng(seed, 0))
}

/// All invertible `dim × dim` matrices over `F_q`, in lexicographic order of their
/// row-major entries.
pub fn enumerate_family(q: u64, dim: usize, cap: u64) -> Result<Vec<Matrix>> {
    check_prime(q)?;
    let total = checked_count(q, (dim * dim) as u32, cap)?;
    let mut out = Vec::new();
    let cells = dim * dim;
    let mut entries = vec![0u64; cells];
    for _ in 0..total {
        let m: Matrix = entries.chunks(dim).map(|r| r.to_vec()).collect();
        if determinant(q, &m) != 0 {
            out.push(m);
        }
        // increment with the last entry fastest
        for e in entries.iter_mut().rev() {
            *e += 1;
            if *e < q {
                break;
            }
            *e = 0;
        }
    }
    Ok(out)
}

/// Every `(F, G)` with `F` in `family` and `G ∈ F_q^dim`, family-major.
pub fn affine_family(q: u64, family: &[Matrix], cap: u64) -> Result<Vec<AffineMap>> {
    let dim = family.first().map_or(0, Vec::len);
    let offsets = checked_count(q, dim as u32, cap)?;
    let mut out = Vec::with_capacity(family.len() * offsets as usize);
    for m in family {
        for g in 0..offsets {
            out.push(AffineMap::new(q, m.clone(), FieldVec::from_index(q, dim, g).coords)?);
        }
    }
    Ok(out)
}

/// Fraction of `family` with `F a = x`.
pub fn condition2b_probability(family: &[Matrix], a: &FieldVec, x: &FieldVec) -> Result<f64> {
    if a.is_zero() || x.is_zero() {
        return Err(Error::ZeroVector);
    }
    if a.dim() != x.dim() || a.q != x.q {
        return Err(Error::dims("a and x live in different spaces"));
    }
    if family.is_empty() {
        return Ok(0.0);
    }
    let hits = family.iter().filter(|m| mat_vec(a.q, m, &a.coords) == x.coords).count();
    Ok(hits as f64 / family.len() as f64)
}

/// Identification of `S_1 × … × S_T` (plus optional uniform padding) with `B_1 × B_2`.
///
/// `|S_0| = q^{k0}`, `|S_i| = q^{k_i}`. The secrets occupy the first `Σ k_i` coordinates
/// (message 1 first, each little-endian), padding fills the rest, and `B_1` is the
/// leading `b1_dim` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLayout")]
pub struct MessageLayout {
    pub q: u64,
    pub k0: usize,
    pub k: Vec<usize>,
    pub b1_dim: usize,
    pub b2_dim: usize,
}

#[derive(Deserialize)]
struct RawLayout {
    q: u64,
    #[serde(default)]
    k0: usize,
    k: Vec<usize>,
    b1_dim: usize,
    b2_dim: usize,
}

impl TryFrom<RawLayout> for MessageLayout {
    type Error = Error;
    fn try_from(r: RawLayout) -> Result<Self> {
        MessageLayout::new(r.q, r.k0, r.k, r.b1_dim, r.b2_dim)
    }
}

impl MessageLayout {
    pub fn new(q: u64, k0: usize, k: Vec<usize>, b1_dim: usize, b2_dim: usize) -> Result<Self> {
        check_prime(q)?;
        let secret: usize = k.iter().sum();
        if secret > b1_dim + b2_dim {
            return Err(Error::dims(format!(
                "secrets need {secret} coordinates but B_1 × B_2 has {}",
                b1_dim + b2_dim
            )));
        }
        if k.is_empty() {
            return Err(Error::dims("at least one secret message"));
        }
        Ok(Self {
            q,
            k0,
            k,
            b1_dim,
            b2_dim,
        })
    }

    /// Layout without padding: `B_2` takes whatever `B_1` leaves.
    pub fn exact(q: u64, k0: usize, k: Vec<usize>, b1_dim: usize) -> Result<Self> {
        let secret: usize = k.iter().sum();
        if b1_dim > secret {
            return Err(Error::dims("B_1 larger than the secret space"));
        }
        Self::new(q, k0, k, b1_dim, secret - b1_dim)
    }

    pub fn t(&self) -> usize {
        self.k.len()
    }
    pub fn secret_dim(&self) -> usize {
        self.k.iter().sum()
    }
    pub fn pad_dim(&self) -> usize {
        self.b1_dim + self.b2_dim - self.secret_dim()
    }
    pub fn total_dim(&self) -> usize {
        self.b1_dim + self.b2_dim
    }
    pub fn s0_count(&self) -> u64 {
        self.q.pow(self.k0 as u32)
    }
    /// `|S_i|` for `i = 1..T` (index 0 of the result is message 1).
    pub fn message_counts(&self) -> Vec<u64> {
        self.k.iter().map(|&k| self.q.pow(k as u32)).collect()
    }
    pub fn b1_count(&self) -> u64 {
        self.q.pow(self.b1_dim as u32)
    }
    pub fn b2_count(&self) -> u64 {
        self.q.pow(self.b2_dim as u32)
    }
    pub fn pad_count(&self) -> u64 {
        self.q.pow(self.pad_dim() as u32)
    }

    /// Concatenate base-q digits of `secrets` (messages 1..T) and `pad`.
    pub fn pack(&self, secrets: &[u64], pad: u64) -> Result<FieldVec> {
        if secrets.len() != self.t() {
            return Err(Error::dims(format!("expected {} secrets", self.t())));
        }
        let mut coords = Vec::with_capacity(self.total_dim());
        for (&s, &k) in secrets.iter().zip(&self.k) {
            let limit = self.q.pow(k as u32);
            if s >= limit {
                return Err(Error::IndexOutOfRange { index: s, limit });
            }
            coords.extend(FieldVec::from_index(self.q, k, s).coords);
        }
        let limit = self.pad_count();
        if pad >= limit {
            return Err(Error::IndexOutOfRange { index: pad, limit });
        }
        coords.extend(FieldVec::from_index(self.q, self.pad_dim(), pad).coords);
        Ok(FieldVec { q: self.q, coords })
    }

    /// Inverse of [`MessageLayout::pack`]: `(secrets, pad)`.
    pub fn unpack(&self, v: &FieldVec) -> Result<(Vec<u64>, u64)> {
        if v.dim() != self.total_dim() || v.q != self.q {
            return Err(Error::dims("vector does not match the layout"));
        }
        let mut at = 0;
        let mut secrets = Vec::with_capacity(self.t());
        for &k in &self.k {
            secrets.push(
                FieldVec {
                    q: self.q,
                    coords: v.coords[at..at + k].to_vec(),
                }
                .to_index(),
            );
            at += k;
        }
        let pad = FieldVec {
            q: self.q,
            coords: v.coords[at..].to_vec(),
        }
        .to_index();
        Ok((secrets, pad))
    }

    /// `(b1, b2)` indices of a vector in `B_1 × B_2`.
    pub fn split(&self, v: &FieldVec) -> (u64, u64) {
        let b1 = FieldVec {
            q: self.q,
            coords: v.coords[..self.b1_dim].to_vec(),
        }
        .to_index();
        let b2 = FieldVec {
            q: self.q,
            coords: v.coords[self.b1_dim..].to_vec(),
        }
        .to_index();
        (b1, b2)
    }

    pub fn join(&self, b1: u64, b2: u64) -> FieldVec {
        let mut coords = FieldVec::from_index(self.q, self.b1_dim, b1).coords;
        coords.extend(FieldVec::from_index(self.q, self.b2_dim, b2).coords);
        FieldVec { q: self.q, coords }
    }
}
