//! Small numerical helpers shared across modules.

use crate::{Error, Result};

/// Compensated (Kahan–Babuška) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `x ln(x/y)` with the conventions `0 ln(0/y) = 0` and `x ln(x/0) = +inf` for `x > 0`.
pub fn xlog_ratio(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if y <= 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// `-x ln x` with `0 ln 0 = 0`.
pub fn neg_xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    neg_xlogx(p) + neg_xlogx(1.0 - p)
}

/// `ln Σ exp(terms)`, ignoring `-inf` terms; returns `-inf` for an empty/all-`-inf` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + s.ln()
}

/// `[x]_+`. Values within `1e-12` of zero are snapped to zero so that boundary
/// evaluations read as exactly zero.
pub fn positive_part(x: f64) -> f64 {
    if x <= 1e-12 {
        0.0
    } else {
        x
    }
}

/// `base^exp` as a term count, failing if it exceeds `cap`.
pub fn checked_count(base: u64, exp: u32, cap: u64) -> Result<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc > cap {
            return Err(Error::CapExceeded { needed: acc, cap });
        }
    }
    Ok(acc)
}

/// Product of term counts, failing if it exceeds `cap`.
pub fn checked_product(factors: &[u64], cap: u64) -> Result<u64> {
    let mut acc: u64 = 1;
    for &f in factors {
        acc = acc.saturating_mul(f);
    }
    if acc > cap {
        return Err(Error::CapExceeded { needed: acc, cap });
    }
    Ok(acc)
}

/// Evenly spaced grid of `count` points on `[start, stop]`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Result of a one-dimensional maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Maximise `f` on `[lo, hi]`: a coarse grid of 101 points picks the bracket, then
/// golden-section search refines it until the bracket is narrower than `1e-9`.
///
/// The grid is evaluated through [`crate::exec`], so it runs in parallel when the
/// `parallel` feature is on.
pub fn maximize_1d<F>(f: F, lo: f64, hi: f64) -> Maximum
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    const GRID: usize = 101;
    let xs = linspace(lo, hi, GRID);
    let values = crate::exec::map_indexed(GRID, |i| sanitize(f(xs[i])));
    let (best, _) = values.iter().enumerate().fold(
        (0usize, f64::NEG_INFINITY),
        |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        },
    );
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(GRID - 1)];
    let refined = golden_section(&f, a, b, 1e-9);
    if refined.value >= values[best] {
        refined
    } else {
        Maximum {
            arg: xs[best],
            value: values[best],
        }
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Maximum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sanitize(f(d));
        }
    }
    let mut best = Maximum { arg: c, value: fc };
    if fd > best.value {
        best = Maximum { arg: d, value: fd };
    }
    for x in [a, b] {
        let v = sanitize(f(x));
        if v > best.value {
            best = Maximum { arg: x, value: v };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let k: KahanSum = xs.iter().copied().collect();
        assert_eq!(k.value(), 2.0);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let m = maximize_1d(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0);
        assert!((m.arg - 0.3).abs() < 1e-8);
    }

    #[test]
    fn boundary_maximum_is_kept() {
        let m = maximize_1d(|x| x, 0.0, 1.0);
        assert_eq!(m.arg, 1.0);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn count_cap() {
        assert_eq!(checked_count(2, 10, 1 << 20).unwrap(), 1024);
        assert!(matches!(checked_count(10, 8, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn lse_handles_neg_inf() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
