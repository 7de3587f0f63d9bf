//! Randomised invariants across the core modules.

use proptest::prelude::*;
use smc_core::affine::{
    affine_family, condition2b_probability, determinant, enumerate_family, sample_map, AffineMap, FieldVec,
    MessageLayout,
};
use smc_core::capacity::{region_point, secrecy_capacity_degraded, ChainInfo, RegionModel, RegionRates};
use smc_core::codec::{BcdCodebook, SmcCode};
use smc_core::exponents::{leakage_bound_terms, secrecy_exponent, Construction, IndexSet, Kernel, LeakageTerms};
use smc_core::gallager::{phi, phi_max, phi_single, psi};
use smc_core::oracle::{ensemble_bound_check, exact_leakage, AssignmentSpec, EnsembleSpec};
use smc_core::probability::{compose, push_forward, ChainSpec, Channel, Distribution, InfoKind};
use smc_core::renyi::{divergence, kl, renyi_entropy, renyi_of, JointSource};

const CAP: u64 = 1 << 22;

fn dist(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| Distribution::from_weights(w).unwrap())
}

fn channel(inputs: usize, outputs: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(dist(outputs), inputs).prop_map(|rows| Channel::from_rows(&rows).unwrap())
}

fn chain() -> impl Strategy<Value = ChainSpec> {
    (1usize..=2, 2usize..=3, 2usize..=3, 2usize..=3, 2usize..=3).prop_flat_map(|(u, v, x, y, z)| {
        (dist(u), channel(u, v), channel(v, x), channel(x, y), channel(x, z))
            .prop_map(|(pu, pvu, xi, wy, wz)| ChainSpec::new(pu, pvu, xi, wy, wz).unwrap())
    })
}

fn wiretap(v: usize) -> impl Strategy<Value = ChainSpec> {
    (dist(v), channel(v, 2), channel(v, 3)).prop_map(|(p, wy, wz)| ChainSpec::wiretap(p, wy, wz).unwrap())
}

fn lerp(a: &Distribution, b: &Distribution, t: f64) -> Distribution {
    let w = a
        .probs()
        .iter()
        .zip(b.probs())
        .map(|(x, y)| t * x + (1.0 - t) * y)
        .collect();
    Distribution::from_weights(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn push_forward_is_normalised(p in dist(4), w in channel(4, 3)) {
        let out = push_forward(&p, &w).unwrap();
        let total: f64 = out.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(out.probs().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn compose_is_associative(a in channel(2, 3), b in channel(3, 2), c in channel(2, 3)) {
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        for x in 0..2 {
            for y in 0..3 {
                prop_assert!((left.get(x, y) - right.get(x, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn conditional_information_is_nonnegative(c in chain()) {
        for kind in [InfoKind::UY, InfoKind::UZ, InfoKind::VYGivenU, InfoKind::VZGivenU] {
            prop_assert!(c.mutual_info(kind) >= 0.0);
        }
    }

    #[test]
    fn identical_rows_carry_no_information(p in dist(3), row in dist(2), wz in channel(3, 2)) {
        let c = ChainSpec::wiretap(p, Channel::constant(3, &row), wz).unwrap();
        prop_assert!(c.mutual_info(InfoKind::VYGivenU).abs() < 1e-12);
    }

    #[test]
    fn divergence_dominates_kl(q in dist(4), p in dist(4), rho in 0.01f64..1.0) {
        let d = kl(&q, &p).unwrap();
        let psi = divergence(&q, &p, rho).unwrap();
        prop_assert!(rho * d <= psi + 1e-12, "ρD = {} ψ = {}", rho * d, psi);
    }

    #[test]
    fn renyi_below_shannon_below_log_size(p in dist(5), rho in 0.01f64..2.0) {
        let h = p.entropy();
        prop_assert!(renyi_of(&p, rho).unwrap() <= h + 1e-12);
        prop_assert!(h <= 5f64.ln() + 1e-12);
    }

    #[test]
    fn conditional_renyi_below_conditional_shannon(p in dist(6), rho in 0.05f64..1.0) {
        let src = JointSource::new(vec![3, 2], p).unwrap().with_roles(vec![0], vec![1]).unwrap();
        let h = renyi_entropy(&src, 0.0, true).unwrap();
        prop_assert!(renyi_entropy(&src, rho, true).unwrap() <= h + 1e-12);
    }

    #[test]
    fn exp_phi_concave_in_input((p, w) in (dist(3), channel(3, 3)), q in dist(3), t in 0.0f64..1.0, rho in 0.05f64..0.95) {
        let f = |d: &Distribution| phi_single(rho, &w, d).unwrap().exp();
        let mid = f(&lerp(&p, &q, t));
        prop_assert!(mid + 1e-10 >= t * f(&p) + (1.0 - t) * f(&q));
    }

    #[test]
    fn phi_convex_in_rho(c in chain(), a in 0.02f64..0.9, b in 0.02f64..0.9, t in 0.0f64..1.0) {
        let f = |r: f64| phi(r, &c.p_z_given_v(), c.p_v_given_u(), c.p_u()).unwrap();
        let mid = f(t * a + (1.0 - t) * b);
        prop_assert!(mid <= t * f(a) + (1.0 - t) * f(b) + 1e-10);
    }

    #[test]
    fn phi_slope_at_zero_is_information(c in chain()) {
        let h = 1e-6;
        let f = |r: f64| phi(r, &c.p_z_given_v(), c.p_v_given_u(), c.p_u()).unwrap();
        let slope = (f(h) - f(-h)) / (2.0 * h);
        let info = c.mutual_info(InfoKind::VZGivenU);
        prop_assert!((slope - info).abs() < 1e-4, "slope {slope} vs {info}");
    }

    #[test]
    fn phi_max_dominates((p, w) in (dist(3), channel(3, 2)), rho in 0.05f64..0.95) {
        let best = phi_max(rho, &w).unwrap();
        prop_assert!(best.value + 1e-9 >= phi_single(rho, &w, &p).unwrap());
    }

    #[test]
    fn phi_dominates_psi(c in chain(), rho in 0.05f64..0.95) {
        let pz = c.p_z_given_v();
        let a = phi(rho, &pz, c.p_v_given_u(), c.p_u()).unwrap();
        let b = psi(rho, &pz, c.p_v_given_u(), c.p_u()).unwrap();
        prop_assert!(b <= a + 1e-10);
    }

    #[test]
    fn secrecy_exponents_are_ordered(c in wiretap(2), r in 0.0f64..1.0) {
        let e_phi = secrecy_exponent(r, &c, Kernel::Phi).unwrap();
        let e_psi = secrecy_exponent(r, &c, Kernel::Psi).unwrap();
        prop_assert!(e_phi >= 0.0 && e_psi >= 0.0);
        prop_assert!(e_psi + 1e-9 >= e_phi);
    }

    #[test]
    fn leakage_bound_monotone(kernel in 0.0f64..3.0, h in 0.0f64..3.0, dh in 0.0f64..1.0, rho in 0.05f64..1.0, overhead: bool) {
        let at = |renyi: f64, log_b1: f64| {
            let terms = LeakageTerms { construction: Construction::First, t: 2, log_b1, kernel, renyi, rho };
            leakage_bound_terms(&terms, overhead).unwrap()
        };
        prop_assert!(at(h + dh, 0.0) <= at(h, 0.0) + 1e-12);
        prop_assert!(at(h, dh) + 1e-12 >= at(h, 0.0));
    }

    #[test]
    fn affine_round_trip(seed: u64, q in prop::sample::select(vec![2u64, 3, 5]), dim in 1usize..4, x in any::<u64>()) {
        let map = sample_map(q, dim, seed).unwrap();
        prop_assert!(determinant(q, map.matrix()) != 0);
        let size = q.pow(dim as u32);
        let a = FieldVec::from_index(q, dim, x % size);
        prop_assert_eq!(map.invert(&map.apply(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn layout_round_trip(k in prop::collection::vec(0usize..3, 1..3), extra in 0usize..2, b1 in 0usize..2, seed: u64) {
        let secret: usize = k.iter().sum();
        let total = secret + extra;
        let b1 = b1.min(total);
        let layout = MessageLayout::new(2, 0, k.clone(), b1, total - b1).unwrap();
        let secrets: Vec<u64> = k.iter().enumerate().map(|(i, &ki)| (seed >> (8 * i)) % (1 << ki)).collect();
        let pad = seed % layout.pad_count();
        let v = layout.pack(&secrets, pad).unwrap();
        prop_assert_eq!(layout.unpack(&v).unwrap(), (secrets, pad));
        let (x1, x2) = layout.split(&v);
        prop_assert_eq!(layout.join(x1, x2), v);
    }

    #[test]
    fn noiseless_round_trip(seed: u64, k in prop::collection::vec(1usize..3, 1..3), extra in 0usize..2, b1 in 0usize..2, k0 in 0usize..2) {
        let secret: usize = k.iter().sum();
        let total = secret + extra;
        let b1 = b1.min(total);
        let layout = MessageLayout::new(2, k0, k.clone(), b1, total - b1).unwrap();
        let dim = k0 + total;
        let eye: Vec<Vec<u64>> = (0..dim).map(|i| (0..dim).map(|j| u64::from(i == j)).collect()).collect();
        let book = BcdCodebook::from_generator(2, &eye, k0, b1).unwrap();
        let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::identity(2), Channel::bsc(0.2)).unwrap();
        let mixer = sample_map(2, total, seed).unwrap();
        let code = SmcCode::new(layout.clone(), book, mixer, Construction::First, chain, None).unwrap();
        let s0 = (seed as usize) % layout.s0_count() as usize;
        let secrets: Vec<u64> = k.iter().enumerate().map(|(i, &ki)| (seed >> (4 * i + 1)) % (1 << ki)).collect();
        let (y, _) = code.encode(s0, &secrets, seed).unwrap();
        prop_assert_eq!(code.decode_bob(&y), (s0, secrets.clone()));
        prop_assert_eq!(code.decode_bob(&y), code.decode_bob(&y));
    }

    #[test]
    fn mixing_keeps_b_uniform(seed: u64) {
        let layout = MessageLayout::new(2, 0, vec![1, 1], 1, 2).unwrap();
        let map = sample_map(2, 3, seed).unwrap();
        let mut counts = [0u32; 8];
        for s1 in 0..2 {
            for s2 in 0..2 {
                for pad in 0..layout.pad_count() {
                    let b = map.apply(&layout.pack(&[s1, s2], pad).unwrap()).unwrap();
                    let (b1, b2) = layout.split(&b);
                    counts[(b1 + 2 * b2) as usize] += 1;
                }
            }
        }
        prop_assert!(counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn ensemble_averages_are_ordered(p_a in dist(2), w in channel(2, 2), p in dist(2), rho in 0.1f64..1.0) {
        let check = ensemble_bound_check(&EnsembleSpec::Assignment(AssignmentSpec { p_a, w, p }), rho, CAP).unwrap();
        prop_assert!(check.lhs_psi + 1e-12 >= check.lhs_d);
        prop_assert!(check.lhs_d + 1e-12 >= 1.0);
        prop_assert!(check.holds);
    }

    #[test]
    fn exact_leakage_within_trivial_bounds(seed: u64, probs in dist(8), cross in 0.05f64..0.45) {
        let layout = MessageLayout::new(2, 1, vec![1, 1], 1, 1).unwrap();
        let chain = ChainSpec::new(
            Distribution::uniform(2),
            Channel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap(),
            Channel::identity(2),
            Channel::bsc(0.1),
            Channel::bsc(cross),
        )
        .unwrap();
        let book = BcdCodebook::sample(&chain, (2, 2, 2), 2, seed).unwrap();
        let code = SmcCode::new(layout, book, sample_map(2, 2, seed).unwrap(), Construction::First, chain, None).unwrap();
        let source = JointSource::new(vec![2, 2, 2], probs).unwrap();
        for set in IndexSet::nonempty_subsets(2) {
            let leak = exact_leakage(&code, &source, set, CAP).unwrap();
            let h = renyi_entropy(&source.clone().with_roles(set.iter().collect(), vec![0]).unwrap(), 0.0, true).unwrap();
            prop_assert!(leak >= -1e-12);
            prop_assert!(leak <= h.min(2.0 * 2f64.ln()) + 1e-9, "leak {leak} h {h}");
        }
    }

    #[test]
    fn floors_grow_with_the_set(c in chain(), r in prop::collection::vec(0.0f64..0.5, 3)) {
        let rates = RegionRates { r0: 0.0, secrets: r, r_e: None };
        let eval = region_point(&c, &rates, RegionModel::Smc, None).unwrap();
        for &(a, fa) in &eval.floors {
            for &(b, fb) in &eval.floors {
                if a.is_subset(b) {
                    prop_assert!(fa <= fb + 1e-15);
                }
            }
        }
        prop_assert_eq!(eval.info, ChainInfo::of(&c));
    }

    #[test]
    fn capacity_ignores_output_labels(a in 0.01f64..0.49, b in 0.01f64..0.49, flip: bool) {
        let wb = Channel::bsc(a);
        let we = Channel::bsc(b);
        let relabel = |w: &Channel| {
            Channel::new((0..2).map(|x| vec![w.get(x, 1), w.get(x, 0)]).collect()).unwrap()
        };
        let base = secrecy_capacity_degraded(&wb, &we, 201).unwrap();
        let other = if flip {
            secrecy_capacity_degraded(&relabel(&wb), &we, 201).unwrap()
        } else {
            secrecy_capacity_degraded(&wb, &relabel(&we), 201).unwrap()
        };
        prop_assert!((base - other).abs() < 1e-9);
    }
}

#[test]
fn condition_two_fraction_is_exact() {
    for (q, dim) in [(2, 2), (3, 2), (2, 3)] {
        let family = enumerate_family(q, dim, CAP).unwrap();
        let size = q.pow(dim as u32);
        for ai in 1..size {
            for xi in 1..size {
                let a = FieldVec::from_index(q, dim, ai);
                let x = FieldVec::from_index(q, dim, xi);
                let p = condition2b_probability(&family, &a, &x).unwrap();
                assert!((p - 1.0 / (size - 1) as f64).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn affine_image_is_uniform() {
    let (q, dim) = (3, 2);
    let family = enumerate_family(q, dim, CAP).unwrap();
    let maps: Vec<AffineMap> = affine_family(q, &family, CAP).unwrap();
    let size = q.pow(dim as u32);
    for a in 0..size {
        let mut counts = vec![0usize; size as usize];
        for m in &maps {
            counts[m.apply_index(a) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c == maps.len() / size as usize));
    }
}
