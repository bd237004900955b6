mod common;

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force, brute_interval, random_loopy_instance, random_query_instance};
use reflax::eval::exact_distribution;
use reflax::machine::{MachineExpr as E, MachineRegistry, OracleAssignment, Query, QuerySet};
use reflax::rational::rat;
use reflax::sample::Sampler;
use reflax::{exact_eval, Rational};

#[test]
fn exact_eval_matches_path_enumeration_on_loopy_machines() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (reg, qs, x) = random_loopy_instance(&mut rng);
        let oracle = OracleAssignment::exact(qs.clone(), x.clone()).unwrap();
        for name in ["N0", "N1", "N2"] {
            for depth in [0, 1, 3, 6, 9] {
                let got = exact_distribution(&reg, name, &oracle, depth).unwrap();
                let want = brute_force(&reg, name, &qs, &x, depth);
                let get = |l: &str| want.get(l).cloned().unwrap_or_else(Rational::zero);
                assert_eq!(got.zero, get("0"), "{name} depth {depth}");
                assert_eq!(got.one, get("1"), "{name} depth {depth}");
                let other: Rational = want
                    .iter()
                    .filter(|(l, _)| *l != "0" && *l != "1")
                    .map(|(_, m)| m.clone())
                    .sum();
                assert_eq!(got.other, other, "{name} depth {depth}");
            }
        }
    }
}

#[test]
fn exact_eval_matches_path_enumeration_on_query_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let (reg, qs) = random_query_instance(&mut rng);
        let x: Vec<Rational> = (0..qs.len()).map(|_| common::random_prob(&mut rng, 9)).collect();
        let oracle = OracleAssignment::exact(qs.clone(), x.clone()).unwrap();
        for q in qs.iter() {
            let got = exact_eval(&reg, &q.machine, &oracle, 30).unwrap();
            let (lo, hi) = brute_interval(&reg, &q.machine, &qs, &x, 30);
            assert_eq!((got.lo, got.hi), (lo, hi));
        }
    }
}

#[test]
fn intervals_shrink_with_depth() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let (reg, qs, x) = random_loopy_instance(&mut rng);
        let oracle = OracleAssignment::exact(qs, x).unwrap();
        for name in ["N0", "N1", "N2"] {
            let mut prev = exact_eval(&reg, name, &oracle, 0).unwrap();
            assert!(prev.lo <= prev.hi);
            for depth in 1..=40 {
                let cur = exact_eval(&reg, name, &oracle, depth).unwrap();
                assert!(cur.lo >= prev.lo && cur.hi <= prev.hi && cur.lo <= cur.hi);
                prev = cur;
            }
        }
    }
}

#[test]
fn geometric_loop_converges_to_its_limit() {
    // G = flip(1/3, ret 1, G): P(G = 1) = 1, and depth d leaves (2/3)^d open.
    let mut reg = MachineRegistry::new();
    reg.insert(
        "G",
        E::flip(rat(1, 3), E::ret1(), E::call("G", E::ret0(), E::ret1(), E::ret0())),
    )
    .unwrap();
    let empty = OracleAssignment::empty();
    for d in 1..12 {
        let i = exact_eval(&reg, "G", &empty, 2 * d).unwrap();
        let open = num_traits::pow(rat(2, 3), d);
        assert_eq!(i.lo, Rational::one() - &open);
        assert_eq!(i.hi, Rational::one());
    }
}

#[test]
fn silent_loop_keeps_the_trivial_interval() {
    let mut reg = MachineRegistry::new();
    reg.insert("S", E::call("S", E::ret0(), E::ret1(), E::ret0())).unwrap();
    let i = exact_eval(&reg, "S", &OracleAssignment::empty(), 50).unwrap();
    assert_eq!((i.lo, i.hi), (Rational::zero(), Rational::one()));
    let sampler = Sampler::new(&reg, &OracleAssignment::empty()).unwrap();
    let f = sampler.frequencies("S", 100, 0, 1000).unwrap();
    assert_eq!(f.timeout, 100);
}

#[test]
fn unknown_queries_are_answered_zero() {
    let mut reg = MachineRegistry::new();
    reg.insert("M", E::oracle("M", rat(1, 2), E::ret1(), E::ret0())).unwrap();
    let other = QuerySet::from_queries([Query::new("M", rat(1, 3))]).unwrap();
    let x = OracleAssignment::exact(other, vec![Rational::one()]).unwrap();
    let i = exact_eval(&reg, "M", &x, 5).unwrap();
    assert_eq!(i.lo, Rational::one());
}

#[test]
fn sampler_agrees_with_point_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let n = 20_000u64;
    for k in 0..10 {
        let (reg, qs) = random_query_instance(&mut rng);
        let x: Vec<Rational> = (0..qs.len()).map(|_| common::random_prob(&mut rng, 6)).collect();
        let oracle = OracleAssignment::exact(qs.clone(), x).unwrap();
        let sampler = Sampler::new(&reg, &oracle).unwrap();
        for q in qs.iter() {
            let i = exact_eval(&reg, &q.machine, &oracle, 40).unwrap();
            let lo = reflax::rational::to_f64(&i.lo);
            let f = sampler.frequencies(&q.machine, n, 1000 * k, 10_000).unwrap();
            assert_eq!(f.timeout, 0);
            let sigma = (lo * (1.0 - lo) / n as f64).sqrt();
            assert!((f.fraction(f.one) - lo).abs() <= 4.0 * sigma + 1e-12);
        }
    }
}

#[test]
fn sampling_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (reg, qs, x) = random_loopy_instance(&mut rng);
    let oracle = OracleAssignment::exact(qs, x).unwrap();
    let sampler = Sampler::new(&reg, &oracle).unwrap();
    let a = sampler.frequencies("N0", 5000, 9, 200).unwrap();
    let b = sampler.frequencies("N0", 5000, 9, 200).unwrap();
    assert_eq!(a, b);
    for seed in 0..50 {
        assert_eq!(sampler.run("N1", seed, 100).unwrap(), sampler.run("N1", seed, 100).unwrap());
    }
}
