use std::sync::Arc;

use gauntlet_core::games::{
    dynamic_game, noise_floor, non_adaptive_game, stateless_simulator, tv_estimate, AdaptiveParity, Discretizer, Mode,
    RandomDynamic, SideInfoFn, StaticAsDynamic, StatelessSimulator,
};
use gauntlet_core::mechanisms::{DpMedian, DpSum, PostProcess, Predicate, SqMechanism};
use gauntlet_core::rng::rng_from;
use gauntlet_core::{DeletionRequest, Mechanism, Multiset, Point};
use proptest::prelude::*;
use rand::Rng;

fn dataset(seed: u64, n: usize) -> Vec<Point> {
    let mut rng = rng_from(seed);
    (0..n).map(|_| Point(rng.random_range(0..=256) as f64 / 256.0)).collect()
}

fn sq() -> SqMechanism<Point> {
    let preds: Vec<Predicate<Point>> = vec![Arc::new(|x: &Point| x.get()), Arc::new(|_: &Point| 1.0)];
    SqMechanism::new(preds, 1.0, PostProcess::Ratio { num: 0, den: 1 }).unwrap()
}

/// Real and simulated dynamic views coincide, which in turn gives the static
/// and non-adaptive passes.
fn chain<M: Mechanism<Elem = Point> + 'static>(make: impl Fn() -> M, d: &[Point], y: Vec<usize>, k: usize, seed: u64) {
    let real = dynamic_game(make(), d, &mut RandomDynamic::new(k), &SideInfoFn::size(), Mode::Real, k, seed).unwrap();
    let mut sim = StatelessSimulator::new(make(), RandomDynamic::new(k)).unwrap();
    let ideal = dynamic_game(make(), d, &mut sim, &SideInfoFn::size(), Mode::Ideal, k, seed).unwrap();
    assert_eq!(real.view, ideal.view);
    assert!(real.bookkeeping_holds(k) && ideal.bookkeeping_holds(k));

    let mut p = StaticAsDynamic::new(AdaptiveParity::default(), y.clone());
    let stat_real = dynamic_game(make(), d, &mut p, &SideInfoFn::size(), Mode::Real, k, seed).unwrap();
    let mut s = StatelessSimulator::new(make(), StaticAsDynamic::new(AdaptiveParity::default(), y)).unwrap();
    let stat_ideal = dynamic_game(make(), d, &mut s, &SideInfoFn::size(), Mode::Ideal, k, seed).unwrap();
    assert_eq!(stat_real.view, stat_ideal.view);

    let order: Vec<Point> = stat_real.view.deletions.iter().map(|b| d[b[0]]).collect();
    let t = non_adaptive_game(make(), d.iter().cloned().collect(), &order, gauntlet_core::rng::derive_seed(seed, 0)).unwrap();
    let batches: Vec<Vec<DeletionRequest<Point>>> = order.iter().map(|x| vec![DeletionRequest::one(*x)]).collect();
    let replay = stateless_simulator(&make(), &t.initial, &batches).unwrap();
    assert_eq!(replay, t.releases().skip(1).cloned().collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reduction_chain_for_stateless_mechanisms(seed in any::<u64>(), n in 8usize..30, k in 1usize..6) {
        let d = dataset(seed, n);
        let y: Vec<usize> = (0..k.min(n)).map(|i| (i * 7 + seed as usize) % n).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        chain(|| DpSum::new(0.5).unwrap(), &d, y.clone(), k, seed);
        chain(|| DpMedian::new(8, 0.5).unwrap(), &d, y.clone(), k, seed);
        chain(sq, &d, y, k, seed);
    }

    #[test]
    fn dynamic_bookkeeping_always_holds(seed in any::<u64>(), n in 4usize..20, k in 0usize..8) {
        let d = dataset(seed, n);
        let k = k.min(n - 1);
        let r = dynamic_game(DpSum::new(1.0).unwrap(), &d, &mut RandomDynamic::new(k), &SideInfoFn::none(), Mode::Real, k, seed).unwrap();
        prop_assert!(r.bookkeeping_holds(k));
        prop_assert!(r.r.iter().all(|j| r.y.contains(j)));
        prop_assert!(r.y.len() <= k);
    }
}

#[test]
fn self_distance_is_below_the_floor() {
    let d: Multiset<Point> = dataset(5, 20).into_iter().collect();
    let sample = |s: u64| {
        let t = non_adaptive_game(DpSum::new(1.0).unwrap(), d.clone(), &[Point(d.min().unwrap().get())], s).unwrap();
        t.releases().filter_map(|r| r.scalar()).collect::<Vec<_>>()
    };
    let a = tv_estimate(sample, |s| sample(s ^ 0x5eed), 4000, 1, Discretizer::EqualWidth(16));
    assert!(a <= noise_floor(16, 4000), "{a}");
}

#[test]
fn stateless_real_and_simulated_samplers_have_zero_distance() {
    let d = dataset(8, 16);
    let real = |s: u64| {
        dynamic_game(DpSum::new(1.0).unwrap(), &d, &mut RandomDynamic::new(4), &SideInfoFn::none(), Mode::Real, 4, s)
            .unwrap()
            .view
            .features()
    };
    let ideal = |s: u64| {
        let mut sim = StatelessSimulator::new(DpSum::new(1.0).unwrap(), RandomDynamic::new(4)).unwrap();
        dynamic_game(DpSum::new(1.0).unwrap(), &d, &mut sim, &SideInfoFn::none(), Mode::Ideal, 4, s)
            .unwrap()
            .view
            .features()
    };
    assert_eq!(tv_estimate(real, ideal, 500, 3, Discretizer::Fingerprint), 0.0);
}
