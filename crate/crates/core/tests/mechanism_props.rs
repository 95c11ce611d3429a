use std::sync::Arc;

use gauntlet_core::dp::PrivacyParams;
use gauntlet_core::games::stateless_simulator;
use gauntlet_core::mechanisms::{
    bq_one_shot, BqParams, BqRetrainer, CountModRetrainer, DpMedian, DpSum, ExactMedianRetrainer, KMeansRetrainer,
    NaiveMedian, PostProcess, Predicate, SqMechanism, XorDeleted, XorUndeleted,
};
use gauntlet_core::queries::CountingQueryFamily;
use gauntlet_core::rng::rng_from;
use gauntlet_core::{Curator, DeletionRequest, Mechanism, Multiset, Point, Release};
use proptest::prelude::*;

fn grid_points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=128).prop_map(|i| i as f64 / 128.0), 6..40)
}

/// Picks `len` deletions (with repetition allowed up to multiplicity) from `d`.
fn pick<T: gauntlet_core::Element>(d: &Multiset<T>, idx: &[prop::sample::Index], keep: u64) -> Vec<T> {
    let mut left = d.clone();
    let mut out = Vec::new();
    for ix in idx {
        if left.total_size() <= keep {
            break;
        }
        let x = left.nth_smallest(ix.index(left.total_size() as usize) as u64 + 1).unwrap().clone();
        left.remove(&x, 1).unwrap();
        out.push(x);
    }
    out
}

fn run<M: Mechanism>(mech: M, d: &Multiset<M::Elem>, dels: &[M::Elem], seed: u64) -> Vec<Release> {
    let mut cur = Curator::start(mech, d.clone(), seed).unwrap();
    for x in dels {
        cur.delete(DeletionRequest::one(x.clone())).unwrap();
    }
    cur.transcript().releases().cloned().collect()
}

/// Releases on a shared prefix agree when the suffixes differ.
fn prefix_causal<M: Mechanism>(make: impl Fn() -> M, d: &Multiset<M::Elem>, a: &[M::Elem], b: &[M::Elem], seed: u64) -> bool {
    let shared = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let ra = run(make(), d, a, seed);
    let rb = run(make(), d, b, seed);
    ra[..=shared] == rb[..=shared]
}

fn sq_preds() -> Vec<Predicate<Point>> {
    vec![Arc::new(|x: &Point| x.get()), Arc::new(|_: &Point| 1.0), Arc::new(|x: &Point| f64::from(x.get() > 0.5))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn point_mechanisms_are_prefix_causal(
        v in grid_points(),
        ia in prop::collection::vec(any::<prop::sample::Index>(), 0..12),
        ib in prop::collection::vec(any::<prop::sample::Index>(), 0..12),
        cut in 0usize..12,
        seed in any::<u64>(),
    ) {
        let d: Multiset<Point> = v.iter().copied().map(Point).collect();
        let a = pick(&d, &ia, 3);
        let b_full = pick(&d, &ib, 3);
        let cut = cut.min(a.len());
        let mut b: Vec<Point> = a[..cut].to_vec();
        let mut left = d.clone();
        for x in &b {
            left.remove(x, 1).unwrap();
        }
        for x in b_full {
            if left.total_size() > 3 && left.remove(&x, 1).is_ok() {
                b.push(x);
            }
        }
        prop_assert!(prefix_causal(|| DpSum::new(0.8).unwrap(), &d, &a, &b, seed));
        prop_assert!(prefix_causal(|| DpMedian::new(5, 0.8).unwrap(), &d, &a, &b, seed));
        prop_assert!(prefix_causal(NaiveMedian::new, &d, &a, &b, seed));
        prop_assert!(prefix_causal(ExactMedianRetrainer::new, &d, &a, &b, seed));
        prop_assert!(prefix_causal(|| SqMechanism::new(sq_preds(), 0.8, PostProcess::Identity).unwrap(), &d, &a, &b, seed));
        let mut left_a = d.clone();
        for x in &a {
            left_a.remove(x, 1).unwrap();
        }
        if left.distinct() > 1 && left_a.distinct() > 1 {
            prop_assert!(prefix_causal(KMeansRetrainer::new, &d, &a, &b, seed));
        }
    }

    #[test]
    fn bit_mechanisms_are_prefix_causal(
        v in prop::collection::vec(0u64..256, 4..30),
        ia in prop::collection::vec(any::<prop::sample::Index>(), 0..10),
        seed in any::<u64>(),
        cut in 0usize..10,
    ) {
        let d: Multiset<u64> = v.into_iter().collect();
        let a = pick(&d, &ia, 1);
        let cut = cut.min(a.len());
        let b = &a[..cut];
        prop_assert!(prefix_causal(|| XorDeleted::new(8).unwrap(), &d, &a, b, seed));
        prop_assert!(prefix_causal(|| XorUndeleted::new(8).unwrap(), &d, &a, b, seed));
    }

    #[test]
    fn elem_mechanisms_are_prefix_causal(
        ids in prop::collection::vec(1u32..=16, 0..20),
        stars in 0u64..60,
        ia in prop::collection::vec(any::<prop::sample::Index>(), 0..10),
        seed in any::<u64>(),
        cut in 0usize..10,
    ) {
        let d = Multiset::from_ids(ids, stars);
        let a = pick(&d, &ia, 0);
        let b = &a[..cut.min(a.len())];
        let fam = CountingQueryFamily::new(16, 4).unwrap();
        prop_assert!(prefix_causal(CountModRetrainer::new, &d, &a, b, seed));
        prop_assert!(prefix_causal(|| BqRetrainer::new(fam, 2, 1.0).unwrap(), &d, &a, b, seed));
    }

    #[test]
    fn stateless_mechanisms_replay_from_z0(
        v in grid_points(),
        ia in prop::collection::vec(any::<prop::sample::Index>(), 0..20),
        seed in any::<u64>(),
    ) {
        let d: Multiset<Point> = v.iter().copied().map(Point).collect();
        let dels = pick(&d, &ia, 1);
        let batches: Vec<Vec<DeletionRequest<Point>>> = dels.iter().map(|x| vec![DeletionRequest::one(*x)]).collect();
        fn check<M: Mechanism<Elem = Point>>(m: M, t: M, d: &Multiset<Point>, dels: &[Point], b: &[Vec<DeletionRequest<Point>>], seed: u64) -> bool {
            let real = run(m, d, dels, seed);
            stateless_simulator(&t, &real[0], b).unwrap() == real[1..]
        }
        prop_assert!(check(DpSum::new(0.3).unwrap(), DpSum::new(0.3).unwrap(), &d, &dels, &batches, seed));
        prop_assert!(check(DpMedian::new(6, 0.3).unwrap(), DpMedian::new(6, 0.3).unwrap(), &d, &dels, &batches, seed));
        let sq = || SqMechanism::new(sq_preds(), 0.3, PostProcess::Ratio { num: 0, den: 1 }).unwrap();
        prop_assert!(check(sq(), sq(), &d, &dels, &batches, seed));
    }

    #[test]
    fn xor1_release_pairs_reveal_deleted_xors(
        v in prop::collection::vec(0u64..(1 << 12), 3..30),
        ia in prop::collection::vec(any::<prop::sample::Index>(), 2..10),
        seed in any::<u64>(),
    ) {
        let d: Multiset<u64> = v.into_iter().collect();
        let dels = pick(&d, &ia, 0);
        let z: Vec<u64> = run(XorDeleted::new(12).unwrap(), &d, &dels, seed).iter().map(|r| r.bits().unwrap()).collect();
        for l in 1..z.len() {
            for m in 1..z.len() {
                prop_assert_eq!(z[0] ^ z[l] ^ z[m] ^ z[0], dels[l - 1] ^ dels[m - 1]);
            }
            prop_assert_eq!(z[0] ^ z[l], dels[l - 1]);
        }
    }

    #[test]
    fn exact_one_shot_answers_the_valid_block(ids in prop::collection::vec(1u32..=64, 0..40), k in 1u64..5, block in 1u32..=8) {
        let fam = CountingQueryFamily::new(64, 8).unwrap();
        let t = Multiset::from_ids(ids, 3 * k * block as u64);
        let params = BqParams { n: 64, t: 8, k, privacy: PrivacyParams::new(f64::INFINITY, 1e-6).unwrap(), alpha: 0.5, beta: 0.1 };
        let a = bq_one_shot(&t, &params, &fam, &mut rng_from(0)).unwrap();
        prop_assert_eq!(a.block_index, block);
        prop_assert_eq!(a.values, fam.answer_block(block, &t).unwrap());
    }
}

#[test]
fn dp_sum_noise_constancy() {
    let mut rng = rng_from(99);
    use rand::Rng;
    for seed in 0..200 {
        let d: Multiset<Point> = (0..40).map(|_| Point(rng.random::<f64>())).collect();
        let dels: Vec<Point> = d.to_sorted_vec().into_iter().take(32).collect();
        let mut left = d.clone();
        let zs = run(DpSum::new(1.0).unwrap(), &d, &dels, seed);
        let eta = zs[0].scalar().unwrap() - DpSum::exact_sum(&left).unwrap();
        for (x, z) in dels.iter().zip(&zs[1..]) {
            left.remove(x, 1).unwrap();
            assert_eq!(z.scalar().unwrap() - DpSum::exact_sum(&left).unwrap(), eta);
        }
    }
}
