use std::collections::BTreeSet;
use std::sync::Arc;

use gauntlet_core::attacks::{
    bq_attack, bq_dataset, countmod_dataset, countmod_reconstruct, differencing_attack, kmeans_attack_loop,
    median_exposure_attack, xor_differencing_attack, Recovered,
};
use gauntlet_core::dp::{bin_of, DeletionLedger};
use gauntlet_core::games::{
    dynamic_game, leakage_game, simulator_blindness_witness, FixedOrder, FullKnowledgeSimulator, Leakage, Mode,
    RandomDynamic, SideInfoFn, StaticAsDynamic, StatelessSimulator, AdaptiveParity, WitnessConfig,
};
use gauntlet_core::mechanisms::{
    bq_one_shot, lloyd_2means_1d, BqRetrainer, CountModRetrainer, DpMedian, DpSum, ExactMedianRetrainer, KMeansRetrainer,
    NaiveMedian, PostProcess, Predicate, SqMechanism, XorDeleted, XorUndeleted,
};
use gauntlet_core::queries::{symmetric_difference, valid_index_range, CountingQueryFamily, Subset};
use gauntlet_core::rng::{derive_seed, rng_from, Rng as ChaCha};
use gauntlet_core::{rank_error, Curator, DeletionRequest, Mechanism, Multiset, Point};
use rand::seq::{IndexedRandom, IteratorRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, Generator, SUITE};
use crate::error::Result;

/// One CSV row. The columns are the same for every experiment family;
/// `metric`, `verdict` and `detail` are interpreted per family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub metric: f64,
    pub deletions_used: u64,
    pub verdict: String,
    pub detail: String,
}

struct Outcome {
    success: bool,
    metric: f64,
    deletions: u64,
    verdict: String,
    detail: String,
}

impl Outcome {
    fn new(success: bool, metric: f64, deletions: u64) -> Self {
        Self {
            success,
            metric,
            deletions,
            verdict: if success { "ok" } else { "fail" }.to_string(),
            detail: String::new(),
        }
    }

    fn verdict(mut self, v: impl Into<String>) -> Self {
        self.verdict = v.into();
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Runs trial `trial` of `config` with seed `config.seed + trial`.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Row> {
    let seed = config.trial_seed(trial);
    let out = match config.kind {
        ExperimentKind::SumDifferencing => sum_differencing(config, seed)?,
        ExperimentKind::CountmodReconstruct => countmod_reconstruction(config, seed)?,
        ExperimentKind::BqAttack => bq_reconstruction(config, seed)?,
        ExperimentKind::BqOneShot => bq_solver(config, seed)?,
        ExperimentKind::Xor1 => xor_deleted(config, seed)?,
        ExperimentKind::Xor2 => xor_undeleted(config, seed)?,
        ExperimentKind::MedianFootnote => median_footnote(config, seed)?,
        ExperimentKind::DpMedianRank => dp_median_rank(config, seed)?,
        ExperimentKind::Kmeans => kmeans(config, seed)?,
        ExperimentKind::GamesStateless => games_stateless(config, trial, seed)?,
        ExperimentKind::Leakage => leakage(config, seed)?,
    };
    Ok(Row {
        trial,
        seed,
        success: out.success,
        metric: out.metric,
        deletions_used: out.deletions,
        verdict: out.verdict,
        detail: out.detail,
    })
}

fn grid_point(rng: &mut ChaCha, bits: u32) -> Point {
    Point(rng.random_range(0..=(1u64 << bits)) as f64 / (1u64 << bits) as f64)
}

fn random_subset(rng: &mut ChaCha, n: u32, size: Option<u32>) -> Subset {
    match size {
        Some(s) => (1..=n).choose_multiple(rng, s as usize).into_iter().collect(),
        None => (1..=n).filter(|_| rng.random_bool(0.5)).collect(),
    }
}

fn subset_outcome(truth: &Subset, got: &Recovered, deletions: u64, tolerance: f64) -> Outcome {
    let Recovered::Subset(v) = got else {
        return Outcome::new(false, f64::NAN, deletions);
    };
    let err = symmetric_difference(truth, &v.iter().copied().collect()) as f64;
    Outcome::new(err <= tolerance, err, deletions)
}

fn sum_differencing(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from(seed);
    let data: Vec<Point> = (0..c.n(100)).map(|_| grid_point(&mut rng, 16)).collect();
    let target = *data.choose(&mut rng).expect("n ≥ 1");
    let mut cur = Curator::start(DpSum::new(c.epsilon(1.0))?, data.into_iter().collect(), derive_seed(seed, 1))?;
    cur.delete(DeletionRequest::one(target))?;
    let got = differencing_attack(cur.transcript(), 1)?;
    let err = (got - target.get()).abs();
    Ok(Outcome::new(err == 0.0, err, 1).detail(format!("target={}", target.get())))
}

fn countmod_reconstruction(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let n = c.n(64);
    let fam = CountingQueryFamily::new(n, n)?;
    let mut rng = rng_from(seed);
    let d = random_subset(&mut rng, n, c.params.size);
    let data = countmod_dataset(n, &d, 3 * n as u64);
    let mut cur = Curator::start(CountModRetrainer::new(), data, derive_seed(seed, 1))?;
    let out = countmod_reconstruct(&mut cur, &fam)?;
    Ok(subset_outcome(&d, &out.recovered, out.deletions_used, 0.0))
}

fn bq_reconstruction(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let n = c.n(256);
    let fam = CountingQueryFamily::new(n, c.params.t.unwrap_or(16))?;
    let k = c.k(4);
    let sigma = c.params.sigma.unwrap_or(0.0);
    let mut rng = rng_from(seed);
    let d = random_subset(&mut rng, n, c.params.size);
    let mech = if sigma == 0.0 {
        BqRetrainer::exact(fam, k)?
    } else {
        BqRetrainer::new(fam, k, sigma)?
    };
    let mut cur = Curator::start(mech, bq_dataset(&fam, k, &d), derive_seed(seed, 1))?;
    let out = bq_attack(&mut cur, &fam, k)?;
    let tolerance = c.params.alpha.unwrap_or(0.0) * n as f64;
    Ok(subset_outcome(&d, &out.recovered, out.deletions_used, tolerance))
}

fn bq_solver(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let params = c.bq_params()?;
    let fam = params.family()?;
    let mut rng = rng_from(seed);
    let d = random_subset(&mut rng, params.n, c.params.size);
    let block = rng.random_range(1..=fam.blocks());
    let stars = 3 * params.k * block as u64;
    let t = Multiset::from_ids(d.iter().copied(), stars);
    let ans = bq_one_shot(&t, &params, &fam, &mut rng)?;
    let valid = valid_index_range(stars, params.k, fam.blocks()).contains(&ans.block_index);
    let exact = fam.answer_block(ans.block_index, &t)?;
    let mse = ans.values.iter().zip(&exact).map(|(a, e)| (a - e).powi(2)).sum::<f64>() / exact.len() as f64;
    let within = mse <= params.mse_bound()?;
    Ok(Outcome::new(valid, mse, 0)
        .verdict(if within { "mse_ok" } else { "mse_exceeded" })
        .detail(format!("block={block} released={}", ans.block_index)))
}

fn xor_data(c: &ExperimentConfig, rng: &mut ChaCha) -> (u32, Vec<u64>, Vec<u64>) {
    let bits = c.params.bits.unwrap_or(8);
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let mut data: Vec<u64> = (0..c.n(32)).map(|_| rng.random::<u64>() & mask).collect();
    data.shuffle(rng);
    let dels = data[..c.params.deletions.unwrap_or(8)].to_vec();
    (bits, data, dels)
}

fn xor_deleted(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from(seed);
    let (bits, data, dels) = xor_data(c, &mut rng);
    let mut cur = Curator::start(XorDeleted::new(bits)?, data.into_iter().collect(), derive_seed(seed, 1))?;
    for x in &dels {
        cur.delete(DeletionRequest::one(*x))?;
    }
    let got = xor_differencing_attack(cur.transcript())?;
    let hits = got.iter().zip(&dels).filter(|(a, b)| a == b).count();
    Ok(Outcome::new(hits == dels.len(), hits as f64, dels.len() as u64))
}

fn xor_undeleted(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from(seed);
    let (bits, data, dels) = xor_data(c, &mut rng);
    let mut left: Multiset<u64> = data.iter().copied().collect();
    let mut cur = Curator::start(XorUndeleted::new(bits)?, left.clone(), derive_seed(seed, 1))?;
    let z0 = cur.initial().bits().expect("bits release");
    let mut members = true;
    let mut exposed = BTreeSet::new();
    for x in &dels {
        left.remove(x, 1)?;
        let y = z0 ^ cur.delete(DeletionRequest::one(*x))?.bits().expect("bits release");
        members &= left.contains(&y);
        exposed.insert(y);
    }
    Ok(Outcome::new(members, exposed.len() as f64, dels.len() as u64))
}

fn footnote(w: f64) -> Vec<Point> {
    let mut d = vec![Point(1.0)];
    d.extend(vec![Point(0.0); 10]);
    d.push(Point(w));
    d.extend(vec![Point(1.0); 11]);
    d
}

fn footnote_run<M, F>(make: F, w: f64, w_other: f64, seed: u64, witness_trials: usize) -> Result<Outcome>
where
    M: Mechanism<Elem = Point>,
    F: Fn() -> M,
{
    let d = footnote(w);
    let mut cur = Curator::start(make(), d.iter().cloned().collect(), derive_seed(seed, 1))?;
    let out = median_exposure_attack(&mut cur, Point(1.0))?;
    let got = match out.recovered {
        Recovered::Scalar(z) => z,
        _ => f64::NAN,
    };
    let other = footnote(w_other);
    let report = simulator_blindness_witness(
        &make,
        (&d, &other),
        || FixedOrder::new(vec![0]),
        &[0],
        &SideInfoFn::size(),
        &WitnessConfig::new(witness_trials, derive_seed(seed, 2)),
    )?;
    let err = (got - w).abs();
    Ok(Outcome::new(err == 0.0 && report.verdict.to_string() == "UNSAFE", err, out.deletions_used)
        .verdict(report.verdict.to_string())
        .detail(format!("w={w} recovered={got}")))
}

fn median_footnote(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from(seed);
    let w = rng.random_range(1..128) as f64 / 256.0;
    let trials = c.params.witness_trials.unwrap_or(32);
    match c.mechanism.as_str() {
        "dp_median" => {
            let (bits, eps) = (c.params.bits.unwrap_or(8), c.epsilon(f64::INFINITY));
            DpMedian::new(bits, eps)?;
            footnote_run(|| DpMedian::new(bits, eps).expect("validated").with_hidden_structure(), w, w + 0.5, seed, trials)
        }
        _ => footnote_run(ExactMedianRetrainer::new, w, w + 0.5, seed, trials),
    }
}

fn dp_median_rank(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let bits = c.params.bits.unwrap_or(10);
    let mut rng = rng_from(seed);
    let data: Vec<Point> = (0..c.n(201)).map(|_| grid_point(&mut rng, bits)).collect();
    let mut left: Multiset<Point> = data.iter().cloned().collect();
    let mut cur = Curator::start(DpMedian::new(bits, c.epsilon(1.0))?, left.clone(), derive_seed(seed, 1))?;
    let tree = cur.mechanism().structure().expect("initialized").clone();
    let mut ledger = DeletionLedger::for_structure(&tree);
    let bins = 1usize << bits;
    let noise = |left: &Multiset<Point>, ledger: &DeletionLedger| -> Result<Vec<f64>> {
        let mut hist = vec![0u64; bins];
        for (x, m) in left.iter() {
            hist[bin_of(bits, x.get())?] += m;
        }
        let mut acc = 0u64;
        Ok((0..bins)
            .map(|b| {
                acc += hist[b];
                tree.noisy_bins(0, b) - ledger.bins(0, b) as f64 - acc as f64
            })
            .collect())
    };
    let eta = noise(&left, &ledger)?;
    let mut constant = true;
    let z0 = Point(cur.initial().scalar().expect("scalar"));
    let mut worst = rank_error(&left, &z0)?;
    let mut order = data;
    order.shuffle(&mut rng);
    for x in order.into_iter().take(c.params.deletions.unwrap_or(32)) {
        let z = cur.delete(DeletionRequest::one(x))?.scalar().expect("scalar");
        left.remove(&x, 1)?;
        ledger.record(x.get(), 1)?;
        constant &= noise(&left, &ledger)? == eta;
        worst = worst.max(rank_error(&left, &Point(z))?);
    }
    Ok(Outcome::new(constant, worst as f64, cur.deletions_used()).verdict(if constant { "constant" } else { "drift" }))
}

fn kmeans_data(c: &ExperimentConfig, rng: &mut ChaCha) -> Vec<f64> {
    let n = c.n(200);
    match c.params.generator.unwrap_or(Generator::Uniform) {
        Generator::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
        Generator::Mixture => {
            let (a, b) = (Normal::new(0.3, 0.1).expect("valid"), Normal::new(0.7, 0.1).expect("valid"));
            (0..n)
                .map(|_| if rng.random_bool(0.5) { a.sample(rng) } else { b.sample(rng) })
                .collect()
        }
    }
}

fn kmeans(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from(seed);
    let xs = kmeans_data(c, &mut rng);
    let controlled_count = ((c.params.alpha.unwrap_or(0.2) * xs.len() as f64).ceil() as usize).min(xs.len() - 2);
    let controlled = xs[..controlled_count].to_vec();
    let mut cur = Curator::start(KMeansRetrainer::new(), xs.iter().copied().map(Point).collect(), derive_seed(seed, 1))?;
    let attack = kmeans_attack_loop(&mut cur, &controlled, xs.len() as u64, controlled_count as u64)?;

    let mut left = xs.clone();
    let mut inference_ok = true;
    let mut ambiguous = 0;
    for round in &attack.rounds {
        let before = lloyd_2means_1d(&left)?;
        let pos = left.iter().position(|&x| x == round.deleted).expect("deleted point present");
        left.swap_remove(pos);
        let after = lloyd_2means_1d(&left)?;
        let truth = if round.deleted > (round.old.0 + round.old.1) / 2.0 {
            (before.m1, before.m1 as i64 - after.m1 as i64)
        } else {
            (before.m2, before.m2 as i64 - after.m2 as i64)
        };
        if let Some(inf) = round.inference {
            if inf.ambiguous() {
                ambiguous += 1;
            } else if (inf.m1_old, inf.p) != truth {
                inference_ok = false;
            }
        }
    }
    let uncontrolled = &xs[controlled_count..];
    let matches = attack
        .recovered
        .iter()
        .filter(|&&r| uncontrolled.iter().any(|&u| (u - r).abs() <= 1e-9 * u.abs()))
        .count();
    Ok(Outcome::new(matches >= 1 && inference_ok, matches as f64, attack.rounds.len() as u64)
        .verdict(if inference_ok { "inference_ok" } else { "inference_mismatch" })
        .detail(format!("ambiguous={ambiguous} recovered={}", attack.recovered.len())))
}

fn sq_mech() -> SqMechanism<Point> {
    let preds: Vec<Predicate<Point>> = vec![Arc::new(|x: &Point| x.get()), Arc::new(|_: &Point| 1.0)];
    SqMechanism::new(preds, 1.0, PostProcess::Ratio { num: 0, den: 1 }).expect("valid predicates")
}

fn stateless_pair<M, F>(make: F, d: &[Point], y: Vec<usize>, k: usize, seed: u64) -> Result<(bool, u64)>
where
    M: Mechanism<Elem = Point> + 'static,
    F: Fn() -> M,
{
    let side = SideInfoFn::size();
    let mut p = StaticAsDynamic::new(AdaptiveParity::default(), y.clone());
    let real = dynamic_game(make(), d, &mut p, &side, Mode::Real, k, seed)?;
    let mut s = StatelessSimulator::new(make(), StaticAsDynamic::new(AdaptiveParity::default(), y))?;
    let ideal = dynamic_game(make(), d, &mut s, &side, Mode::Ideal, k, seed)?;
    let mut same = real.view == ideal.view && real.bookkeeping_holds(k) && ideal.bookkeeping_holds(k);

    let real = dynamic_game(make(), d, &mut RandomDynamic::new(k), &side, Mode::Real, k, seed)?;
    let mut s = StatelessSimulator::new(make(), RandomDynamic::new(k))?;
    let ideal = dynamic_game(make(), d, &mut s, &side, Mode::Ideal, k, seed)?;
    same &= real.view == ideal.view && real.bookkeeping_holds(k) && ideal.bookkeeping_holds(k);
    Ok((same, real.r.len() as u64))
}

fn games_stateless(c: &ExperimentConfig, trial: usize, seed: u64) -> Result<Outcome> {
    let (n, k) = (c.n(24) as usize, c.k(6) as usize);
    let mut rng = rng_from(seed);
    let d: Vec<Point> = (0..n).map(|_| grid_point(&mut rng, 8)).collect();
    let y: Vec<usize> = (0..n).choose_multiple(&mut rng, k);
    let mech = match c.mechanism.as_str() {
        SUITE => ["dp_sum", "dp_median", "sq"][trial % 3],
        m => m,
    };
    let (same, deleted) = match mech {
        "dp_sum" => stateless_pair(|| DpSum::new(1.0).expect("valid"), &d, y, k, seed)?,
        "dp_median" => stateless_pair(|| DpMedian::new(8, 1.0).expect("valid"), &d, y, k, seed)?,
        _ => stateless_pair(sq_mech, &d, y, k, seed)?,
    };
    Ok(Outcome::new(same, f64::from(u8::from(!same)), deleted)
        .verdict(if same { "identical" } else { "differs" })
        .detail(mech))
}

fn leakage_run<M, F>(make: F, d: &[Point], k: usize, seed: u64) -> Result<(bool, u64)>
where
    M: Mechanism<Elem = Point> + 'static,
    F: Fn() -> M + Clone + 'static,
{
    let mut sim = FullKnowledgeSimulator::new(make.clone(), RandomDynamic::new(k));
    let (real, ideal) = leakage_game(make, d, &mut RandomDynamic::new(k), &mut sim, Leakage::Histogram, &SideInfoFn::size(), k, seed)?;
    Ok((real.view == ideal.view, real.r.len() as u64))
}

fn leakage(c: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let (n, k) = (c.n(15) as usize, c.k(4) as usize);
    let mut rng = rng_from(seed);
    let d: Vec<Point> = (0..n).map(|_| grid_point(&mut rng, 8)).collect();
    let (same, deleted) = match c.mechanism.as_str() {
        "naive_median" => leakage_run(NaiveMedian::new, &d, k, seed)?,
        _ => leakage_run(ExactMedianRetrainer::new, &d, k, seed)?,
    };
    Ok(Outcome::new(same, f64::from(u8::from(!same)), deleted).verdict(if same { "identical" } else { "differs" }))
}
