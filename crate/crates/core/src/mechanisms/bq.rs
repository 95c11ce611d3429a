use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DeletionRequest, Elem, Multiset};
use crate::dp::{gaussian, laplace, PrivacyParams};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId};
use crate::queries::{clamp_index, BatchAnswer, CountingQueryFamily};
use crate::release::Release;
use crate::rng::{rng_from, Rng as ChaCha};

use super::live;

/// Parameters of the batch-queries problem and its private solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqParams {
    pub n: u32,
    pub t: u32,
    pub k: u64,
    pub privacy: PrivacyParams,
    pub alpha: f64,
    pub beta: f64,
}

impl BqParams {
    pub fn validate(&self) -> Result<()> {
        CountingQueryFamily::new(self.n, self.t)?;
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<CountingQueryFamily> {
        CountingQueryFamily::new(self.n, self.t)
    }

    /// Smallest `k` with `k ≥ (2/ε)·ln(2/β)`.
    pub fn min_k(epsilon: f64, beta: f64) -> u64 {
        ((2.0 / epsilon) * (2.0 / beta).ln()).ceil() as u64
    }

    /// Whether `k` is large enough for the Laplace index step to land in the
    /// valid range with probability `1 − β/2`.
    pub fn meets_index_hypothesis(&self) -> bool {
        self.k as f64 >= (2.0 / self.privacy.epsilon) * (2.0 / self.beta).ln()
    }

    /// `σ = √(16·t·ln(1/δ)) / ε`.
    pub fn sigma(&self) -> Result<f64> {
        if self.privacy.delta <= 0.0 {
            return Err(Error::InvalidParams("the Gaussian step needs delta > 0".into()));
        }
        Ok((16.0 * self.t as f64 * (1.0 / self.privacy.delta).ln()).sqrt() / self.privacy.epsilon)
    }

    /// Mean-squared block error that the Gaussian step exceeds with
    /// probability at most `β/2`: `σ²(t + 2√(t·ln(2/β)) + 2·ln(2/β)) / t`.
    pub fn mse_bound(&self) -> Result<f64> {
        let (t, l) = (self.t as f64, (2.0 / self.beta).ln());
        Ok(self.sigma()?.powi(2) * (t + 2.0 * (t * l).sqrt() + 2.0 * l) / t)
    }
}

/// One-shot private solver: a Laplace-noised block index followed by
/// Gaussian-noised answers to that block's queries.
pub fn bq_one_shot<R: Rng + ?Sized>(
    t: &Multiset<Elem>,
    params: &BqParams,
    family: &CountingQueryFamily,
    rng: &mut R,
) -> Result<BatchAnswer> {
    params.validate()?;
    if family.n() != params.n || family.t() != params.t {
        return Err(Error::InvalidParams("query family does not match (n, t)".into()));
    }
    let sigma = params.sigma()?;
    let eps = params.privacy.epsilon;
    let noisy_star = t.star_count() as f64 + laplace(2.0 / eps, rng)?;
    let index = clamp_index(noisy_star / (3 * params.k) as f64, family.blocks());
    let mut values = family.answer_block(index, t)?;
    for v in values.iter_mut() {
        *v += gaussian(sigma, rng)?;
    }
    Ok(BatchAnswer {
        block_index: index,
        values,
    })
}

/// Perfect retraining for the continual batch-queries problem: after each
/// deletion the block index is `round(Star/3k)` (clamped) and the block's
/// answers are recomputed on the remaining non-star elements, optionally
/// with Gaussian noise of standard deviation `sigma`.
pub struct BqRetrainer {
    family: CountingQueryFamily,
    k: u64,
    sigma: f64,
    data: Option<Multiset<Elem>>,
    rng: ChaCha,
}

impl BqRetrainer {
    pub fn new(family: CountingQueryFamily, k: u64, sigma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidScale(sigma));
        }
        Ok(Self {
            family,
            k,
            sigma,
            data: None,
            rng: rng_from(0),
        })
    }

    pub fn exact(family: CountingQueryFamily, k: u64) -> Result<Self> {
        Self::new(family, k, 0.0)
    }

    pub fn family(&self) -> &CountingQueryFamily {
        &self.family
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    fn release(&mut self) -> Result<Release> {
        let data = self.data.as_ref().ok_or(Error::NotInitialized)?;
        let index = clamp_index(data.star_count() as f64 / (3 * self.k) as f64, self.family.blocks());
        let mut values = self.family.answer_block(index, data)?;
        for v in values.iter_mut() {
            *v += gaussian(self.sigma, &mut self.rng)?;
        }
        Ok(Release::Block { index, values })
    }
}

impl Mechanism for BqRetrainer {
    type Elem = Elem;

    fn id(&self) -> MechanismId {
        MechanismId::BqRetrainer
    }

    fn init(&mut self, data: Multiset<Elem>, seed: u64) -> Result<Release> {
        data.check_domain(self.family.n())?;
        self.data = Some(data);
        self.rng = rng_from(seed);
        self.release()
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Elem>]) -> Result<Release> {
        live(&mut self.data)?.remove_all(batch)?;
        self.release()
    }
}
