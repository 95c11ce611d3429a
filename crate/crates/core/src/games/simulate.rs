use serde_json::Value;

use super::{DynamicPlayer, Leaked};
use crate::dataset::{DeletionRequest, Element};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, UpdateRule};
use crate::release::Release;
use crate::rng::derive_seed;

/// Replays a stateless mechanism from `z_0` and the deletion batches alone.
pub fn stateless_simulator<M: Mechanism>(
    mech: &M,
    z0: &Release,
    batches: &[Vec<DeletionRequest<M::Elem>>],
) -> Result<Vec<Release>> {
    let id = mech.id();
    if !id.is_stateless() {
        return Err(Error::NotStateless(id.to_string()));
    }
    let mut rule = mech
        .update_rule(z0)
        .ok_or_else(|| Error::NotStateless(format!("{id} has no public update rule for this release")))?;
    batches.iter().map(|b| rule.advance(b)).collect()
}

type RuleFactory<T> = Box<dyn Fn(&Release) -> Option<Box<dyn UpdateRule<T>>>>;

/// Simulator for a stateless mechanism: it wraps an attacker and answers
/// every deletion with the public update rule applied to `z_0`.
pub struct StatelessSimulator<T, A> {
    inner: A,
    factory: RuleFactory<T>,
    rule: Option<Box<dyn UpdateRule<T>>>,
    error: Option<Error>,
}

impl<T: Element, A> StatelessSimulator<T, A> {
    pub fn new<M>(template: M, inner: A) -> Result<Self>
    where
        M: Mechanism<Elem = T> + 'static,
    {
        if !template.id().is_stateless() {
            return Err(Error::NotStateless(template.id().to_string()));
        }
        Ok(Self {
            inner,
            factory: Box::new(move |z0| template.update_rule(z0)),
            rule: None,
            error: None,
        })
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<T: Element, A: DynamicPlayer<T>> DynamicPlayer<T> for StatelessSimulator<T, A> {
    fn start(&mut self, n: usize, side_info: &Value, z0: &Release, seed: u64) {
        self.rule = (self.factory)(z0);
        self.error = self.rule.is_none().then(|| Error::NotStateless("no public update rule for z0".into()));
        self.inner.start(n, side_info, z0, seed);
    }

    fn corrupt(&mut self) -> Option<Vec<usize>> {
        self.inner.corrupt()
    }

    fn reveal(&mut self, values: &[(usize, T)]) {
        self.inner.reveal(values);
    }

    fn delete(&mut self) -> Vec<usize> {
        self.inner.delete()
    }

    fn observe(&mut self, release: &Release) {
        self.inner.observe(release);
    }

    fn simulate(&mut self, deleted: &[(usize, T)]) -> Result<Release> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let batch: Vec<_> = deleted.iter().map(|(_, x)| DeletionRequest::one(x.clone())).collect();
        let z = self.rule.as_mut().ok_or(Error::NotInitialized)?.advance(&batch)?;
        self.inner.observe(&z);
        Ok(z)
    }
}

/// A dynamic-game simulator that also receives the leakage `g(D)`.
pub trait LeakageSimulator<T: Ord>: DynamicPlayer<T> {
    fn preload(&mut self, leaked: Leaked<T>);
}

/// Simulator for full leakage: it reruns its own copy of the mechanism on
/// the leaked dataset with fresh randomness and shows the wrapped attacker
/// that copy's releases, including its own `z_0`.
pub struct FullKnowledgeSimulator<M: Mechanism, A> {
    make_mech: Box<dyn Fn() -> M>,
    inner: A,
    leaked: Option<Leaked<M::Elem>>,
    mech: Option<M>,
    z0: Option<Release>,
    error: Option<Error>,
}

impl<M: Mechanism, A> FullKnowledgeSimulator<M, A> {
    pub fn new(make_mech: impl Fn() -> M + 'static, inner: A) -> Self {
        Self {
            make_mech: Box::new(make_mech),
            inner,
            leaked: None,
            mech: None,
            z0: None,
            error: None,
        }
    }
}

impl<M: Mechanism, A: DynamicPlayer<M::Elem>> LeakageSimulator<M::Elem> for FullKnowledgeSimulator<M, A> {
    fn preload(&mut self, leaked: Leaked<M::Elem>) {
        self.leaked = Some(leaked);
    }
}

impl<M: Mechanism, A: DynamicPlayer<M::Elem>> DynamicPlayer<M::Elem> for FullKnowledgeSimulator<M, A> {
    fn start(&mut self, n: usize, side_info: &Value, z0: &Release, seed: u64) {
        let data = self.leaked.as_ref().and_then(Leaked::multiset);
        let own = data
            .ok_or_else(|| Error::InvalidParams("leakage does not determine the dataset".into()))
            .and_then(|d| {
                let mut m = (self.make_mech)();
                let z = m.init(d, derive_seed(seed, 7))?;
                Ok((m, z))
            });
        match own {
            Ok((m, z)) => {
                self.inner.start(n, side_info, &z, seed);
                self.mech = Some(m);
                self.z0 = Some(z);
                self.error = None;
            }
            Err(e) => {
                self.inner.start(n, side_info, z0, seed);
                self.error = Some(e);
            }
        }
    }

    fn corrupt(&mut self) -> Option<Vec<usize>> {
        self.inner.corrupt()
    }

    fn reveal(&mut self, values: &[(usize, M::Elem)]) {
        self.inner.reveal(values);
    }

    fn delete(&mut self) -> Vec<usize> {
        self.inner.delete()
    }

    fn observe(&mut self, release: &Release) {
        self.inner.observe(release);
    }

    fn simulate(&mut self, deleted: &[(usize, M::Elem)]) -> Result<Release> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let batch: Vec<_> = deleted.iter().map(|(_, x)| DeletionRequest::one(x.clone())).collect();
        let z = self.mech.as_mut().ok_or(Error::NotInitialized)?.delete_batch(&batch)?;
        self.inner.observe(&z);
        Ok(z)
    }

    fn initial_view(&self) -> Option<Release> {
        self.z0.clone()
    }
}
