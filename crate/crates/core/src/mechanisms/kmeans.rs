use serde::{Deserialize, Serialize};

use crate::dataset::{DeletionRequest, Multiset, Point};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId};
use crate::release::Release;

use super::live;

/// A converged one-dimensional 2-means clustering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansState {
    pub c1: f64,
    pub c2: f64,
    pub m1: u64,
    pub m2: u64,
}

impl KMeansState {
    /// Points `≤ boundary` belong to cluster 1.
    pub fn boundary(&self) -> f64 {
        (self.c1 + self.c2) / 2.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Lloyd's algorithm on the line with `k = 2`, started from `(min, max)`.
/// Points equidistant from both centers join cluster 1.
pub fn lloyd_2means_1d(d: &[f64]) -> Result<KMeansState> {
    if d.len() < 2 {
        return Err(Error::DegenerateData(format!("need at least two points, got {}", d.len())));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateData("non-finite point".into()));
    }
    let mut xs = d.to_vec();
    xs.sort_by(f64::total_cmp);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if lo == hi {
        return Err(Error::DegenerateData("all points are equal".into()));
    }
    let split = |c1: f64, c2: f64| xs.partition_point(|&x| x <= (c1 + c2) / 2.0);
    let mut s = split(lo, hi);
    loop {
        let (c1, c2) = (mean(&xs[..s]), mean(&xs[s..]));
        let next = split(c1, c2);
        if next == s {
            return Ok(KMeansState {
                c1,
                c2,
                m1: s as u64,
                m2: (xs.len() - s) as u64,
            });
        }
        s = next;
    }
}

fn run(data: &Multiset<Point>) -> Result<KMeansState> {
    let xs: Vec<f64> = data.to_sorted_vec().into_iter().map(Point::get).collect();
    lloyd_2means_1d(&xs)
}

/// Perfect retraining of 2-means: every round reruns Lloyd from scratch on
/// the remaining data and releases the centers only.
#[derive(Default)]
pub struct KMeansRetrainer {
    state: Option<(Multiset<Point>, KMeansState)>,
}

impl KMeansRetrainer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full clustering, including the hidden cluster sizes.
    pub fn state(&self) -> Option<&KMeansState> {
        self.state.as_ref().map(|(_, s)| s)
    }

    pub fn data(&self) -> Option<&Multiset<Point>> {
        self.state.as_ref().map(|(d, _)| d)
    }
}

impl Mechanism for KMeansRetrainer {
    type Elem = Point;

    fn id(&self) -> MechanismId {
        MechanismId::Kmeans
    }

    fn init(&mut self, data: Multiset<Point>, _seed: u64) -> Result<Release> {
        let s = run(&data)?;
        self.state = Some((data, s));
        Ok(Release::Centers { c1: s.c1, c2: s.c2 })
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let (data, state) = live(&mut self.state)?;
        let mut next = data.clone();
        next.remove_all(batch)?;
        let s = run(&next)?;
        *data = next;
        *state = s;
        Ok(Release::Centers { c1: s.c1, c2: s.c2 })
    }
}
