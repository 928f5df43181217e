//! Batch evaluation over many poses, data-parallel when the `parallel`
//! feature is on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kinematics::{roundtrip_validate, IkError, JointAngles, LinkLengths, RoundtripStatus};
use crate::workspace::JointLimits;

/// The default is `Parallel` whenever the `parallel` feature is enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Order-preserving map; results are identical for every execution mode.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
    }
}

/// `n` joint sets drawn uniformly from the limit box.
pub fn random_in_limit_angles(n: usize, seed: u64, limits: &JointLimits) -> Vec<JointAngles> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| limits.lerp(std::array::from_fn(|_| rng.gen::<f64>())))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepSummary {
    pub pass: usize,
    pub skip: usize,
    pub fail: usize,
    pub max_error: f64,
    pub skipped_negative_reach: usize,
    pub skipped_unreachable: usize,
    pub skipped_base_singular: usize,
}

impl SweepSummary {
    pub fn total(&self) -> usize {
        self.pass + self.skip + self.fail
    }

    pub fn skip_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.skip as f64 / self.total() as f64
        }
    }
}

pub fn roundtrip_sweep(angles: &[JointAngles], links: &LinkLengths, tol: f64) -> SweepSummary {
    roundtrip_sweep_with(Execution::default(), angles, links, tol)
}

pub fn roundtrip_sweep_with(
    exec: Execution,
    angles: &[JointAngles],
    links: &LinkLengths,
    tol: f64,
) -> SweepSummary {
    let reports = map(exec, angles, |a| roundtrip_validate(a, links, tol));
    let mut summary = SweepSummary::default();
    for r in &reports {
        match r.status {
            RoundtripStatus::Pass => summary.pass += 1,
            RoundtripStatus::Fail => summary.fail += 1,
            RoundtripStatus::Skipped(e) => {
                summary.skip += 1;
                match e {
                    IkError::NegativeReach => summary.skipped_negative_reach += 1,
                    IkError::Unreachable => summary.skipped_unreachable += 1,
                    IkError::BaseSingular => summary.skipped_base_singular += 1,
                }
            }
        }
        if let Some(e) = r.error {
            summary.max_error = summary.max_error.max(e);
        }
    }
    summary
}
