//! Synthetic qualification schedules for when a real one is not available.

use nalgebra::DVector;
use rand::seq::SliceRandom;

use crate::design::{DesignMatrix, RobotRoster};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::simulator::rng::{stream, SCHEDULE_STREAM};

const MAX_ATTEMPTS: u64 = 64;

/// Random 3-vs-3 schedule with balanced appearance counts.
///
/// Each match takes the six robots with the fewest appearances so far (ties
/// broken at random) and splits them at random into two alliances. The
/// schedule is redrawn until every robot strength contrast is estimable.
/// Robots are named `syn001`, `syn002`, ...
pub fn synthetic_design(k: usize, m: usize, seed: u64) -> Result<(RobotRoster, DesignMatrix)> {
    if k < 6 || m == 0 {
        return Err(Error::Validation(format!("synthetic schedule needs K >= 6 and M >= 1, got K = {k}, M = {m}")));
    }
    let roster = RobotRoster::new((1..=k).map(|i| format!("syn{i:03}")))?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream(seed, SCHEDULE_STREAM - attempt);
        let mut used = vec![0usize; k];
        let mut alliances = Vec::with_capacity(m);
        for _ in 0..m {
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            order.sort_by_key(|&i| used[i]);
            let mut six = order[..6].to_vec();
            six.shuffle(&mut rng);
            for &i in &six {
                used[i] += 1;
            }
            alliances.push(([six[0], six[1], six[2]], [six[3], six[4], six[5]]));
        }
        let design = DesignMatrix::from_alliances(k, alliances, DVector::zeros(m))?;
        if LeastSquares::new(design.x()).rank() + 1 == k {
            return Ok((roster, design));
        }
    }
    Err(Error::Validation(format!(
        "no estimable synthetic schedule with K = {k}, M = {m} after {MAX_ATTEMPTS} attempts"
    )))
}
