//! Shared inputs for the benchmarks.

use wmprc_core::simulator::{generate_y, make_scenario, rng::stream, synthetic_design, BaseScenario, TruthSpec};
use wmprc_core::DesignMatrix;

/// A synthetic event the size of the larger base scenario with one noisy
/// response drawn from its truth.
pub fn m1_sample(seed: u64) -> (TruthSpec, DesignMatrix) {
    let (_, design) = synthetic_design(BaseScenario::M1.robots(), BaseScenario::M1.matches(), seed)
        .expect("M1 sizes yield a schedule");
    let truth = make_scenario(BaseScenario::M1, 1.0, &design).expect("truth matches the schedule");
    let y = generate_y(&truth, &design, &mut stream(seed, 0));
    (truth, design.with_response(y))
}
