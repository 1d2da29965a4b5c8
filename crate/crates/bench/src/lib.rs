//! Fixtures shared by the benchmarks.

use gicband_core::{Sample, SimSetting};

/// First replicate of the log-normal pair at size `n`.
pub fn lognormal_pair(n: usize) -> (Sample, Sample) {
    SimSetting::setting1(n, 1, 1).draw(0).expect("preset draws")
}

/// First replicate of the log-normal / gamma pair at size `n`.
pub fn gamma_pair(n: usize) -> (Sample, Sample) {
    SimSetting::setting2(n, 1, 1).draw(0).expect("preset draws")
}
