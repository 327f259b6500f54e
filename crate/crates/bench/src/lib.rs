//! Shared fixtures for the criterion benchmarks.

use riseff_core::rng::stream;
use riseff_core::{sample_h1, synthesize_stats, RisBsChannel, SystemConfig, UtChannelStats};

/// Seeded instance with `users` UTs of `nk` antennas, `m` BS antennas and
/// `nr` RIS elements at 20 dBm per UT.
pub fn fixture(users: usize, nk: usize, m: usize, nr: usize) -> (SystemConfig, RisBsChannel, Vec<UtChannelStats>) {
    let cfg = SystemConfig::uniform(users, nk, m, nr, 20.0);
    let h1 = sample_h1(&cfg, &mut stream(7, 0));
    let stats = synthesize_stats(&cfg, 0.5, -120.0, &mut stream(7, 1)).expect("valid correlation");
    (cfg, h1, stats)
}
