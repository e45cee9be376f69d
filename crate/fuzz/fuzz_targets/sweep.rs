//! Differential target: decodes `(n, p, seed)` from the input and runs the
//! full set of checks against the exact oracle for that single law.
//!
//! Layout: 2 bytes n (little endian, reduced to 1..=300), 4 bytes for the
//! numerator of p over 2^32, 8 bytes seed. Shorter inputs are ignored.

#![no_main]

use binom_bounds::{run_sweep, SweepConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 14 {
        return;
    }
    let n = 1 + u64::from(u16::from_le_bytes([data[0], data[1]])) % 300;
    let m = u32::from_le_bytes(data[2..6].try_into().unwrap());
    // 1 <= m <= 2^32 - 1, so p = m / 2^32 is exact and inside (0, 1).
    let m = u64::from(m).clamp(1, u64::from(u32::MAX));
    let p = m as f64 / 4_294_967_296.0;
    let seed = u64::from_le_bytes(data[6..14].try_into().unwrap());
    let config = SweepConfig {
        n_min: n,
        n_max: n,
        p_grid: vec![p],
        seed,
        quantile_cases: 8,
        refine: data.len() > 14 && data[14] & 1 == 1,
        fault: None,
    };
    let report = run_sweep(&config).expect("valid configuration");
    assert!(report.passed(), "n {n} p {p:e}: {:#?}", report.failures);
});
