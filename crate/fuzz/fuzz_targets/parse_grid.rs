#![no_main]

use binom_bounds::input::{parse_grid, MAX_GRID_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(points) = parse_grid(data) else {
        return;
    };
    assert!(!points.is_empty());
    assert!(points.len() <= MAX_GRID_POINTS);
    for w in points.windows(2) {
        assert!(w[0].exact < w[1].exact, "grid not increasing: {data:?}");
    }
    for p in &points {
        assert!((0.0..=1.0).contains(&p.value));
    }
});
