#![no_main]

use binom_bounds::input::parse_k_range;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok((lo, hi)) = parse_k_range(data) {
        assert!(lo <= hi);
        assert_eq!(parse_k_range(&format!("{lo}:{hi}")).unwrap(), (lo, hi));
    }
});
