#![no_main]

use binom_bounds::input::parse_probability;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(p) = parse_probability(data) else {
        return;
    };
    assert!((0.0..=1.0).contains(&p.value), "{data:?} -> {}", p.value);
    assert_eq!(p.value, p.exact.to_f64());

    // The same value written as a reduced fraction parses to the same thing.
    let r = p.exact.reduced();
    let text = format!("{}/{}", r.numerator(), r.denominator());
    if let Ok(again) = parse_probability(&text) {
        assert_eq!(again.exact, p.exact);
        assert_eq!(again.value.to_bits(), p.value.to_bits());
    }
});
