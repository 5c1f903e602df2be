#![no_main]

use entrokl::io::{parse_points, points_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sample) = parse_points(text, "fuzz") {
        assert!(sample.n() >= 2 && sample.dim() >= 1);
        assert!(sample.points().iter().all(|v| v.is_finite()));
        let again = parse_points(&points_to_csv(&sample), "fuzz").expect("written CSV parses");
        assert_eq!(again.points(), sample.points());
    }
});
