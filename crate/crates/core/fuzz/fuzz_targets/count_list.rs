#![no_main]

use entrokl::io::parse_count_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = parse_count_list(text) {
        assert_eq!(v.len(), text.split(',').count());
    }
});
