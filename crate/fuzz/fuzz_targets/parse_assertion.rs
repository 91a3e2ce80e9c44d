#![no_main]

use libfuzzer_sys::fuzz_target;
use pwhile_dp::aprhl::parse_assertion;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(a) = parse_assertion(src) {
        let _ = parse_assertion(&a.to_string());
    }
});
