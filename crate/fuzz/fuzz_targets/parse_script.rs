#![no_main]

use libfuzzer_sys::fuzz_target;
use pwhile_dp::aprhl::script::parse_script;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let _ = parse_script(src);
});
