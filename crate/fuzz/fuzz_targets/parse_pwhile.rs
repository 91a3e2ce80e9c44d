#![no_main]

use libfuzzer_sys::fuzz_target;
use pwhile_dp::syntax::{parse, parse_cmd, print_program};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse(src) {
        // printing must give text that parses back to the same program
        let again = parse(&print_program(&p)).expect("printed program reparses");
        assert_eq!(p, again);
    }
    let _ = parse_cmd(src);
});
