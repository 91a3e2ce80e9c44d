#![no_main]

use libfuzzer_sys::fuzz_target;
use pwhile_dp::lifting::text::{parse_liftcheck, run_liftcheck};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(lc) = parse_liftcheck(src) {
        // the subset checks are exponential in the support
        if lc.left.len() <= 8 && lc.right.len() <= 8 {
            let _ = run_liftcheck(&lc);
        }
    }
});
