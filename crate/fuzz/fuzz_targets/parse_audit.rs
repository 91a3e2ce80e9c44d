#![no_main]

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use pwhile_dp::aprhl::script::parse_records;
use pwhile_dp::audit::audit_from_source;

const PROGRAM: &str = "param sigma: real = 1;\nvar a: real; var x: real;\nx <$ lap(sigma)(a)\n";

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let _ = parse_records(src, "audit");
    let _ = audit_from_source(src, PROGRAM, "laplace_release.pwhile", &BTreeMap::new());
});
