#![no_main]

use libfuzzer_sys::fuzz_target;
use walkdim_core::config::parse_budget;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_budget(text);
});
