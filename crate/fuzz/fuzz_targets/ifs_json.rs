#![no_main]

use libfuzzer_sys::fuzz_target;
use walkdim_core::config::parse_ifs_json;

fuzz_target!(|data: &[u8]| {
    // Validation is polynomial in the map count; keep inputs small.
    if data.len() > 4096 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(ifs) = parse_ifs_json(text) else {
        return;
    };
    let _ = ifs.validate();
    let again = parse_ifs_json(&serde_json::to_string(&ifs).unwrap()).unwrap();
    assert_eq!(again, ifs);
});
