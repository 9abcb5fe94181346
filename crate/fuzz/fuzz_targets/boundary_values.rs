#![no_main]

use libfuzzer_sys::fuzz_target;
use walkdim_core::config::parse_boundary_values;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(values) = parse_boundary_values(text) {
        assert_eq!(values.len(), text.split(',').count());
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        assert_eq!(parse_boundary_values(&joined.join(",")).unwrap(), values);
    }
});
