#![no_main]

use libfuzzer_sys::fuzz_target;
use walkdim_core::audit::AuditSubject;
use walkdim_core::config::parse_constants;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1024 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((n, rho, lambda)) = parse_constants(text) else {
        return;
    };
    // Invalid constants must be rejected, never panic.
    let _ = AuditSubject::from_constants(text, n, rho, lambda);
});
