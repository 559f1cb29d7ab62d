#![no_main]

use libfuzzer_sys::fuzz_target;
use sigmaflow::models::builtin;

fuzz_target!(|data: &[u8]| {
    let Ok(name) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = builtin(name) {
        assert!(m.dim() >= 1 && m.dim() <= sigmaflow::taylor::MAX_DIM);
    }
});
