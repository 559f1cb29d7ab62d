#![no_main]

use libfuzzer_sys::fuzz_target;
use sigmaflow_cli::spec::{decode, SpecError};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    match decode(src) {
        Ok(spec) => {
            assert!(spec.l <= spec.k && spec.k <= spec.chart.dim());
            let _ = spec.soliton("fuzz");
        }
        Err(SpecError::Json { offset, .. }) => assert!(offset <= src.len()),
        Err(_) => {}
    }
});
