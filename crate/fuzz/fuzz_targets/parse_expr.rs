#![no_main]

use libfuzzer_sys::fuzz_target;
use sigmaflow::expr::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    match parse(src) {
        Ok(e) => {
            // printing must round-trip to the same tree
            let again = parse(&e.to_string()).expect("printed expression parses");
            assert_eq!(again, e);
            let _ = e.eval(&[0.5; 8]);
        }
        Err(err) => assert!(err.offset() <= src.len()),
    }
});
