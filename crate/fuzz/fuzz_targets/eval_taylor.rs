#![no_main]

use libfuzzer_sys::fuzz_target;
use sigmaflow::expr::parse;
use sigmaflow::taylor::{MAX_DIM, MAX_ORDER};

// Layout: order byte, dimension byte, then the expression source.
fuzz_target!(|data: &[u8]| {
    let [order, dim, rest @ ..] = data else {
        return;
    };
    let order = *order as usize % (MAX_ORDER + 1);
    let dim = 1 + *dim as usize % MAX_DIM;
    let Ok(src) = std::str::from_utf8(rest) else {
        return;
    };
    let Ok(e) = parse(src) else { return };
    let point: Vec<f64> = (0..dim).map(|i| 0.3 + 0.1 * i as f64).collect();
    let active: Vec<usize> = (0..dim).collect();
    if let (Ok(t), Ok(v)) = (e.eval_taylor(&point, &active, order), e.eval(&point)) {
        if v.is_finite() && t.value().is_finite() {
            assert_eq!(t.value(), v, "jet value differs from plain evaluation");
        }
    }
});
