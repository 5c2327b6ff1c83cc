#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::io::{dynamics_to_json, parse_dynamics};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((d, bounds)) = parse_dynamics(text) else { return };
    let (d2, b2) = parse_dynamics(&dynamics_to_json(&d, &bounds)).expect("serialized dynamics parse");
    assert_eq!(d2, d);
    assert_eq!(b2, bounds);
    let _ = d.step(&vec![0.0; d.state_dim()], &vec![0.0; d.input_dim()]);
});
