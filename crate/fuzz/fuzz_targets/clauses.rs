#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::smc::{clauses_from_json, clauses_to_json};

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(clauses) = clauses_from_json(text, n as usize) else { return };
    assert_eq!(clauses_from_json(&clauses_to_json(&clauses), n as usize).expect("round trip"), clauses);
});
