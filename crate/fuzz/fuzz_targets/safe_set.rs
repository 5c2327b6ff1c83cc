#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::abstraction::safe_set_contains;
use lidarsafe::io::parse_safe_set;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_safe_set(text) else { return };
    let dims = doc.cells.iter().map(|c| c.aux.len()).max().unwrap_or(0);
    let _ = safe_set_contains(&doc.cells, &vec![0.0; 2 + dims], 1e-9);
});
