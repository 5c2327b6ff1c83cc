#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::io::{parse_workspace, workspace_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(ws) = parse_workspace(text) else { return };
    let again = parse_workspace(&workspace_to_json(&ws)).expect("serialized workspace parses");
    assert_eq!(again, ws);
});
