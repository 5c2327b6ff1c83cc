#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::io::{clauses_from_dimacs, parse_conflict_cache, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_conflict_cache(text) else { return };
    let clauses = clauses_from_dimacs(&doc.clauses, doc.relu_count).expect("accepted cache has valid clauses");
    assert!(clauses.iter().flatten().all(|l| l.var() < doc.relu_count));
    assert_eq!(parse_conflict_cache(&to_json(&doc)).expect("round trip"), doc);
});
