#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::pipeline::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = serde_json::from_str::<RunConfig>(text) else { return };
    let _ = config.lidar.spec();
    let _ = config.budget.budget();
    let _ = config.partition_options();
});
