#![no_main]

use libfuzzer_sys::fuzz_target;
use lidarsafe::network::NeuralNetwork;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = NeuralNetwork::from_json(text) else { return };
    let again = NeuralNetwork::from_json(&net.to_json()).expect("serialized network parses");
    assert_eq!(again, net);
    // Validated networks evaluate on any finite input of the right size.
    let _ = net.eval(&vec![0.5; net.input_dim]);
});
