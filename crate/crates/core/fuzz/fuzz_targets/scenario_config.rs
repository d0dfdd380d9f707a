#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::scenario::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ScenarioConfig::from_json(text) {
        let again = ScenarioConfig::from_value(config.to_value()).expect("roundtrip");
        assert_eq!(config, again);
    }
});
