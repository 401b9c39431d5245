#![no_main]

use coilbot::experiments::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scenario) = ScenarioConfig::from_json(text) {
            scenario.validate().expect("from_json returned an invalid scenario");
        }
    }
});
