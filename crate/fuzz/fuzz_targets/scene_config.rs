#![no_main]

use coilbot::experiments::SceneConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scene) = SceneConfig::from_json(text) {
            scene.validate().expect("from_json returned an invalid scene");
        }
    }
});
