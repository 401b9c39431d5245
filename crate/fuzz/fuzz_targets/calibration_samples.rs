#![no_main]

use coilbot::geometry::{calibrate_camera_to_base, SamplesFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = SamplesFile::from_json(text) {
            let _ = calibrate_camera_to_base(&file.samples);
        }
    }
});
