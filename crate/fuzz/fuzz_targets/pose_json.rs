#![no_main]

use coilbot::geometry::Pose;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pose) = serde_json::from_slice::<Pose>(data) {
        let text = serde_json::to_string(&pose).expect("a parsed pose must serialize");
        let back: Pose = serde_json::from_str(&text).expect("a written pose must parse");
        assert_eq!((back.from, back.to), (pose.from, pose.to));
    }
});
