#![no_main]

use coilbot::experiments::{summarize, TimeSeriesLog};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = TimeSeriesLog::read_csv(data) {
        let _ = summarize(&log);
        let text = log.to_csv_string().expect("a parsed log must serialize");
        let back = TimeSeriesLog::read_csv(text.as_bytes()).expect("a written log must parse");
        assert_eq!(back.len(), log.len());
    }
});
