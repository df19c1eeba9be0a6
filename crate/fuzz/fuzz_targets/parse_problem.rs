#![no_main]

use libfuzzer_sys::fuzz_target;
use musym_cli::ProblemFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(f) = ProblemFile::from_json(text) {
        let _ = f.validate();
    }
});
