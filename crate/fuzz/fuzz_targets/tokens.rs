#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::datastore::SubjectId;
use mynd_core::features::parse_trial_label;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_trial_label(s);
        if let Ok(id) = SubjectId::parse(s) {
            assert_eq!(id.as_str(), s);
        }
    }
});
