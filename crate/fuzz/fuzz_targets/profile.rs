#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::simkit::SyntheticSubjectProfile;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = SyntheticSubjectProfile::from_json(data) {
        assert_eq!(SyntheticSubjectProfile::from_json(p.to_json().as_bytes()).ok(), Some(p));
    }
});
