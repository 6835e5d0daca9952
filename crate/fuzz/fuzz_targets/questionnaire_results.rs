#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::datastore::QuestionnaireResults;

fuzz_target!(|data: &[u8]| {
    if let Ok(q) = QuestionnaireResults::from_json(data) {
        let _ = q.rating("motivation");
    }
});
