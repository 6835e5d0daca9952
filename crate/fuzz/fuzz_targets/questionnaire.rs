#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::session::QuestionnaireDefinition;

fuzz_target!(|data: &[u8]| {
    let _ = QuestionnaireDefinition::from_json(data);
});
