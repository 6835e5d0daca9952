#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::session::{plan_schedule, Session, StudyDefinition};

fuzz_target!(|data: &[u8]| {
    if let Ok(study) = StudyDefinition::from_json(data) {
        for day in 0..=8 {
            let _ = plan_schedule(&study, day, 1, "en");
        }
        let _ = Session::new(study, 1, "en");
    }
});
