#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::decoder::PriorFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(file) = PriorFile::from_bytes(data) {
        let again = PriorFile::from_bytes(&file.to_bytes()).expect("rewrite parses");
        assert_eq!(again.to_bytes(), file.to_bytes());
    }
});
