#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::datastore::parse_messages;

fuzz_target!(|data: &[u8]| {
    let _ = parse_messages(data);
});
