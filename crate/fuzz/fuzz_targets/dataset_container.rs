#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::datastore::RecordingDataset;
use mynd_core::features::extract_trials;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = RecordingDataset::from_bytes(data) {
        // Compared as bytes: samples may hold NaN.
        let bytes = ds.to_bytes().expect("parsed dataset serializes");
        let again = RecordingDataset::from_bytes(&bytes).expect("rewrite parses");
        assert_eq!(again.to_bytes().expect("reparsed dataset serializes"), bytes);
        let _ = extract_trials(&ds);
    }
});
