#![no_main]

use libfuzzer_sys::fuzz_target;
use mynd_core::datastore::{open_envelope_bytes, EncryptedEnvelope, RecipientSecretKey};

fuzz_target!(|data: &[u8]| {
    if let Ok(env) = EncryptedEnvelope::from_bytes(data) {
        assert_eq!(EncryptedEnvelope::from_bytes(&env.to_bytes()).ok(), Some(env));
    }
    let key = RecipientSecretKey::from_bytes([7; 32]);
    let _ = open_envelope_bytes(data, &key);
});
