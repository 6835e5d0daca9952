//! Hybrid encryption envelope.
//!
//! Every file gets a fresh 256-bit content key. The payload is sealed with
//! that key; the key itself is sealed under a key-encryption key derived
//! from an ephemeral X25519 exchange with the recipient's public key. Only
//! the holder of the matching private key can unwrap it.
//!
//! Little-endian layout (version 1):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MYNE"
//!      4     2  version (1)
//!      6     1  key agreement id (1 = X25519 + HKDF-SHA256)
//!      7     1  AEAD id (1 = ChaCha20-Poly1305)
//!      8     8  recipient key id (first 8 bytes of SHA-256 of the public key)
//!     16     2  ephemeral public key length E (32)
//!     18     E  ephemeral public key
//!   18+E     2  wrapped key length W (48)
//!   20+E     W  wrapped content key (ciphertext + tag)
//! 20+E+W     1  nonce length N (12)
//! 21+E+W     N  payload nonce
//! 21+E+W+N   8  ciphertext length C
//! 29+E+W+N   C  payload ciphertext + tag
//! ```
//!
//! The key wrap authenticates every byte up to and including the ephemeral
//! key; the payload seal authenticates every byte before the ciphertext
//! length.

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey, StaticSecret};

pub const ENVELOPE_MAGIC: &[u8; 4] = b"MYNE";
pub const ENVELOPE_VERSION: u16 = 1;
pub const KEM_X25519_HKDF_SHA256: u8 = 1;
pub const AEAD_CHACHA20_POLY1305: u8 = 1;

const KEY_LEN: usize = 32;
const TAG_LEN: usize = 16;
const NONCE_LEN: usize = 12;
const WRAP_INFO: &[u8] = b"mynd envelope key wrap v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("not an envelope")]
    BadMagic,
    #[error("unsupported envelope version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported algorithm ids ({kem}, {aead})")]
    UnsupportedAlgorithm { kem: u8, aead: u8 },
    #[error("envelope truncated")]
    Truncated,
    #[error("malformed envelope: {0}")]
    Malformed(&'static str),
    #[error("authentication failed")]
    Authentication,
    #[error("invalid key material")]
    InvalidKey,
}

/// Recipient public key.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct RecipientPublicKey(PublicKey);

/// Recipient private key.
#[derive(Clone)]
pub struct RecipientSecretKey(StaticSecret);

impl fmt::Debug for RecipientPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RecipientPublicKey({})", self.to_hex())
    }
}

impl fmt::Debug for RecipientSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RecipientSecretKey(..)")
    }
}

fn decode_key_hex(s: &str) -> Result<[u8; KEY_LEN], EnvelopeError> {
    let s = s.trim();
    if s.len() != 2 * KEY_LEN {
        return Err(EnvelopeError::InvalidKey);
    }
    let mut out = [0u8; KEY_LEN];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = u8::from_str_radix(s.get(2 * i..2 * i + 2).ok_or(EnvelopeError::InvalidKey)?, 16)
            .map_err(|_| EnvelopeError::InvalidKey)?;
    }
    Ok(out)
}

fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl RecipientPublicKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(PublicKey::from(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        self.0.as_bytes()
    }

    pub fn from_hex(s: &str) -> Result<Self, EnvelopeError> {
        Ok(Self::from_bytes(decode_key_hex(s)?))
    }

    pub fn to_hex(&self) -> String {
        encode_hex(self.as_bytes())
    }

    /// First eight bytes of the SHA-256 of the key.
    pub fn key_id(&self) -> [u8; 8] {
        Sha256::digest(self.as_bytes())[..8].try_into().unwrap()
    }
}

impl RecipientSecretKey {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self(StaticSecret::random_from_rng(rng))
    }

    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(StaticSecret::from(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self, EnvelopeError> {
        Ok(Self::from_bytes(decode_key_hex(s)?))
    }

    pub fn to_hex(&self) -> String {
        encode_hex(&self.0.to_bytes())
    }

    pub fn public_key(&self) -> RecipientPublicKey {
        RecipientPublicKey(PublicKey::from(&self.0))
    }
}

/// Parsed envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedEnvelope {
    pub kem: u8,
    pub aead: u8,
    pub recipient_key_id: [u8; 8],
    pub ephemeral_public: [u8; KEY_LEN],
    pub wrapped_key: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

impl EncryptedEnvelope {
    fn wrap_aad(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18 + KEY_LEN);
        out.extend_from_slice(ENVELOPE_MAGIC);
        out.extend_from_slice(&ENVELOPE_VERSION.to_le_bytes());
        out.push(self.kem);
        out.push(self.aead);
        out.extend_from_slice(&self.recipient_key_id);
        out.extend_from_slice(&(KEY_LEN as u16).to_le_bytes());
        out.extend_from_slice(&self.ephemeral_public);
        out
    }

    fn payload_aad(&self) -> Vec<u8> {
        let mut out = self.wrap_aad();
        out.extend_from_slice(&(self.wrapped_key.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.wrapped_key);
        out.push(NONCE_LEN as u8);
        out.extend_from_slice(&self.nonce);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.payload_aad();
        out.extend_from_slice(&(self.ciphertext.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], EnvelopeError> {
            let s = bytes.get(pos..pos.checked_add(n).ok_or(EnvelopeError::Truncated)?).ok_or(EnvelopeError::Truncated)?;
            pos += n;
            Ok(s)
        };
        if take(4)? != ENVELOPE_MAGIC {
            return Err(EnvelopeError::BadMagic);
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != ENVELOPE_VERSION {
            return Err(EnvelopeError::UnsupportedVersion(version));
        }
        let (kem, aead) = (take(1)?[0], take(1)?[0]);
        if kem != KEM_X25519_HKDF_SHA256 || aead != AEAD_CHACHA20_POLY1305 {
            return Err(EnvelopeError::UnsupportedAlgorithm { kem, aead });
        }
        let recipient_key_id: [u8; 8] = take(8)?.try_into().unwrap();
        let eph_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        if eph_len != KEY_LEN {
            return Err(EnvelopeError::Malformed("ephemeral key length"));
        }
        let ephemeral_public: [u8; KEY_LEN] = take(KEY_LEN)?.try_into().unwrap();
        let wrap_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        if wrap_len != KEY_LEN + TAG_LEN {
            return Err(EnvelopeError::Malformed("wrapped key length"));
        }
        let wrapped_key = take(wrap_len)?.to_vec();
        if take(1)?[0] as usize != NONCE_LEN {
            return Err(EnvelopeError::Malformed("nonce length"));
        }
        let nonce: [u8; NONCE_LEN] = take(NONCE_LEN)?.try_into().unwrap();
        let ct_len = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let ct_len = usize::try_from(ct_len).map_err(|_| EnvelopeError::Truncated)?;
        if ct_len < TAG_LEN {
            return Err(EnvelopeError::Malformed("ciphertext shorter than its tag"));
        }
        let ciphertext = take(ct_len)?.to_vec();
        if pos != bytes.len() {
            return Err(EnvelopeError::Malformed("trailing bytes"));
        }
        Ok(Self { kem, aead, recipient_key_id, ephemeral_public, wrapped_key, nonce, ciphertext })
    }
}

fn key_encryption_key(shared: &[u8], ephemeral: &[u8; KEY_LEN], recipient: &[u8; KEY_LEN]) -> [u8; KEY_LEN] {
    let mut salt = [0u8; 2 * KEY_LEN];
    salt[..KEY_LEN].copy_from_slice(ephemeral);
    salt[KEY_LEN..].copy_from_slice(recipient);
    let mut kek = [0u8; KEY_LEN];
    Hkdf::<Sha256>::new(Some(&salt), shared).expand(WRAP_INFO, &mut kek).expect("32 bytes is a valid HKDF length");
    kek
}

/// Seals `plain` for `recipient` with a fresh content key.
pub fn encrypt_envelope<R: RngCore + CryptoRng>(
    plain: &[u8],
    recipient: &RecipientPublicKey,
    rng: &mut R,
) -> Result<EncryptedEnvelope, EnvelopeError> {
    let ephemeral = StaticSecret::random_from_rng(&mut *rng);
    let ephemeral_public = PublicKey::from(&ephemeral).to_bytes();
    let shared = ephemeral.diffie_hellman(&recipient.0);
    if !shared.was_contributory() {
        return Err(EnvelopeError::InvalidKey);
    }
    let kek = key_encryption_key(shared.as_bytes(), &ephemeral_public, recipient.as_bytes());

    let mut content_key = [0u8; KEY_LEN];
    rng.fill_bytes(&mut content_key);
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);

    let mut env = EncryptedEnvelope {
        kem: KEM_X25519_HKDF_SHA256,
        aead: AEAD_CHACHA20_POLY1305,
        recipient_key_id: recipient.key_id(),
        ephemeral_public,
        wrapped_key: Vec::new(),
        nonce,
        ciphertext: Vec::new(),
    };
    // The KEK is single-use, so a zero nonce is safe for the wrap.
    env.wrapped_key = ChaCha20Poly1305::new(Key::from_slice(&kek))
        .encrypt(Nonce::from_slice(&[0u8; NONCE_LEN]), Payload { msg: &content_key, aad: &env.wrap_aad() })
        .map_err(|_| EnvelopeError::Authentication)?;
    env.ciphertext = ChaCha20Poly1305::new(Key::from_slice(&content_key))
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plain, aad: &env.payload_aad() })
        .map_err(|_| EnvelopeError::Authentication)?;
    Ok(env)
}

/// Opens an envelope. Any mismatch, including a wrong key, yields
/// [`EnvelopeError::Authentication`] and no plaintext.
pub fn decrypt_envelope(env: &EncryptedEnvelope, secret: &RecipientSecretKey) -> Result<Vec<u8>, EnvelopeError> {
    let recipient = secret.public_key();
    let shared = secret.0.diffie_hellman(&PublicKey::from(env.ephemeral_public));
    if !shared.was_contributory() {
        return Err(EnvelopeError::Authentication);
    }
    let kek = key_encryption_key(shared.as_bytes(), &env.ephemeral_public, recipient.as_bytes());
    let content_key = ChaCha20Poly1305::new(Key::from_slice(&kek))
        .decrypt(Nonce::from_slice(&[0u8; NONCE_LEN]), Payload { msg: &env.wrapped_key, aad: &env.wrap_aad() })
        .map_err(|_| EnvelopeError::Authentication)?;
    if content_key.len() != KEY_LEN {
        return Err(EnvelopeError::Authentication);
    }
    ChaCha20Poly1305::new(Key::from_slice(&content_key))
        .decrypt(Nonce::from_slice(&env.nonce), Payload { msg: &env.ciphertext, aad: &env.payload_aad() })
        .map_err(|_| EnvelopeError::Authentication)
}

/// Parses and opens serialized envelope bytes.
pub fn open_envelope_bytes(bytes: &[u8], secret: &RecipientSecretKey) -> Result<Vec<u8>, EnvelopeError> {
    decrypt_envelope(&EncryptedEnvelope::from_bytes(bytes)?, secret)
}
