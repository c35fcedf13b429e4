//! Serde representation for byte strings in the native format: a plain JSON
//! string when the bytes are UTF-8, otherwise `{"base64": "..."}`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Text(String),
    Binary { base64: String },
}

pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Repr::Text(s.to_string()),
        Err(_) => Repr::Binary {
            base64: STANDARD.encode(bytes),
        },
    }
    .serialize(serializer)
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
    match Repr::deserialize(deserializer)? {
        Repr::Text(s) => Ok(s.into_bytes()),
        Repr::Binary { base64 } => STANDARD.decode(base64).map_err(serde::de::Error::custom),
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &Option<Vec<u8>>, serializer: S) -> Result<S::Ok, S::Error> {
        match bytes {
            Some(b) => super::serialize(b, serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<Vec<u8>>, D::Error> {
        match Option::<Repr>::deserialize(deserializer)? {
            None => Ok(None),
            Some(Repr::Text(s)) => Ok(Some(s.into_bytes())),
            Some(Repr::Binary { base64 }) => STANDARD.decode(base64).map(Some).map_err(serde::de::Error::custom),
        }
    }
}
