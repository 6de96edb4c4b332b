use serde_json::Value;

use crate::error::{Error, Result};
use crate::synthgen::TerrainProfile;

pub const PROFILE_VERSION: u64 = 1;
const FORMAT: &str = "profile";

pub fn write_profile(profile: &TerrainProfile) -> Result<String> {
    profile.validate()?;
    let mut value = serde_json::to_value(profile)?;
    if let Value::Object(map) = &mut value {
        map.insert("version".into(), Value::from(PROFILE_VERSION));
    }
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

/// Reads a profile document. A missing `version` is read as version 1.
pub fn read_profile(text: &str) -> Result<TerrainProfile> {
    let mut value: Value = serde_json::from_str(text)?;
    let Value::Object(map) = &mut value else {
        return Err(Error::Parse {
            format: FORMAT,
            line: 1,
            message: "expected a JSON object".into(),
        });
    };
    match map.remove("version") {
        None => {}
        Some(v) => match v.as_u64() {
            Some(n) if (1..=PROFILE_VERSION).contains(&n) => {}
            Some(n) => {
                return Err(Error::UnsupportedVersion {
                    format: FORMAT,
                    found: n,
                    supported: PROFILE_VERSION,
                })
            }
            None => {
                return Err(Error::Parse {
                    format: FORMAT,
                    line: 1,
                    message: format!("`version` must be a non-negative integer, found {v}"),
                })
            }
        },
    }
    let profile: TerrainProfile = serde_json::from_value(value)?;
    profile.validate()?;
    Ok(profile)
}
