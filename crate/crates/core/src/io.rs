//! JSON file helpers with path-aware error messages.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Error;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse_json(&text, path)
}

/// Parses `text`; `origin` is only used to label errors.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T, Error> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let field = e.path().to_string();
        let location = if field == "." { "document root".to_owned() } else { field };
        Error::Parse { path: origin.to_owned(), location, message: inner.to_string() }
    })
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("domain values always serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}
