//! Query-string parsing with repeatable keys and field-level errors.

use crate::ApiError;

/// Decoded `key=value` pairs in request order.
#[derive(Debug, Clone, Default)]
pub struct Params(Vec<(String, String)>);

impl Params {
    /// Decodes a raw query string, rejecting keys outside `allowed`.
    pub fn parse(raw: Option<&str>, allowed: &[&str]) -> Result<Self, ApiError> {
        let pairs: Vec<(String, String)> = form_urlencoded::parse(raw.unwrap_or("").as_bytes())
            .into_owned()
            .collect();
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(ApiError::bad(k, format!("unknown parameter; expected one of {}", allowed.join(", "))));
        }
        Ok(Self(pairs))
    }

    /// Every value given for `key`, in order.
    pub fn all<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a str> + 'a {
        let key = key.to_string();
        self.0.iter().filter(move |(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    /// The single value of `key`; repeating a single-valued key is an error.
    pub fn one(&self, key: &str) -> Result<Option<&str>, ApiError> {
        let mut values = self.all(key);
        let first = values.next();
        if values.next().is_some() {
            return Err(ApiError::bad(key, "may be given at most once"));
        }
        Ok(first)
    }

    pub fn required(&self, key: &str) -> Result<String, ApiError> {
        match self.one(key)?.map(str::trim) {
            Some(v) if !v.is_empty() => Ok(v.to_string()),
            _ => Err(ApiError::bad(key, "required")),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize, min: usize) -> Result<usize, ApiError> {
        let Some(raw) = self.one(key)? else {
            return Ok(default);
        };
        match raw.trim().parse::<usize>() {
            Ok(v) if v >= min => Ok(v),
            _ => Err(ApiError::bad(key, format!("expected an integer ≥ {min}, got \"{raw}\""))),
        }
    }

    pub fn i32_opt(&self, key: &str) -> Result<Option<i32>, ApiError> {
        self.one(key)?
            .map(|raw| {
                raw.trim()
                    .parse::<i32>()
                    .map_err(|_| ApiError::bad(key, format!("expected a year, got \"{raw}\"")))
            })
            .transpose()
    }
}
