//! Error classes and their process exit codes.

use std::fmt;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Invalid flags or missing inputs, detected before work starts.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Malformed or inconsistent input data.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    use roi10d::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<DataError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Parse { .. } | E::Format(_) | E::Io(_) | E::Json(_) | E::Image(_) | E::NoGroundTruth => EXIT_DATA,
                _ => EXIT_NUMERIC,
            };
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes_follow_the_innermost_known_cause() {
        let e = anyhow::Error::new(ConfigError("x".into())).context("outer");
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let e: anyhow::Error = Err::<(), _>(roi10d::Error::Domain("bad".into())).context("while lifting").unwrap_err();
        assert_eq!(exit_code(&e), EXIT_NUMERIC);
        let e: anyhow::Error = roi10d::Error::Parse { line: 1, msg: "m".into() }.into();
        assert_eq!(exit_code(&e), EXIT_DATA);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
