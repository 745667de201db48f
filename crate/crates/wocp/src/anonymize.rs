//! Stable pseudonyms for logins.

use sha2::{Digest, Sha256};
use wocp_core::evaluation::ScatterRow;
use wocp_core::{Login, Prediction};

/// Salt used when none is configured. Pseudonyms are stable across runs, so
/// files anonymized separately still join on the contributor column.
pub const DEFAULT_SALT: &str = "wocp";

/// Environment variable overriding [`DEFAULT_SALT`].
pub const SALT_ENV: &str = "WOCP_ANONYMIZE_SALT";

#[derive(Debug, Clone)]
pub struct Anonymizer {
    salt: String,
}

impl Anonymizer {
    pub fn new(salt: impl Into<String>) -> Self {
        Self { salt: salt.into() }
    }

    pub fn from_env() -> Self {
        Self::new(std::env::var(SALT_ENV).unwrap_or_else(|_| DEFAULT_SALT.to_string()))
    }

    pub fn login(&self, login: &Login) -> Login {
        let mut h = Sha256::new();
        h.update(self.salt.as_bytes());
        h.update(b":");
        h.update(login.as_str().as_bytes());
        let digest = hex::encode(h.finalize());
        Login::new(&format!("anon-{}", &digest[..12])).expect("pseudonym is a valid login")
    }

    pub fn prediction(&self, p: &Prediction) -> Prediction {
        Prediction {
            contributor: self.login(&p.contributor),
            ..p.clone()
        }
    }

    pub fn scatter_row(&self, r: &ScatterRow) -> ScatterRow {
        ScatterRow {
            contributor: self.login(&r.contributor),
            ..r.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_salted() {
        let a = Anonymizer::new("s1");
        let x = Login::new("Dependabot").unwrap();
        assert_eq!(a.login(&x), a.login(&Login::new("dependabot").unwrap()));
        assert!(a.login(&x).as_str().starts_with("anon-"));
        assert_eq!(a.login(&x).as_str().len(), 17);
        assert_ne!(a.login(&x), Anonymizer::new("s2").login(&x));
        assert_ne!(a.login(&x), a.login(&Login::new("someone").unwrap()));
    }
}
