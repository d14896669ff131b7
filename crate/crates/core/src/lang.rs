use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Language of a dataset split and of the dictionary edition queried for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Fi,
    Ru,
    De,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Fi, Language::Ru, Language::De];

    pub fn code(self) -> &'static str {
        match self {
            Language::Fi => "fi",
            Language::Ru => "ru",
            Language::De => "de",
        }
    }

    /// Default base URL of the same-language Wiktionary edition.
    pub fn wiktionary_base(self) -> &'static str {
        match self {
            Language::Fi => "https://fi.wiktionary.org",
            Language::Ru => "https://ru.wiktionary.org",
            Language::De => "https://de.wiktionary.org",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fi" | "finnish" => Ok(Language::Fi),
            "ru" | "russian" => Ok(Language::Ru),
            "de" | "german" => Ok(Language::De),
            other => Err(Error::InvalidInput(format!(
                "unknown language code {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for lang in Language::ALL {
            assert_eq!(lang.code().parse::<Language>().unwrap(), lang);
        }
        assert!("en".parse::<Language>().is_err());
    }
}
