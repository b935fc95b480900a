//! GICS sector classification.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The eleven GICS sectors, plus `Unknown` for calls with no sector header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    #[serde(rename = "Consumer Discretionary")]
    ConsumerDiscretionary,
    #[serde(rename = "Health Care")]
    HealthCare,
    #[serde(rename = "Information Technology")]
    InformationTechnology,
    #[serde(rename = "Consumer Staples")]
    ConsumerStaples,
    Industrials,
    #[serde(rename = "Communication Services")]
    CommunicationServices,
    Financials,
    Materials,
    Energy,
    #[serde(rename = "Real Estate")]
    RealEstate,
    Utilities,
    Unknown,
}

impl Sector {
    /// The eleven GICS sectors in the order used by the report tables.
    pub const GICS: [Sector; 11] = [
        Sector::ConsumerDiscretionary,
        Sector::HealthCare,
        Sector::InformationTechnology,
        Sector::ConsumerStaples,
        Sector::Industrials,
        Sector::CommunicationServices,
        Sector::Financials,
        Sector::Materials,
        Sector::Energy,
        Sector::RealEstate,
        Sector::Utilities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sector::ConsumerDiscretionary => "Consumer Discretionary",
            Sector::HealthCare => "Health Care",
            Sector::InformationTechnology => "Information Technology",
            Sector::ConsumerStaples => "Consumer Staples",
            Sector::Industrials => "Industrials",
            Sector::CommunicationServices => "Communication Services",
            Sector::Financials => "Financials",
            Sector::Materials => "Materials",
            Sector::Energy => "Energy",
            Sector::RealEstate => "Real Estate",
            Sector::Utilities => "Utilities",
            Sector::Unknown => "Unknown",
        }
    }

    /// Case- and whitespace-insensitive lookup. Unrecognised names map to
    /// `Unknown`.
    pub fn parse_lenient(s: &str) -> Sector {
        s.parse().unwrap_or(Sector::Unknown)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognised sector name")]
pub struct UnknownSector;

impl FromStr for Sector {
    type Err = UnknownSector;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = |s: &str| {
            s.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<alloc::string::String>()
        };
        let wanted = key(s);
        Sector::GICS
            .iter()
            .chain(core::iter::once(&Sector::Unknown))
            .copied()
            .find(|sector| key(sector.name()) == wanted)
            .ok_or(UnknownSector)
    }
}
