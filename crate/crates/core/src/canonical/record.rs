use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub const SECONDS_PER_DAY: i64 = 86_400;

/// UTC instant with one-second resolution, stored as Unix seconds.
///
/// The textual form is always `YYYY-MM-DDTHH:MM:SSZ`; anything else
/// (offsets, fractional seconds, missing `Z`) is rejected so that
/// parse and format are exact inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix(seconds: i64) -> Self {
        Self(seconds)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    /// Midnight UTC of the given calendar date.
    pub fn from_date(date: NaiveDate) -> Self {
        Self(date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp())
    }

    pub fn parse(text: &str) -> Option<Self> {
        if text.len() != 20 {
            return None;
        }
        let parsed = NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT).ok()?;
        let ts = Self(parsed.and_utc().timestamp());
        (ts.to_string() == text).then_some(ts)
    }

    pub fn plus_seconds(self, seconds: i64) -> Self {
        Self(self.0 + seconds)
    }

    /// Seconds elapsed since `earlier` (negative when `earlier` is later).
    pub fn seconds_since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }

    pub fn date(self) -> NaiveDate {
        self.to_datetime().date_naive()
    }

    fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).unwrap_or(DateTime::<Utc>::MIN_UTC)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datetime().format(TIMESTAMP_FORMAT))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Timestamp::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid UTC timestamp {text:?}")))
    }
}

macro_rules! text_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ::serde::Serialize, ::serde::Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(()),
                }
            }
        }
    };
}
pub(crate) use text_enum;

text_enum!(
    /// Discriminator of a canonical row.
    EventKind {
        Session => "SESSION",
        Deposit => "DEPOSIT",
        Withdrawal => "WITHDRAWAL",
    }
);

text_enum!(
    /// Gambling product category.
    Vertical {
        Lottery => "LOTTERY",
        Casino => "CASINO",
        Sports => "SPORTS",
    }
);

text_enum!(
    TransactionStatus {
        Approved => "APPROVED",
        Declined => "DECLINED",
    }
);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SessionActivity {
    pub end_time: Timestamp,
    pub bet_count: u32,
    /// Minor currency units.
    pub total_staked: i64,
    /// Minor currency units, positive when the player won.
    pub net_outcome: i64,
    pub product: String,
    pub vertical: Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    /// Minor currency units, strictly positive.
    pub amount: i64,
    pub method: String,
    pub status: TransactionStatus,
}

/// Kind-specific payload of an event. The variant is the event kind, so a
/// record can never carry fields of a kind it does not have.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Activity {
    Session(SessionActivity),
    Deposit(Transaction),
    Withdrawal(Transaction),
}

/// One canonical row of player activity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventRecord {
    pub player_id: String,
    pub start_time: Timestamp,
    pub cohort: String,
    pub activity: Activity,
}

impl EventRecord {
    pub fn kind(&self) -> EventKind {
        match self.activity {
            Activity::Session(_) => EventKind::Session,
            Activity::Deposit(_) => EventKind::Deposit,
            Activity::Withdrawal(_) => EventKind::Withdrawal,
        }
    }

    pub fn session(&self) -> Option<&SessionActivity> {
        match &self.activity {
            Activity::Session(s) => Some(s),
            _ => None,
        }
    }

    pub fn transaction(&self) -> Option<&Transaction> {
        match &self.activity {
            Activity::Deposit(t) | Activity::Withdrawal(t) => Some(t),
            Activity::Session(_) => None,
        }
    }

    pub fn is_session(&self) -> bool {
        matches!(self.activity, Activity::Session(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_round_trip() {
        let ts = Timestamp::parse("2025-11-17T09:30:00Z").unwrap();
        assert_eq!(ts.to_string(), "2025-11-17T09:30:00Z");
        assert_eq!(ts.unix(), 1_763_371_800);
    }

    #[test]
    fn timestamp_rejects_non_canonical_forms() {
        for bad in [
            "2025-11-17T09:30:00.5Z",
            "2025-11-17T09:30:00",
            "2025-11-17T09:30:00+00:00",
            "2025-11-17 09:30:00Z",
            "2025-1-17T09:30:00Z",
            "2025-02-30T09:30:00Z",
            "",
        ] {
            assert!(Timestamp::parse(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn enums_parse_their_text() {
        assert_eq!("SESSION".parse::<EventKind>(), Ok(EventKind::Session));
        assert_eq!("CASINO".parse::<Vertical>(), Ok(Vertical::Casino));
        assert!("session".parse::<EventKind>().is_err());
    }
}
