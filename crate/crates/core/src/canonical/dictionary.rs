use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EventKind;

/// Columns of the canonical event CSV, in header order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalField {
    PlayerId,
    EventKind,
    StartTime,
    EndTime,
    BetCount,
    TotalStaked,
    NetOutcome,
    Product,
    Vertical,
    TransactionAmount,
    TransactionMethod,
    TransactionStatus,
    Cohort,
}

pub const CANONICAL_HEADER: [&str; 13] = [
    "player_id",
    "event_kind",
    "start_time",
    "end_time",
    "bet_count",
    "total_staked",
    "net_outcome",
    "product",
    "vertical",
    "transaction_amount",
    "transaction_method",
    "transaction_status",
    "cohort",
];

impl CanonicalField {
    pub const ALL: [CanonicalField; 13] = [
        CanonicalField::PlayerId,
        CanonicalField::EventKind,
        CanonicalField::StartTime,
        CanonicalField::EndTime,
        CanonicalField::BetCount,
        CanonicalField::TotalStaked,
        CanonicalField::NetOutcome,
        CanonicalField::Product,
        CanonicalField::Vertical,
        CanonicalField::TransactionAmount,
        CanonicalField::TransactionMethod,
        CanonicalField::TransactionStatus,
        CanonicalField::Cohort,
    ];

    pub const SESSION_FIELDS: [CanonicalField; 6] = [
        CanonicalField::EndTime,
        CanonicalField::BetCount,
        CanonicalField::TotalStaked,
        CanonicalField::NetOutcome,
        CanonicalField::Product,
        CanonicalField::Vertical,
    ];

    pub const TRANSACTION_FIELDS: [CanonicalField; 3] = [
        CanonicalField::TransactionAmount,
        CanonicalField::TransactionMethod,
        CanonicalField::TransactionStatus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        CANONICAL_HEADER[self.index()]
    }

    /// Fields that must be populated for a row of `kind`, besides the
    /// always-required player id and start time.
    pub fn kind_fields(kind: EventKind) -> &'static [CanonicalField] {
        match kind {
            EventKind::Session => &Self::SESSION_FIELDS,
            EventKind::Deposit | EventKind::Withdrawal => &Self::TRANSACTION_FIELDS,
        }
    }

    /// Whether the field only applies to some event kinds.
    pub fn is_kind_specific(self) -> bool {
        Self::SESSION_FIELDS.contains(&self) || Self::TRANSACTION_FIELDS.contains(&self)
    }

    pub fn is_money(self) -> bool {
        matches!(
            self,
            CanonicalField::TotalStaked | CanonicalField::NetOutcome | CanonicalField::TransactionAmount
        )
    }
}

impl fmt::Display for CanonicalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CanonicalField {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        CANONICAL_HEADER
            .iter()
            .position(|h| *h == s)
            .map(|i| CanonicalField::ALL[i])
            .ok_or(())
    }
}

impl Serialize for CanonicalField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CanonicalField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse()
            .map_err(|_| serde::de::Error::custom(format!("unknown canonical field {text:?}")))
    }
}

/// Entry of the shared data dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FieldDoc {
    /// Column name in canonical CSV files.
    pub column: &'static str,
    /// Display name used on dataset cards.
    pub display_name: &'static str,
    pub description: &'static str,
}

/// The canonical data dictionary: one entry per event column plus the
/// target column carried by label files.
pub const DATA_DICTIONARY: [FieldDoc; 14] = [
    FieldDoc {
        column: "player_id",
        display_name: "Player_ID",
        description: "Opaque player identifier, 1-64 characters.",
    },
    FieldDoc {
        column: "event_kind",
        display_name: "Transaction_Type",
        description: "Row kind: SESSION for play, DEPOSIT or WITHDRAWAL for money movements.",
    },
    FieldDoc {
        column: "start_time",
        display_name: "Start_Time",
        description: "Session start or transaction time, UTC, second resolution.",
    },
    FieldDoc {
        column: "end_time",
        display_name: "End_Time",
        description: "Session end time, UTC. Sessions only.",
    },
    FieldDoc {
        column: "bet_count",
        display_name: "Bet_Count",
        description: "Wagers placed during the session. Sessions only.",
    },
    FieldDoc {
        column: "total_staked",
        display_name: "Total_Staked",
        description: "Sum of stakes in the session, integer cents. Sessions only.",
    },
    FieldDoc {
        column: "net_outcome",
        display_name: "Net_Outcome",
        description: "Session result in integer cents; positive means the player won. Sessions only.",
    },
    FieldDoc {
        column: "product",
        display_name: "Product",
        description: "Product code played. Sessions only.",
    },
    FieldDoc {
        column: "vertical",
        display_name: "Vertical",
        description: "LOTTERY, CASINO or SPORTS. Sessions only.",
    },
    FieldDoc {
        column: "transaction_amount",
        display_name: "Transaction_Amount",
        description: "Amount moved, positive integer cents. Deposits and withdrawals only.",
    },
    FieldDoc {
        column: "transaction_method",
        display_name: "Transaction_Method",
        description: "Payment method (CARD, PAYPAL, ...). Deposits and withdrawals only.",
    },
    FieldDoc {
        column: "transaction_status",
        display_name: "Transaction_Status",
        description: "APPROVED or DECLINED. Deposits and withdrawals only.",
    },
    FieldDoc {
        column: "cohort",
        display_name: "Cohort",
        description: "Region or demographic cohort tag; may be empty.",
    },
    FieldDoc {
        column: "risk_flag",
        display_name: "Risk_Flag",
        description: "(Target) Binary at-risk status derived by the dataset's label rule. Label file only.",
    },
];

/// Looks up the dictionary entry whose column or display name matches
/// `name`, ignoring ASCII case.
pub fn lookup_field(name: &str) -> Option<&'static FieldDoc> {
    DATA_DICTIONARY
        .iter()
        .find(|doc| doc.column.eq_ignore_ascii_case(name) || doc.display_name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_order_matches_enum() {
        for field in CanonicalField::ALL {
            assert_eq!(field.name().parse::<CanonicalField>(), Ok(field));
            assert_eq!(DATA_DICTIONARY[field.index()].column, field.name());
        }
    }

    #[test]
    fn lookup_accepts_display_names() {
        assert_eq!(lookup_field("Transaction_Type").unwrap().column, "event_kind");
        assert_eq!(lookup_field("PLAYER_ID").unwrap().column, "player_id");
        assert!(lookup_field("bet_leg").is_none());
    }
}
