use std::io::{Read, Write};

use super::validate::record_issues;
use super::{
    Activity, CanonicalError, CanonicalField, EventKind, EventRecord, Issue, IssueCode, SessionActivity, Timestamp,
    Transaction, TransactionStatus, ValidationReport, Vertical, CANONICAL_HEADER,
};

/// Outcome of decoding a table: the rows that decoded cleanly, in input
/// order, plus a located issue for every row that did not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEvents {
    pub events: Vec<EventRecord>,
    pub issues: Vec<Issue>,
    pub row_count: usize,
}

impl ParsedEvents {
    pub fn report(&self) -> ValidationReport {
        ValidationReport::new(self.row_count, self.issues.clone(), Vec::new())
    }

    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    /// Returns the events if every row decoded, or the full report.
    pub fn into_strict(self) -> Result<Vec<EventRecord>, CanonicalError> {
        if self.issues.is_empty() {
            Ok(self.events)
        } else {
            Err(CanonicalError::InvalidRows(Box::new(self.report())))
        }
    }
}

/// Parses a canonical event CSV. Header problems are returned as errors;
/// row problems are collected in [`ParsedEvents::issues`].
pub fn parse_events<R: Read>(reader: R) -> Result<ParsedEvents, CanonicalError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.byte_records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(CanonicalError::Csv(e.to_string())),
        None => return Err(CanonicalError::MissingColumn(CANONICAL_HEADER[0].to_string())),
    };
    let positions = header_positions(&header)?;

    let mut parsed = ParsedEvents {
        events: Vec::new(),
        issues: Vec::new(),
        row_count: 0,
    };
    for (row, record) in records.enumerate() {
        parsed.row_count += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                parsed.issues.push(Issue::new(row, None, IssueCode::WrongFieldCount, e.to_string()));
                continue;
            }
        };
        if record.len() != header.len() {
            parsed.issues.push(Issue::new(
                row,
                None,
                IssueCode::WrongFieldCount,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
            continue;
        }
        let mut values: [&str; 13] = [""; 13];
        let mut utf8_ok = true;
        for field in CanonicalField::ALL {
            match std::str::from_utf8(&record[positions[field.index()]]) {
                Ok(text) => values[field.index()] = text,
                Err(_) => {
                    parsed
                        .issues
                        .push(Issue::new(row, field, IssueCode::InvalidUtf8, "value is not valid UTF-8"));
                    utf8_ok = false;
                }
            }
        }
        if !utf8_ok {
            continue;
        }
        match decode_row(row, &values) {
            Ok(event) => parsed.events.push(event),
            Err(issues) => parsed.issues.extend(issues),
        }
    }
    Ok(parsed)
}

fn header_positions(header: &csv::ByteRecord) -> Result<[usize; 13], CanonicalError> {
    let names: Vec<String> = header
        .iter()
        .map(|raw| String::from_utf8_lossy(raw).into_owned())
        .collect();
    let mut positions = [usize::MAX; 13];
    for (pos, name) in names.iter().enumerate() {
        let field: CanonicalField = name
            .parse()
            .map_err(|_| CanonicalError::UnexpectedColumn(name.clone()))?;
        if positions[field.index()] != usize::MAX {
            return Err(CanonicalError::DuplicateColumn(name.clone()));
        }
        positions[field.index()] = pos;
    }
    if let Some(missing) = CanonicalField::ALL.iter().find(|f| positions[f.index()] == usize::MAX) {
        return Err(CanonicalError::MissingColumn(missing.name().to_string()));
    }
    Ok(positions)
}

/// Decodes one row given its 13 canonical cell values in header order.
/// All problems in the row are reported together.
pub(crate) fn decode_row(row: usize, values: &[&str; 13]) -> Result<EventRecord, Vec<Issue>> {
    let mut issues = Vec::new();
    let get = |f: CanonicalField| values[f.index()];

    let kind = match get(CanonicalField::EventKind).parse::<EventKind>() {
        Ok(kind) => Some(kind),
        Err(()) => {
            issues.push(Issue::new(
                row,
                CanonicalField::EventKind,
                IssueCode::UnknownKind,
                format!("unknown event_kind {:?}", get(CanonicalField::EventKind)),
            ));
            None
        }
    };
    let start_time = parse_timestamp(row, CanonicalField::StartTime, get(CanonicalField::StartTime), &mut issues);

    let Some(kind) = kind else {
        return Err(issues);
    };
    let required = CanonicalField::kind_fields(kind);
    for field in CanonicalField::ALL.iter().copied().filter(|f| f.is_kind_specific()) {
        let present = !get(field).is_empty();
        if required.contains(&field) && !present {
            issues.push(Issue::new(
                row,
                field,
                IssueCode::MissingField,
                format!("{field} is required for {kind} rows"),
            ));
        } else if !required.contains(&field) && present {
            issues.push(Issue::new(
                row,
                field,
                IssueCode::FieldNotApplicable,
                format!("{field} must be empty for {kind} rows"),
            ));
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }

    let activity = match kind {
        EventKind::Session => {
            let end_time = parse_timestamp(row, CanonicalField::EndTime, get(CanonicalField::EndTime), &mut issues);
            let bet_count = parse_int::<u32>(row, CanonicalField::BetCount, get(CanonicalField::BetCount), &mut issues);
            let total_staked = parse_amount(row, CanonicalField::TotalStaked, get(CanonicalField::TotalStaked), &mut issues);
            let net_outcome = parse_int::<i64>(row, CanonicalField::NetOutcome, get(CanonicalField::NetOutcome), &mut issues);
            let vertical = parse_enum::<Vertical>(row, CanonicalField::Vertical, get(CanonicalField::Vertical), &mut issues);
            match (end_time, bet_count, total_staked, net_outcome, vertical) {
                (Some(end_time), Some(bet_count), Some(total_staked), Some(net_outcome), Some(vertical)) => {
                    Activity::Session(SessionActivity {
                        end_time,
                        bet_count,
                        total_staked,
                        net_outcome,
                        product: get(CanonicalField::Product).to_string(),
                        vertical,
                    })
                }
                _ => return Err(issues),
            }
        }
        EventKind::Deposit | EventKind::Withdrawal => {
            let amount = parse_amount(
                row,
                CanonicalField::TransactionAmount,
                get(CanonicalField::TransactionAmount),
                &mut issues,
            );
            let status = parse_enum::<TransactionStatus>(
                row,
                CanonicalField::TransactionStatus,
                get(CanonicalField::TransactionStatus),
                &mut issues,
            );
            let (Some(amount), Some(status)) = (amount, status) else {
                return Err(issues);
            };
            let tx = Transaction {
                amount,
                method: get(CanonicalField::TransactionMethod).to_string(),
                status,
            };
            if kind == EventKind::Deposit {
                Activity::Deposit(tx)
            } else {
                Activity::Withdrawal(tx)
            }
        }
    };
    let Some(start_time) = start_time else {
        return Err(issues);
    };
    let event = EventRecord {
        player_id: get(CanonicalField::PlayerId).to_string(),
        start_time,
        cohort: get(CanonicalField::Cohort).to_string(),
        activity,
    };
    let invariant_issues = record_issues(row, &event);
    if invariant_issues.is_empty() {
        Ok(event)
    } else {
        Err(invariant_issues)
    }
}

fn parse_timestamp(row: usize, field: CanonicalField, text: &str, issues: &mut Vec<Issue>) -> Option<Timestamp> {
    let ts = Timestamp::parse(text);
    if ts.is_none() {
        issues.push(Issue::new(
            row,
            field,
            IssueCode::BadTimestamp,
            format!("{text:?} is not a YYYY-MM-DDTHH:MM:SSZ timestamp"),
        ));
    }
    ts
}

fn parse_int<T: std::str::FromStr>(row: usize, field: CanonicalField, text: &str, issues: &mut Vec<Issue>) -> Option<T> {
    if text.starts_with('-') && text.len() > 1 && text[1..].bytes().all(|b| b.is_ascii_digit()) {
        if let Ok(value) = text.parse::<T>() {
            return Some(value);
        }
        issues.push(Issue::new(row, field, IssueCode::NegativeAmount, format!("{field} {text} is negative")));
        return None;
    }
    // `str::parse` accepts a leading '+', which would break exact round trips.
    if text.starts_with('+') {
        issues.push(Issue::new(row, field, IssueCode::BadInteger, format!("{text:?} is not an integer")));
        return None;
    }
    match text.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            issues.push(Issue::new(row, field, IssueCode::BadInteger, format!("{text:?} is not an integer")));
            None
        }
    }
}

fn parse_amount(row: usize, field: CanonicalField, text: &str, issues: &mut Vec<Issue>) -> Option<i64> {
    if text.starts_with('-') {
        issues.push(Issue::new(row, field, IssueCode::NegativeAmount, format!("{field} {text} is negative")));
        return None;
    }
    parse_int::<i64>(row, field, text, issues)
}

fn parse_enum<T: std::str::FromStr>(row: usize, field: CanonicalField, text: &str, issues: &mut Vec<Issue>) -> Option<T> {
    let value = text.parse::<T>().ok();
    if value.is_none() {
        issues.push(Issue::new(row, field, IssueCode::BadEnum, format!("{text:?} is not a valid {field}")));
    }
    value
}

/// Renders a record as its 13 canonical cell values.
pub(crate) fn encode_row(event: &EventRecord) -> [String; 13] {
    let mut cells: [String; 13] = Default::default();
    let mut set = |f: CanonicalField, v: String| cells[f.index()] = v;
    set(CanonicalField::PlayerId, event.player_id.clone());
    set(CanonicalField::EventKind, event.kind().to_string());
    set(CanonicalField::StartTime, event.start_time.to_string());
    match &event.activity {
        Activity::Session(s) => {
            set(CanonicalField::EndTime, s.end_time.to_string());
            set(CanonicalField::BetCount, s.bet_count.to_string());
            set(CanonicalField::TotalStaked, s.total_staked.to_string());
            set(CanonicalField::NetOutcome, s.net_outcome.to_string());
            set(CanonicalField::Product, s.product.clone());
            set(CanonicalField::Vertical, s.vertical.to_string());
        }
        Activity::Deposit(t) | Activity::Withdrawal(t) => {
            set(CanonicalField::TransactionAmount, t.amount.to_string());
            set(CanonicalField::TransactionMethod, t.method.clone());
            set(CanonicalField::TransactionStatus, t.status.to_string());
        }
    }
    set(CanonicalField::Cohort, event.cohort.clone());
    cells
}

/// Writes events as canonical CSV: exact header, LF line endings,
/// RFC-4180 quoting where needed.
pub fn write_events<W: Write>(events: &[EventRecord], writer: W) -> Result<(), CanonicalError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    csv.write_record(CANONICAL_HEADER)?;
    for event in events {
        csv.write_record(encode_row(event))?;
    }
    csv.flush().map_err(|e| CanonicalError::Csv(e.to_string()))?;
    Ok(())
}

pub fn events_to_csv(events: &[EventRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_events(events, &mut out).expect("writing to memory cannot fail");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "player_id,event_kind,start_time,end_time,bet_count,total_staked,net_outcome,product,vertical,transaction_amount,transaction_method,transaction_status,cohort\n";

    fn parse(text: &str) -> ParsedEvents {
        parse_events(text.as_bytes()).unwrap()
    }

    #[test]
    fn header_only_is_empty_and_clean() {
        let parsed = parse(HEADER);
        assert!(parsed.events.is_empty());
        assert!(parsed.report().pass);
    }

    #[test]
    fn session_ending_before_start_is_bad_timestamp() {
        let text = format!(
            "{HEADER}P1,SESSION,2025-11-17T09:30:00Z,2025-11-17T09:00:00Z,3,300,-100,SLOTS,CASINO,,,,north\n"
        );
        let parsed = parse(&text);
        assert!(parsed.events.is_empty());
        assert_eq!(parsed.issues.len(), 1);
        assert_eq!(parsed.issues[0].row, 0);
        assert_eq!(parsed.issues[0].code, IssueCode::BadTimestamp);
    }

    #[test]
    fn row_errors_are_located_and_other_rows_survive() {
        let text = format!(
            "{HEADER}\
             P1,DEPOSIT,2025-11-17T09:30:00Z,,,,,,,-500,CARD,APPROVED,\n\
             P1,BOGUS,2025-11-17T09:30:00Z,,,,,,,500,CARD,APPROVED,\n\
             P1,DEPOSIT,2025-11-17T09:30:00Z,,,,,,,500,CARD,APPROVED,\n\
             P1,DEPOSIT,2025-11-17T09:30:00Z\n"
        );
        let parsed = parse(&text);
        assert_eq!(parsed.row_count, 4);
        assert_eq!(parsed.events.len(), 1);
        let codes: Vec<_> = parsed.issues.iter().map(|i| (i.row, i.code)).collect();
        assert_eq!(
            codes,
            vec![
                (0, IssueCode::NegativeAmount),
                (1, IssueCode::UnknownKind),
                (3, IssueCode::WrongFieldCount)
            ]
        );
    }

    #[test]
    fn kind_specific_fields_must_match_kind() {
        let text = format!("{HEADER}P1,DEPOSIT,2025-11-17T09:30:00Z,,3,,,,,500,CARD,APPROVED,\n");
        let parsed = parse(&text);
        assert_eq!(parsed.issues[0].code, IssueCode::FieldNotApplicable);
        assert_eq!(parsed.issues[0].field, Some(CanonicalField::BetCount));
    }

    #[test]
    fn missing_column_is_an_error() {
        let err = parse_events("player_id,event_kind\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CanonicalError::MissingColumn(c) if c == "start_time"));
        assert!(matches!(parse_events(&b""[..]), Err(CanonicalError::MissingColumn(_))));
    }

    #[test]
    fn invalid_utf8_is_located() {
        let mut bytes = HEADER.as_bytes().to_vec();
        bytes.extend_from_slice(b"P\xff,DEPOSIT,2025-11-17T09:30:00Z,,,,,,,500,CARD,APPROVED,\n");
        let parsed = parse_events(&bytes[..]).unwrap();
        assert_eq!(parsed.issues[0].code, IssueCode::InvalidUtf8);
    }

    #[test]
    fn writer_emits_exact_header_and_lf() {
        let bytes = events_to_csv(&[]);
        assert_eq!(String::from_utf8(bytes).unwrap(), HEADER);
    }

    #[test]
    fn plus_sign_is_rejected() {
        let text = format!("{HEADER}P1,DEPOSIT,2025-11-17T09:30:00Z,,,,,,,+500,CARD,APPROVED,\n");
        assert_eq!(parse(&text).issues[0].code, IssueCode::BadInteger);
    }
}
