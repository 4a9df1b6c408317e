use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{Days, NaiveDate};
use flate2::read::MultiGzDecoder;

use super::{IngestError, MeterReading, Result, SLOTS_PER_DAY};

/// Day code 1.
pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2009, 1, 1).expect("valid epoch")
}

pub(crate) fn day_code_date(day_code: u16) -> NaiveDate {
    epoch() + Days::new(u64::from(day_code.saturating_sub(1)))
}

pub fn encode_timestamp(day_code: u16, slot: u8) -> u32 {
    u32::from(day_code) * 100 + u32::from(slot)
}

/// Splits a 5-digit timestamp into its calendar date and half-hour slot.
pub fn decode_timestamp(code: u32) -> Result<(NaiveDate, u8)> {
    let day = code / 100;
    let slot = code % 100;
    if day == 0 || day > 999 {
        return Err(IngestError::DayRange { code });
    }
    if slot == 0 || slot > u32::from(SLOTS_PER_DAY) {
        return Err(IngestError::SlotRange { code, slot });
    }
    Ok((day_code_date(day as u16), slot as u8))
}

/// A rejected raw line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub readings: Vec<MeterReading>,
    pub issues: Vec<ParseIssue>,
    /// Blank lines and header-like lines that were skipped without complaint.
    pub skipped_blank: usize,
}

/// Parses one raw line of the form `meter code kwh`, whitespace or comma
/// separated.
pub fn parse_raw_line(line: &str, line_no: usize) -> Result<MeterReading> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let err = |message: String| IngestError::Parse {
        line: line_no,
        message,
    };
    if fields.len() != 3 {
        return Err(err(format!("expected 3 fields, found {}", fields.len())));
    }
    let meter_id: u32 = fields[0]
        .parse()
        .map_err(|_| err(format!("meter id '{}' is not a positive integer", fields[0])))?;
    if meter_id == 0 {
        return Err(err("meter id must be positive".into()));
    }
    let code: u32 = fields[1]
        .parse()
        .map_err(|_| err(format!("timestamp '{}' is not numeric", fields[1])))?;
    let kwh: f64 = fields[2]
        .parse()
        .map_err(|_| err(format!("consumption '{}' is not numeric", fields[2])))?;
    if !kwh.is_finite() {
        return Err(err(format!("consumption '{}' is not finite", fields[2])));
    }
    if kwh < 0.0 {
        return Err(err(IngestError::NegativeConsumption { kwh }.to_string()));
    }
    decode_timestamp(code).map_err(|e| err(e.to_string()))?;
    Ok(MeterReading {
        meter_id,
        day_code: (code / 100) as u16,
        slot: (code % 100) as u8,
        kwh,
    })
}

/// Parses a raw stream, keeping file order. Malformed lines are collected in
/// [`ParseOutcome::issues`] and skipped.
pub fn parse_raw<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            out.skipped_blank += 1;
            continue;
        }
        match parse_raw_line(trimmed, idx + 1) {
            Ok(r) => out.readings.push(r),
            Err(IngestError::Parse { line, message }) => {
                out.issues.push(ParseIssue { line, message })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Opens a raw file, transparently decompressing gzip input.
pub fn open_raw(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn table_rows_decode() {
        let r = parse_raw_line("1392 19535 0.256", 1).unwrap();
        assert_eq!(
            r,
            MeterReading {
                meter_id: 1392,
                day_code: 195,
                slot: 35,
                kwh: 0.256
            }
        );
        let r = parse_raw_line("1951 19605 0.021", 4).unwrap();
        assert_eq!((r.meter_id, r.day_code, r.slot, r.kwh), (1951, 196, 5, 0.021));
    }

    #[test]
    fn comma_separated_lines_are_accepted() {
        let r = parse_raw_line("1392,19535,0.256", 1).unwrap();
        assert_eq!(r.slot, 35);
    }

    #[test]
    fn slot_out_of_range() {
        let e = parse_raw_line("1392 19599 0.1", 7).unwrap_err();
        match e {
            IngestError::Parse { line, message } => {
                assert_eq!(line, 7);
                assert!(message.contains("slot 99"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode_timestamp(19599),
            Err(IngestError::SlotRange { slot: 99, .. })
        ));
        assert!(matches!(
            decode_timestamp(19500),
            Err(IngestError::SlotRange { slot: 0, .. })
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_timestamp(101).unwrap(), (ymd(2009, 1, 1), 1));
        // day 195 = 2009-01-01 + 194 days
        assert_eq!(decode_timestamp(19535).unwrap(), (ymd(2009, 7, 14), 35));
        assert_eq!(decode_timestamp(36648).unwrap(), (ymd(2010, 1, 1), 48));
        assert!(matches!(decode_timestamp(48), Err(IngestError::DayRange { .. })));
    }

    #[test]
    fn non_numeric_fields_report_location() {
        let input = "1392 19535 0.256\n1392 abc 0.1\n\nfoo 19535 0.2\n1392 19536 x\n1392 19536 0.265\n";
        let out = parse_raw(input.as_bytes()).unwrap();
        assert_eq!(out.readings.len(), 2);
        let lines: Vec<usize> = out.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![2, 4, 5]);
        assert_eq!(out.skipped_blank, 1);
    }

    #[test]
    fn negative_consumption_rejected() {
        assert!(parse_raw_line("1 19535 -0.1", 1).is_err());
    }

    #[test]
    fn gzip_input_is_detected() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), flate2::Compression::default());
        enc.write_all(b"1392 19535 0.256\n1392 19536 0.265\n").unwrap();
        enc.finish().unwrap();
        let out = parse_raw(open_raw(&path).unwrap()).unwrap();
        assert_eq!(out.readings.len(), 2);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(day in 1u16..=999, slot in 1u8..=48) {
            let code = encode_timestamp(day, slot);
            let (date, s) = decode_timestamp(code).unwrap();
            prop_assert_eq!(s, slot);
            prop_assert_eq!(date, epoch() + Days::new(u64::from(day) - 1));
        }
    }
}
