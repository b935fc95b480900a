//! Transcript file formats.
//!
//! Two layouts are supported:
//!
//! * **Speaker-colon plain text**: optional `#key: value` header lines
//!   (`symbol`, `date`, `sector`, `managers`, `analysts`) followed by turns.
//!   A turn starts with a line whose leading `Name:` looks like a speaker
//!   name; every following line up to the next speaker line belongs to that
//!   turn.
//! * **JSON turns**: `{"symbol", "date", "sector", "managers"?, "turns":
//!   [{"speaker", "role"?, "text"}]}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use topicswitch_core::transcript::{assign_roles, RawTurn, Roster};
use topicswitch_core::{Date, EarningsCall, Role, Sector};

/// Longest speaker name accepted on a turn line, in characters.
const MAX_SPEAKER_CHARS: usize = 60;
/// Most words accepted in a speaker name.
const MAX_SPEAKER_WORDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranscriptFormat {
    SpeakerColonPlain,
    JsonTurns,
}

impl TranscriptFormat {
    /// Picks the format from a file extension: `.json` is JSON turns, `.txt`
    /// is plain text; anything else is not a transcript.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Self::JsonTurns),
            "txt" => Some(Self::SpeakerColonPlain),
            _ => None,
        }
    }
}

impl FromStr for TranscriptFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plain" | "txt" | "speaker-colon-plain" => Ok(Self::SpeakerColonPlain),
            "json" | "json-turns" => Ok(Self::JsonTurns),
            other => Err(format!("unknown transcript format `{other}` (expected plain or json)")),
        }
    }
}

/// Where in the input a problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based line number.
    Line(usize),
    /// 0-based byte offset.
    Byte(usize),
    /// 1-based line and column, as reported by the JSON reader.
    LineColumn(usize, usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
            Location::LineColumn(l, c) => write!(f, "line {l}, column {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed transcript at {location}: {message}")]
pub struct MalformedInput {
    pub location: Location,
    pub message: String,
}

impl MalformedInput {
    fn at(location: Location, message: impl Into<String>) -> Self {
        Self {
            location,
            message: message.into(),
        }
    }
}

/// Parses a transcript into a call with roles and ordinals assigned and no
/// question/answer pairs yet.
pub fn parse_transcript(raw: &[u8], format: TranscriptFormat) -> Result<EarningsCall, MalformedInput> {
    let text =
        std::str::from_utf8(raw).map_err(|e| MalformedInput::at(Location::Byte(e.valid_up_to()), "invalid UTF-8"))?;
    match format {
        TranscriptFormat::SpeakerColonPlain => parse_plain(text),
        TranscriptFormat::JsonTurns => parse_json(text),
    }
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_date(value: &str, location: Location) -> Result<Date, MalformedInput> {
    Date::parse_from_str(value.trim(), "%Y-%m-%d")
        .map_err(|e| MalformedInput::at(location, format!("invalid date `{}`: {e}", value.trim())))
}

fn parse_sector(value: &str, location: Location) -> Result<Sector, MalformedInput> {
    value
        .parse()
        .map_err(|_| MalformedInput::at(location, format!("unknown sector `{}`", value.trim())))
}

/// Splits `line` into `(speaker, rest)` when it opens a new turn.
fn speaker_line(line: &str) -> Option<(&str, &str)> {
    let (name, rest) = line.split_once(':')?;
    // A colon glued to the next character ("3:1", "10:30") is not a speaker delimiter.
    if rest.starts_with(|c: char| !c.is_whitespace()) {
        return None;
    }
    let mut chars = name.chars();
    let first = chars.next()?;
    if !first.is_alphabetic() || name.ends_with(char::is_whitespace) || name.chars().count() > MAX_SPEAKER_CHARS {
        return None;
    }
    if name.split_whitespace().count() > MAX_SPEAKER_WORDS {
        return None;
    }
    let name_like = name
        .chars()
        .all(|c| c.is_alphanumeric() || c == ' ' || matches!(c, '.' | '\'' | '-' | '&'));
    // A lower-case first word ("note: ...") is prose, not a speaker.
    (name_like && first.is_uppercase()).then_some((name, rest))
}

#[derive(Default)]
struct PlainHeader {
    symbol: Option<String>,
    date: Option<Date>,
    sector: Option<Sector>,
    managers: Vec<String>,
    analysts: Vec<String>,
}

fn parse_plain(text: &str) -> Result<EarningsCall, MalformedInput> {
    let mut header = PlainHeader::default();
    let mut raw: Vec<RawTurn> = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;

    let flush = |current: &mut Option<(String, Vec<&str>)>, raw: &mut Vec<RawTurn>| {
        if let Some((speaker, lines)) = current.take() {
            raw.push(RawTurn {
                speaker,
                role: None,
                text: lines.join("\n").trim().to_string(),
            });
        }
    };

    for (i, line) in text.lines().enumerate() {
        let loc = Location::Line(i + 1);
        if current.is_none() && raw.is_empty() {
            if let Some(h) = line.strip_prefix('#') {
                let (key, value) = h
                    .split_once(':')
                    .ok_or_else(|| MalformedInput::at(loc, "header line must look like `#key: value`"))?;
                match key.trim().to_ascii_lowercase().as_str() {
                    "symbol" => header.symbol = Some(value.trim().to_string()),
                    "date" => header.date = Some(parse_date(value, loc)?),
                    "sector" => header.sector = Some(parse_sector(value, loc)?),
                    "managers" => header.managers = split_list(value),
                    "analysts" => header.analysts = split_list(value),
                    other => log::debug!("ignoring unknown header `{other}` at {loc}"),
                }
                continue;
            }
        }
        if let Some((speaker, rest)) = speaker_line(line) {
            flush(&mut current, &mut raw);
            current = Some((speaker.trim().to_string(), vec![rest]));
        } else if let Some((_, lines)) = current.as_mut() {
            lines.push(line);
        } else if !line.trim().is_empty() {
            log::debug!("skipping text before the first speaker at {loc}");
        }
    }
    flush(&mut current, &mut raw);

    let end = Location::Line(text.lines().count().max(1));
    let symbol = header
        .symbol
        .filter(|s| !s.is_empty())
        .ok_or_else(|| MalformedInput::at(end, "missing `#symbol` header"))?;
    let call_date = header
        .date
        .ok_or_else(|| MalformedInput::at(end, "missing `#date` header"))?;
    if raw.iter().all(|t| t.text.is_empty()) {
        return Err(MalformedInput::at(end, "no speaker turn found"));
    }
    let mut roster = Roster::new();
    for name in &header.analysts {
        roster.insert(name, Role::Analyst);
    }
    Ok(EarningsCall {
        company_symbol: symbol,
        call_date,
        sector: header.sector.unwrap_or(Sector::Unknown),
        turns: assign_roles(raw, &header.managers, &roster),
        qa_pairs: Vec::new(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTranscript {
    symbol: String,
    date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    managers: Vec<String>,
    turns: Vec<JsonTurn>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTurn {
    speaker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<Role>,
    text: String,
}

fn parse_json(text: &str) -> Result<EarningsCall, MalformedInput> {
    let doc: JsonTranscript = serde_json::from_str(text)
        .map_err(|e| MalformedInput::at(Location::LineColumn(e.line(), e.column()), e.to_string()))?;
    let top = Location::Line(1);
    if doc.symbol.trim().is_empty() {
        return Err(MalformedInput::at(top, "empty `symbol`"));
    }
    let call_date = parse_date(&doc.date, top)?;
    let sector = match &doc.sector {
        Some(s) => parse_sector(s, top)?,
        None => Sector::Unknown,
    };
    let raw: Vec<RawTurn> = doc
        .turns
        .into_iter()
        .map(|t| RawTurn {
            speaker: t.speaker,
            role: t.role,
            text: t.text,
        })
        .collect();
    let turns = assign_roles(raw, &doc.managers, &Roster::new());
    if turns.is_empty() {
        return Err(MalformedInput::at(top, "no speaker turn found"));
    }
    Ok(EarningsCall {
        company_symbol: doc.symbol.trim().to_string(),
        call_date,
        sector,
        turns,
        qa_pairs: Vec::new(),
    })
}

/// Serialises a call as JSON turns with every role stated explicitly, so
/// parsing the output reproduces the call's turns exactly.
pub fn to_json_turns(call: &EarningsCall) -> String {
    let doc = JsonTranscript {
        symbol: call.company_symbol.clone(),
        date: call.call_date.format("%Y-%m-%d").to_string(),
        sector: (call.sector != Sector::Unknown).then(|| call.sector.name().to_string()),
        managers: Vec::new(),
        turns: call
            .turns
            .iter()
            .map(|t| JsonTurn {
                speaker: t.speaker_name.clone(),
                role: Some(t.role),
                text: t.text.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("transcript serialisation cannot fail");
    out.push('\n');
    out
}

/// Writes a call as speaker-colon plain text. Manager and analyst names are
/// listed in the header so that roles survive a re-parse.
pub fn to_plain(call: &EarningsCall) -> String {
    let names = |role: Role| {
        let mut v: Vec<&str> = Vec::new();
        for t in call.turns.iter().filter(|t| t.role == role) {
            if !v.contains(&t.speaker_name.as_str()) {
                v.push(&t.speaker_name);
            }
        }
        v.join("; ")
    };
    let mut out = format!(
        "#symbol: {}\n#date: {}\n",
        call.company_symbol,
        call.call_date.format("%Y-%m-%d")
    );
    if call.sector != Sector::Unknown {
        out.push_str(&format!("#sector: {}\n", call.sector.name()));
    }
    out.push_str(&format!(
        "#managers: {}\n#analysts: {}\n",
        names(Role::Manager),
        names(Role::Analyst)
    ));
    for t in &call.turns {
        out.push_str(&format!("\n{}:\n{}\n", t.speaker_name, t.text));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speaker_lines() {
        assert_eq!(speaker_line("Tim Cook:"), Some(("Tim Cook", "")));
        assert_eq!(
            speaker_line("J. Michael Schlotman: Sure."),
            Some(("J. Michael Schlotman", " Sure."))
        );
        assert_eq!(speaker_line("note: lower case"), None);
        assert_eq!(speaker_line("The ratio was 3:1 this quarter"), None);
        assert_eq!(speaker_line("  Indented: no"), None);
        assert_eq!(
            speaker_line("Revenue grew in three areas, namely the following ones here: x"),
            None
        );
    }

    #[test]
    fn empty_file_is_malformed() {
        let err = parse_transcript(b"", TranscriptFormat::SpeakerColonPlain).unwrap_err();
        assert!(err.message.contains("symbol"));
        let err =
            parse_transcript(b"#symbol: X\n#date: 2015-01-02\n", TranscriptFormat::SpeakerColonPlain).unwrap_err();
        assert_eq!(err.message, "no speaker turn found");
    }

    #[test]
    fn bad_header_reports_line() {
        let err = parse_transcript(
            b"#symbol: X\n#date: 2015-13-02\nA: hi",
            TranscriptFormat::SpeakerColonPlain,
        )
        .unwrap_err();
        assert_eq!(err.location, Location::Line(2));
        let err = parse_transcript(&[b'#', 0xff], TranscriptFormat::SpeakerColonPlain).unwrap_err();
        assert_eq!(err.location, Location::Byte(1));
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_transcript(b"{\n  \"symbol\": 3\n}", TranscriptFormat::JsonTurns).unwrap_err();
        assert!(matches!(err.location, Location::LineColumn(2, _)));
    }

    #[test]
    fn multi_line_turns_and_inline_text() {
        let src = "#symbol: ACME\n#date: 2016-02-03\n#managers: Jo Boss\nOperator: Welcome.\n\nAl Ask: Line one?\nline two?\nJo Boss:\nAnswer.\n";
        let call = parse_transcript(src.as_bytes(), TranscriptFormat::SpeakerColonPlain).unwrap();
        let t: Vec<(&str, Role, &str)> = call
            .turns
            .iter()
            .map(|t| (t.speaker_name.as_str(), t.role, t.text.as_str()))
            .collect();
        assert_eq!(
            t,
            vec![
                ("Operator", Role::Operator, "Welcome."),
                ("Al Ask", Role::Analyst, "Line one?\nline two?"),
                ("Jo Boss", Role::Manager, "Answer."),
            ]
        );
        assert_eq!(call.sector, Sector::Unknown);
    }
}
