//! Speaker turns, question/answer pairing and speaker role inference.
//!
//! A call is a sequence of [`SpeakerTurn`]s. Everything before the first
//! analyst turn is the prepared presentation and is kept but never paired.
//! From there on, a run of consecutive turns by one analyst followed directly
//! by a run of consecutive manager turns forms one [`QaPair`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::sector::Sector;
use crate::Date;

/// Separator used when several turns merge into one question or answer.
pub const JOIN_SEPARATOR: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Analyst,
    Manager,
    Operator,
    Unknown,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Analyst => "analyst",
            Role::Manager => "manager",
            Role::Operator => "operator",
            Role::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analyst" => Some(Role::Analyst),
            "manager" | "management" | "executive" => Some(Role::Manager),
            "operator" => Some(Role::Operator),
            "unknown" => Some(Role::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub speaker_name: String,
    pub role: Role,
    pub text: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub analyst_name: String,
    pub question_text: String,
    pub answer_text: String,
    pub pair_ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarningsCall {
    pub company_symbol: String,
    pub call_date: Date,
    pub sector: Sector,
    pub turns: Vec<SpeakerTurn>,
    #[serde(default)]
    pub qa_pairs: Vec<QaPair>,
}

impl EarningsCall {
    /// Turns from the first analyst turn onwards, without operator turns.
    /// This is the text the whole-discussion benchmark feature is built from.
    pub fn discussion_turns(&self) -> impl Iterator<Item = &SpeakerTurn> {
        self.turns
            .iter()
            .skip_while(|t| t.role != Role::Analyst)
            .filter(|t| t.role != Role::Operator)
    }
}

/// Explicit speaker-name to role assignments.
///
/// Names are matched case-insensitively with whitespace collapsed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roster {
    roles: BTreeMap<String, Role>,
}

impl Roster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, role: Role) {
        self.roles.insert(name_key(name), role);
    }

    pub fn get(&self, name: &str) -> Option<Role> {
        self.roles.get(&name_key(name)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }
}

impl<'a> FromIterator<(&'a str, Role)> for Roster {
    fn from_iter<I: IntoIterator<Item = (&'a str, Role)>>(iter: I) -> Self {
        let mut roster = Roster::new();
        for (name, role) in iter {
            roster.insert(name, role);
        }
        roster
    }
}

fn name_key(name: &str) -> String {
    let mut key = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        key.extend(word.chars().flat_map(char::to_lowercase));
    }
    key
}

/// One turn as read from a file, before roles and ordinals are settled.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTurn {
    pub speaker: String,
    /// Role stated in the file for this turn, if any.
    pub role: Option<Role>,
    pub text: String,
}

/// Fraction of sentences in `text` that end with a question mark.
pub fn question_fraction(text: &str) -> f64 {
    let mut sentences = 0usize;
    let mut questions = 0usize;
    let mut has_content = false;
    for c in text.chars() {
        match c {
            '.' | '!' | '?' => {
                if has_content {
                    sentences += 1;
                    if c == '?' {
                        questions += 1;
                    }
                }
                has_content = false;
            }
            c if c.is_alphanumeric() => has_content = true,
            _ => {}
        }
    }
    if has_content {
        sentences += 1;
    }
    if sentences == 0 {
        0.0
    } else {
        questions as f64 / sentences as f64
    }
}

/// Assigns roles and ordinals to raw turns.
///
/// Resolution order for each turn:
/// 1. a role stated on the turn itself,
/// 2. the roster,
/// 3. a speaker literally named "Operator",
/// 4. the listed company managers,
/// 5. speakers whose sentences are at least half questions,
/// 6. the first speaker who opens the Q&A section, i.e. the first turn not
///    already attributed to a manager or the operator.
///
/// Everyone else is `Unknown`. Turns whose text is blank are dropped.
pub fn assign_roles(raw: Vec<RawTurn>, managers: &[String], roster: &Roster) -> Vec<SpeakerTurn> {
    let manager_keys: Vec<String> = managers.iter().map(|m| name_key(m)).collect();

    let mut spoken: BTreeMap<String, String> = BTreeMap::new();
    for t in &raw {
        let entry = spoken.entry(name_key(&t.speaker)).or_default();
        if !entry.is_empty() {
            entry.push(' ');
        }
        entry.push_str(&t.text);
    }

    let by_name = |speaker: &str| -> Role {
        let key = name_key(speaker);
        if let Some(role) = roster.get(speaker) {
            role
        } else if key == "operator" {
            Role::Operator
        } else if manager_keys.contains(&key) {
            Role::Manager
        } else if spoken.get(&key).is_some_and(|t| question_fraction(t) >= 0.5) {
            Role::Analyst
        } else {
            Role::Unknown
        }
    };

    let mut turns: Vec<SpeakerTurn> = raw
        .into_iter()
        .filter_map(|t| {
            let text = t.text.trim();
            if text.is_empty() {
                return None;
            }
            let speaker_name = t.speaker.trim().to_string();
            let role = t.role.unwrap_or_else(|| by_name(&speaker_name));
            Some(SpeakerTurn {
                speaker_name,
                role,
                text: text.to_string(),
                ordinal: 0,
            })
        })
        .collect();

    if let Some(opener) = turns.iter().find(|t| !matches!(t.role, Role::Manager | Role::Operator)) {
        if opener.role == Role::Unknown {
            let key = name_key(&opener.speaker_name);
            for t in turns.iter_mut() {
                if t.role == Role::Unknown && name_key(&t.speaker_name) == key {
                    t.role = Role::Analyst;
                }
            }
        }
    }

    for (i, t) in turns.iter_mut().enumerate() {
        t.ordinal = i;
    }
    turns
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairingError {
    #[error("call has no turns")]
    NoTurns,
    #[error("no analyst question is directly followed by a management answer")]
    NoPairsFound,
}

/// Builds the question/answer pairs for a sequence of turns.
pub fn pair_turns(turns: &[SpeakerTurn]) -> Vec<QaPair> {
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < turns.len() {
        if turns[i].role != Role::Analyst {
            i += 1;
            continue;
        }
        let analyst = &turns[i].speaker_name;
        let q_start = i;
        while i < turns.len() && turns[i].role == Role::Analyst && &turns[i].speaker_name == analyst {
            i += 1;
        }
        let q_end = i;
        if i < turns.len() && turns[i].role == Role::Manager {
            let a_start = i;
            while i < turns.len() && turns[i].role == Role::Manager {
                i += 1;
            }
            pairs.push(QaPair {
                analyst_name: analyst.clone(),
                question_text: join_texts(&turns[q_start..q_end]),
                answer_text: join_texts(&turns[a_start..i]),
                pair_ordinal: pairs.len(),
            });
        }
    }
    pairs
}

fn join_texts(turns: &[SpeakerTurn]) -> String {
    let mut out = String::new();
    for (k, t) in turns.iter().enumerate() {
        if k > 0 {
            out.push_str(JOIN_SEPARATOR);
        }
        out.push_str(&t.text);
    }
    out
}

/// Re-derives `qa_pairs` from the call's turns.
///
/// A non-empty roster overrides the role of every speaker it names before
/// pairing. Existing pairs on the input are ignored, so the operation is
/// idempotent.
pub fn segment_and_pair(mut call: EarningsCall, roster: &Roster) -> Result<EarningsCall, PairingError> {
    if call.turns.is_empty() {
        return Err(PairingError::NoTurns);
    }
    if !roster.is_empty() {
        for t in call.turns.iter_mut() {
            if let Some(role) = roster.get(&t.speaker_name) {
                t.role = role;
            }
        }
    }
    let pairs = pair_turns(&call.turns);
    if pairs.is_empty() {
        return Err(PairingError::NoPairsFound);
    }
    call.qa_pairs = pairs;
    Ok(call)
}
