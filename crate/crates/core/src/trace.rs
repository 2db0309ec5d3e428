//! Playtrace data model, the `.mtl` trace log format and corpus indexing.
//!
//! A trace log is UTF-8, one record per line:
//!
//! ```text
//! #universe collect_key move unlock_door
//! {"game":"keyquest","level":"level0","agent":"rusher","episode":0,"seed":1,"outcome":"win","ticks":31,"counts":{"collect_key":1,"move":29,"unlock_door":1}}
//! ```
//!
//! The `#universe` header is optional when parsing and always written when
//! serializing. Records may carry an `events` array of mechanic names
//! instead of (or in addition to) `counts`; events are folded into the
//! per-episode counts on parse.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_TOKEN_LEN: usize = 64;
const UNIVERSE_PREFIX: &str = "#universe";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: duplicate trace {key}")]
    DuplicateTrace { line: usize, key: String },
    #[error("line {line}: negative count {value} for mechanic `{mechanic}`")]
    NegativeCount {
        line: usize,
        mechanic: String,
        value: i64,
    },
    #[error("line {line}: unknown outcome `{value}`")]
    UnknownOutcome { line: usize, value: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("invalid token `{token}`: {reason}")]
    InvalidToken { token: String, reason: &'static str },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TraceError {
    fn from(e: std::io::Error) -> Self {
        TraceError::Io(e.to_string())
    }
}

/// Checks the token rules shared by mechanic names and game/level/agent ids.
pub fn validate_token(token: &str) -> Result<(), TraceError> {
    let reason = if token.is_empty() {
        Some("empty")
    } else if token.chars().count() > MAX_TOKEN_LEN {
        Some("longer than 64 characters")
    } else if token.chars().any(char::is_whitespace) {
        Some("contains whitespace")
    } else if token.chars().any(|c| c == ',' || c.is_control()) {
        Some("contains a comma or control character")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(TraceError::InvalidToken {
            token: token.to_string(),
            reason,
        }),
        None => Ok(()),
    }
}

/// Name of a game mechanic, e.g. `collect_key`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MechanicId(String);

impl MechanicId {
    pub fn new(name: impl Into<String>) -> Result<Self, TraceError> {
        let name = name.into();
        validate_token(&name)?;
        Ok(MechanicId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for MechanicId {
    type Error = TraceError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        MechanicId::new(s)
    }
}

impl From<MechanicId> for String {
    fn from(m: MechanicId) -> String {
        m.0
    }
}

impl FromStr for MechanicId {
    type Err = TraceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MechanicId::new(s)
    }
}

impl fmt::Display for MechanicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for MechanicId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Timeout,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Win, Outcome::Loss, Outcome::Timeout];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Loss => "loss",
            Outcome::Timeout => "timeout",
        }
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "win" => Ok(Outcome::Win),
            "loss" => Ok(Outcome::Loss),
            "timeout" => Ok(Outcome::Timeout),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One episode: who played what, how it ended and how often each mechanic fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Playtrace {
    pub game: String,
    pub level: String,
    pub agent: String,
    pub episode: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub ticks: u64,
    pub counts: BTreeMap<MechanicId, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<i64>,
}

impl Playtrace {
    /// Trigger count for `mechanic`; absent mechanics count zero.
    pub fn count(&self, mechanic: &MechanicId) -> u64 {
        self.counts.get(mechanic).copied().unwrap_or(0)
    }

    pub fn key(&self) -> TraceKey {
        TraceKey {
            game: self.game.clone(),
            level: self.level.clone(),
            agent: self.agent.clone(),
            episode: self.episode,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        validate_token(&self.game)?;
        validate_token(&self.level)?;
        validate_token(&self.agent)?;
        if self.ticks == 0 {
            return Err(TraceError::InvalidTrace(format!(
                "{}: ticks must be at least 1",
                self.key()
            )));
        }
        Ok(())
    }
}

/// Uniqueness key of a playtrace within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceKey {
    pub game: String,
    pub level: String,
    pub agent: String,
    pub episode: u64,
}

impl fmt::Display for TraceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.game, self.level, self.agent, self.episode
        )
    }
}

/// Built-in named trace predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    /// Loss or timeout.
    NonWin,
    Loss,
    Timeout,
}

impl Predicate {
    pub fn matches(self, trace: &Playtrace) -> bool {
        match self {
            Predicate::NonWin => trace.outcome != Outcome::Win,
            Predicate::Loss => trace.outcome == Outcome::Loss,
            Predicate::Timeout => trace.outcome == Outcome::Timeout,
        }
    }
}

/// Selector over playtraces used to condition mechanic distributions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Condition {
    All,
    Win,
    Agent(String),
    Predicate(Predicate),
}

impl Condition {
    pub fn agent(id: impl Into<String>) -> Self {
        Condition::Agent(id.into())
    }

    pub fn matches(&self, trace: &Playtrace) -> bool {
        match self {
            Condition::All => true,
            Condition::Win => trace.outcome == Outcome::Win,
            Condition::Agent(a) => trace.agent == *a,
            Condition::Predicate(p) => p.matches(trace),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::All => f.write_str("all"),
            Condition::Win => f.write_str("win"),
            Condition::Agent(a) => write!(f, "agent={a}"),
            Condition::Predicate(p) => write!(f, "{p:?}"),
        }
    }
}

/// Indexed, immutable collection of playtraces over a declared mechanic universe.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    traces: Vec<Playtrace>,
    universe: BTreeSet<MechanicId>,
    by_agent: BTreeMap<String, Vec<usize>>,
    by_outcome: BTreeMap<Outcome, Vec<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.traces == other.traces && self.universe == other.universe
    }
}

impl Eq for Corpus {}

impl Corpus {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a corpus; the universe is `declared` plus every mechanic seen in `traces`.
    pub fn new(
        traces: Vec<Playtrace>,
        declared: impl IntoIterator<Item = MechanicId>,
    ) -> Result<Self, TraceError> {
        let mut seen = BTreeSet::new();
        for (i, t) in traces.iter().enumerate() {
            t.validate()?;
            if !seen.insert(t.key()) {
                return Err(TraceError::DuplicateTrace {
                    line: i + 1,
                    key: t.key().to_string(),
                });
            }
        }
        Ok(Self::build_unchecked(
            traces,
            declared.into_iter().collect(),
        ))
    }

    fn build_unchecked(traces: Vec<Playtrace>, mut universe: BTreeSet<MechanicId>) -> Self {
        let mut by_agent: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_outcome: BTreeMap<Outcome, Vec<usize>> = BTreeMap::new();
        for (i, t) in traces.iter().enumerate() {
            universe.extend(t.counts.keys().cloned());
            by_agent.entry(t.agent.clone()).or_default().push(i);
            by_outcome.entry(t.outcome).or_default().push(i);
        }
        Corpus {
            traces,
            universe,
            by_agent,
            by_outcome,
        }
    }

    pub fn traces(&self) -> &[Playtrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn mechanic_universe(&self) -> &BTreeSet<MechanicId> {
        &self.universe
    }

    pub fn agents(&self) -> impl Iterator<Item = &str> {
        self.by_agent.keys().map(String::as_str)
    }

    pub fn has_agent(&self, agent: &str) -> bool {
        self.by_agent.contains_key(agent)
    }

    pub fn agent_trace_count(&self, agent: &str) -> usize {
        self.by_agent.get(agent).map_or(0, Vec::len)
    }

    pub fn outcome_count(&self, outcome: Outcome) -> usize {
        self.by_outcome.get(&outcome).map_or(0, Vec::len)
    }

    /// Indices (in corpus order) of the traces satisfying `condition`.
    pub fn select(&self, condition: &Condition) -> Result<Vec<usize>, TraceError> {
        Ok(match condition {
            Condition::All => (0..self.traces.len()).collect(),
            Condition::Win => self
                .by_outcome
                .get(&Outcome::Win)
                .cloned()
                .unwrap_or_default(),
            Condition::Agent(a) => self
                .by_agent
                .get(a)
                .cloned()
                .ok_or_else(|| TraceError::UnknownAgent(a.clone()))?,
            Condition::Predicate(p) => self
                .traces
                .iter()
                .enumerate()
                .filter(|(_, t)| p.matches(t))
                .map(|(i, _)| i)
                .collect(),
        })
    }

    pub fn filter(&self, condition: &Condition) -> Result<CorpusView<'_>, TraceError> {
        Ok(CorpusView {
            corpus: self,
            indices: self.select(condition)?,
        })
    }

    /// Concatenates two corpora; the universe is the union of both.
    pub fn merge(&self, other: &Corpus) -> Result<Corpus, TraceError> {
        let keys: BTreeSet<TraceKey> = self.traces.iter().map(Playtrace::key).collect();
        for (i, t) in other.traces.iter().enumerate() {
            if keys.contains(&t.key()) {
                return Err(TraceError::DuplicateTrace {
                    line: self.traces.len() + i + 1,
                    key: t.key().to_string(),
                });
            }
        }
        let traces = self
            .traces
            .iter()
            .chain(other.traces.iter())
            .cloned()
            .collect();
        let universe = self.universe.union(&other.universe).cloned().collect();
        Ok(Self::build_unchecked(traces, universe))
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Corpus, TraceError> {
        parse_trace_log(reader)
    }

    pub fn parse_str(input: &str) -> Result<Corpus, TraceError> {
        parse_trace_log(input.as_bytes())
    }

    pub fn write<W: Write>(&self, writer: W) -> std::io::Result<()> {
        write_trace_log(self, writer)
    }

    pub fn to_log_string(&self) -> String {
        let mut buf = Vec::new();
        write_trace_log(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace log is UTF-8")
    }
}

/// Borrowed subset of a corpus. Shares the parent's mechanic universe.
#[derive(Debug, Clone)]
pub struct CorpusView<'a> {
    corpus: &'a Corpus,
    indices: Vec<usize>,
}

impl<'a> CorpusView<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn traces(&self) -> impl Iterator<Item = &'a Playtrace> + '_ {
        self.indices.iter().map(move |&i| &self.corpus.traces[i])
    }

    pub fn mechanic_universe(&self) -> &'a BTreeSet<MechanicId> {
        &self.corpus.universe
    }

    /// Narrows the view further. `Agent` conditions are checked against the parent corpus.
    pub fn filter(&self, condition: &Condition) -> Result<CorpusView<'a>, TraceError> {
        if let Condition::Agent(a) = condition {
            if !self.corpus.has_agent(a) {
                return Err(TraceError::UnknownAgent(a.clone()));
            }
        }
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| condition.matches(&self.corpus.traces[i]))
            .collect();
        Ok(CorpusView {
            corpus: self.corpus,
            indices,
        })
    }

    pub fn to_corpus(&self) -> Corpus {
        Corpus::build_unchecked(
            self.traces().cloned().collect(),
            self.corpus.universe.clone(),
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    game: String,
    level: String,
    agent: String,
    episode: u64,
    seed: u64,
    outcome: String,
    ticks: i64,
    #[serde(default)]
    counts: BTreeMap<String, i64>,
    #[serde(default)]
    events: Vec<String>,
    #[serde(default)]
    score: Option<i64>,
}

fn malformed(line: usize, reason: impl Into<String>) -> TraceError {
    TraceError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn record_to_trace(line: usize, raw: RawRecord) -> Result<Playtrace, TraceError> {
    for (field, value) in [
        ("game", &raw.game),
        ("level", &raw.level),
        ("agent", &raw.agent),
    ] {
        validate_token(value).map_err(|e| malformed(line, format!("field `{field}`: {e}")))?;
    }
    let outcome = raw
        .outcome
        .parse::<Outcome>()
        .map_err(|value| TraceError::UnknownOutcome { line, value })?;
    if raw.ticks < 1 {
        return Err(malformed(
            line,
            format!("ticks must be >= 1, got {}", raw.ticks),
        ));
    }
    let mut counts = BTreeMap::new();
    for (name, value) in raw.counts {
        let mechanic = MechanicId::new(name.clone()).map_err(|e| malformed(line, e.to_string()))?;
        if value < 0 {
            return Err(TraceError::NegativeCount {
                line,
                mechanic: name,
                value,
            });
        }
        counts.insert(mechanic, value as u64);
    }
    for name in raw.events {
        let mechanic = MechanicId::new(name).map_err(|e| malformed(line, e.to_string()))?;
        *counts.entry(mechanic).or_insert(0) += 1;
    }
    Ok(Playtrace {
        game: raw.game,
        level: raw.level,
        agent: raw.agent,
        episode: raw.episode,
        seed: raw.seed,
        outcome,
        ticks: raw.ticks as u64,
        counts,
        score: raw.score,
    })
}

/// Parses a `.mtl` trace log. The first error aborts the parse.
pub fn parse_trace_log<R: BufRead>(reader: R) -> Result<Corpus, TraceError> {
    let mut declared = BTreeSet::new();
    let mut traces = Vec::new();
    let mut keys = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => malformed(lineno, "invalid UTF-8"),
            _ => TraceError::from(e),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(UNIVERSE_PREFIX) {
            if lineno != 1 {
                return Err(malformed(
                    lineno,
                    "universe header is only allowed on the first line",
                ));
            }
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                return Err(malformed(lineno, "bad universe header"));
            }
            for name in rest.split_whitespace() {
                declared
                    .insert(MechanicId::new(name).map_err(|e| malformed(lineno, e.to_string()))?);
            }
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| malformed(lineno, e.to_string()))?;
        let trace = record_to_trace(lineno, raw)?;
        if !keys.insert(trace.key()) {
            return Err(TraceError::DuplicateTrace {
                line: lineno,
                key: trace.key().to_string(),
            });
        }
        traces.push(trace);
    }
    Ok(Corpus::build_unchecked(traces, declared))
}

/// Writes the corpus as a `.mtl` trace log: header first, then one record per trace.
pub fn write_trace_log<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    write!(writer, "{UNIVERSE_PREFIX}")?;
    for m in &corpus.universe {
        write!(writer, " {m}")?;
    }
    writer.write_all(b"\n")?;
    for t in &corpus.traces {
        serde_json::to_writer(&mut writer, t)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mech(s: &str) -> MechanicId {
        MechanicId::new(s).unwrap()
    }

    fn trace(agent: &str, episode: u64, outcome: Outcome, counts: &[(&str, u64)]) -> Playtrace {
        Playtrace {
            game: "g".into(),
            level: "l".into(),
            agent: agent.into(),
            episode,
            seed: episode * 7 + 1,
            outcome,
            ticks: 10,
            counts: counts.iter().map(|(m, c)| (mech(m), *c)).collect(),
            score: None,
        }
    }

    const ONE: &str = r#"{"game":"g","level":"l","agent":"A","episode":0,"seed":3,"outcome":"win","ticks":10,"counts":{"key":1}}"#;

    #[test]
    fn mechanic_id_rules() {
        assert!(MechanicId::new("collect_key").is_ok());
        assert!(MechanicId::new("").is_err());
        assert!(MechanicId::new("a b").is_err());
        assert!(MechanicId::new("a,b").is_err());
        assert!(MechanicId::new("x".repeat(64)).is_ok());
        assert!(MechanicId::new("x".repeat(65)).is_err());
        assert_ne!(mech("Key"), mech("key"));
    }

    #[test]
    fn empty_input() {
        let c = Corpus::parse_str("").unwrap();
        assert!(c.is_empty());
        assert!(c.mechanic_universe().is_empty());
    }

    #[test]
    fn single_record() {
        let c = Corpus::parse_str(ONE).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(
            c.mechanic_universe()
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>(),
            ["key"]
        );
        assert_eq!(c.agents().collect::<Vec<_>>(), ["A"]);
        assert_eq!(c.traces()[0].outcome, Outcome::Win);
    }

    #[test]
    fn header_declares_untriggered_mechanics() {
        let input = format!("#universe key door\n{ONE}\n");
        let c = Corpus::parse_str(&input).unwrap();
        assert_eq!(c.mechanic_universe().len(), 2);
        assert_eq!(c.traces()[0].count(&mech("door")), 0);
    }

    #[test]
    fn duplicate_rejected() {
        let input = format!("{ONE}\n{ONE}\n");
        match Corpus::parse_str(&input) {
            Err(TraceError::DuplicateTrace { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_variants() {
        let neg = ONE.replace(r#""key":1"#, r#""key":-2"#);
        assert!(matches!(
            Corpus::parse_str(&neg),
            Err(TraceError::NegativeCount {
                line: 1,
                value: -2,
                ..
            })
        ));
        let bad = ONE.replace("\"win\"", "\"draw\"");
        assert!(matches!(
            Corpus::parse_str(&bad),
            Err(TraceError::UnknownOutcome { line: 1, .. })
        ));
        let zero = ONE.replace("\"ticks\":10", "\"ticks\":0");
        assert!(matches!(
            Corpus::parse_str(&zero),
            Err(TraceError::MalformedRecord { line: 1, .. })
        ));
        let input = format!("#universe key\n{ONE}\nnot json\n");
        assert!(matches!(
            Corpus::parse_str(&input),
            Err(TraceError::MalformedRecord { line: 3, .. })
        ));
        let late_header = format!("{ONE}\n#universe key\n");
        assert!(matches!(
            Corpus::parse_str(&late_header),
            Err(TraceError::MalformedRecord { line: 2, .. })
        ));
        let extra = ONE.replace("\"seed\"", "\"sneed\":1,\"seed\"");
        assert!(Corpus::parse_str(&extra).is_err());
    }

    #[test]
    fn events_are_aggregated() {
        let input = r#"{"game":"g","level":"l","agent":"A","episode":0,"seed":3,"outcome":"loss","ticks":4,"counts":{"move":1},"events":["move","move","hit"]}"#;
        let c = Corpus::parse_str(input).unwrap();
        let t = &c.traces()[0];
        assert_eq!(t.count(&mech("move")), 3);
        assert_eq!(t.count(&mech("hit")), 1);
    }

    #[test]
    fn serialize_empty_is_header_only() {
        assert_eq!(Corpus::empty().to_log_string(), "#universe\n");
    }

    #[test]
    fn round_trip_single() {
        let c = Corpus::parse_str(ONE).unwrap();
        let s = c.to_log_string();
        assert_eq!(s, format!("#universe key\n{ONE}\n"));
        assert_eq!(Corpus::parse_str(&s).unwrap(), c);
    }

    #[test]
    fn filter_cases() {
        let traces = vec![
            trace("a", 0, Outcome::Win, &[("m", 1)]),
            trace("a", 1, Outcome::Loss, &[]),
            trace("b", 0, Outcome::Win, &[("m", 2)]),
            trace("b", 1, Outcome::Timeout, &[]),
            trace("b", 2, Outcome::Win, &[]),
        ];
        let c = Corpus::new(traces, []).unwrap();
        assert_eq!(c.filter(&Condition::All).unwrap().to_corpus(), c);
        assert_eq!(c.filter(&Condition::Win).unwrap().len(), 3);
        assert_eq!(
            c.filter(&Condition::Predicate(Predicate::NonWin))
                .unwrap()
                .len(),
            2
        );
        assert_eq!(c.filter(&Condition::agent("b")).unwrap().len(), 3);
        assert_eq!(
            c.filter(&Condition::agent("ghost")).unwrap_err(),
            TraceError::UnknownAgent("ghost".into())
        );
        let wins = c.filter(&Condition::Win).unwrap();
        assert_eq!(wins.mechanic_universe(), c.mechanic_universe());
        assert_eq!(wins.filter(&Condition::agent("a")).unwrap().indices(), &[0]);
    }

    #[test]
    fn merge_cases() {
        let a = Corpus::new(
            vec![
                trace("a", 0, Outcome::Win, &[("x", 1)]),
                trace("a", 1, Outcome::Loss, &[]),
            ],
            [],
        )
        .unwrap();
        let b = Corpus::new(
            vec![
                trace("b", 0, Outcome::Win, &[("y", 1)]),
                trace("b", 1, Outcome::Loss, &[]),
                trace("b", 2, Outcome::Loss, &[]),
            ],
            [mech("z")],
        )
        .unwrap();
        assert_eq!(a.merge(&Corpus::empty()).unwrap(), a);
        let ab = a.merge(&b).unwrap();
        assert_eq!(ab.len(), 5);
        assert_eq!(ab.mechanic_universe().len(), 3);
        assert_eq!(ab.agent_trace_count("b"), 3);
        assert!(matches!(
            a.merge(&a),
            Err(TraceError::DuplicateTrace { .. })
        ));
    }
}
