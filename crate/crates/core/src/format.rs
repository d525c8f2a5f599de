//! Parsing and canonical serialization of chain documents.
//!
//! Two formats are supported:
//!
//! * `json`: one object per document with fixed key order
//!   `claim, evidence_docs, exogenous, endogenous, verdict, gold_label`.
//!   Unknown keys are rejected.
//! * `template-text`: a line-oriented layout. The rendered answer template
//!   (see [`render_template`]) is
//!
//!   ```text
//!   u1: <evidence text>
//!   v1: [u1, u2] => <rule text> :: <derived text>
//!   ANSWER: Supported
//!   ```
//!
//!   and a full serialization prefixes it with `CLAIM:`, `DOC:`, `GOLD:` and
//!   `SOURCE:` header lines so that every field survives a round trip.
//!
//! Text fields escape `\` as `\\`, LF as `\n` and CR as `\r`. Rule text
//! additionally escapes the second of any two adjacent colons as `\:` so the
//! ` :: ` separator is never ambiguous.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scm::{EndogenousVariable, ExogenousVariable, Label, ReasoningChain, ScmError, VariableId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("SyntaxError at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("MissingSection: {0}")]
    MissingSection(String),
    #[error("SourceOutOfRange: {id} cites document {doc}, only {available} available")]
    SourceOutOfRange { id: VariableId, doc: usize, available: usize },
    #[error("NoAnswerMarker: text has no ANSWER: marker")]
    NoAnswerMarker,
    #[error("InvalidUtf8: {0}")]
    InvalidUtf8(String),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

impl FormatError {
    pub fn name(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "SyntaxError",
            FormatError::MissingSection(_) => "MissingSection",
            FormatError::SourceOutOfRange { .. } => "SourceOutOfRange",
            FormatError::NoAnswerMarker => "NoAnswerMarker",
            FormatError::InvalidUtf8(_) => "InvalidUtf8",
            FormatError::Scm(e) => e.name(),
        }
    }

    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    TemplateText,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "template-text" => Ok(Format::TemplateText),
            other => Err(format!("unknown format {other:?} (expected json or template-text)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::TemplateText => "template-text",
        })
    }
}

/// A claim, its evidence collection, the reasoning chain and the optional
/// ground-truth label. The chain's verdict is the predicted answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDocument {
    pub evidence_docs: Vec<String>,
    pub chain: ReasoningChain,
    pub gold_label: Option<Label>,
}

impl ChainDocument {
    pub fn new(chain: ReasoningChain) -> Self {
        ChainDocument { evidence_docs: Vec::new(), chain, gold_label: None }
    }

    pub fn with_gold(mut self, label: Label) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn with_evidence_docs(mut self, docs: Vec<String>) -> Self {
        self.evidence_docs = docs;
        self
    }

    pub fn claim(&self) -> &str {
        &self.chain.claim
    }

    pub fn predicted_label(&self) -> Label {
        self.chain.verdict
    }

    /// Document-level well-formedness: chain ids plus evidence citations.
    pub fn validate(&self) -> Result<(), FormatError> {
        if self.chain.exogenous.is_empty() {
            return Err(FormatError::MissingSection("exogenous".into()));
        }
        if self.chain.endogenous.is_empty() {
            return Err(FormatError::MissingSection("endogenous".into()));
        }
        self.chain.check_well_formed()?;
        for u in &self.chain.exogenous {
            if let Some(doc) = u.source_doc {
                if doc >= self.evidence_docs.len() {
                    return Err(FormatError::SourceOutOfRange {
                        id: u.id,
                        doc,
                        available: self.evidence_docs.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    claim: Option<String>,
    #[serde(default)]
    evidence_docs: Vec<String>,
    exogenous: Option<Vec<RawExogenous>>,
    endogenous: Option<Vec<RawEndogenous>>,
    verdict: Option<String>,
    #[serde(default)]
    gold_label: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExogenous {
    id: String,
    text: String,
    #[serde(default)]
    source_doc: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndogenous {
    id: String,
    parents: Vec<String>,
    rule_text: String,
    derived_text: String,
}

#[derive(Serialize)]
struct CanonicalDocument<'a> {
    claim: &'a str,
    evidence_docs: &'a [String],
    exogenous: &'a [ExogenousVariable],
    endogenous: &'a [EndogenousVariable],
    verdict: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_label: Option<Label>,
}

pub fn parse_chain(input: &[u8], format: Format) -> Result<ChainDocument, FormatError> {
    let text = std::str::from_utf8(input).map_err(|e| FormatError::InvalidUtf8(e.to_string()))?;
    match format {
        Format::Json => parse_json(text),
        Format::TemplateText => parse_template_text(text),
    }
}

pub fn serialize_chain(doc: &ChainDocument, format: Format) -> Vec<u8> {
    match format {
        Format::Json => to_json(doc).into_bytes(),
        Format::TemplateText => to_template_text(doc).into_bytes(),
    }
}

/// Serializes in the canonical JSON layout.
impl Serialize for ChainDocument {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut exogenous = self.chain.exogenous.clone();
        exogenous.sort_by_key(|u| u.id);
        CanonicalDocument {
            claim: &self.chain.claim,
            evidence_docs: &self.evidence_docs,
            exogenous: &exogenous,
            endogenous: &self.chain.endogenous,
            verdict: self.chain.verdict,
            gold_label: self.gold_label,
        }
        .serialize(serializer)
    }
}

/// Same checks as [`parse_chain`] with [`Format::Json`].
impl<'de> Deserialize<'de> for ChainDocument {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawDocument::deserialize(deserializer)?;
        from_raw(raw).map_err(serde::de::Error::custom)
    }
}

/// Canonical single-line JSON (no trailing newline).
pub fn to_json(doc: &ChainDocument) -> String {
    serde_json::to_string(doc).expect("document serialization is infallible")
}

fn parse_json(text: &str) -> Result<ChainDocument, FormatError> {
    let raw: RawDocument = serde_json::from_str(text)
        .map_err(|e| FormatError::syntax(e.line(), e.column(), e.to_string()))?;
    from_raw(raw)
}

fn from_raw(raw: RawDocument) -> Result<ChainDocument, FormatError> {
    let claim = raw.claim.ok_or_else(|| FormatError::MissingSection("claim".into()))?;
    let raw_exo = raw.exogenous.ok_or_else(|| FormatError::MissingSection("exogenous".into()))?;
    let raw_endo = raw.endogenous.ok_or_else(|| FormatError::MissingSection("endogenous".into()))?;
    let verdict: Label = raw.verdict.ok_or_else(|| FormatError::MissingSection("verdict".into()))?.parse()?;
    let gold_label = raw.gold_label.map(|g| g.parse::<Label>()).transpose()?;

    let exogenous = raw_exo
        .into_iter()
        .map(|u| {
            Ok(ExogenousVariable { id: u.id.parse()?, text: u.text, source_doc: u.source_doc })
        })
        .collect::<Result<Vec<_>, ScmError>>()?;
    let endogenous = raw_endo
        .into_iter()
        .map(|v| {
            Ok(EndogenousVariable {
                id: v.id.parse()?,
                parents: v.parents.iter().map(|p| p.parse()).collect::<Result<_, _>>()?,
                rule_text: v.rule_text,
                derived_text: v.derived_text,
            })
        })
        .collect::<Result<Vec<_>, ScmError>>()?;

    let doc = ChainDocument {
        evidence_docs: raw.evidence_docs,
        chain: ReasoningChain::new(claim, exogenous, endogenous, verdict),
        gold_label,
    };
    doc.validate()?;
    Ok(doc)
}

fn escape_into(out: &mut String, s: &str, colons: bool) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ':' if colons && out.ends_with(':') => out.push_str("\\:"),
            c => out.push(c),
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    escape_into(&mut out, s, false);
    out
}

fn unescape(s: &str, line: usize, col_offset: usize) -> Result<String, FormatError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some((_, '\\')) => out.push('\\'),
            Some((_, 'n')) => out.push('\n'),
            Some((_, 'r')) => out.push('\r'),
            Some((_, ':')) => out.push(':'),
            _ => return Err(FormatError::syntax(line, col_offset + i + 1, "invalid escape sequence")),
        }
    }
    Ok(out)
}

fn write_body(out: &mut String, doc: &ChainDocument) {
    let mut exogenous: Vec<&ExogenousVariable> = doc.chain.exogenous.iter().collect();
    exogenous.sort_by_key(|u| u.id);
    for u in exogenous {
        out.push_str(&u.id.to_string());
        out.push_str(": ");
        escape_into(out, &u.text, false);
        out.push('\n');
    }
    for v in &doc.chain.endogenous {
        out.push_str(&v.id.to_string());
        out.push_str(": [");
        let parents: Vec<String> = v.parents.iter().map(|p| p.to_string()).collect();
        out.push_str(&parents.join(", "));
        out.push_str("] => ");
        let start = out.len();
        let mut rule = String::new();
        escape_into(&mut rule, &v.rule_text, true);
        out.push_str(&rule);
        debug_assert!(!out[start..].contains("::"));
        out.push_str(" :: ");
        escape_into(out, &v.derived_text, false);
        out.push('\n');
    }
    out.push_str("ANSWER: ");
    out.push_str(doc.chain.verdict.as_str());
}

/// Renders the answer template: evidence lines, derivation lines, then the
/// `ANSWER:` line. No trailing newline.
pub fn render_template(doc: &ChainDocument) -> String {
    let mut out = String::new();
    write_body(&mut out, doc);
    out
}

/// Full template-text serialization: header lines, the rendered template,
/// and a final LF.
pub fn to_template_text(doc: &ChainDocument) -> String {
    let mut out = String::new();
    out.push_str("CLAIM: ");
    out.push_str(&escape(&doc.chain.claim));
    out.push('\n');
    for d in &doc.evidence_docs {
        out.push_str("DOC: ");
        out.push_str(&escape(d));
        out.push('\n');
    }
    if let Some(gold) = doc.gold_label {
        out.push_str("GOLD: ");
        out.push_str(gold.as_str());
        out.push('\n');
    }
    let mut exogenous: Vec<&ExogenousVariable> = doc.chain.exogenous.iter().collect();
    exogenous.sort_by_key(|u| u.id);
    for u in exogenous {
        if let Some(src) = u.source_doc {
            out.push_str(&format!("SOURCE: {} {}\n", u.id, src));
        }
    }
    write_body(&mut out, doc);
    out.push('\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Claim,
    Doc,
    Gold,
    Source,
    Evidence,
    Derivations,
    Answer,
}

fn parse_template_text(text: &str) -> Result<ChainDocument, FormatError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut claim = String::new();
    let mut docs = Vec::new();
    let mut gold = None;
    let mut sources: Vec<(VariableId, usize, usize)> = Vec::new();
    let mut exogenous: Vec<ExogenousVariable> = Vec::new();
    let mut endogenous = Vec::new();
    let mut verdict = None;
    let mut section: Option<Section> = None;

    for (i, line) in body.split('\n').enumerate() {
        let n = i + 1;
        if let Some(col) = line.find('\r') {
            return Err(FormatError::syntax(n, col + 1, "carriage return in line (LF line endings required)"));
        }
        let (next, rest, offset) = classify(line).ok_or_else(|| FormatError::syntax(n, 1, "unrecognized line"))?;
        let ordered = match (section, next) {
            (None, _) => true,
            (Some(prev), next) if prev == next => !matches!(next, Section::Claim | Section::Gold | Section::Answer),
            (Some(prev), next) => prev < next,
        };
        if !ordered {
            return Err(FormatError::syntax(n, 1, format!("{next:?} line out of order")));
        }
        section = Some(next);
        match next {
            Section::Claim => claim = unescape(rest, n, offset)?,
            Section::Doc => docs.push(unescape(rest, n, offset)?),
            Section::Gold => gold = Some(rest.parse::<Label>()?),
            Section::Source => {
                let mut parts = rest.split(' ');
                let (Some(id), Some(doc), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(FormatError::syntax(n, offset + 1, "expected `SOURCE: u<k> <doc>`"));
                };
                let id: VariableId = id.parse()?;
                if !id.is_exogenous() {
                    return Err(ScmError::WrongKind(id).into());
                }
                let doc = doc
                    .parse::<usize>()
                    .map_err(|_| FormatError::syntax(n, offset + id.to_string().len() + 2, "bad document index"))?;
                sources.push((id, doc, n));
            }
            Section::Evidence => {
                let (id, text) = split_id(rest, n)?;
                if !id.is_exogenous() {
                    return Err(ScmError::WrongKind(id).into());
                }
                let text = unescape(text, n, id.to_string().len() + 2)?;
                exogenous.push(ExogenousVariable { id, text, source_doc: None });
            }
            Section::Derivations => endogenous.push(parse_derivation(rest, n)?),
            Section::Answer => verdict = Some(rest.parse::<Label>()?),
        }
    }

    if exogenous.is_empty() {
        return Err(FormatError::MissingSection("EVIDENCE".into()));
    }
    if endogenous.is_empty() {
        return Err(FormatError::MissingSection("DERIVATIONS".into()));
    }
    let verdict = verdict.ok_or_else(|| FormatError::MissingSection("ANSWER".into()))?;

    for (id, doc, line) in sources {
        match exogenous.iter_mut().find(|u| u.id == id) {
            Some(u) if u.source_doc.is_none() => u.source_doc = Some(doc),
            Some(_) => return Err(FormatError::syntax(line, 1, format!("duplicate SOURCE for {id}"))),
            None => return Err(ScmError::UnknownParent(id).into()),
        }
    }

    let doc = ChainDocument {
        evidence_docs: docs,
        chain: ReasoningChain::new(claim, exogenous, endogenous, verdict),
        gold_label: gold,
    };
    doc.validate()?;
    Ok(doc)
}

fn classify(line: &str) -> Option<(Section, &str, usize)> {
    const HEADERS: [(&str, Section); 5] = [
        ("CLAIM: ", Section::Claim),
        ("DOC: ", Section::Doc),
        ("GOLD: ", Section::Gold),
        ("SOURCE: ", Section::Source),
        ("ANSWER: ", Section::Answer),
    ];
    for (prefix, section) in HEADERS {
        if let Some(rest) = line.strip_prefix(prefix) {
            return Some((section, rest, prefix.len()));
        }
    }
    match line.as_bytes().first() {
        Some(b'u') => Some((Section::Evidence, line, 0)),
        Some(b'v') => Some((Section::Derivations, line, 0)),
        _ => None,
    }
}

fn split_id(line: &str, n: usize) -> Result<(VariableId, &str), FormatError> {
    let colon = line.find(": ").ok_or_else(|| FormatError::syntax(n, 1, "expected `<id>: `"))?;
    let id: VariableId = line[..colon].parse()?;
    Ok((id, &line[colon + 2..]))
}

fn parse_derivation(line: &str, n: usize) -> Result<EndogenousVariable, FormatError> {
    let (id, rest) = split_id(line, n)?;
    if id.is_exogenous() {
        return Err(ScmError::WrongKind(id).into());
    }
    let base = id.to_string().len() + 2;
    let inner = rest
        .strip_prefix('[')
        .ok_or_else(|| FormatError::syntax(n, base + 1, "expected `[` opening the parent list"))?;
    let close = inner.find(']').ok_or_else(|| FormatError::syntax(n, base + 1, "unterminated parent list"))?;
    let parents = if inner[..close].is_empty() {
        Vec::new()
    } else {
        inner[..close].split(", ").map(str::parse).collect::<Result<Vec<VariableId>, _>>()?
    };
    let after = &inner[close + 1..];
    let tail = after
        .strip_prefix(" => ")
        .ok_or_else(|| FormatError::syntax(n, base + close + 3, "expected ` => ` after the parent list"))?;
    let tail_offset = base + close + 2 + 4;
    let sep = tail
        .find(" :: ")
        .ok_or_else(|| FormatError::syntax(n, tail_offset + 1, "expected ` :: ` between rule and derived text"))?;
    let rule_text = unescape(&tail[..sep], n, tail_offset)?;
    let derived_text = unescape(&tail[sep + 4..], n, tail_offset + sep + 4)?;
    Ok(EndogenousVariable { id, parents, rule_text, derived_text })
}

/// Label after the last `ANSWER:` marker (marker and label case-insensitive).
pub fn extract_answer(text: &str) -> Result<Label, FormatError> {
    const MARKER: &str = "answer:";
    let lowered = text.to_ascii_lowercase();
    let at = lowered.rfind(MARKER).ok_or(FormatError::NoAnswerMarker)?;
    let rest = &text[at + MARKER.len()..];
    let label_text = rest.split('\n').next().unwrap_or("");
    Ok(label_text.parse::<Label>()?)
}

/// Reads a stream of documents: JSONL for `json` (blank lines skipped),
/// blank-line-separated blocks for `template-text`. Each item carries the
/// 1-based line number where the document starts.
pub fn read_documents<R: BufRead>(
    reader: R,
    format: Format,
) -> impl Iterator<Item = (usize, Result<ChainDocument, DocumentReadError>)> {
    DocumentReader { lines: reader.lines(), format, line_no: 0, done: false }
}

#[derive(Debug, Error)]
pub enum DocumentReadError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
}

struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    format: Format,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = (usize, Result<ChainDocument, DocumentReadError>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut block = String::new();
        let mut start = 0;
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    break;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some((self.line_no + 1, Err(e.into())));
                }
                Some(Ok(line)) => {
                    self.line_no += 1;
                    if line.trim().is_empty() {
                        if block.is_empty() {
                            continue;
                        }
                        break;
                    }
                    if block.is_empty() {
                        start = self.line_no;
                    }
                    block.push_str(&line);
                    block.push('\n');
                    if self.format == Format::Json {
                        break;
                    }
                }
            }
        }
        if block.is_empty() {
            return None;
        }
        Some((start, parse_chain(block.as_bytes(), self.format).map_err(Into::into)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::VariableId;

    fn minimal() -> ChainDocument {
        let chain = ReasoningChain::new(
            "The tower is in Paris.",
            vec![ExogenousVariable::new(1, "The Eiffel Tower stands in Paris.")],
            vec![EndogenousVariable::new(1, vec![VariableId::exogenous(1)], "restate evidence", "The claim holds.")],
            Label::Supported,
        );
        ChainDocument::new(chain)
    }

    const MINIMAL_JSON: &str = r#"{"claim":"c","exogenous":[{"id":"u1","text":"fact"}],"endogenous":[{"id":"v1","parents":["u1"],"rule_text":"r","derived_text":"d"}],"verdict":"Supported"}"#;

    #[test]
    fn parses_minimal_json() {
        let doc = parse_chain(MINIMAL_JSON.as_bytes(), Format::Json).unwrap();
        assert_eq!(doc.chain.n_exogenous(), 1);
        assert_eq!(doc.chain.n_endogenous(), 1);
        assert_eq!(doc.chain.verdict, Label::Supported);
        assert_eq!(doc.gold_label, None);
    }

    #[test]
    fn json_unknown_parent() {
        let text = MINIMAL_JSON.replace(r#""parents":["u1"]"#, r#""parents":["v9"]"#);
        let err = parse_chain(text.as_bytes(), Format::Json).unwrap_err();
        assert_eq!(err, FormatError::Scm(ScmError::UnknownParent(VariableId::endogenous(9))));
        assert_eq!(err.name(), "UnknownParent");
    }

    #[test]
    fn json_is_strict() {
        let text = MINIMAL_JSON.replace(r#""claim":"c""#, r#""claim":"c","extra":1"#);
        assert!(matches!(parse_chain(text.as_bytes(), Format::Json), Err(FormatError::Syntax { .. })));
        let text = MINIMAL_JSON.replace(r#","verdict":"Supported""#, "");
        assert_eq!(
            parse_chain(text.as_bytes(), Format::Json),
            Err(FormatError::MissingSection("verdict".into()))
        );
        let text = MINIMAL_JSON.replace("Supported", "maybe");
        assert!(matches!(parse_chain(text.as_bytes(), Format::Json), Err(FormatError::Scm(ScmError::BadLabel(_)))));
        assert!(matches!(parse_chain(b"{", Format::Json), Err(FormatError::Syntax { line: 1, .. })));
        assert!(matches!(parse_chain(&[0xff, 0xfe], Format::Json), Err(FormatError::InvalidUtf8(_))));
    }

    #[test]
    fn json_source_doc_must_index_evidence() {
        let text = MINIMAL_JSON.replace(r#""text":"fact""#, r#""text":"fact","source_doc":0"#);
        assert!(matches!(parse_chain(text.as_bytes(), Format::Json), Err(FormatError::SourceOutOfRange { .. })));
        let text = text.replace(r#""claim":"c""#, r#""claim":"c","evidence_docs":["doc zero"]"#);
        let doc = parse_chain(text.as_bytes(), Format::Json).unwrap();
        assert_eq!(doc.chain.exogenous[0].source_doc, Some(0));
    }

    #[test]
    fn json_canonical_form() {
        let doc = parse_chain(MINIMAL_JSON.as_bytes(), Format::Json).unwrap();
        let once = serialize_chain(&doc, Format::Json);
        let twice = serialize_chain(&parse_chain(&once, Format::Json).unwrap(), Format::Json);
        assert_eq!(once, twice);
        assert_eq!(
            String::from_utf8(once).unwrap(),
            r#"{"claim":"c","evidence_docs":[],"exogenous":[{"id":"u1","text":"fact"}],"endogenous":[{"id":"v1","parents":["u1"],"rule_text":"r","derived_text":"d"}],"verdict":"Supported"}"#
        );
    }

    #[test]
    fn json_endogenous_count() {
        let text = r#"{"claim":"c","exogenous":[{"id":"u2","text":"b"},{"id":"u1","text":"a"}],"endogenous":[{"id":"v1","parents":["u1"],"rule_text":"r","derived_text":"d"},{"id":"v2","parents":["v1","u2"],"rule_text":"r","derived_text":"d"}],"verdict":"Refuted"}"#;
        let doc = parse_chain(text.as_bytes(), Format::Json).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&serialize_chain(&doc, Format::Json)).unwrap();
        assert_eq!(value["endogenous"].as_array().unwrap().len(), 2);
        assert_eq!(value["exogenous"][0]["id"], "u1");
    }

    #[test]
    fn render_minimal() {
        let rendered = render_template(&minimal());
        assert_eq!(rendered.lines().count(), 3);
        assert!(rendered.ends_with("ANSWER: Supported"));
        assert_eq!(
            rendered,
            "u1: The Eiffel Tower stands in Paris.\nv1: [u1] => restate evidence :: The claim holds.\nANSWER: Supported"
        );
    }

    #[test]
    fn render_line_count() {
        let mut doc = minimal();
        doc.chain.exogenous.push(ExogenousVariable::new(2, "second"));
        let rendered = render_template(&doc);
        assert_eq!(rendered.lines().filter(|l| !l.is_empty()).count(), 4);
    }

    #[test]
    fn rendered_template_reparses() {
        let doc = minimal();
        let parsed = parse_chain(render_template(&doc).as_bytes(), Format::TemplateText).unwrap();
        assert_eq!(parsed.chain.exogenous, doc.chain.exogenous);
        assert_eq!(parsed.chain.endogenous, doc.chain.endogenous);
        assert_eq!(parsed.chain.verdict, doc.chain.verdict);
    }

    #[test]
    fn template_round_trip_with_awkward_text() {
        let chain = ReasoningChain::new(
            "line one\nline two \\ backslash",
            vec![
                ExogenousVariable::new(1, "a: b :: c").with_source(1),
                ExogenousVariable::new(2, " leading and trailing "),
            ],
            vec![
                EndogenousVariable::new(1, vec![VariableId::exogenous(1)], "x ::: y :: z:", " :: derived :: "),
                EndogenousVariable::new(
                    2,
                    vec![VariableId::endogenous(1), VariableId::exogenous(2)],
                    "",
                    "ANSWER: Refuted is not the answer",
                ),
            ],
            Label::Supported,
        );
        let doc = ChainDocument::new(chain)
            .with_evidence_docs(vec!["d0".into(), "d1\r\n".into()])
            .with_gold(Label::Refuted);
        let text = serialize_chain(&doc, Format::TemplateText);
        let parsed = parse_chain(&text, Format::TemplateText).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(serialize_chain(&parsed, Format::TemplateText), text);
        assert_eq!(extract_answer(&render_template(&doc)).unwrap(), Label::Supported);
    }

    #[test]
    fn template_errors() {
        let err = parse_chain(b"v1: [u1] => r :: d\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert_eq!(err, FormatError::MissingSection("EVIDENCE".into()));
        let err = parse_chain(b"u1: a\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert_eq!(err, FormatError::MissingSection("DERIVATIONS".into()));
        let err = parse_chain(b"u1: a\nv1: [u1] => r :: d\n", Format::TemplateText).unwrap_err();
        assert_eq!(err, FormatError::MissingSection("ANSWER".into()));
        let err = parse_chain(b"u1: a\nv1: [u1] => r :: d\nANSWER: Maybe", Format::TemplateText).unwrap_err();
        assert_eq!(err.name(), "BadLabel");
        let err = parse_chain(b"v1: [u1] => r :: d\nu1: a\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 2, .. }));
        let err = parse_chain(b"u1: a\r\nv1: [u1] => r :: d\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 1, .. }));
        let err = parse_chain(b"u1: a\nv1: [u2] => r :: d\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert_eq!(err.name(), "UnknownParent");
        let err = parse_chain(b"u1: a\nv1: [u1] r :: d\nANSWER: Supported", Format::TemplateText).unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 2, .. }));
    }

    #[test]
    fn extract_answer_cases() {
        assert_eq!(extract_answer("... ANSWER: Supported").unwrap(), Label::Supported);
        assert_eq!(extract_answer("... ANSWER: refuted").unwrap(), Label::Refuted);
        assert_eq!(extract_answer("no marker here"), Err(FormatError::NoAnswerMarker));
        assert_eq!(extract_answer("ANSWER: Refuted\nthen ANSWER: Supported").unwrap(), Label::Supported);
        assert_eq!(extract_answer("ANSWER: perhaps").unwrap_err().name(), "BadLabel");
    }

    #[test]
    fn reads_jsonl_and_template_streams() {
        let jsonl = format!("{MINIMAL_JSON}\n\n{MINIMAL_JSON}\nnot json\n");
        let items: Vec<_> = read_documents(jsonl.as_bytes(), Format::Json).collect();
        assert_eq!(items.len(), 3);
        assert_eq!(items[1].0, 3);
        assert!(items[2].1.is_err());

        let doc = minimal();
        let block = to_template_text(&doc);
        let stream = format!("{block}\n{block}");
        let items: Vec<_> = read_documents(stream.as_bytes(), Format::TemplateText).collect();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1].0, block.lines().count() + 2);
        assert_eq!(items[1].1.as_ref().unwrap(), &doc);
    }
}
