//! Source locations and structured diagnostics.
//!
//! Every error the compiler reports is a [`Diagnostic`] carrying a stable
//! [`ErrorCode`], a primary [`SourceSpan`] and an ordered list of notes.
//! Diagnostics render either for humans ([`render_human`]) or as one JSON
//! record per line ([`render_machine`]).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileId(pub u32);

/// Half-open byte range `[start, end)` within one source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: FileId,
    pub start: u32,
    pub end: u32,
}

impl SourceSpan {
    pub fn new(file: FileId, start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan {
            file,
            start: start as u32,
            end: end as u32,
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        if self.file != other.file {
            return self;
        }
        SourceSpan {
            file: self.file,
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub content: String,
}

/// Owns the text of every file taking part in a compilation.
#[derive(Debug, Clone, Default)]
pub struct SourceFiles {
    files: Vec<SourceFile>,
}

impl SourceFiles {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, content: impl Into<String>) -> FileId {
        self.files.push(SourceFile {
            name: name.into(),
            content: content.into(),
        });
        FileId(self.files.len() as u32 - 1)
    }

    pub fn get(&self, id: FileId) -> Option<&SourceFile> {
        self.files.get(id.0 as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FileId, &SourceFile)> {
        self.files
            .iter()
            .enumerate()
            .map(|(i, f)| (FileId(i as u32), f))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn snippet(&self, span: SourceSpan) -> Option<&str> {
        self.get(span.file)?
            .content
            .get(span.start as usize..span.end as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCol {
    pub line_start: usize,
    pub col_start: usize,
    pub line_end: usize,
    pub col_end: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpanError {
    #[error("span {start}..{end} is outside a file of {len} bytes")]
    OutOfRange { start: u32, end: u32, len: usize },
    #[error("span {start}..{end} does not fall on character boundaries")]
    NotCharBoundary { start: u32, end: u32 },
    #[error("unknown file id {0}")]
    UnknownFile(u32),
}

fn offset_to_line_col(content: &str, offset: usize) -> (usize, usize) {
    let before = &content[..offset];
    let line = before.matches('\n').count() + 1;
    let line_begin = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let col = content[line_begin..offset].chars().count() + 1;
    (line, col)
}

/// 1-based line and column of both span ends. Columns count Unicode scalar
/// values; a tab is one column.
pub fn span_to_line_col(content: &str, span: SourceSpan) -> Result<LineCol, SpanError> {
    let (start, end) = (span.start as usize, span.end as usize);
    if start > end || end > content.len() {
        return Err(SpanError::OutOfRange {
            start: span.start,
            end: span.end,
            len: content.len(),
        });
    }
    if !content.is_char_boundary(start) || !content.is_char_boundary(end) {
        return Err(SpanError::NotCharBoundary {
            start: span.start,
            end: span.end,
        });
    }
    let (line_start, col_start) = offset_to_line_col(content, start);
    let (line_end, col_end) = offset_to_line_col(content, end);
    Ok(LineCol {
        line_start,
        col_start,
        line_end,
        col_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        })
    }
}

macro_rules! error_codes {
    ($($(#[$doc:meta])* $name:ident = $code:literal,)*) => {
        /// Stable identifier of one error condition.
        ///
        /// Ranges: E01xx lexing and parsing, E02xx naming, E03xx types,
        /// E04xx pipelines, E05xx linearity, E06xx lowering and code
        /// generation, E07xx expression evaluation.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ErrorCode {
            $($(#[$doc])* $name,)*
        }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$name,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ErrorCode::$name => $code,)*
                }
            }

            pub fn parse(code: &str) -> Option<ErrorCode> {
                match code {
                    $($code => Some(ErrorCode::$name),)*
                    _ => None,
                }
            }
        }
    };
}

error_codes! {
    UnknownCharacter = "E0101",
    IntegerTooLarge = "E0102",
    UnexpectedToken = "E0110",
    MissingPipelineDepth = "E0111",
    /// `external` attribute and presence of a body disagree.
    ExternalBody = "E0112",
    UnknownAttribute = "E0113",
    DuplicateType = "E0201",
    DuplicateUnit = "E0202",
    UnknownType = "E0203",
    UnknownName = "E0210",
    UseBeforeDefinition = "E0211",
    DeclNeverDefined = "E0212",
    InstMismatch = "E0213",
    DuplicateStageLabel = "E0214",
    StageOutsidePipeline = "E0215",
    /// A local name defined twice in the same scope.
    DuplicateLocal = "E0216",
    TypeMismatch = "E0301",
    AmbiguousType = "E0302",
    OccursCheck = "E0303",
    NonBoolCondition = "E0304",
    MatchTypeMismatch = "E0305",
    TruncToWider = "E0306",
    NonExhaustiveMatch = "E0307",
    UnreachableArm = "E0308",
    SequentialInFn = "E0309",
    StageOutsidePipelineBody = "E0310",
    /// Wires, clocks and memories cannot be held in registers.
    UnregistrableType = "E0311",
    PipelineDepthMismatch = "E0401",
    InstDepthMismatch = "E0402",
    UseBeforeReady = "E0403",
    UnknownStageLabel = "E0404",
    StageOutOfRange = "E0405",
    NoVersionAtStage = "E0406",
    /// A pipeline with registers has no clock parameter.
    PipelineWithoutClock = "E0407",
    DoubleConsumption = "E0501",
    NeverConsumed = "E0502",
    ConditionalConsumption = "E0503",
    UnsupportedLinearUse = "E0504",
    CombinationalCycle = "E0601",
    InfiniteType = "E0602",
    MemoryAddressWidth = "E0603",
    MemoryWireValue = "E0604",
    IdentifierCollision = "E0605",
    RecursiveInstance = "E0606",
    NonConstantReset = "E0607",
    ExpressionNotClosed = "E0701",
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub span: SourceSpan,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Note {
    pub span: Option<SourceSpan>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: ErrorCode,
    pub message: String,
    pub primary: Label,
    pub notes: Vec<Note>,
}

impl Diagnostic {
    pub fn error(code: ErrorCode, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            primary: Label {
                span,
                text: String::new(),
            },
            notes: vec![],
        }
    }

    pub fn warning(code: ErrorCode, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message, span)
        }
    }

    pub fn label(mut self, text: impl Into<String>) -> Self {
        self.primary.text = text.into();
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(Note {
            span: None,
            text: text.into(),
        });
        self
    }

    pub fn note_at(mut self, span: SourceSpan, text: impl Into<String>) -> Self {
        self.notes.push(Note {
            span: Some(span),
            text: text.into(),
        });
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Collects diagnostics across a phase.
#[derive(Debug, Default, Clone)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.items.push(d);
    }

    pub fn extend(&mut self, ds: impl IntoIterator<Item = Diagnostic>) {
        self.items.extend(ds);
    }

    pub fn has_errors(&self) -> bool {
        self.items.iter().any(Diagnostic::is_error)
    }

    pub fn error_count(&self) -> usize {
        self.items.iter().filter(|d| d.is_error()).count()
    }

    pub fn into_vec(self) -> Vec<Diagnostic> {
        self.items
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
    fn severity(&self, sev: Severity, text: &str) -> String {
        match sev {
            Severity::Error => self.paint("1;31", text),
            Severity::Warning => self.paint("1;33", text),
            Severity::Note => self.paint("1;36", text),
        }
    }
    fn gutter(&self, text: &str) -> String {
        self.paint("1;34", text)
    }
}

struct Excerpt<'a> {
    file: &'a str,
    lc: LineCol,
    line_text: &'a str,
    /// Column range (0-based, in chars) of the underline within `line_text`.
    underline: (usize, usize),
}

fn excerpt<'a>(sources: &'a SourceFiles, span: SourceSpan) -> Option<Excerpt<'a>> {
    let file = sources.get(span.file)?;
    let lc = span_to_line_col(&file.content, span).ok()?;
    let line_text = file.content.lines().nth(lc.line_start - 1).unwrap_or("");
    let line_len = line_text.chars().count();
    let start = lc.col_start - 1;
    let end = if lc.line_end == lc.line_start {
        lc.col_end - 1
    } else {
        line_len
    };
    let end = end.max(start + 1);
    Some(Excerpt {
        file: &file.name,
        lc,
        line_text,
        underline: (start, end),
    })
}

fn render_excerpt(
    out: &mut String,
    style: &Style,
    ex: &Excerpt<'_>,
    marker: char,
    label: &str,
    label_style: Option<Severity>,
    gutter_width: usize,
) {
    let pad = " ".repeat(gutter_width);
    // The excerpt line is shown without its indentation.
    let indent = ex
        .line_text
        .chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .count()
        .min(ex.underline.0);
    let shown: String = ex.line_text.chars().skip(indent).collect();
    let line_no = format!("{:>width$}", ex.lc.line_start, width = gutter_width);
    out.push_str(&format!(
        "{pad} {} {}:{}:{}\n",
        style.gutter("-->"),
        ex.file,
        ex.lc.line_start,
        ex.lc.col_start
    ));
    out.push_str(&format!("{pad} {}\n", style.gutter("|")));
    out.push_str(&format!(
        "{} {} {}\n",
        style.gutter(&line_no),
        style.gutter("|"),
        shown.trim_end()
    ));
    let lead = " ".repeat(ex.underline.0 - indent);
    let marks: String = std::iter::repeat_n(marker, ex.underline.1 - ex.underline.0).collect();
    let mut tail = marks;
    if !label.is_empty() {
        tail.push(' ');
        tail.push_str(label);
    }
    let tail = match label_style {
        Some(sev) => style.severity(sev, &tail),
        None => style.gutter(&tail),
    };
    out.push_str(&format!("{pad} {} {lead}{tail}\n", style.gutter("|")));
}

/// Human-readable rendering: header, locator, excerpt with underline and
/// label, then `=`-prefixed notes.
pub fn render_human(diag: &Diagnostic, sources: &SourceFiles, color: bool) -> String {
    let style = Style { color };
    let mut out = String::new();
    let head = format!("{}[{}]", diag.severity, diag.code);
    out.push_str(&style.severity(diag.severity, &head));
    out.push_str(&style.paint("1", &format!(": {}", diag.message)));
    out.push('\n');

    let primary = excerpt(sources, diag.primary.span);
    let note_excerpts: Vec<Option<Excerpt<'_>>> = diag
        .notes
        .iter()
        .map(|n| n.span.and_then(|s| excerpt(sources, s)))
        .collect();
    let max_line = primary
        .iter()
        .chain(note_excerpts.iter().flatten())
        .map(|e| e.lc.line_start)
        .max()
        .unwrap_or(1);
    let gutter_width = max_line.to_string().len();
    let pad = " ".repeat(gutter_width);

    if let Some(ex) = &primary {
        render_excerpt(
            &mut out,
            &style,
            ex,
            '^',
            &diag.primary.text,
            Some(diag.severity),
            gutter_width,
        );
    }
    for (note, ex) in diag.notes.iter().zip(&note_excerpts) {
        out.push_str(&format!("{pad} {} {}\n", style.gutter("="), note.text));
        if let Some(ex) = ex {
            render_excerpt(&mut out, &style, ex, '-', "", None, gutter_width);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSpan {
    pub file: String,
    pub byte_start: u32,
    pub byte_end: u32,
    pub line_start: usize,
    pub col_start: usize,
    pub line_end: usize,
    pub col_end: usize,
    pub label: String,
    pub primary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineNote {
    pub message: String,
    pub span: Option<MachineSpan>,
}

/// Schema of one line of machine-readable diagnostic output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineRecord {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub spans: Vec<MachineSpan>,
    pub notes: Vec<MachineNote>,
}

fn machine_span(
    sources: &SourceFiles,
    span: SourceSpan,
    label: &str,
    primary: bool,
) -> Option<MachineSpan> {
    let file = sources.get(span.file)?;
    let lc = span_to_line_col(&file.content, span).ok()?;
    Some(MachineSpan {
        file: file.name.clone(),
        byte_start: span.start,
        byte_end: span.end,
        line_start: lc.line_start,
        col_start: lc.col_start,
        line_end: lc.line_end,
        col_end: lc.col_end,
        label: label.to_string(),
        primary,
    })
}

pub fn to_machine_record(diag: &Diagnostic, sources: &SourceFiles) -> MachineRecord {
    MachineRecord {
        severity: diag.severity,
        code: diag.code.as_str().to_string(),
        message: diag.message.clone(),
        spans: machine_span(sources, diag.primary.span, &diag.primary.text, true)
            .into_iter()
            .collect(),
        notes: diag
            .notes
            .iter()
            .map(|n| MachineNote {
                message: n.text.clone(),
                span: n.span.and_then(|s| machine_span(sources, s, "", false)),
            })
            .collect(),
    }
}

/// One JSON object per line, one line per diagnostic.
pub fn render_machine(diags: &[Diagnostic], sources: &SourceFiles) -> String {
    let mut out = String::new();
    for d in diags {
        let rec = to_machine_record(d, sources);
        out.push_str(&serde_json::to_string(&rec).expect("diagnostic records always serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_machine(text: &str) -> Result<Vec<MachineRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Candidates within a small edit distance of `name`, closest first.
pub fn suggestions<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut scored: Vec<(usize, &str)> = candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .filter(|(d, c)| *d <= 2.max(name.len() / 3) && *c != name)
        .collect();
    scored.sort();
    scored.dedup();
    scored.into_iter().take(3).map(|(_, c)| c.to_string()).collect()
}
