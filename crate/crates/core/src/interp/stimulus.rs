//! Stimulus files: one `cycle port expr` assignment per line.
//!
//! `expr` is everything after the port name and goes through the
//! expression evaluator, typed by the port's declared type. An assigned
//! value holds until the same port is assigned again; inputs that are never
//! assigned stay X. Blank lines and lines starting with `#` or `//` are
//! ignored.

use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::interp::eval::Evaluator;
use crate::interp::{Design, Schedule, SimError};
use crate::resolver::HirType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub line: usize,
    pub cycle: u64,
    pub port: String,
    pub expr: String,
}

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("stimulus line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("stimulus line {line}: {source}")]
    Sim { line: usize, source: SimError },
    #[error("stimulus line {line}: expression `{expr}` is invalid")]
    Eval {
        line: usize,
        expr: String,
        diagnostics: Vec<Diagnostic>,
    },
}

pub fn parse(text: &str) -> Result<Vec<Assignment>, StimulusError> {
    let mut out = vec![];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with("//") {
            continue;
        }
        let mut parts = l.splitn(3, char::is_whitespace);
        let (Some(cycle), Some(port), Some(expr)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(StimulusError::Syntax {
                line,
                message: "expected `cycle port expr`".into(),
            });
        };
        let cycle = cycle.parse().map_err(|_| StimulusError::Syntax {
            line,
            message: format!("`{cycle}` is not a cycle number"),
        })?;
        out.push(Assignment {
            line,
            cycle,
            port: port.to_string(),
            expr: expr.trim().to_string(),
        });
    }
    Ok(out)
}

/// Evaluates every assignment. `port_types` gives the declared type of top
/// ports that correspond to a whole parameter.
pub fn schedule(
    assignments: &[Assignment],
    design: &Design,
    port_types: &[(String, HirType)],
    ev: &mut Evaluator,
) -> Result<Schedule, StimulusError> {
    let mut out = vec![];
    for a in assignments {
        let i = design
            .input_index(&a.port)
            .map_err(|source| StimulusError::Sim { line: a.line, source })?;
        let expected = port_types.iter().find(|(n, _)| *n == a.port).map(|(_, t)| t);
        let v = ev.eval(&a.expr, expected).map_err(|diagnostics| StimulusError::Eval {
            line: a.line,
            expr: a.expr.clone(),
            diagnostics,
        })?;
        let width = design.signals[i].width;
        if v.bits.width() != width {
            return Err(StimulusError::Sim {
                line: a.line,
                source: SimError::WidthMismatch {
                    port: a.port.clone(),
                    expected: width,
                    found: v.bits.width(),
                },
            });
        }
        out.push((a.cycle, a.port.clone(), v.bits));
    }
    Ok(out)
}
