//! Diagnostics reported by parsing, validation, and totality checks.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    SyntaxError,
    DuplicateName,
    DanglingReference,
    MissingMain,
    ExitHasSuccessor,
    ReturnNotAtExit,
    DeadEndPoint,
    UnknownVariable,
    TypeError,
    PrimedInProgram,
    MisplacedOld,
    MisplacedAny,
    EmptyDomain,
    ValueOutOfDomain,
    NonTotalNode,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    /// Offending entity, e.g. `steering/b3/s2`.
    pub path: String,
    pub pos: Option<Position>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            path: path.into(),
            pos: None,
        }
    }

    pub fn at(mut self, line: usize, col: usize) -> Self {
        self.pos = Some(Position { line, col });
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.pos {
            write!(f, "{}:{}: ", p.line, p.col)?;
        }
        write!(f, "[{}]", self.code)?;
        if !self.path.is_empty() {
            write!(f, " {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}
