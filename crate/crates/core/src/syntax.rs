//! Line lexer and expression parser for the `.apg` format.

use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::value::{Domain, Value};

/// Words that can never name a variable, block, or procedure.
pub const RESERVED: &[&str] = &[
    "contract", "requires", "ensures", "assigns", "when", "skip", "return", "jump", "call", "old",
    "any", "true", "false", "int", "bool",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Prime,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Arrow,
    DotDot,
    Op(BinaryOp),
    Bang,
    Minus,
    Equals,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Prime => "`'`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::Bang => "`!`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Equals => "`=`".into(),
        }
    }
}

/// A token with its 1-based column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    fn new(col: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            col,
            message: message.into(),
        }
    }
}

/// Tokenizes one line. Everything after `#` is a comment.
pub fn lex_line(line: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<i64>()
                .map_err(|_| SyntaxError::new(col, format!("integer literal `{text}` out of range")))?;
            out.push(Spanned {
                tok: Tok::Int(v),
                col,
            });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            (':', Some('=')) => (Tok::Assign, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('.', Some('.')) => (Tok::DotDot, 2),
            ('=', Some('=')) => (Tok::Op(BinaryOp::Eq), 2),
            ('=', Some('>')) => (Tok::Op(BinaryOp::Implies), 2),
            ('!', Some('=')) => (Tok::Op(BinaryOp::Ne), 2),
            ('<', Some('=')) => (Tok::Op(BinaryOp::Le), 2),
            ('>', Some('=')) => (Tok::Op(BinaryOp::Ge), 2),
            ('&', Some('&')) => (Tok::Op(BinaryOp::And), 2),
            ('|', Some('|')) => (Tok::Op(BinaryOp::Or), 2),
            ('<', _) => (Tok::Op(BinaryOp::Lt), 1),
            ('>', _) => (Tok::Op(BinaryOp::Gt), 1),
            ('+', _) => (Tok::Op(BinaryOp::Add), 1),
            ('*', _) => (Tok::Op(BinaryOp::Mul), 1),
            ('/', _) => (Tok::Op(BinaryOp::Div), 1),
            ('%', _) => (Tok::Op(BinaryOp::Mod), 1),
            ('-', _) => (Tok::Minus, 1),
            ('!', _) => (Tok::Bang, 1),
            ('=', _) => (Tok::Equals, 1),
            ('\'', _) => (Tok::Prime, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            _ => return Err(SyntaxError::new(col, format!("unexpected character `{c}`"))),
        };
        out.push(Spanned { tok, col });
        i += len;
    }
    Ok(out)
}

/// Cursor over a token line.
pub struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned], line_len: usize) -> Self {
        Cursor {
            toks,
            pos: 0,
            eol_col: line_len + 1,
        }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |s| s.col)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), SyntaxError> {
        let col = self.col();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(SyntaxError::new(
                col,
                format!("expected {} but found {}", want.describe(), t.describe()),
            )),
            None => Err(SyntaxError::new(
                col,
                format!("expected {} at end of line", want.describe()),
            )),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        let col = self.col();
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(SyntaxError::new(col, format!("expected `{kw}`")))
        }
    }

    /// A non-reserved identifier.
    pub fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Ident(s)) if !is_reserved(s) => Ok(s.clone()),
            Some(Tok::Ident(s)) => Err(SyntaxError::new(
                col,
                format!("`{s}` is a reserved word and cannot be used as a {what}"),
            )),
            Some(t) => Err(SyntaxError::new(
                col,
                format!("expected {what} but found {}", t.describe()),
            )),
            None => Err(SyntaxError::new(col, format!("expected {what}"))),
        }
    }

    pub fn finish(&self) -> Result<(), SyntaxError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(s) => Err(SyntaxError::new(
                s.col,
                format!("unexpected {} after end of statement", s.tok.describe()),
            )),
        }
    }

    fn signed_int(&mut self) -> Result<i64, SyntaxError> {
        let col = self.col();
        let neg = matches!(self.peek(), Some(Tok::Minus));
        if neg {
            self.bump();
        }
        match self.bump() {
            Some(Tok::Int(i)) => Ok(if neg { -*i } else { *i }),
            _ => Err(SyntaxError::new(col, "expected integer literal")),
        }
    }

    /// `bool`, `int`, or `int lo..hi`.
    pub fn domain(&mut self) -> Result<Domain, SyntaxError> {
        let col = self.col();
        if self.eat_keyword("bool") {
            return Ok(Domain::Bool);
        }
        if self.eat_keyword("int") {
            if matches!(self.peek(), Some(Tok::Int(_)) | Some(Tok::Minus)) {
                let lo = self.signed_int()?;
                self.expect(&Tok::DotDot)?;
                let hi = self.signed_int()?;
                return Ok(Domain::Range(lo, hi));
            }
            return Ok(Domain::Int);
        }
        Err(SyntaxError::new(col, "expected domain (`bool`, `int`, or `int lo..hi`)"))
    }

    pub fn value(&mut self) -> Result<Value, SyntaxError> {
        if self.eat_keyword("true") {
            return Ok(Value::Bool(true));
        }
        if self.eat_keyword("false") {
            return Ok(Value::Bool(false));
        }
        self.signed_int().map(Value::Int)
    }

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.expr_bp(0)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        match self.peek()? {
            Tok::Op(op) => Some(*op),
            Tok::Minus => Some(BinaryOp::Sub),
            _ => None,
        }
    }

    fn expr_bp(&mut self, min: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.bump();
            let next_min = if op.right_assoc() { p } else { p + 1 };
            let rhs = self.expr_bp(next_min)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)))
            }
            Some(Tok::Minus) => {
                self.bump();
                if let Some(Tok::Int(i)) = self.peek() {
                    let i = *i;
                    self.bump();
                    return Ok(Expr::Int(-i));
                }
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Int(i)) => Ok(Expr::Int(*i)),
            Some(Tok::LParen) => {
                let e = self.expr_bp(0)?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "old" => {
                    self.expect(&Tok::LParen)?;
                    let name = self.ident("variable")?;
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::Old(name))
                }
                "any" => {
                    self.expect(&Tok::LParen)?;
                    let d = self.domain()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::Any(d))
                }
                w if is_reserved(w) => Err(SyntaxError::new(
                    col,
                    format!("expected expression but found keyword `{w}`"),
                )),
                name => {
                    let primed = matches!(self.peek(), Some(Tok::Prime));
                    if primed {
                        self.bump();
                    }
                    Ok(Expr::Var {
                        name: name.to_string(),
                        primed,
                    })
                }
            },
            Some(t) => Err(SyntaxError::new(
                col,
                format!("expected expression but found {}", t.describe()),
            )),
            None => Err(SyntaxError::new(col, "expected expression at end of line")),
        }
    }
}

/// Parses a standalone expression (the whole string must be consumed).
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let toks = lex_line(text)?;
    let mut cur = Cursor::new(&toks, text.chars().count());
    let e = cur.expr()?;
    cur.finish()?;
    Ok(e)
}
