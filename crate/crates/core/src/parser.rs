//! Surface syntax for terms and `.nmdekl` theory files, and the matching
//! pretty-printer.
//!
//! ```text
//! axiom s0 : State
//! def t1 : FinTrace := step(nil(s0), a, s1)
//! check restrict(ext_id t1, k) : K_f(t1)
//! checkeq restrict(ext_id t1, k) = k
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Hint, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Unbalanced,
    UnknownKeyword,
    Unexpected,
    DuplicateName,
    ForwardReference,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Unbalanced => "unbalanced delimiters",
            ParseErrorKind::UnknownKeyword => "unknown keyword",
            ParseErrorKind::Unexpected => "unexpected token",
            ParseErrorKind::DuplicateName => "duplicate name",
            ParseErrorKind::ForwardReference => "forward reference",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub message: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    ColonEq,
    Eq,
    FatArrow,
    Arrow,
    Dot,
    AndOp,
    OrOp,
    Not,
    Lambda,
    PiSym,
    MuSym,
    NuSym,
    DiaSym,
    BoxSym,
    ForallSym,
    ExistsSym,
    TopSym,
    BotSym,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::ColonEq => "`:=`",
            Tok::Eq => "`=`",
            Tok::FatArrow => "`=>`",
            Tok::Arrow => "`->`",
            Tok::Dot => "`.`",
            Tok::AndOp => "`/\\`",
            Tok::OrOp => "`\\/`",
            Tok::Not => "`~`",
            Tok::Lambda => "`λ`",
            Tok::PiSym => "`Π`",
            Tok::MuSym => "`μ`",
            Tok::NuSym => "`ν`",
            Tok::DiaSym => "`◇`",
            Tok::BoxSym => "`□`",
            Tok::ForallSym => "`∀`",
            Tok::ExistsSym => "`∃`",
            Tok::TopSym => "`⊤`",
            Tok::BotSym => "`⊥`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    (c.is_alphabetic() || c == '_') && !matches!(c, 'λ' | 'Π' | 'μ' | 'ν')
}

fn is_ident_continue(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || c == '\''
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut last = Pos { line: 1, col: 1 };
    let mut i = 0;
    let err = |kind, pos: Pos, message: String| ParseError {
        kind,
        line: pos.line,
        col: pos.col,
        expected: Vec::new(),
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            last = pos;
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        last = pos;
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        let next = chars.get(i + 1).copied();
        if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
                col += 1;
            }
            last = Pos { line, col: col - 1 };
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
            });
            continue;
        }
        let (tok, n) = match (c, next) {
            (':', Some('=')) => (Tok::ColonEq, 2),
            ('=', Some('>')) => (Tok::FatArrow, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('/', Some('\\')) => (Tok::AndOp, 2),
            ('\\', Some('/')) => (Tok::OrOp, 2),
            ('\\', Some(n)) if n.is_alphabetic() => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_alphanumeric() {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                return Err(err(
                    ParseErrorKind::UnknownKeyword,
                    pos,
                    format!("unknown keyword `{word}`"),
                ));
            }
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            ('=', _) => (Tok::Eq, 1),
            ('.', _) => (Tok::Dot, 1),
            ('~', _) | ('!', _) | ('¬', _) => (Tok::Not, 1),
            ('→', _) => (Tok::Arrow, 1),
            ('∧', _) => (Tok::AndOp, 1),
            ('∨', _) => (Tok::OrOp, 1),
            ('λ', _) => (Tok::Lambda, 1),
            ('Π', _) => (Tok::PiSym, 1),
            ('μ', _) => (Tok::MuSym, 1),
            ('ν', _) => (Tok::NuSym, 1),
            ('◇', _) => (Tok::DiaSym, 1),
            ('□', _) => (Tok::BoxSym, 1),
            ('∀', _) => (Tok::ForallSym, 1),
            ('∃', _) => (Tok::ExistsSym, 1),
            ('⊤', _) => (Tok::TopSym, 1),
            ('⊥', _) => (Tok::BotSym, 1),
            ('⇒', _) => (Tok::FatArrow, 1),
            _ => {
                return Err(err(
                    ParseErrorKind::Lexical,
                    pos,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        if n == 2 {
            last = Pos { line, col: col + 1 };
        }
        out.push(Token { tok, pos });
        advance(n, &mut i, &mut col);
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: last,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

const DECL_KEYWORDS: &[&str] = &["axiom", "def", "check", "checkeq"];

/// Identifiers with dedicated syntax; they cannot be used as names.
pub const RESERVED: &[&str] = &[
    "axiom",
    "def",
    "check",
    "checkeq",
    "fun",
    "forall",
    "exists",
    "mu",
    "nu",
    "cofix",
    "dia",
    "box",
    "restrict",
    "ext_id",
    "ext_comp",
    "ext_steps",
    "Ext_f",
    "K_f",
    "K_inf",
    "nil",
    "step",
    "head",
    "tail",
    "cons",
    "Step",
    "Id",
    "refl",
    "J",
    "fold",
    "unfold",
    "nu_in",
    "nu_out",
    "absurd",
    "top",
    "bot",
    "triv",
    "State",
    "Event",
    "Nat",
    "FinTrace",
    "InfTrace",
    "Prop",
];

fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name) || parse_sort_name(name).is_some()
}

fn parse_sort_name(name: &str) -> Option<Sort> {
    let level = |rest: &str| {
        (!rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
            .then(|| rest.parse::<u32>().ok())
            .flatten()
    };
    if name == "Prop" {
        Some(Sort::Prop)
    } else if let Some(rest) = name.strip_prefix("Uc") {
        level(rest).map(Sort::Uc)
    } else if let Some(rest) = name.strip_prefix("TypeL") {
        level(rest).map(Sort::TypeL)
    } else {
        None
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinderKind {
    Var,
    PVar,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
    scope: Vec<(String, BinderKind)>,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            at: 0,
            scope: Vec::new(),
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub(crate) fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn error(
        &self,
        kind: ParseErrorKind,
        expected: &[&str],
        message: String,
    ) -> ParseError {
        let pos = self.pos();
        ParseError {
            kind,
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message,
        }
    }

    pub(crate) fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().clone();
        let kind = match found {
            Tok::Eof if expected.contains(&"`)`") || expected.contains(&"`]`") => {
                ParseErrorKind::Unbalanced
            }
            Tok::RParen | Tok::RBrack => ParseErrorKind::Unbalanced,
            _ => ParseErrorKind::Unexpected,
        };
        self.error(
            kind,
            expected,
            format!("found {found}, expected {}", expected.join(" or ")),
        )
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn lookup(&self, name: &str) -> Option<Term> {
        let (mut vars, mut pvars) = (0, 0);
        for (n, kind) in self.scope.iter().rev() {
            if n == name {
                return Some(match kind {
                    BinderKind::Var => Term::Var(vars),
                    BinderKind::PVar => Term::PropVar(pvars),
                });
            }
            match kind {
                BinderKind::Var => vars += 1,
                BinderKind::PVar => pvars += 1,
            }
        }
        None
    }

    fn at_decl_keyword(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if DECL_KEYWORDS.contains(&s.as_str()))
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Lambda => {
                self.bump();
                self.fun_rest()
            }
            Tok::Ident(s) if s == "fun" => {
                self.bump();
                self.fun_rest()
            }
            Tok::ForallSym => {
                self.bump();
                self.quantifier_rest(true)
            }
            Tok::Ident(s) if s == "forall" => {
                self.bump();
                self.quantifier_rest(true)
            }
            Tok::ExistsSym => {
                self.bump();
                self.quantifier_rest(false)
            }
            Tok::Ident(s) if s == "exists" => {
                self.bump();
                self.quantifier_rest(false)
            }
            Tok::PiSym => {
                self.bump();
                let binders = self.binder_groups()?;
                self.expect(Tok::Comma)?;
                self.close_binders(binders, Term::Pi)
            }
            Tok::MuSym => {
                self.bump();
                self.fixpoint_rest(true)
            }
            Tok::NuSym => {
                self.bump();
                self.fixpoint_rest(false)
            }
            Tok::Ident(s) if s == "mu" => {
                self.bump();
                self.fixpoint_rest(true)
            }
            Tok::Ident(s) if s == "nu" => {
                self.bump();
                self.fixpoint_rest(false)
            }
            Tok::Ident(s) if s == "cofix" => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Dot)?;
                self.scope.push((name.clone(), BinderKind::Var));
                let body = self.term();
                self.scope.pop();
                Ok(Term::Cofix(Hint::new(name), Box::new(body?)))
            }
            _ => self.arrow(),
        }
    }

    fn fun_rest(&mut self) -> Result<Term, ParseError> {
        let binders = self.binder_groups()?;
        self.expect(Tok::FatArrow)?;
        self.close_binders(binders, Term::Lam)
    }

    fn quantifier_rest(&mut self, forall: bool) -> Result<Term, ParseError> {
        let binders = self.binder_groups()?;
        self.expect(Tok::Comma)?;
        if forall {
            self.close_binders(binders, Term::Forall)
        } else {
            self.close_binders(binders, Term::Exists)
        }
    }

    fn fixpoint_rest(&mut self, least: bool) -> Result<Term, ParseError> {
        let name = self.ident()?;
        self.expect(Tok::Dot)?;
        self.scope.push((name.clone(), BinderKind::PVar));
        let body = self.term();
        self.scope.pop();
        let body = Box::new(body?);
        Ok(if least {
            Term::Mu(Hint::new(name), body)
        } else {
            Term::Nu(Hint::new(name), body)
        })
    }

    /// Parses `(x y : A) (z : B) ...`, pushing every name into scope.
    fn binder_groups(&mut self) -> Result<Vec<(String, Term)>, ParseError> {
        let mut out = Vec::new();
        if *self.peek() != Tok::LParen {
            return Err(self.unexpected(&["`(`"]));
        }
        while *self.peek() == Tok::LParen {
            self.bump();
            let mut names = vec![self.ident()?];
            while let Tok::Ident(_) = self.peek() {
                names.push(self.ident()?);
            }
            self.expect(Tok::Colon)?;
            let ty = self.term()?;
            self.expect(Tok::RParen)?;
            for (k, n) in names.into_iter().enumerate() {
                // each later name in the group sees the earlier ones
                let ty = ty.shift(k);
                self.scope.push((n.clone(), BinderKind::Var));
                out.push((n, ty));
            }
        }
        Ok(out)
    }

    fn close_binders(
        &mut self,
        binders: Vec<(String, Term)>,
        mk: impl Fn(Hint, Box<Term>, Box<Term>) -> Term,
    ) -> Result<Term, ParseError> {
        let body = self.term();
        for _ in &binders {
            self.scope.pop();
        }
        let mut body = body?;
        for (name, ty) in binders.into_iter().rev() {
            body = mk(Hint::new(name), Box::new(ty), Box::new(body));
        }
        Ok(body)
    }

    fn starts_pi_group(&self) -> bool {
        if *self.peek() != Tok::LParen {
            return false;
        }
        let mut n = 1;
        while let Tok::Ident(s) = self.peek_at(n) {
            if is_reserved(s) {
                return false;
            }
            n += 1;
        }
        n > 1 && *self.peek_at(n) == Tok::Colon
    }

    fn arrow(&mut self) -> Result<Term, ParseError> {
        if self.starts_pi_group() {
            let binders = self.binder_groups()?;
            if *self.peek() != Tok::Arrow {
                for _ in &binders {
                    self.scope.pop();
                }
                return Err(self.unexpected(&["`->`"]));
            }
            self.bump();
            return self.close_binders(binders, Term::Pi);
        }
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.term()?;
            return Ok(Term::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Term, ParseError> {
        let lhs = self.and()?;
        if *self.peek() == Tok::OrOp {
            self.bump();
            return Ok(Term::or(lhs, self.or()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Term, ParseError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::AndOp {
            self.bump();
            return Ok(Term::and(lhs, self.and()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::DiaSym => {
                self.bump();
                Ok(Term::dia(self.unary()?))
            }
            Tok::BoxSym => {
                self.bump();
                Ok(Term::square(self.unary()?))
            }
            Tok::Not => {
                self.bump();
                Ok(Term::imp(self.unary()?, Term::Bot))
            }
            Tok::Ident(s) if s == "dia" => {
                self.bump();
                Ok(Term::dia(self.unary()?))
            }
            Tok::Ident(s) if s == "box" => {
                self.bump();
                Ok(Term::square(self.unary()?))
            }
            _ => self.app(),
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::TopSym | Tok::BotSym => true,
            Tok::Ident(s) => {
                !DECL_KEYWORDS.contains(&s.as_str())
                    && !matches!(
                        s.as_str(),
                        "fun"
                            | "forall"
                            | "exists"
                            | "mu"
                            | "nu"
                            | "cofix"
                            | "dia"
                            | "box"
                            | "ext_id"
                    )
            }
            _ => false,
        }
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut head = if self.is_keyword("ext_id") {
            self.bump();
            Term::ext_id(self.atom()?)
        } else {
            self.atom()?
        };
        while self.starts_atom() {
            let arg = self.atom()?;
            head = Term::app(head, arg);
        }
        Ok(head)
    }

    fn args(&mut self, n: usize) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.term()?);
            if i + 1 < n {
                self.expect(Tok::Comma)?;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let b = Box::new;
        let tok = self.peek().clone();
        let name = match tok {
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                return Ok(t);
            }
            Tok::TopSym => {
                self.bump();
                return Ok(Term::Top);
            }
            Tok::BotSym => {
                self.bump();
                return Ok(Term::Bot);
            }
            Tok::Ident(s) => s,
            _ => return Err(self.unexpected(&["term"])),
        };
        if DECL_KEYWORDS.contains(&name.as_str()) {
            return Err(self.unexpected(&["term"]));
        }
        self.bump();
        if let Some(sort) = parse_sort_name(&name) {
            return Ok(Term::Sort(sort));
        }
        let one = |p: &mut Self| p.args(1).map(|mut v| b(v.remove(0)));
        let t = match name.as_str() {
            "State" => Term::State,
            "Event" => Term::Event,
            "Nat" => Term::Nat,
            "FinTrace" => Term::FinTrace,
            "InfTrace" => Term::InfTrace,
            "top" => Term::Top,
            "bot" => Term::Bot,
            "triv" => Term::Triv,
            "nil" => Term::Nil(one(self)?),
            "head" => Term::Head(one(self)?),
            "tail" => Term::Tail(one(self)?),
            "K_f" => Term::KF(one(self)?),
            "K_inf" => Term::KInf(one(self)?),
            "refl" => Term::Refl(one(self)?),
            "fold" => Term::Fold(one(self)?),
            "unfold" => Term::Unfold(one(self)?),
            "nu_in" => Term::NuIn(one(self)?),
            "nu_out" => Term::NuOut(one(self)?),
            "Step" | "step" | "cons" | "Id" => {
                let mut v = self.args(3)?.into_iter().map(b);
                let (x, y, z) = (v.next().unwrap(), v.next().unwrap(), v.next().unwrap());
                match name.as_str() {
                    "Step" => Term::Step(x, y, z),
                    "step" => Term::StepTrace(x, y, z),
                    "cons" => Term::Cons(x, y, z),
                    _ => Term::Id(x, y, z),
                }
            }
            "Ext_f" | "ext_comp" | "restrict" | "absurd" => {
                let mut v = self.args(2)?.into_iter().map(b);
                let (x, y) = (v.next().unwrap(), v.next().unwrap());
                match name.as_str() {
                    "Ext_f" => Term::ExtF(x, y),
                    "ext_comp" => Term::ExtComp(x, y),
                    "restrict" => Term::Restrict(x, y),
                    _ => Term::Absurd(x, y),
                }
            }
            "J" => {
                let v: [Term; 5] = self.args(5)?.try_into().expect("five arguments");
                Term::J(Box::new(v))
            }
            "ext_steps" => self.ext_steps_rest()?,
            n if n.ends_with("_at") && n.len() > 3 && *self.peek() == Tok::LParen => {
                let label = n[..n.len() - 3].to_string();
                Term::Atom(label, one(self)?)
            }
            n if is_reserved(n) => {
                return Err(ParseError {
                    kind: ParseErrorKind::Unexpected,
                    line: self.toks[self.at - 1].pos.line,
                    col: self.toks[self.at - 1].pos.col,
                    expected: vec!["term".into()],
                    message: format!("`{n}` cannot start a term here"),
                })
            }
            n => self.lookup(n).unwrap_or_else(|| Term::Const(n.to_string())),
        };
        Ok(t)
    }

    fn ext_steps_rest(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::LParen)?;
        let base = self.term()?;
        self.expect(Tok::Comma)?;
        self.expect(Tok::LBrack)?;
        let mut suffix = Vec::new();
        if *self.peek() != Tok::RBrack {
            loop {
                let e = self.term()?;
                self.expect(Tok::FatArrow)?;
                let s = self.term()?;
                suffix.push((e, s));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrack)?;
        self.expect(Tok::RParen)?;
        Ok(Term::ExtSteps(Box::new(base), suffix))
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected(&["end of input"])),
        }
    }
}

/// Parses a single term. Unbound identifiers become [`Term::Const`].
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Theories

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Declaration {
    Axiom { name: String, ty: Term },
    Definition { name: String, ty: Term, body: Term },
    CheckType { term: Term, ty: Term },
    CheckEq { lhs: Term, rhs: Term },
}

impl Declaration {
    pub fn name(&self) -> Option<&str> {
        match self {
            Declaration::Axiom { name, .. } | Declaration::Definition { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Declaration::Axiom { ty, .. } => vec![ty],
            Declaration::Definition { ty, body, .. } => vec![ty, body],
            Declaration::CheckType { term, ty } => vec![term, ty],
            Declaration::CheckEq { lhs, rhs } => vec![lhs, rhs],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub decl: Declaration,
    pub pos: Pos,
}

impl Located {
    /// A display label: the declared name, or `check@line:col`.
    pub fn label(&self) -> String {
        match &self.decl {
            Declaration::Axiom { name, .. } | Declaration::Definition { name, .. } => name.clone(),
            Declaration::CheckType { .. } => format!("check@{}", self.pos),
            Declaration::CheckEq { .. } => format!("checkeq@{}", self.pos),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theory {
    pub decls: Vec<Located>,
}

impl Theory {
    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }
}

pub fn parse_theory(text: &str) -> Result<Theory, ParseError> {
    let mut p = Parser::new(text)?;
    let mut decls = Vec::new();
    let mut declared: BTreeMap<String, Pos> = BTreeMap::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    while *p.peek() != Tok::Eof {
        let pos = p.pos();
        let kw = match p.peek().clone() {
            Tok::Ident(s) if DECL_KEYWORDS.contains(&s.as_str()) => s,
            Tok::Ident(s) => {
                return Err(p.error(
                    ParseErrorKind::UnknownKeyword,
                    DECL_KEYWORDS,
                    format!("unknown declaration keyword `{s}`"),
                ))
            }
            _ => return Err(p.unexpected(DECL_KEYWORDS)),
        };
        p.bump();
        let decl = match kw.as_str() {
            "axiom" | "def" => {
                let name_pos = p.pos();
                let name = p.ident()?;
                if declared.contains_key(&name) {
                    return Err(ParseError {
                        kind: ParseErrorKind::DuplicateName,
                        line: name_pos.line,
                        col: name_pos.col,
                        expected: Vec::new(),
                        message: format!("`{name}` is already declared"),
                    });
                }
                p.expect(Tok::Colon)?;
                let ty = p.term()?;
                let decl = if kw == "def" {
                    p.expect(Tok::ColonEq)?;
                    let body = p.term()?;
                    Declaration::Definition {
                        name: name.clone(),
                        ty,
                        body,
                    }
                } else {
                    Declaration::Axiom {
                        name: name.clone(),
                        ty,
                    }
                };
                check_references(&decl, &declared, pos, &mut pending);
                declared.insert(name, pos);
                decl
            }
            "check" => {
                let term = p.term()?;
                p.expect(Tok::Colon)?;
                let ty = p.term()?;
                let d = Declaration::CheckType { term, ty };
                check_references(&d, &declared, pos, &mut pending);
                d
            }
            _ => {
                let lhs = p.term()?;
                p.expect(Tok::Eq)?;
                let rhs = p.term()?;
                let d = Declaration::CheckEq { lhs, rhs };
                check_references(&d, &declared, pos, &mut pending);
                d
            }
        };
        if !p.at_decl_keyword() && *p.peek() != Tok::Eof {
            return Err(p.unexpected(&["declaration", "end of input"]));
        }
        decls.push(Located { decl, pos });
    }
    // Names never declared at all are left to the typechecker (`unbound`).
    if let Some((name, pos)) = pending.into_iter().find(|(n, _)| declared.contains_key(n)) {
        let message = format!(
            "`{name}` is used before its declaration at {}",
            declared[&name]
        );
        return Err(ParseError {
            kind: ParseErrorKind::ForwardReference,
            line: pos.line,
            col: pos.col,
            expected: Vec::new(),
            message,
        });
    }
    Ok(Theory { decls })
}

fn check_references(
    decl: &Declaration,
    declared: &BTreeMap<String, Pos>,
    pos: Pos,
    pending: &mut Vec<(String, Pos)>,
) {
    for t in decl.terms() {
        for c in t.constants() {
            if !declared.contains_key(&c) && pending.iter().all(|(n, _)| *n != c) {
                pending.push((c, pos));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty-printer

const LVL_TERM: u8 = 0;
const LVL_OR: u8 = 1;
const LVL_AND: u8 = 2;
const LVL_UNARY: u8 = 3;
const LVL_APP: u8 = 4;
const LVL_ATOM: u8 = 5;

struct Printer {
    scope: Vec<(String, BinderKind)>,
    avoid: HashSet<String>,
}

impl Printer {
    fn fresh(&self, hint: &str, fallback: &str) -> String {
        let base: String = {
            let h = hint.trim_end_matches(|c: char| c.is_ascii_digit());
            let ok = !h.is_empty()
                && h.chars().next().is_some_and(is_ident_start)
                && h.chars().all(is_ident_continue)
                && !h.ends_with("_at")
                && h != "_";
            if ok {
                h.to_string()
            } else {
                fallback.to_string()
            }
        };
        let taken = |n: &str| {
            is_reserved(n)
                || self.avoid.contains(n)
                || self.scope.iter().any(|(s, _)| s == n)
                || DECL_KEYWORDS.contains(&n)
        };
        if hint == base && !taken(&base) {
            return base;
        }
        if !taken(&base) {
            return base;
        }
        (1..)
            .map(|k| format!("{base}{k}"))
            .find(|n| !taken(n))
            .expect("infinite supply of names")
    }

    fn name_of(&self, kind: BinderKind, index: usize) -> Option<&str> {
        self.scope
            .iter()
            .rev()
            .filter(|(_, k)| *k == kind)
            .nth(index)
            .map(|(n, _)| n.as_str())
    }

    fn with<R>(&mut self, name: String, kind: BinderKind, f: impl FnOnce(&mut Self) -> R) -> R {
        self.scope.push((name, kind));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn paren(s: String, own: u8, want: u8) -> String {
        if own < want {
            format!("({s})")
        } else {
            s
        }
    }

    fn print(&mut self, t: &Term, want: u8) -> String {
        use Term::*;
        let (s, own) = match t {
            Var(i) => (
                self.name_of(BinderKind::Var, *i)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("_free{i}")),
                LVL_ATOM,
            ),
            PropVar(i) => (
                self.name_of(BinderKind::PVar, *i)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("_pfree{i}")),
                LVL_ATOM,
            ),
            Const(n) => (n.clone(), LVL_ATOM),
            Sort(s) => (s.to_string(), LVL_ATOM),
            State => ("State".into(), LVL_ATOM),
            Event => ("Event".into(), LVL_ATOM),
            Nat => ("Nat".into(), LVL_ATOM),
            FinTrace => ("FinTrace".into(), LVL_ATOM),
            InfTrace => ("InfTrace".into(), LVL_ATOM),
            Top => ("top".into(), LVL_ATOM),
            Bot => ("bot".into(), LVL_ATOM),
            Triv => ("triv".into(), LVL_ATOM),
            Pi(h, a, b) => {
                let a = self.print(a, LVL_TERM);
                let n = self.fresh(h.as_str(), "x");
                let b = self.with(n.clone(), BinderKind::Var, |p| p.print(b, LVL_TERM));
                (format!("({n} : {a}) -> {b}"), LVL_TERM)
            }
            Lam(h, a, b) => {
                let a = self.print(a, LVL_TERM);
                let n = self.fresh(h.as_str(), "x");
                let b = self.with(n.clone(), BinderKind::Var, |p| p.print(b, LVL_TERM));
                (format!("fun ({n} : {a}) => {b}"), LVL_TERM)
            }
            Forall(h, a, b) | Exists(h, a, b) => {
                let kw = if matches!(t, Forall(..)) {
                    "forall"
                } else {
                    "exists"
                };
                let a = self.print(a, LVL_TERM);
                let n = self.fresh(h.as_str(), "x");
                let b = self.with(n.clone(), BinderKind::Var, |p| p.print(b, LVL_TERM));
                (format!("{kw} ({n} : {a}), {b}"), LVL_TERM)
            }
            Cofix(h, b) => {
                let n = self.fresh(h.as_str(), "f");
                let b = self.with(n.clone(), BinderKind::Var, |p| p.print(b, LVL_TERM));
                (format!("cofix {n}. {b}"), LVL_TERM)
            }
            Mu(h, b) | Nu(h, b) => {
                let kw = if matches!(t, Mu(..)) { "mu" } else { "nu" };
                let n = self.fresh(h.as_str(), "X");
                let b = self.with(n.clone(), BinderKind::PVar, |p| p.print(b, LVL_TERM));
                (format!("{kw} {n}. {b}"), LVL_TERM)
            }
            Imp(a, b) => (
                format!("{} -> {}", self.print(a, LVL_OR), self.print(b, LVL_TERM)),
                LVL_TERM,
            ),
            Or(a, b) => (
                format!("{} \\/ {}", self.print(a, LVL_AND), self.print(b, LVL_OR)),
                LVL_OR,
            ),
            And(a, b) => (
                format!(
                    "{} /\\ {}",
                    self.print(a, LVL_UNARY),
                    self.print(b, LVL_AND)
                ),
                LVL_AND,
            ),
            Diamond(a) => (format!("dia {}", self.print(a, LVL_UNARY)), LVL_UNARY),
            Square(a) => (format!("box {}", self.print(a, LVL_UNARY)), LVL_UNARY),
            App(f, a) => (
                format!("{} {}", self.print(f, LVL_APP), self.print(a, LVL_ATOM)),
                LVL_APP,
            ),
            ExtId(a) => (format!("ext_id {}", self.print(a, LVL_ATOM)), LVL_APP),
            Nil(a) => (self.call("nil", &[a]), LVL_ATOM),
            Head(a) => (self.call("head", &[a]), LVL_ATOM),
            Tail(a) => (self.call("tail", &[a]), LVL_ATOM),
            KF(a) => (self.call("K_f", &[a]), LVL_ATOM),
            KInf(a) => (self.call("K_inf", &[a]), LVL_ATOM),
            Refl(a) => (self.call("refl", &[a]), LVL_ATOM),
            Fold(a) => (self.call("fold", &[a]), LVL_ATOM),
            Unfold(a) => (self.call("unfold", &[a]), LVL_ATOM),
            NuIn(a) => (self.call("nu_in", &[a]), LVL_ATOM),
            NuOut(a) => (self.call("nu_out", &[a]), LVL_ATOM),
            Atom(p, s) => (self.call(&format!("{p}_at"), &[s]), LVL_ATOM),
            Step(a, b, c) => (self.call("Step", &[a, b, c]), LVL_ATOM),
            StepTrace(a, b, c) => (self.call("step", &[a, b, c]), LVL_ATOM),
            Cons(a, b, c) => (self.call("cons", &[a, b, c]), LVL_ATOM),
            Id(a, b, c) => (self.call("Id", &[a, b, c]), LVL_ATOM),
            ExtF(a, b) => (self.call("Ext_f", &[a, b]), LVL_ATOM),
            ExtComp(a, b) => (self.call("ext_comp", &[a, b]), LVL_ATOM),
            Restrict(a, b) => (self.call("restrict", &[a, b]), LVL_ATOM),
            Absurd(a, b) => (self.call("absurd", &[a, b]), LVL_ATOM),
            J(args) => {
                let refs: Vec<&Term> = args.iter().collect();
                (self.call("J", &refs), LVL_ATOM)
            }
            ExtSteps(base, suffix) => {
                let base = self.print(base, LVL_TERM);
                let steps: Vec<String> = suffix
                    .iter()
                    .map(|(e, s)| {
                        format!("{} => {}", self.print(e, LVL_TERM), self.print(s, LVL_TERM))
                    })
                    .collect();
                (
                    format!("ext_steps({base}, [{}])", steps.join(", ")),
                    LVL_ATOM,
                )
            }
        };
        Self::paren(s, own, want)
    }

    fn call(&mut self, name: &str, args: &[&Term]) -> String {
        let args: Vec<String> = args.iter().map(|a| self.print(a, LVL_TERM)).collect();
        format!("{name}({})", args.join(", "))
    }
}

/// Renders a closed term in the surface syntax accepted by [`parse_term`].
pub fn pretty_print(t: &Term) -> String {
    pretty_print_in(&[], t)
}

/// Renders a term whose free variables are named by `names` (innermost last).
pub fn pretty_print_in(names: &[String], t: &Term) -> String {
    let avoid: HashSet<String> = t.constants().into_iter().collect();
    let mut p = Printer {
        scope: names.iter().map(|n| (n.clone(), BinderKind::Var)).collect(),
        avoid,
    };
    p.print(t, LVL_TERM)
}
