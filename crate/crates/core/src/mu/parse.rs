//! Surface syntax shared by the four formula languages.
//!
//! ```text
//! mu X. p \/ dia X                 μ-calculus
//! mu X. p_at(s) \/ dia X(s)        Prop_μ (bare `p` means `p_at(s)`)
//! exists k : K_f(t0). top          Prop_μ evidence quantifier
//! G (p -> F q)  ,  p U q           LTL (on the right of `->` only atoms)
//! AG EF p  ,  E[p U q]             CTL
//! ```

use crate::parser::{ParseError, ParseErrorKind, Parser, Tok};

use super::formula::{MuFormula, PropMuFormula, CURRENT};
use super::temporal::{CtlFormula, LtlFormula};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    Mu,
    PropMu,
    Ltl,
    Ctl,
}

#[derive(Clone, Debug)]
enum Fm {
    True,
    False,
    Name(String),
    AtomAt(String, String),
    VarAt(String, String),
    Not(Box<Fm>),
    And(Box<Fm>, Box<Fm>),
    Or(Box<Fm>, Box<Fm>),
    Imp(Box<Fm>, Box<Fm>),
    Dia(Box<Fm>),
    Box(Box<Fm>),
    Mu(String, Box<Fm>),
    Nu(String, Box<Fm>),
    Op(&'static str, Box<Fm>),
    Until(Box<Fm>, Box<Fm>),
    EU(Box<Fm>, Box<Fm>),
    AU(Box<Fm>, Box<Fm>),
    Evidence {
        exists: bool,
        var: String,
        trace: String,
        body: Box<Fm>,
    },
}

const LTL_OPS: &[&str] = &["X", "F", "G"];
const CTL_OPS: &[&str] = &["EX", "AX", "EF", "AF", "EG", "AG"];

struct FormulaParser {
    p: Parser,
    logic: Logic,
}

fn b(f: Fm) -> Box<Fm> {
    Box::new(f)
}

impl FormulaParser {
    fn name(&mut self) -> Result<String, ParseError> {
        match self.p.peek().clone() {
            Tok::Ident(s) => {
                self.p.bump();
                Ok(s)
            }
            _ => Err(self.p.unexpected(&["identifier"])),
        }
    }

    fn formula(&mut self) -> Result<Fm, ParseError> {
        let tok = self.p.peek().clone();
        match tok {
            Tok::MuSym | Tok::NuSym => {
                self.p.bump();
                self.fixpoint(tok == Tok::MuSym)
            }
            Tok::Ident(s) if s == "mu" || s == "nu" => {
                self.p.bump();
                self.fixpoint(s == "mu")
            }
            Tok::Ident(s) if (s == "exists" || s == "forall") && self.logic == Logic::PropMu => {
                self.p.bump();
                self.evidence(s == "exists")
            }
            Tok::ExistsSym | Tok::ForallSym if self.logic == Logic::PropMu => {
                self.p.bump();
                self.evidence(tok == Tok::ExistsSym)
            }
            _ => self.implication(),
        }
    }

    fn fixpoint(&mut self, least: bool) -> Result<Fm, ParseError> {
        let x = self.name()?;
        self.p.expect(Tok::Dot)?;
        let body = b(self.formula()?);
        Ok(if least {
            Fm::Mu(x, body)
        } else {
            Fm::Nu(x, body)
        })
    }

    fn evidence(&mut self, exists: bool) -> Result<Fm, ParseError> {
        let var = self.name()?;
        self.p.expect(Tok::Colon)?;
        if !self.p.is_keyword("K_f") {
            return Err(self.p.unexpected(&["`K_f`"]));
        }
        self.p.bump();
        self.p.expect(Tok::LParen)?;
        let trace = self.name()?;
        self.p.expect(Tok::RParen)?;
        self.p.expect(Tok::Dot)?;
        let body = b(self.formula()?);
        Ok(Fm::Evidence {
            exists,
            var,
            trace,
            body,
        })
    }

    fn implication(&mut self) -> Result<Fm, ParseError> {
        let lhs = self.until()?;
        if *self.p.peek() == Tok::Arrow {
            self.p.bump();
            return Ok(Fm::Imp(b(lhs), b(self.formula()?)));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Fm, ParseError> {
        let lhs = self.or()?;
        if self.logic == Logic::Ltl && self.p.is_keyword("U") {
            self.p.bump();
            return Ok(Fm::Until(b(lhs), b(self.until()?)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Fm, ParseError> {
        let lhs = self.and()?;
        if *self.p.peek() == Tok::OrOp {
            self.p.bump();
            return Ok(Fm::Or(b(lhs), b(self.or()?)));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Fm, ParseError> {
        let lhs = self.unary()?;
        if *self.p.peek() == Tok::AndOp {
            self.p.bump();
            return Ok(Fm::And(b(lhs), b(self.and()?)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Fm, ParseError> {
        let tok = self.p.peek().clone();
        match tok {
            Tok::DiaSym => {
                self.p.bump();
                Ok(Fm::Dia(b(self.unary()?)))
            }
            Tok::BoxSym => {
                self.p.bump();
                Ok(Fm::Box(b(self.unary()?)))
            }
            Tok::Not => {
                self.p.bump();
                Ok(Fm::Not(b(self.unary()?)))
            }
            Tok::Ident(s) if s == "dia" || s == "box" => {
                self.p.bump();
                let inner = b(self.unary()?);
                Ok(if s == "dia" {
                    Fm::Dia(inner)
                } else {
                    Fm::Box(inner)
                })
            }
            Tok::Ident(s) if self.logic == Logic::Ltl && LTL_OPS.contains(&s.as_str()) => {
                self.p.bump();
                let op = LTL_OPS.iter().find(|o| **o == s).copied().expect("listed");
                Ok(Fm::Op(op, b(self.unary()?)))
            }
            Tok::Ident(s) if self.logic == Logic::Ctl && CTL_OPS.contains(&s.as_str()) => {
                self.p.bump();
                let op = CTL_OPS.iter().find(|o| **o == s).copied().expect("listed");
                Ok(Fm::Op(op, b(self.unary()?)))
            }
            Tok::Ident(s)
                if self.logic == Logic::Ctl
                    && (s == "E" || s == "A")
                    && *self.p.peek_at(1) == Tok::LBrack =>
            {
                self.p.bump();
                self.p.bump();
                let lhs = self.or()?;
                if !self.p.is_keyword("U") {
                    return Err(self.p.unexpected(&["`U`"]));
                }
                self.p.bump();
                let rhs = self.or()?;
                self.p.expect(Tok::RBrack)?;
                Ok(if s == "E" {
                    Fm::EU(b(lhs), b(rhs))
                } else {
                    Fm::AU(b(lhs), b(rhs))
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Fm, ParseError> {
        match self.p.peek().clone() {
            Tok::LParen => {
                self.p.bump();
                let f = self.formula()?;
                self.p.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::TopSym => {
                self.p.bump();
                Ok(Fm::True)
            }
            Tok::BotSym => {
                self.p.bump();
                Ok(Fm::False)
            }
            Tok::Ident(s) => {
                self.p.bump();
                match s.as_str() {
                    "true" | "top" => return Ok(Fm::True),
                    "false" | "bot" => return Ok(Fm::False),
                    _ => {}
                }
                if *self.p.peek() == Tok::LParen {
                    self.p.bump();
                    let state = self.name()?;
                    self.p.expect(Tok::RParen)?;
                    return Ok(match s.strip_suffix("_at") {
                        Some(p) if !p.is_empty() => Fm::AtomAt(p.to_string(), state),
                        _ => Fm::VarAt(s, state),
                    });
                }
                Ok(Fm::Name(s))
            }
            _ => Err(self.p.unexpected(&["formula"])),
        }
    }
}

fn parse_fm(text: &str, logic: Logic) -> Result<Fm, ParseError> {
    let mut fp = FormulaParser {
        p: Parser::new(text)?,
        logic,
    };
    let f = fp.formula()?;
    fp.p.expect_eof()?;
    Ok(f)
}

fn reject(what: &str, logic: &str) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Unexpected,
        line: 1,
        col: 1,
        expected: Vec::new(),
        message: format!("{what} is not part of {logic}"),
    }
}

fn fresh_fix(bound: &[String], used: &mut usize) -> String {
    loop {
        *used += 1;
        let z = format!("Z{used}");
        if !bound.contains(&z) {
            return z;
        }
    }
}

fn to_mu(f: &Fm, bound: &mut Vec<String>, fresh: &mut usize) -> Result<MuFormula, ParseError> {
    let logic = "the μ-calculus";
    Ok(match f {
        Fm::True => {
            let z = fresh_fix(bound, fresh);
            MuFormula::nu(&z, MuFormula::Var(z.clone()))
        }
        Fm::False => {
            let z = fresh_fix(bound, fresh);
            MuFormula::mu(&z, MuFormula::Var(z.clone()))
        }
        Fm::Name(x) if bound.contains(x) => MuFormula::Var(x.clone()),
        Fm::Name(p) => MuFormula::Atom(p.clone()),
        Fm::Not(inner) => match &**inner {
            Fm::Name(p) if !bound.contains(p) => MuFormula::NegAtom(p.clone()),
            _ => return Err(reject("negation of a non-atom", logic)),
        },
        Fm::And(a, c) => MuFormula::and(to_mu(a, bound, fresh)?, to_mu(c, bound, fresh)?),
        Fm::Or(a, c) => MuFormula::or(to_mu(a, bound, fresh)?, to_mu(c, bound, fresh)?),
        Fm::Dia(a) => MuFormula::dia(to_mu(a, bound, fresh)?),
        Fm::Box(a) => MuFormula::boxed(to_mu(a, bound, fresh)?),
        Fm::Mu(x, a) | Fm::Nu(x, a) => {
            bound.push(x.clone());
            let body = to_mu(a, bound, fresh);
            bound.pop();
            if matches!(f, Fm::Mu(..)) {
                MuFormula::Mu(x.clone(), Box::new(body?))
            } else {
                MuFormula::Nu(x.clone(), Box::new(body?))
            }
        }
        Fm::Imp(..) => return Err(reject("implication", logic)),
        Fm::AtomAt(..) | Fm::VarAt(..) => return Err(reject("a state-indexed atom", logic)),
        Fm::Evidence { .. } => return Err(reject("an evidence quantifier", logic)),
        Fm::Op(op, _) => return Err(reject(&format!("`{op}`"), logic)),
        Fm::Until(..) | Fm::EU(..) | Fm::AU(..) => return Err(reject("until", logic)),
    })
}

fn to_propmu(f: &Fm, bound: &mut Vec<String>) -> Result<PropMuFormula, ParseError> {
    use PropMuFormula as P;
    let logic = "Prop_μ";
    let bx = Box::new;
    Ok(match f {
        Fm::True => P::Top,
        Fm::False => P::Bot,
        Fm::Name(x) if bound.contains(x) => P::VarAt(x.clone(), CURRENT.into()),
        Fm::Name(p) => P::AtomAt(p.clone(), CURRENT.into()),
        Fm::AtomAt(p, s) => P::AtomAt(p.clone(), s.clone()),
        Fm::VarAt(x, s) if bound.contains(x) => P::VarAt(x.clone(), s.clone()),
        Fm::VarAt(x, _) => {
            return Err(reject(
                &format!("`{x}(..)` with `{x}` not bound by mu/nu"),
                logic,
            ))
        }
        Fm::Not(inner) => match &**inner {
            Fm::Name(p) if !bound.contains(p) => P::NegAtomAt(p.clone(), CURRENT.into()),
            Fm::AtomAt(p, s) => P::NegAtomAt(p.clone(), s.clone()),
            other => P::Imp(bx(to_propmu(other, bound)?), bx(P::Bot)),
        },
        Fm::And(a, c) => P::And(bx(to_propmu(a, bound)?), bx(to_propmu(c, bound)?)),
        Fm::Or(a, c) => P::Or(bx(to_propmu(a, bound)?), bx(to_propmu(c, bound)?)),
        Fm::Imp(a, c) => P::Imp(bx(to_propmu(a, bound)?), bx(to_propmu(c, bound)?)),
        Fm::Dia(a) => P::DiaP(bx(to_propmu(a, bound)?)),
        Fm::Box(a) => P::BoxP(bx(to_propmu(a, bound)?)),
        Fm::Mu(x, a) | Fm::Nu(x, a) => {
            bound.push(x.clone());
            let body = to_propmu(a, bound);
            bound.pop();
            if matches!(f, Fm::Mu(..)) {
                P::MuP(x.clone(), bx(body?))
            } else {
                P::NuP(x.clone(), bx(body?))
            }
        }
        Fm::Evidence {
            exists,
            var,
            trace,
            body,
        } => {
            let body = bx(to_propmu(body, bound)?);
            let (var, trace) = (var.clone(), trace.clone());
            if *exists {
                P::EvidenceExists { var, trace, body }
            } else {
                P::EvidenceForall { var, trace, body }
            }
        }
        Fm::Op(op, _) => return Err(reject(&format!("`{op}`"), logic)),
        Fm::Until(..) | Fm::EU(..) | Fm::AU(..) => return Err(reject("until", logic)),
    })
}

fn to_ltl(f: &Fm) -> Result<LtlFormula, ParseError> {
    use LtlFormula as L;
    let logic = "LTL";
    let bx = Box::new;
    Ok(match f {
        Fm::True => L::True,
        Fm::False => L::False,
        Fm::Name(p) => L::Atom(p.clone()),
        Fm::Not(inner) => match &**inner {
            Fm::Name(p) => L::NotAtom(p.clone()),
            _ => return Err(reject("negation of a non-atom", logic)),
        },
        Fm::And(a, c) => L::And(bx(to_ltl(a)?), bx(to_ltl(c)?)),
        Fm::Or(a, c) => L::Or(bx(to_ltl(a)?), bx(to_ltl(c)?)),
        Fm::Op("X", a) => L::Next(bx(to_ltl(a)?)),
        Fm::Op("F", a) => L::Finally(bx(to_ltl(a)?)),
        Fm::Op("G", a) => L::Globally(bx(to_ltl(a)?)),
        Fm::Until(a, c) => L::Until(bx(to_ltl(a)?), bx(to_ltl(c)?)),
        Fm::Op(op, _) => return Err(reject(&format!("`{op}`"), logic)),
        Fm::Imp(..) => return Err(reject("implication", logic)),
        Fm::Dia(_) | Fm::Box(_) => return Err(reject("a modality", logic)),
        Fm::Mu(..) | Fm::Nu(..) => return Err(reject("a fixpoint", logic)),
        Fm::AtomAt(..) | Fm::VarAt(..) => return Err(reject("a state-indexed atom", logic)),
        Fm::Evidence { .. } => return Err(reject("an evidence quantifier", logic)),
        Fm::EU(..) | Fm::AU(..) => return Err(reject("a path quantifier", logic)),
    })
}

fn to_ctl(f: &Fm) -> Result<CtlFormula, ParseError> {
    use CtlFormula as C;
    let logic = "CTL";
    let bx = Box::new;
    Ok(match f {
        Fm::True => C::True,
        Fm::False => C::False,
        Fm::Name(p) => C::Atom(p.clone()),
        Fm::Not(inner) => match &**inner {
            Fm::Name(p) => C::NotAtom(p.clone()),
            _ => return Err(reject("negation of a non-atom", logic)),
        },
        Fm::And(a, c) => C::And(bx(to_ctl(a)?), bx(to_ctl(c)?)),
        Fm::Or(a, c) => C::Or(bx(to_ctl(a)?), bx(to_ctl(c)?)),
        Fm::Op(op, a) => {
            let a = bx(to_ctl(a)?);
            match *op {
                "EX" => C::EX(a),
                "AX" => C::AX(a),
                "EF" => C::EF(a),
                "AF" => C::AF(a),
                "EG" => C::EG(a),
                "AG" => C::AG(a),
                _ => return Err(reject(&format!("`{op}`"), logic)),
            }
        }
        Fm::EU(a, c) => C::EU(bx(to_ctl(a)?), bx(to_ctl(c)?)),
        Fm::AU(a, c) => C::AU(bx(to_ctl(a)?), bx(to_ctl(c)?)),
        Fm::Imp(..) => return Err(reject("implication", logic)),
        Fm::Dia(_) | Fm::Box(_) => return Err(reject("a modality", logic)),
        Fm::Mu(..) | Fm::Nu(..) => return Err(reject("a fixpoint", logic)),
        Fm::AtomAt(..) | Fm::VarAt(..) => return Err(reject("a state-indexed atom", logic)),
        Fm::Evidence { .. } => return Err(reject("an evidence quantifier", logic)),
        Fm::Until(..) => return Err(reject("a bare until", logic)),
    })
}

pub fn parse_mu(text: &str) -> Result<MuFormula, ParseError> {
    to_mu(&parse_fm(text, Logic::Mu)?, &mut Vec::new(), &mut 0)
}

pub fn parse_propmu(text: &str) -> Result<PropMuFormula, ParseError> {
    to_propmu(&parse_fm(text, Logic::PropMu)?, &mut Vec::new())
}

pub fn parse_ltl(text: &str) -> Result<LtlFormula, ParseError> {
    to_ltl(&parse_fm(text, Logic::Ltl)?)
}

pub fn parse_ctl(text: &str) -> Result<CtlFormula, ParseError> {
    to_ctl(&parse_fm(text, Logic::Ctl)?)
}
