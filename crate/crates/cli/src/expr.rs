//! The small expression languages of model files and queries.
//!
//! Policy conditions:
//!
//! ```text
//! p := true | has CRED | at LOC | is ID | not p | p and p | p or p | ( p )
//! ```
//!
//! State formulas, evaluated against a built model:
//!
//! ```text
//! f := true | false | init | NAME | states[i, ...] | { pred }
//!    | EX f | AX f | EF f | AG f | not f | f and f | f or f | ( f )
//! pred := X at LOC | ID ACTION-enabled at LOC | ID owns DATUM
//! ```
//!
//! `X at LOC` means an actor placed at `LOC` when `X` is an identity and a
//! datum stored there otherwise. `and` binds tighter than `or`; prefix
//! operators bind tightest.

use std::fmt;

use refrisk_core::infra::{Action, Identity, Location, PolicyPredicate};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Open,
    Close,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\'' | ':' | '@')
}

pub fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char)
}

const KEYWORDS: [&str; 14] =
    ["true", "false", "init", "states", "EX", "AX", "EF", "AG", "not", "and", "or", "at", "owns", "has"];

pub fn is_reserved(s: &str) -> bool {
    KEYWORDS.contains(&s) || s == "is"
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, String> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => Tok::Open,
            ')' => Tok::Close,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            c if is_word_char(c) => {
                let mut w = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    w.push(c);
                    chars.next();
                }
                out.push((Tok::Word(w), i + 1));
                continue;
            }
            other => return Err(format!("unexpected character {other:?} at column {}", i + 1)),
        };
        chars.next();
        out.push((tok, i + 1));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, String> {
        Ok(Self { toks: lex(src)?, pos: 0, end: src.len() + 1 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, c)| *c)
    }

    fn fail<T>(&self, what: &str) -> Result<T, String> {
        match self.peek() {
            Some(t) => Err(format!("expected {what} at column {}, found {}", self.column(), show_tok(t))),
            None => Err(format!("expected {what} at end of input")),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.eat(&Tok::Word(w.into()))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), String> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn word(&mut self, what: &str) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.fail(what),
        }
    }

    fn finish(&self) -> Result<(), String> {
        if self.pos < self.toks.len() {
            return self.fail("end of input");
        }
        Ok(())
    }
}

fn show_tok(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("{w:?}"),
        Tok::Open => "'('".into(),
        Tok::Close => "')'".into(),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::Comma => "','".into(),
    }
}

pub fn parse_policy(src: &str) -> Result<PolicyPredicate, String> {
    let mut p = Parser::new(src)?;
    let out = policy_or(&mut p)?;
    p.finish()?;
    Ok(out)
}

fn policy_or(p: &mut Parser) -> Result<PolicyPredicate, String> {
    let mut parts = vec![policy_and(p)?];
    while p.eat_word("or") {
        parts.push(policy_and(p)?);
    }
    Ok(if parts.len() == 1 { parts.remove(0) } else { PolicyPredicate::Or(parts) })
}

fn policy_and(p: &mut Parser) -> Result<PolicyPredicate, String> {
    let mut parts = vec![policy_atom(p)?];
    while p.eat_word("and") {
        parts.push(policy_atom(p)?);
    }
    Ok(if parts.len() == 1 { parts.remove(0) } else { PolicyPredicate::And(parts) })
}

fn policy_atom(p: &mut Parser) -> Result<PolicyPredicate, String> {
    if p.eat(&Tok::Open) {
        let inner = policy_or(p)?;
        p.expect(Tok::Close, "')'")?;
        return Ok(inner);
    }
    if p.eat_word("true") {
        return Ok(PolicyPredicate::True);
    }
    if p.eat_word("not") {
        return Ok(PolicyPredicate::Not(Box::new(policy_atom(p)?)));
    }
    if p.eat_word("has") {
        return Ok(PolicyPredicate::HasCredential(p.word("a credential")?));
    }
    if p.eat_word("at") {
        return Ok(PolicyPredicate::ResidesAt(Location::new(&p.word("a location")?)));
    }
    if p.eat_word("is") {
        return Ok(PolicyPredicate::IdentityIs(Identity::new(&p.word("an identity")?)));
    }
    p.fail("a policy condition (true, has, at, is, not or '(')")
}

/// Predicates written between braces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    At { subject: String, location: String },
    Enabled { actor: String, action: Action, location: String },
    Owns { actor: String, datum: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Temporal {
    EX,
    AX,
    EF,
    AG,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Init,
    Name(String),
    States(Vec<usize>),
    Pred(Pred),
    Temporal(Temporal, Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Set names the formula refers to.
    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            Self::Name(n) => out.push(n.clone()),
            Self::Temporal(_, f) | Self::Not(f) => f.names(out),
            Self::And(a, b) | Self::Or(a, b) => {
                a.names(out);
                b.names(out);
            }
            _ => {}
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, String> {
    let mut p = Parser::new(src)?;
    let out = formula_or(&mut p)?;
    p.finish()?;
    Ok(out)
}

fn formula_or(p: &mut Parser) -> Result<Formula, String> {
    let mut f = formula_and(p)?;
    while p.eat_word("or") {
        f = Formula::Or(Box::new(f), Box::new(formula_and(p)?));
    }
    Ok(f)
}

fn formula_and(p: &mut Parser) -> Result<Formula, String> {
    let mut f = formula_unary(p)?;
    while p.eat_word("and") {
        f = Formula::And(Box::new(f), Box::new(formula_unary(p)?));
    }
    Ok(f)
}

fn formula_unary(p: &mut Parser) -> Result<Formula, String> {
    for (kw, op) in [("EX", Temporal::EX), ("AX", Temporal::AX), ("EF", Temporal::EF), ("AG", Temporal::AG)] {
        if p.eat_word(kw) {
            return Ok(Formula::Temporal(op, Box::new(formula_unary(p)?)));
        }
    }
    if p.eat_word("not") {
        return Ok(Formula::Not(Box::new(formula_unary(p)?)));
    }
    if p.eat(&Tok::Open) {
        let f = formula_or(p)?;
        p.expect(Tok::Close, "')'")?;
        return Ok(f);
    }
    if p.eat(&Tok::LBrace) {
        let pred = predicate(p)?;
        p.expect(Tok::RBrace, "'}'")?;
        return Ok(Formula::Pred(pred));
    }
    if p.eat_word("true") {
        return Ok(Formula::True);
    }
    if p.eat_word("false") {
        return Ok(Formula::False);
    }
    if p.eat_word("init") {
        return Ok(Formula::Init);
    }
    if p.eat_word("states") {
        p.expect(Tok::LBracket, "'['")?;
        let mut ids = Vec::new();
        if !p.eat(&Tok::RBracket) {
            loop {
                let col = p.column();
                let w = p.word("a state index")?;
                ids.push(w.parse().map_err(|_| format!("bad state index {w:?} at column {col}"))?);
                if p.eat(&Tok::RBracket) {
                    break;
                }
                p.expect(Tok::Comma, "',' or ']'")?;
            }
        }
        return Ok(Formula::States(ids));
    }
    match p.peek() {
        Some(Tok::Word(w)) if !is_reserved(w) => Ok(Formula::Name(p.word("a set name")?)),
        _ => p.fail("a formula"),
    }
}

fn predicate(p: &mut Parser) -> Result<Pred, String> {
    let subject = p.word("an identity or datum")?;
    if p.eat_word("at") {
        return Ok(Pred::At { subject, location: p.word("a location")? });
    }
    if p.eat_word("owns") {
        return Ok(Pred::Owns { actor: subject, datum: p.word("a datum")? });
    }
    let col = p.column();
    let verb = p.word("'at', 'owns' or ACTION-enabled")?;
    let action = verb
        .strip_suffix("-enabled")
        .and_then(Action::parse)
        .ok_or_else(|| format!("expected get-, move-, eval- or put-enabled at column {col}, found {verb:?}"))?;
    if !p.eat_word("at") {
        return p.fail("'at'");
    }
    Ok(Pred::Enabled { actor: subject, action, location: p.word("a location")? })
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::At { subject, location } => write!(f, "{{{subject} at {location}}}"),
            Self::Enabled { actor, action, location } => write!(f, "{{{actor} {action}-enabled at {location}}}"),
            Self::Owns { actor, datum } => write!(f, "{{{actor} owns {datum}}}"),
        }
    }
}

fn wrap(f: &Formula) -> String {
    match f {
        Formula::And(..) | Formula::Or(..) => format!("({f})"),
        _ => f.to_string(),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::True => f.write_str("true"),
            Self::False => f.write_str("false"),
            Self::Init => f.write_str("init"),
            Self::Name(n) => f.write_str(n),
            Self::States(ids) => {
                let ids: Vec<String> = ids.iter().map(ToString::to_string).collect();
                write!(f, "states[{}]", ids.join(", "))
            }
            Self::Pred(p) => write!(f, "{p}"),
            Self::Temporal(op, g) => write!(f, "{op:?} {}", wrap(g)),
            Self::Not(g) => write!(f, "not {}", wrap(g)),
            Self::And(a, b) => write!(f, "{} and {}", wrap_or(a), wrap_or(b)),
            Self::Or(a, b) => write!(f, "{a} or {b}"),
        }
    }
}

fn wrap_or(f: &Formula) -> String {
    match f {
        Formula::Or(..) => format!("({f})"),
        _ => f.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies() {
        assert_eq!(parse_policy("true").unwrap(), PolicyPredicate::True);
        assert_eq!(
            parse_policy("at hospital and has skey").unwrap(),
            PolicyPredicate::And(vec![
                PolicyPredicate::ResidesAt("hospital".into()),
                PolicyPredicate::HasCredential("skey".into())
            ])
        );
        assert_eq!(
            parse_policy("not (is Eve or has PIN)").unwrap(),
            PolicyPredicate::Not(Box::new(PolicyPredicate::Or(vec![
                PolicyPredicate::IdentityIs("Eve".into()),
                PolicyPredicate::HasCredential("PIN".into())
            ])))
        );
        assert!(parse_policy("has").is_err());
        assert!(parse_policy("true true").is_err());
    }

    #[test]
    fn formulas() {
        let f = parse_formula("EF {Eve eval-enabled at cloud}").unwrap();
        assert_eq!(
            f,
            Formula::Temporal(
                Temporal::EF,
                Box::new(Formula::Pred(Pred::Enabled {
                    actor: "Eve".into(),
                    action: Action::Eval,
                    location: "cloud".into()
                }))
            )
        );
        assert_eq!(f.to_string(), "EF {Eve eval-enabled at cloud}");
        let g = parse_formula("AG (not {42 at cloud} or HC) and states[0, 2]").unwrap();
        assert_eq!(g.to_string(), "AG (not {42 at cloud} or HC) and states[0, 2]");
        assert_eq!(parse_formula(&g.to_string()).unwrap(), g);
        let mut names = Vec::new();
        g.names(&mut names);
        assert_eq!(names, ["HC"]);
    }

    #[test]
    fn formula_errors() {
        assert_eq!(parse_formula("EF").unwrap_err(), "expected a formula at end of input");
        assert!(parse_formula("{Eve flies at cloud}").unwrap_err().contains("column 6"));
        assert!(parse_formula("a and").is_err());
        assert!(parse_formula("states[x]").is_err());
        assert!(parse_formula("a $ b").unwrap_err().contains("column 3"));
    }
}
