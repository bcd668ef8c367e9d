//! The textual EET language.
//!
//! ```text
//! domain Period = { p1, p2 }
//! component Customer, ReservationBranch
//! msg request(f: Period, t: Period)
//! eet Ask {
//!   Customer -> ReservationBranch : request(f, t)
//!   where f != t
//! }
//! ```
//!
//! A block body is a sequence of steps: message arrows, `choice { .. | .. }`,
//! `loop m..n { .. }` (`*` for an unbounded maximum), `par { .. | .. }`,
//! `ref Name`, and `where` clauses that guard the enclosing block. A message
//! argument is a constant when it names a value of the parameter's domain,
//! and a formal parameter otherwise. `#` comments run to the end of a line.
//!
//! Parsing collects every error it can find; a [`Document`] is returned only
//! when there are none.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{
    Atom, CmpOp, Document, EetExpr, Interaction, MessageNode, MessageSig, ModelError, ParamDecl,
    Predicate, Term, Trace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownName,
    DuplicateName,
    ArityMismatch,
    DomainMismatch,
    CyclicRef,
    EmptyChoice,
    BadLoopBounds,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub detail: String,
}

impl ParseError {
    fn new(pos: Pos, kind: ParseErrorKind, detail: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            column: pos.col,
            kind,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.kind, self.detail)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Pipe,
    Assign,
    EqEq,
    NotEq,
    AndAnd,
    Arrow,
    DotDot,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Assign => f.write_str("`=`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::NotEq => f.write_str("`!=`"),
            Tok::AndAnd => f.write_str("`&&`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DotDot => f.write_str("`..`"),
            Tok::Star => f.write_str("`*`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

const TOP_KEYWORDS: [&str; 4] = ["domain", "component", "msg", "eet"];
const KEYWORDS: [&str; 9] = [
    "domain", "component", "msg", "eet", "choice", "loop", "par", "ref", "where",
];

fn lex(source: &str, errors: &mut Vec<ParseError>) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let two = (c, chars.get(i + 1).copied());
        let mut width = 1;
        let tok = match two {
            ('\n', _) => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            (c, _) if c.is_whitespace() => None,
            ('#', _) => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            ('-', Some('>')) => Some(Tok::Arrow),
            ('.', Some('.')) => Some(Tok::DotDot),
            ('=', Some('=')) => Some(Tok::EqEq),
            ('!', Some('=')) => Some(Tok::NotEq),
            ('&', Some('&')) => Some(Tok::AndAnd),
            ('{', _) => Some(Tok::LBrace),
            ('}', _) => Some(Tok::RBrace),
            ('(', _) => Some(Tok::LParen),
            (')', _) => Some(Tok::RParen),
            (',', _) => Some(Tok::Comma),
            (':', _) => Some(Tok::Colon),
            ('|', _) => Some(Tok::Pipe),
            ('=', _) => Some(Tok::Assign),
            ('*', _) => Some(Tok::Star),
            (c, _) if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i + width < chars.len()
                    && (chars[i + width].is_ascii_alphanumeric() || chars[i + width] == '_')
                {
                    width += 1;
                }
                Some(Tok::Ident(chars[start..start + width].iter().collect()))
            }
            (c, _) if c.is_ascii_digit() => {
                while i + width < chars.len() && chars[i + width].is_ascii_digit() {
                    width += 1;
                }
                let text: String = chars[i..i + width].iter().collect();
                match text.parse() {
                    Ok(n) => Some(Tok::Number(n)),
                    Err(_) => {
                        errors.push(ParseError::new(
                            pos,
                            ParseErrorKind::Syntax,
                            format!("number `{text}` is too large"),
                        ));
                        None
                    }
                }
            }
            (c, _) => {
                errors.push(ParseError::new(
                    pos,
                    ParseErrorKind::Syntax,
                    format!("unexpected character `{c}`"),
                ));
                None
            }
        };
        if matches!(
            tok,
            Some(Tok::Arrow | Tok::DotDot | Tok::EqEq | Tok::NotEq | Tok::AndAnd)
        ) {
            width = 2;
        }
        if let Some(tok) = tok {
            tokens.push(Token { tok, pos });
        }
        i += width;
        col += width;
    }
    tokens
}

#[derive(Debug, Clone)]
struct Name {
    text: String,
    pos: Pos,
}

#[derive(Debug)]
enum RawStep {
    Msg {
        sender: Name,
        receiver: Name,
        message: Name,
        args: Vec<Name>,
    },
    Choice {
        pos: Pos,
        alts: Vec<RawBlock>,
    },
    Loop {
        pos: Pos,
        min: u32,
        max: Option<u32>,
        body: RawBlock,
    },
    Par {
        branches: Vec<RawBlock>,
    },
    Ref(Name),
}

#[derive(Debug, Default)]
struct RawBlock {
    steps: Vec<RawStep>,
    wheres: Vec<RawAtom>,
}

#[derive(Debug)]
struct RawAtom {
    lhs: Name,
    op: CmpOp,
    rhs: Name,
}

#[derive(Debug)]
enum RawDecl {
    Domain { name: Name, values: Vec<Name> },
    Components(Vec<Name>),
    Msg { name: Name, params: Vec<(Name, Name)> },
    Eet { name: Name, body: RawBlock },
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    end: Pos,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> Pos {
        self.tokens.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of input".to_string(),
        };
        Err(ParseError::new(
            self.here(),
            ParseErrorKind::Syntax,
            format!("expected {expected}, found {found}"),
        ))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn raw_ident(&mut self) -> PResult<Name> {
        match self.tokens.get(self.pos) {
            Some(Token {
                tok: Tok::Ident(s),
                pos,
            }) => {
                let name = Name {
                    text: s.clone(),
                    pos: *pos,
                };
                self.pos += 1;
                Ok(name)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        let name = self.raw_ident()?;
        if KEYWORDS.contains(&name.text.as_str()) {
            return Err(ParseError::new(
                name.pos,
                ParseErrorKind::Syntax,
                format!("`{}` is a reserved word", name.text),
            ));
        }
        Ok(name)
    }

    fn number(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    fn decl(&mut self) -> PResult<RawDecl> {
        let kw = self.raw_ident()?;
        let decl = match kw.text.as_str() {
            "domain" => {
                let name = self.ident()?;
                self.expect(Tok::Assign)?;
                self.expect(Tok::LBrace)?;
                let mut values = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        values.push(self.ident()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                if values.is_empty() {
                    return Err(ParseError::new(
                        name.pos,
                        ParseErrorKind::Syntax,
                        format!("domain `{}` must list at least one value", name.text),
                    ));
                }
                RawDecl::Domain { name, values }
            }
            "component" => {
                let mut names = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    names.push(self.ident()?);
                }
                RawDecl::Components(names)
            }
            "msg" => {
                let name = self.ident()?;
                self.expect(Tok::LParen)?;
                let mut params = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        let p = self.ident()?;
                        self.expect(Tok::Colon)?;
                        params.push((p, self.ident()?));
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                RawDecl::Msg { name, params }
            }
            "eet" => {
                let name = self.ident()?;
                self.expect(Tok::LBrace)?;
                let body = self.block()?;
                self.expect(Tok::RBrace)?;
                RawDecl::Eet { name, body }
            }
            _ => {
                return Err(ParseError::new(
                    kw.pos,
                    ParseErrorKind::Syntax,
                    format!(
                        "expected `domain`, `component`, `msg` or `eet`, found `{}`",
                        kw.text
                    ),
                ))
            }
        };
        if self.pos < self.tokens.len() {
            return self.unexpected("end of declaration");
        }
        Ok(decl)
    }

    /// Steps up to (not including) a closing `}` or a `|` separator.
    fn block(&mut self) -> PResult<RawBlock> {
        let mut block = RawBlock::default();
        loop {
            match self.peek() {
                None | Some(Tok::RBrace) | Some(Tok::Pipe) => return Ok(block),
                Some(Tok::Ident(kw)) => match kw.as_str() {
                    "where" => {
                        self.pos += 1;
                        loop {
                            block.wheres.push(self.atom()?);
                            if !self.eat(&Tok::AndAnd) {
                                break;
                            }
                        }
                    }
                    _ => block.steps.push(self.step()?),
                },
                _ => return self.unexpected("a step"),
            }
        }
    }

    fn atom(&mut self) -> PResult<RawAtom> {
        let lhs = self.ident()?;
        let op = if self.eat(&Tok::EqEq) {
            CmpOp::Eq
        } else if self.eat(&Tok::NotEq) {
            CmpOp::Ne
        } else {
            return self.unexpected("`==` or `!=`");
        };
        let rhs = self.ident()?;
        Ok(RawAtom { lhs, op, rhs })
    }

    fn alternatives(&mut self) -> PResult<Vec<RawBlock>> {
        self.expect(Tok::LBrace)?;
        if self.eat(&Tok::RBrace) {
            return Ok(Vec::new());
        }
        let mut alts = vec![self.block()?];
        while self.eat(&Tok::Pipe) {
            alts.push(self.block()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(alts)
    }

    fn step(&mut self) -> PResult<RawStep> {
        let pos = self.here();
        let head = self.raw_ident()?;
        match head.text.as_str() {
            "choice" => Ok(RawStep::Choice {
                pos,
                alts: self.alternatives()?,
            }),
            "par" => {
                let branches = self.alternatives()?;
                if branches.len() < 2 {
                    return Err(ParseError::new(
                        pos,
                        ParseErrorKind::Syntax,
                        "`par` needs at least two branches",
                    ));
                }
                Ok(RawStep::Par { branches })
            }
            "loop" => {
                let min = self.number()?;
                self.expect(Tok::DotDot)?;
                let max = if self.eat(&Tok::Star) {
                    None
                } else {
                    Some(self.number()?)
                };
                self.expect(Tok::LBrace)?;
                let body = self.block()?;
                self.expect(Tok::RBrace)?;
                Ok(RawStep::Loop {
                    pos,
                    min,
                    max,
                    body,
                })
            }
            "ref" => Ok(RawStep::Ref(self.ident()?)),
            kw if KEYWORDS.contains(&kw) => Err(ParseError::new(
                pos,
                ParseErrorKind::Syntax,
                format!("`{kw}` cannot start a step"),
            )),
            _ => {
                self.expect(Tok::Arrow)?;
                let receiver = self.ident()?;
                self.expect(Tok::Colon)?;
                let message = self.ident()?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.ident()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                Ok(RawStep::Msg {
                    sender: head,
                    receiver,
                    message,
                    args,
                })
            }
        }
    }
}

/// Splits the token stream at top-level keywords outside braces, so that an
/// error in one declaration does not hide errors in the next.
fn statements(tokens: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i64;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match &t.tok {
            Tok::LBrace => depth += 1,
            Tok::RBrace => depth -= 1,
            Tok::Ident(s) if depth <= 0 && i > start && TOP_KEYWORDS.contains(&s.as_str()) => {
                out.push(&tokens[start..i]);
                start = i;
                depth = 0;
            }
            _ => {}
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

/// Parses and validates a complete document.
pub fn parse(source: &str) -> Result<Document, Vec<ParseError>> {
    let mut errors = Vec::new();
    let tokens = lex(source, &mut errors);
    let end = Pos {
        line: source.lines().count().max(1),
        col: source.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    let mut decls = Vec::new();
    for stmt in statements(&tokens) {
        let mut p = Parser {
            tokens: stmt,
            pos: 0,
            end: stmt.last().map_or(end, |t| t.pos),
        };
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(e) => errors.push(e),
        }
    }
    let doc = lower(decls, &mut errors);
    if errors.is_empty() {
        debug_assert!(doc.validate().is_ok(), "{:?}", doc.validate());
        Ok(doc)
    } else {
        errors.sort_by_key(|e| (e.line, e.column));
        Err(errors)
    }
}

fn lower(decls: Vec<RawDecl>, errors: &mut Vec<ParseError>) -> Document {
    let mut doc = Document::default();
    let mut bodies = Vec::new();
    let mut eet_names = BTreeSet::new();
    let mut sig_domains = Vec::new();
    let dup = |errors: &mut Vec<ParseError>, what: &str, n: &Name| {
        errors.push(ParseError::new(
            n.pos,
            ParseErrorKind::DuplicateName,
            format!("{what} `{}` is declared twice", n.text),
        ));
    };
    for decl in decls {
        match decl {
            RawDecl::Domain { name, values } => {
                let mut vs = Vec::new();
                for v in values {
                    if vs.contains(&v.text) {
                        dup(errors, "value", &v);
                    } else {
                        vs.push(v.text);
                    }
                }
                match doc.domains.entry(name.text.clone()) {
                    Entry::Occupied(_) => dup(errors, "domain", &name),
                    Entry::Vacant(slot) => {
                        slot.insert(vs);
                    }
                }
            }
            RawDecl::Components(names) => {
                for n in names {
                    if doc.has_component(&n.text) {
                        dup(errors, "component", &n);
                    } else {
                        doc.components.push(n.text);
                    }
                }
            }
            RawDecl::Msg { name, params } => {
                let mut sig = MessageSig::default();
                for (p, d) in params {
                    if sig.params.iter().any(|x| x.name == p.text) {
                        dup(errors, "parameter", &p);
                    }
                    sig.params.push(ParamDecl {
                        name: p.text,
                        domain: d.text.clone(),
                    });
                    sig_domains.push(d);
                }
                match doc.messages.entry(name.text.clone()) {
                    Entry::Occupied(_) => dup(errors, "message", &name),
                    Entry::Vacant(slot) => {
                        slot.insert(sig);
                    }
                }
            }
            RawDecl::Eet { name, body } => {
                if !eet_names.insert(name.text.clone()) {
                    dup(errors, "eet", &name);
                } else {
                    bodies.push((name, body));
                }
            }
        }
    }
    for d in sig_domains {
        if !doc.domains.contains_key(&d.text) {
            errors.push(ParseError::new(
                d.pos,
                ParseErrorKind::UnknownName,
                format!("unknown domain `{}`", d.text),
            ));
        }
    }
    let mut refs: BTreeMap<String, Vec<Name>> = BTreeMap::new();
    for (name, body) in &bodies {
        let mut ctx = EetContext {
            doc: &doc,
            eets: &eet_names,
            params: BTreeMap::new(),
            refs: Vec::new(),
            errors: &mut *errors,
        };
        let expr = ctx.block(body);
        refs.insert(name.text.clone(), ctx.refs);
        doc.eets.insert(name.text.clone(), expr);
    }
    check_cycles(&refs, errors);
    doc
}

fn check_cycles(refs: &BTreeMap<String, Vec<Name>>, errors: &mut Vec<ParseError>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        node: &str,
        refs: &BTreeMap<String, Vec<Name>>,
        marks: &mut BTreeMap<String, Mark>,
        errors: &mut Vec<ParseError>,
    ) {
        marks.insert(node.to_string(), Mark::Active);
        for r in refs.get(node).into_iter().flatten() {
            match marks.get(&r.text) {
                Some(Mark::Active) => errors.push(ParseError::new(
                    r.pos,
                    ParseErrorKind::CyclicRef,
                    format!("`ref {}` closes a reference cycle through `{node}`", r.text),
                )),
                Some(Mark::Done) => {}
                None => visit(&r.text, refs, marks, errors),
            }
        }
        marks.insert(node.to_string(), Mark::Done);
    }
    let mut marks = BTreeMap::new();
    for node in refs.keys() {
        if !marks.contains_key(node) {
            visit(node, refs, &mut marks, errors);
        }
    }
}

struct EetContext<'a> {
    doc: &'a Document,
    eets: &'a BTreeSet<String>,
    /// Parameter name to domain, shared by the whole definition.
    params: BTreeMap<String, String>,
    refs: Vec<Name>,
    errors: &'a mut Vec<ParseError>,
}

impl EetContext<'_> {
    fn err(&mut self, pos: Pos, kind: ParseErrorKind, detail: String) {
        self.errors.push(ParseError::new(pos, kind, detail));
    }

    fn block(&mut self, block: &RawBlock) -> EetExpr {
        let steps = block.steps.iter().map(|s| self.step(s)).collect();
        let body = EetExpr::seq_all(steps);
        if block.wheres.is_empty() {
            return body;
        }
        let mut body_params = BTreeSet::new();
        message_params(&body, &mut body_params);
        let atoms = block
            .wheres
            .iter()
            .map(|a| self.atom(a, &body_params))
            .collect();
        EetExpr::guarded(body, Predicate::new(atoms))
    }

    fn atom(&mut self, atom: &RawAtom, body: &BTreeSet<String>) -> Atom {
        let classify = |n: &Name| {
            if body.contains(&n.text) {
                Term::Param(n.text.clone())
            } else {
                Term::Const(n.text.clone())
            }
        };
        let (lhs, rhs) = (classify(&atom.lhs), classify(&atom.rhs));
        let domain = |t: &Term| t.param().and_then(|p| self.params.get(p).cloned());
        match (domain(&lhs), domain(&rhs)) {
            (Some(a), Some(b)) if a != b => self.err(
                atom.lhs.pos,
                ParseErrorKind::DomainMismatch,
                format!(
                    "`{}` has domain `{a}` but `{}` has domain `{b}`",
                    atom.lhs.text, atom.rhs.text
                ),
            ),
            (Some(_), Some(_)) => {}
            (Some(d), None) => self.check_value(&atom.rhs, &d),
            (None, Some(d)) => self.check_value(&atom.lhs, &d),
            (None, None) => self.err(
                atom.lhs.pos,
                ParseErrorKind::UnknownName,
                format!(
                    "neither `{}` nor `{}` is a parameter of the guarded block",
                    atom.lhs.text, atom.rhs.text
                ),
            ),
        }
        Atom {
            lhs,
            op: atom.op,
            rhs,
        }
    }

    fn check_value(&mut self, value: &Name, domain: &str) {
        let known = self
            .doc
            .domain(domain)
            .is_some_and(|vs| vs.contains(&value.text));
        if !known {
            self.err(
                value.pos,
                ParseErrorKind::DomainMismatch,
                format!(
                    "`{}` is neither a parameter of the guarded block nor a value of domain `{domain}`",
                    value.text
                ),
            );
        }
    }

    fn step(&mut self, step: &RawStep) -> EetExpr {
        match step {
            RawStep::Msg {
                sender,
                receiver,
                message,
                args,
            } => self.message(sender, receiver, message, args),
            RawStep::Choice { pos, alts } => {
                if alts.is_empty() {
                    self.err(
                        *pos,
                        ParseErrorKind::EmptyChoice,
                        "`choice` needs at least one alternative".into(),
                    );
                }
                EetExpr::Choice(alts.iter().map(|b| self.block(b)).collect())
            }
            RawStep::Loop {
                pos,
                min,
                max,
                body,
            } => {
                if let Some(max) = max {
                    if min > max {
                        self.err(
                            *pos,
                            ParseErrorKind::BadLoopBounds,
                            format!("loop bounds {min}..{max} are inverted"),
                        );
                    }
                }
                EetExpr::repeat(self.block(body), *min, *max)
            }
            RawStep::Par { branches } => {
                let mut it = branches.iter().map(|b| self.block(b)).collect::<Vec<_>>().into_iter();
                let first = it.next().unwrap_or(EetExpr::Empty);
                it.fold(first, EetExpr::interleave)
            }
            RawStep::Ref(name) => {
                if self.eets.contains(&name.text) {
                    self.refs.push(name.clone());
                } else {
                    self.err(
                        name.pos,
                        ParseErrorKind::UnknownName,
                        format!("unknown eet `{}`", name.text),
                    );
                }
                EetExpr::Ref(name.text.clone())
            }
        }
    }

    fn message(&mut self, sender: &Name, receiver: &Name, message: &Name, args: &[Name]) -> EetExpr {
        for c in [sender, receiver] {
            if !self.doc.has_component(&c.text) {
                self.err(
                    c.pos,
                    ParseErrorKind::UnknownName,
                    format!("unknown component `{}`", c.text),
                );
            }
        }
        let terms = match self.doc.messages.get(&message.text) {
            None => {
                self.err(
                    message.pos,
                    ParseErrorKind::UnknownName,
                    format!("unknown message `{}`", message.text),
                );
                args.iter().map(|a| Term::Param(a.text.clone())).collect()
            }
            Some(sig) => {
                if sig.params.len() != args.len() {
                    self.err(
                        message.pos,
                        ParseErrorKind::ArityMismatch,
                        format!(
                            "message `{}` expects {} argument(s), found {}",
                            message.text,
                            sig.params.len(),
                            args.len()
                        ),
                    );
                }
                let sig = sig.clone();
                args.iter()
                    .enumerate()
                    .map(|(i, a)| match sig.params.get(i) {
                        Some(decl) => self.term(a, &decl.domain),
                        None => Term::Param(a.text.clone()),
                    })
                    .collect()
            }
        };
        EetExpr::Message(MessageNode {
            sender: sender.text.clone(),
            receiver: receiver.text.clone(),
            message: message.text.clone(),
            args: terms,
        })
    }

    fn term(&mut self, arg: &Name, domain: &str) -> Term {
        let Some(values) = self.doc.domain(domain) else {
            self.err(
                arg.pos,
                ParseErrorKind::UnknownName,
                format!("unknown domain `{domain}`"),
            );
            return Term::Param(arg.text.clone());
        };
        if values.contains(&arg.text) {
            return Term::Const(arg.text.clone());
        }
        match self.params.get(&arg.text) {
            Some(d) if d != domain => {
                let detail = format!(
                    "parameter `{}` is used with domains `{d}` and `{domain}`",
                    arg.text
                );
                self.err(arg.pos, ParseErrorKind::DomainMismatch, detail);
            }
            Some(_) => {}
            None => {
                self.params.insert(arg.text.clone(), domain.to_string());
            }
        }
        Term::Param(arg.text.clone())
    }
}

fn message_params(e: &EetExpr, out: &mut BTreeSet<String>) {
    if let EetExpr::Message(m) = e {
        out.extend(m.args.iter().filter_map(|t| t.param()).map(String::from));
    }
    for c in e.children() {
        message_params(c, out);
    }
}

/// The named EET with every `ref` inlined. Parameters of an inlined body
/// stay local to that occurrence: they are renamed to `param@Eet.k`, with
/// `k` counting inlined occurrences.
pub fn resolve(doc: &Document, name: &str) -> Result<EetExpr, ModelError> {
    let mut counter = 0;
    resolve_rec(doc, name, &mut counter, &mut Vec::new())
}

fn resolve_rec(
    doc: &Document,
    name: &str,
    counter: &mut usize,
    stack: &mut Vec<String>,
) -> Result<EetExpr, ModelError> {
    let body = doc.eet(name)?;
    if stack.iter().any(|n| n == name) {
        return Err(ModelError::CyclicRef(name.to_string()));
    }
    stack.push(name.to_string());
    let out = inline(doc, body, counter, stack);
    stack.pop();
    out
}

fn inline(
    doc: &Document,
    e: &EetExpr,
    counter: &mut usize,
    stack: &mut Vec<String>,
) -> Result<EetExpr, ModelError> {
    match e {
        EetExpr::Ref(target) => {
            *counter += 1;
            let k = *counter;
            let body = resolve_rec(doc, target, counter, stack)?;
            Ok(body.rename_params(&|p| format!("{p}@{target}.{k}")))
        }
        other => {
            let mut err = None;
            let out = other.map_children(|c| {
                inline(doc, c, counter, stack).unwrap_or_else(|x| {
                    err.get_or_insert(x);
                    EetExpr::Dead
                })
            });
            match err {
                Some(x) => Err(x),
                None => Ok(out),
            }
        }
    }
}

/// The declared name of a parameter, without the suffix added by [`resolve`].
pub fn display_param(p: &str) -> &str {
    p.split('@').next().unwrap_or(p)
}

/// Pretty-prints a document in the surface syntax. Parsing the output
/// yields the same document for every document produced by [`parse`].
pub fn print(doc: &Document) -> String {
    let mut out = String::new();
    for (name, values) in &doc.domains {
        out.push_str(&format!("domain {name} = {{ {} }}\n", values.join(", ")));
    }
    if !doc.components.is_empty() {
        out.push_str(&format!("component {}\n", doc.components.join(", ")));
    }
    for (name, sig) in &doc.messages {
        let params: Vec<String> = sig
            .params
            .iter()
            .map(|p| format!("{}: {}", p.name, p.domain))
            .collect();
        out.push_str(&format!("msg {name}({})\n", params.join(", ")));
    }
    for (name, body) in &doc.eets {
        out.push_str(&format!("\neet {name} {{\n"));
        print_block(body, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_block(e: &EetExpr, level: usize, out: &mut String) {
    match e {
        EetExpr::Guarded(body, pred) => {
            print_steps(body, level, out);
            indent(level, out);
            out.push_str(&format!("where {pred}\n"));
        }
        other => print_steps(other, level, out),
    }
}

fn print_steps(e: &EetExpr, level: usize, out: &mut String) {
    match e {
        EetExpr::Empty => {}
        EetExpr::Seq(a, b) => {
            print_steps(a, level, out);
            print_steps(b, level, out);
        }
        EetExpr::Message(m) => {
            indent(level, out);
            out.push_str(&format!("{m}\n"));
        }
        EetExpr::Ref(n) => {
            indent(level, out);
            out.push_str(&format!("ref {n}\n"));
        }
        EetExpr::Choice(alts) => print_alternatives("choice", alts.iter().collect(), level, out),
        EetExpr::Interleave(..) => {
            let mut branches = Vec::new();
            par_branches(e, &mut branches);
            print_alternatives("par", branches, level, out);
        }
        EetExpr::Loop { body, min, max } => {
            indent(level, out);
            match max {
                Some(n) => out.push_str(&format!("loop {min}..{n} {{\n")),
                None => out.push_str(&format!("loop {min}..* {{\n")),
            }
            print_block(body, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
        }
        // Guards only attach to whole blocks, so a guard in step position
        // is wrapped in a one-way choice. A loop would rebind parameters
        // shared with the surrounding steps.
        EetExpr::Guarded(..) => {
            indent(level, out);
            out.push_str("choice {\n");
            print_block(e, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
        }
        // Not expressible in the surface syntax; printed as an empty choice.
        EetExpr::Dead => {
            indent(level, out);
            out.push_str("choice { }\n");
        }
    }
}

fn par_branches<'e>(e: &'e EetExpr, out: &mut Vec<&'e EetExpr>) {
    match e {
        EetExpr::Interleave(a, b) => {
            par_branches(a, out);
            out.push(b);
        }
        other => out.push(other),
    }
}

fn print_alternatives(kw: &str, alts: Vec<&EetExpr>, level: usize, out: &mut String) {
    indent(level, out);
    out.push_str(&format!("{kw} {{\n"));
    for (i, alt) in alts.iter().enumerate() {
        if i > 0 {
            indent(level, out);
            out.push_str("|\n");
        }
        print_block(alt, level + 1, out);
    }
    indent(level, out);
    out.push_str("}\n");
}

/// Reads a trace log: one `Sender -> Receiver : message(v1, v2)` per line,
/// blank lines and `#` comments ignored. Events are not checked against
/// any declarations.
pub fn parse_trace_log(source: &str) -> Result<Trace, ParseError> {
    let mut errors = Vec::new();
    let tokens = lex(source, &mut errors);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let mut events = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let line = tokens[start].pos.line;
        let mut end = start;
        while end < tokens.len() && tokens[end].pos.line == line {
            end += 1;
        }
        let slice = &tokens[start..end];
        let mut p = Parser {
            tokens: slice,
            pos: 0,
            end: slice[slice.len() - 1].pos,
        };
        let ev = match p.step()? {
            RawStep::Msg {
                sender,
                receiver,
                message,
                args,
            } => Interaction {
                sender: sender.text,
                receiver: receiver.text,
                message: message.text,
                args: args.into_iter().map(|a| a.text).collect(),
            },
            _ => {
                return Err(ParseError::new(
                    slice[0].pos,
                    ParseErrorKind::Syntax,
                    "expected an event `Sender -> Receiver : message(args)`",
                ))
            }
        };
        if p.pos < slice.len() {
            return p.unexpected("end of line");
        }
        events.push(ev);
        start = end;
    }
    Ok(Trace(events))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAR_RENTAL: &str = include_str!("../fixtures/car_rental.eet");

    fn kinds(src: &str) -> Vec<ParseErrorKind> {
        parse(src).unwrap_err().into_iter().map(|e| e.kind).collect()
    }

    #[test]
    fn car_rental_counts() {
        let doc = parse(CAR_RENTAL).unwrap();
        assert_eq!(doc.components.len(), 3);
        assert_eq!(doc.messages.len(), 9);
        assert_eq!(doc.eets.len(), 5);
        assert_eq!(doc.domains.len(), 3);
        assert!(doc.validate().is_ok());
    }

    #[test]
    fn successful_reservation_shape() {
        let doc = parse(CAR_RENTAL).unwrap();
        let e = doc.eet("SuccessfulReservation").unwrap();
        assert_eq!(e.message_count(), 5);
        let EetExpr::Seq(first, _) = e else {
            panic!("expected a sequence")
        };
        let EetExpr::Message(m) = first.as_ref() else {
            panic!("expected a message")
        };
        assert_eq!(m.message, "request");
        assert_eq!(
            m.args,
            vec![
                Term::Param("f".into()),
                Term::Param("t".into()),
                Term::Param("c".into())
            ]
        );
    }

    #[test]
    fn empty_choice_is_rejected() {
        assert_eq!(
            kinds("component A\neet X { choice { } }"),
            vec![ParseErrorKind::EmptyChoice]
        );
    }

    #[test]
    fn cyclic_refs_are_rejected() {
        assert_eq!(
            kinds("eet A { ref B } eet B { ref A }"),
            vec![ParseErrorKind::CyclicRef]
        );
        assert_eq!(kinds("eet A { ref A }"), vec![ParseErrorKind::CyclicRef]);
    }

    #[test]
    fn errors_are_positioned() {
        let errs = parse("component A\nmsg m()\neet X {\n  A -> B : m()\n}").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].line, errs[0].column), (4, 8));
        assert_eq!(errs[0].kind, ParseErrorKind::UnknownName);
    }

    #[test]
    fn all_errors_are_reported() {
        let src = "\
domain D = { a, a }
component A, A
msg m(x: D, y: Nope)
eet X { A -> A : m(a) }
eet Y { loop 3..1 { } }
eet X { }
eet Z { A -> A : m(a, b) ) }
";
        let mut got = kinds(src);
        got.sort_by_key(|k| format!("{k:?}"));
        let mut want = vec![
            ParseErrorKind::DuplicateName,
            ParseErrorKind::DuplicateName,
            ParseErrorKind::UnknownName,
            ParseErrorKind::ArityMismatch,
            ParseErrorKind::BadLoopBounds,
            ParseErrorKind::DuplicateName,
            ParseErrorKind::Syntax,
        ];
        want.sort_by_key(|k| format!("{k:?}"));
        assert_eq!(got, want);
    }

    #[test]
    fn terms_are_classified_by_domain() {
        let src = "\
domain D = { a, b }
component A
msg m(x: D)
msg n(x: D, y: D)
eet X { A -> A : m(a) A -> A : n(v, b) }
";
        let doc = parse(src).unwrap();
        let e = doc.eet("X").unwrap();
        assert_eq!(
            e,
            &EetExpr::seq(
                EetExpr::message("A", "A", "m", vec![Term::Const("a".into())]),
                EetExpr::message(
                    "A",
                    "A",
                    "n",
                    vec![Term::Param("v".into()), Term::Const("b".into())]
                ),
            )
        );
    }

    #[test]
    fn parameter_domain_clash() {
        let src = "\
domain D = { a }
domain E = { e }
component A
msg m(x: D)
msg n(y: E)
eet X { A -> A : m(v) A -> A : n(v) }
";
        assert_eq!(kinds(src), vec![ParseErrorKind::DomainMismatch]);
    }

    #[test]
    fn where_attaches_to_enclosing_block() {
        let src = "\
domain D = { a, b }
component A
msg m(x: D)
eet X {
  choice {
    A -> A : m(v)
    where v == a
  | A -> A : m(b)
  }
}
";
        let doc = parse(src).unwrap();
        let EetExpr::Choice(alts) = doc.eet("X").unwrap() else {
            panic!()
        };
        assert!(matches!(alts[0], EetExpr::Guarded(..)));
        assert!(matches!(alts[1], EetExpr::Message(_)));
    }

    #[test]
    fn bad_predicates() {
        let head = "domain D = { a, b }\ndomain E = { e }\ncomponent A\nmsg m(x: D)\nmsg n(y: E)\n";
        let k = |body: &str| kinds(&format!("{head}{body}"));
        assert_eq!(
            k("eet X { A -> A : m(v) where w == a }"),
            vec![ParseErrorKind::UnknownName]
        );
        assert_eq!(
            k("eet X { A -> A : m(v) where v == e }"),
            vec![ParseErrorKind::DomainMismatch]
        );
        assert_eq!(
            k("eet X { A -> A : m(v) A -> A : n(u) where v != u }"),
            vec![ParseErrorKind::DomainMismatch]
        );
    }

    #[test]
    fn par_folds_left() {
        let src = "component A\nmsg a()\nmsg b()\nmsg c()\neet X { par { A -> A : a() | A -> A : b() | A -> A : c() } }";
        let doc = parse(src).unwrap();
        let msg = |n: &str| EetExpr::message("A", "A", n, vec![]);
        assert_eq!(
            doc.eet("X").unwrap(),
            &EetExpr::interleave(EetExpr::interleave(msg("a"), msg("b")), msg("c"))
        );
    }

    #[test]
    fn reserved_words_are_not_names() {
        assert_eq!(kinds("component loop"), vec![ParseErrorKind::Syntax]);
    }

    #[test]
    fn resolve_car_reservation() {
        let doc = parse(CAR_RENTAL).unwrap();
        let got = resolve(&doc, "CarReservation").unwrap();
        assert!(!got.contains_ref());
        let strip = |e: &EetExpr| e.rename_params(&|p| display_param(p).to_string());
        let body = |n: &str| doc.eet(n).unwrap().clone();
        let want = EetExpr::seq(
            EetExpr::repeat(
                EetExpr::Choice(vec![body("CarNotAvailable"), body("CustomersReject")]),
                0,
                None,
            ),
            EetExpr::repeat(body("SuccessfulReservation"), 0, Some(1)),
        );
        assert_eq!(strip(&got), want);
    }

    #[test]
    fn resolve_keeps_ref_free_terms() {
        let doc = parse(CAR_RENTAL).unwrap();
        let e = resolve(&doc, "SuccessfulReservation").unwrap();
        assert_eq!(&e, doc.eet("SuccessfulReservation").unwrap());
    }

    #[test]
    fn resolve_unknown_name() {
        let doc = parse(CAR_RENTAL).unwrap();
        assert_eq!(
            resolve(&doc, "Missing"),
            Err(ModelError::UnknownEet("Missing".into()))
        );
    }

    #[test]
    fn inlined_parameters_are_local() {
        let src = "\
domain D = { a, b }
component A
msg m(x: D)
eet Y { A -> A : m(v) }
eet X { A -> A : m(v) ref Y ref Y }
";
        let doc = parse(src).unwrap();
        let e = resolve(&doc, "X").unwrap();
        let params = crate::model::free_params(&e, &doc).unwrap();
        assert_eq!(
            params.keys().cloned().collect::<Vec<_>>(),
            vec!["v", "v@Y.1", "v@Y.2"]
        );
    }

    #[test]
    fn print_round_trips_fixture() {
        let doc = parse(CAR_RENTAL).unwrap();
        let printed = print(&doc);
        assert_eq!(parse(&printed).unwrap(), doc);
        assert_eq!(print(&parse(&printed).unwrap()), printed);
    }

    #[test]
    fn trace_log_reading() {
        let log = "# comment\n\nA -> B : m(x, y)\nB -> A : n()  # trailing\n";
        let t = parse_trace_log(log).unwrap();
        assert_eq!(
            t.0,
            vec![
                Interaction::new("A", "B", "m", vec!["x".into(), "y".into()]),
                Interaction::new("B", "A", "n", vec![])
            ]
        );
        assert_eq!(parse_trace_log(&t.to_string()).unwrap(), t);
        let err = parse_trace_log("A -> B : m(\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(parse_trace_log("A -> B m()").is_err());
        assert!(parse_trace_log("A -> B : m() C").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const HEAD: &str = "domain D = { a, b }\ncomponent A, B\nmsg m(x: D)\nmsg n()\n";

        fn arb_block(depth: u32) -> BoxedStrategy<String> {
            let step = prop_oneof![
                Just("A -> B : n()".to_string()),
                prop::sample::select(vec!["a", "b", "u", "v"])
                    .prop_map(|t| format!("B -> A : m({t})")),
                Just("ref Base".to_string()),
            ];
            if depth == 0 {
                return prop::collection::vec(step, 0..3)
                    .prop_map(|s| s.join("\n"))
                    .boxed();
            }
            let inner = arb_block(depth - 1);
            let compound = prop_oneof![
                step,
                prop::collection::vec(inner.clone(), 2..4)
                    .prop_map(|alts| format!("choice {{\n{}\n}}", alts.join("\n|\n"))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| format!("par {{ {a} | {b} }}")),
                (0u32..2, prop::option::of(2u32..4), inner)
                    .prop_map(|(lo, hi, b)| match hi {
                        Some(h) => format!("loop {lo}..{h} {{ {b} }}"),
                        None => format!("loop {lo}..* {{ {b} }}"),
                    }),
            ];
            prop::collection::vec(compound, 0..3)
                .prop_map(|s| s.join("\n"))
                .boxed()
        }

        proptest! {
            #[test]
            fn parse_print_parse_is_stable(body in arb_block(2)) {
                let src = format!("{HEAD}eet Base {{ A -> B : n() }}\neet X {{\n{body}\n}}\n");
                let doc = parse(&src).unwrap();
                prop_assert!(doc.validate().is_ok());
                let again = parse(&print(&doc)).unwrap();
                prop_assert_eq!(&again, &doc);
                prop_assert_eq!(parse(&src).unwrap(), doc);
            }
        }
    }
}
