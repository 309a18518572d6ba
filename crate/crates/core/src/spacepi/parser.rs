use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{
    Action, Direction, Location, ModelDocument, MotionDecl, ParseError, Payload, PmfDecl, PositionDecl,
    PositionExpr, Process, ProcessDef, RadiusDecl, Section, Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefKind {
    Radius,
    Position,
    Motion,
    Process,
}

impl RefKind {
    fn label(self) -> &'static str {
        match self {
            RefKind::Radius => "radius",
            RefKind::Position => "position",
            RefKind::Motion => "motion",
            RefKind::Process => "process",
        }
    }
}

#[derive(Debug)]
struct Reference {
    loc: Location,
    kind: RefKind,
    name: String,
}

/// Names and actions seen while parsing, with their locations, for the
/// semantic checks that run after every section is read.
#[derive(Debug, Default)]
struct Collected {
    refs: Vec<Reference>,
    actions: Vec<(Location, Action)>,
}

struct Cursor<'c> {
    toks: Vec<Token>,
    pos: usize,
    collected: &'c mut Collected,
}

fn syntax(loc: Location, expected: &[&str], found: &Tok) -> ParseError {
    ParseError::Syntax {
        loc,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.describe(),
    }
}

impl<'c> Cursor<'c> {
    fn new(line: &str, line_no: usize, collected: &'c mut Collected) -> Result<Self, ParseError> {
        Ok(Cursor {
            toks: tokenize(line, line_no)?,
            pos: 0,
            collected,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn loc(&self) -> Location {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        syntax(self.loc(), expected, self.peek())
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Location), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.bump().loc;
                Ok((s, loc))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Expects the specific identifier `word`.
    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&[&format!("`{word}`")])),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let negative = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Number(x) => {
                self.bump();
                Ok(if negative { -x } else { x })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    /// A number or a reference to a radius declaration.
    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let loc = self.bump().loc;
                self.reference(loc, RefKind::Radius, &name);
                Ok(Value::Name(name))
            }
            Tok::Number(_) | Tok::Minus => Ok(Value::Number(self.number()?)),
            _ => Err(self.error(&["number", "identifier"])),
        }
    }

    fn reference(&mut self, loc: Location, kind: RefKind, name: &str) {
        self.collected.refs.push(Reference { loc, kind, name: name.to_string() });
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            _ => Err(self.error(&["end of line"])),
        }
    }

    fn define(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::Define) || self.eat(&Tok::Eq) {
            Ok(())
        } else {
            Err(self.error(&["`:=`", "`=`"]))
        }
    }

    fn position_decl(&mut self) -> Result<(PositionDecl, Location), ParseError> {
        let (name, loc) = self.ident()?;
        self.expect(Tok::Define)?;
        let expr = if matches!(self.peek(), Tok::Ident(s) if s == "rand") {
            self.bump();
            self.expect(Tok::LParen)?;
            for (i, axis) in ["x", "y", "z"].into_iter().enumerate() {
                if i > 0 {
                    self.expect(Tok::Comma)?;
                }
                self.keyword(axis)?;
            }
            self.expect(Tok::RParen)?;
            self.expect(Tok::SuchThat)?;
            let paren = self.eat(&Tok::LParen);
            for (i, axis) in ["x", "y", "z"].into_iter().enumerate() {
                if i > 0 {
                    self.expect(Tok::Plus)?;
                }
                self.keyword(axis)?;
                self.expect(Tok::Caret)?;
                if *self.peek() != Tok::Number(2.0) {
                    return Err(self.error(&["`2`"]));
                }
                self.bump();
            }
            if paren {
                self.expect(Tok::RParen)?;
            }
            self.expect(Tok::Eq)?;
            PositionExpr::Sphere { radius: self.value()? }
        } else {
            let mut coords = Vec::with_capacity(3);
            for (i, axis) in ["x", "y", "z"].into_iter().enumerate() {
                if i > 0 {
                    self.expect(Tok::And)?;
                }
                self.keyword(axis)?;
                self.expect(Tok::Eq)?;
                coords.push(self.value()?);
            }
            let z = coords.pop().unwrap();
            let y = coords.pop().unwrap();
            let x = coords.pop().unwrap();
            PositionExpr::Fixed { x, y, z }
        };
        self.finish()?;
        Ok((PositionDecl { name, expr }, loc))
    }

    fn radius_decl(&mut self) -> Result<(RadiusDecl, Location), ParseError> {
        let (name, loc) = self.ident()?;
        self.define()?;
        let value = self.number()?;
        self.finish()?;
        Ok((RadiusDecl { name, value }, loc))
    }

    /// `None` for `name: not defined`.
    fn pmf_decl(&mut self) -> Result<(Option<PmfDecl>, Location), ParseError> {
        let (name, loc) = self.ident()?;
        if !(self.eat(&Tok::Colon) || self.eat(&Tok::Define)) {
            return Err(self.error(&["`:`"]));
        }
        let (function, _) = self.ident()?;
        if function == "not" && matches!(self.peek(), Tok::Ident(s) if s == "defined") {
            self.bump();
            self.finish()?;
            return Ok((None, loc));
        }
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.number()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                if !self.eat(&Tok::Comma) {
                    return Err(self.error(&["`,`", "`)`"]));
                }
            }
        }
        self.finish()?;
        Ok((Some(PmfDecl { name, function, args }), loc))
    }

    fn motion_decl(&mut self) -> Result<(MotionDecl, Location), ParseError> {
        let (name, loc) = self.ident()?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        if !(self.eat(&Tok::Colon) || self.eat(&Tok::Define)) {
            return Err(self.error(&["`:`"]));
        }
        for (i, axis) in ["xdot", "ydot", "zdot"].into_iter().enumerate() {
            if i > 0 {
                self.expect(Tok::Plus)?;
            }
            self.keyword(axis)?;
            self.expect(Tok::Caret)?;
            if *self.peek() != Tok::Number(2.0) {
                return Err(self.error(&["`2`"]));
            }
            self.bump();
        }
        self.expect(Tok::Less)?;
        let guard_bound = self.value()?;
        let mut escape_target = None;
        if self.eat(&Tok::Comma) {
            let mut target: Option<String> = None;
            for (i, axis) in ["x", "y", "z"].into_iter().enumerate() {
                if i > 0 {
                    self.expect(Tok::And)?;
                }
                self.keyword(axis)?;
                self.expect(Tok::Eq)?;
                match &target {
                    None => {
                        let (t, tloc) = self.ident()?;
                        self.reference(tloc, RefKind::Position, &t);
                        target = Some(t);
                    }
                    Some(t) => {
                        let t = t.clone();
                        self.keyword(&t)?;
                    }
                }
                self.expect(Tok::LParen)?;
                self.keyword(axis)?;
                self.expect(Tok::RParen)?;
            }
            self.keyword("otherwise")?;
            escape_target = target;
        }
        self.finish()?;
        Ok((MotionDecl { name, guard_bound, escape_target }, loc))
    }

    fn process_def(&mut self) -> Result<(ProcessDef, Location), ParseError> {
        let (name, loc) = self.ident()?;
        let mut motion = None;
        if self.eat(&Tok::LBracket) {
            let (m, mloc) = self.ident()?;
            self.reference(mloc, RefKind::Motion, &m);
            motion = Some(m);
            self.expect(Tok::RBracket)?;
        }
        let position = if self.eat(&Tok::Caret) {
            let (p, ploc) = self.ident()?;
            self.reference(ploc, RefKind::Position, &p);
            p
        } else {
            let first = name.chars().next().unwrap_or('_');
            let p = format!("pos_{first}");
            self.reference(loc, RefKind::Position, &p);
            p
        };
        self.define()?;
        let body = self.par()?;
        self.finish()?;
        Ok((ProcessDef { name, motion, position, body }, loc))
    }

    fn par(&mut self) -> Result<Process, ParseError> {
        let mut items = vec![self.sum()?];
        while self.eat(&Tok::Bar) {
            items.push(self.sum()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Process::Par(items) })
    }

    fn sum(&mut self) -> Result<Process, ParseError> {
        let mut items = vec![self.prefix()?];
        while self.eat(&Tok::Plus) {
            items.push(self.prefix()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Process::Sum(items) })
    }

    fn prefix(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Number(0.0) => {
                self.bump();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                if matches!(self.peek_at(1), Tok::Ident(s) if s == "new") {
                    self.bump();
                    self.bump();
                    let (bound, _) = self.ident()?;
                    self.expect(Tok::RParen)?;
                    let body = self.prefix()?;
                    return Ok(Process::New(bound, Box::new(body)));
                }
                self.bump();
                let inner = self.par()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::Bang | Tok::Question) {
                    let action = self.action()?;
                    self.expect(Tok::Dot)?;
                    let cont = self.prefix()?;
                    return Ok(Process::Prefix(action, Box::new(cont)));
                }
                let loc = self.bump().loc;
                if name == "nil" {
                    return Ok(Process::Nil);
                }
                self.reference(loc, RefKind::Process, &name);
                Ok(Process::Call(name))
            }
            _ => Err(self.error(&["`0`", "`nil`", "`(`", "action", "process name"])),
        }
    }

    fn action(&mut self) -> Result<Action, ParseError> {
        let (channel, loc) = self.ident()?;
        let direction = match self.bump().tok {
            Tok::Bang => Direction::Send,
            _ => Direction::Receive,
        };
        self.expect(Tok::LParen)?;
        let payload = match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Payload::Empty
            }
            Tok::Ident(n) => {
                self.bump();
                Payload::Name(n)
            }
            _ => return Err(self.error(&["`~`", "identifier"])),
        };
        self.expect(Tok::Comma)?;
        let radius = self.value()?;
        self.expect(Tok::RParen)?;
        let action = Action { channel, direction, payload, radius };
        self.collected.actions.push((loc, action.clone()));
        Ok(action)
    }
}

fn section_of(line: &str) -> Option<Section> {
    Section::ALL.into_iter().find(|s| s.header() == line)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Records `name` at `loc`, failing if it was already declared.
fn declare(seen: &mut HashMap<String, Location>, name: &str, loc: Location) -> Result<(), ParseError> {
    if let Some(&previous) = seen.get(name) {
        return Err(ParseError::DuplicateDeclaration { loc, name: name.to_string(), previous });
    }
    seen.insert(name.to_string(), loc);
    Ok(())
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ModelDocument, ParseError> {
    let mut sections: HashMap<Section, (Location, Vec<(usize, &str)>)> = HashMap::new();
    let mut current: Option<Section> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = strip_comment(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.chars().take_while(|c| c.is_whitespace()).count();
        let loc = Location { line: line_no, column: indent + 1 };
        if let Some(section) = section_of(trimmed) {
            if let Some((previous, _)) = sections.get(&section) {
                return Err(ParseError::DuplicateDeclaration {
                    loc,
                    name: section.header().to_string(),
                    previous: *previous,
                });
            }
            sections.insert(section, (loc, Vec::new()));
            current = Some(section);
            continue;
        }
        match current {
            Some(s) => sections.get_mut(&s).unwrap().1.push((line_no, line)),
            None => {
                return Err(ParseError::Syntax {
                    loc,
                    expected: vec![format!("section header `{}`", Section::Positions.header())],
                    found: format!("`{trimmed}`"),
                })
            }
        }
    }
    let eof = Location { line: last_line + 1, column: 1 };
    for section in Section::ALL {
        if !sections.contains_key(&section) {
            return Err(ParseError::MissingSection { loc: eof, section: section.header() });
        }
    }
    let lines = |s: Section| sections[&s].1.clone();

    let mut collected = Collected::default();
    let mut positions = Vec::new();
    let mut seen = HashMap::new();
    for (no, line) in lines(Section::Positions) {
        let (decl, loc) = Cursor::new(line, no, &mut collected)?.position_decl()?;
        declare(&mut seen, &decl.name, loc)?;
        positions.push(decl);
    }
    let position_names = seen;

    let mut radii = Vec::new();
    let mut seen = HashMap::new();
    for (no, line) in lines(Section::Radii) {
        let (decl, loc) = Cursor::new(line, no, &mut collected)?.radius_decl()?;
        declare(&mut seen, &decl.name, loc)?;
        radii.push(decl);
    }
    let radius_names = seen;

    let mut pmf = None;
    let mut seen = HashMap::new();
    for (no, line) in lines(Section::Potential) {
        let (decl, loc) = Cursor::new(line, no, &mut collected)?.pmf_decl()?;
        // At most one potential, defined or not.
        if let Some((_, &previous)) = seen.iter().next() {
            let name = decl.as_ref().map_or_else(|| "potential of mean force".to_string(), |d| d.name.clone());
            return Err(ParseError::DuplicateDeclaration { loc, name, previous });
        }
        seen.insert(String::new(), loc);
        pmf = decl;
    }

    let mut motions = Vec::new();
    let mut seen = HashMap::new();
    for (no, line) in lines(Section::Motions) {
        let (decl, loc) = Cursor::new(line, no, &mut collected)?.motion_decl()?;
        declare(&mut seen, &decl.name, loc)?;
        motions.push(decl);
    }
    let motion_names = seen;

    let mut processes = Vec::new();
    let mut seen = HashMap::new();
    for (no, line) in lines(Section::Processes) {
        let (def, loc) = Cursor::new(line, no, &mut collected)?.process_def()?;
        declare(&mut seen, &def.name, loc)?;
        processes.push(def);
    }
    let process_names = seen;

    let initial_lines = lines(Section::Initial);
    let initial = match initial_lines.as_slice() {
        [] => {
            return Err(ParseError::Syntax {
                loc: Location { line: sections[&Section::Initial].0.line + 1, column: 1 },
                expected: vec!["initial process".into()],
                found: "end of section".into(),
            })
        }
        [(no, line)] => {
            let mut cursor = Cursor::new(line, *no, &mut collected)?;
            let p = cursor.par()?;
            cursor.finish()?;
            p
        }
        [_, (no, line), ..] => {
            let loc = Location { line: *no, column: line.chars().take_while(|c| c.is_whitespace()).count() + 1 };
            return Err(ParseError::Syntax {
                loc,
                expected: vec!["a single initial process line".into()],
                found: format!("`{}`", line.trim()),
            });
        }
    };

    let mut problems: Vec<ParseError> = Vec::new();
    for r in &collected.refs {
        let known = match r.kind {
            RefKind::Radius => &radius_names,
            RefKind::Position => &position_names,
            RefKind::Motion => &motion_names,
            RefKind::Process => &process_names,
        };
        if !known.contains_key(&r.name) {
            problems.push(ParseError::UndeclaredName { loc: r.loc, kind: r.kind.label(), name: r.name.clone() });
        }
    }
    // Unresolved names would also break complementarity, so report them first.
    if let Some(first) = problems.drain(..).min_by_key(|e| e.location()) {
        return Err(first);
    }
    let resolve = |v: &Value| match v {
        Value::Number(x) => Some(*x),
        Value::Name(n) => radii.iter().find(|r| &r.name == n).map(|r| r.value),
    };
    for (loc, action) in &collected.actions {
        let radius = resolve(&action.radius);
        let matched = collected.actions.iter().any(|(_, other)| {
            other.channel == action.channel
                && other.direction == action.direction.complement()
                && resolve(&other.radius) == radius
        });
        if !matched {
            problems.push(ParseError::UnmatchedChannel {
                loc: *loc,
                channel: action.channel.clone(),
                direction: action.direction,
                radius: match &action.radius {
                    Value::Number(x) => x.to_string(),
                    Value::Name(n) => n.clone(),
                },
            });
        }
    }
    if let Some(first) = problems.into_iter().min_by_key(|e| e.location()) {
        return Err(first);
    }

    Ok(ModelDocument::new(positions, radii, pmf, motions, processes, initial))
}
