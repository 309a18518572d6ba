use super::{Location, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    /// `:=` or `≔`
    Define,
    Eq,
    Colon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Bar,
    Plus,
    Minus,
    Caret,
    Less,
    Bang,
    Question,
    Tilde,
    /// `/\` or `∧`
    And,
    /// `s.t.`
    SuchThat,
    End,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(x) => format!("number {x}"),
            Tok::Define => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Less => "`<`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Question => "`?`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::And => "`/\\`".into(),
            Tok::SuchThat => "`s.t.`".into(),
            Tok::End => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub loc: Location,
}

/// Rewrites Unicode spellings to their ASCII forms, keeping a column map
/// back to the original characters.
fn normalize(line: &str) -> (Vec<char>, Vec<usize>) {
    let mut out = Vec::new();
    let mut cols = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let mut push = |s: &str| {
            for ch in s.chars() {
                out.push(ch);
                cols.push(col);
            }
        };
        match c {
            '∧' => push("/\\"),
            '∼' => push("~"),
            '≔' => push(":="),
            '²' => push("^2"),
            'ẋ' => push("xdot"),
            'ẏ' => push("ydot"),
            'ż' => push("zdot"),
            '\u{307}' => push("dot"),
            '\t' => push(" "),
            _ => push(c.encode_utf8(&mut [0; 4])),
        }
        i += 1;
    }
    (out, cols)
}

pub(crate) fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let (chars, cols) = normalize(line);
    let mut toks = Vec::new();
    let mut i = 0;
    let loc_at = |i: usize| Location {
        line: line_no,
        column: cols.get(i).copied().unwrap_or_else(|| cols.last().map_or(1, |c| c + 1)),
    };
    while i < chars.len() {
        let c = chars[i];
        let loc = loc_at(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '=' => Some(Tok::Eq),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '|' => Some(Tok::Bar),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '^' => Some(Tok::Caret),
            '<' => Some(Tok::Less),
            '!' => Some(Tok::Bang),
            '?' => Some(Tok::Question),
            '~' => Some(Tok::Tilde),
            _ => None,
        };
        if let Some(tok) = single {
            toks.push(Token { tok, loc });
            i += 1;
            continue;
        }
        if c == ':' {
            if chars.get(i + 1) == Some(&'=') {
                toks.push(Token { tok: Tok::Define, loc });
                i += 2;
            } else {
                toks.push(Token { tok: Tok::Colon, loc });
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'\\') {
            toks.push(Token { tok: Tok::And, loc });
            i += 2;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                loc,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    loc,
                    expected: vec!["finite number".into()],
                    found: format!("`{text}`"),
                });
            }
            toks.push(Token { tok: Tok::Number(value), loc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            // `s.t.` is lexed as one token.
            if c == 's'
                && chars.get(i + 1) == Some(&'.')
                && chars.get(i + 2) == Some(&'t')
                && chars.get(i + 3) == Some(&'.')
                && !chars.get(i + 4).is_some_and(|n| n.is_alphanumeric() || *n == '_')
            {
                toks.push(Token { tok: Tok::SuchThat, loc });
                i += 4;
                continue;
            }
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                loc,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            loc,
            expected: vec!["a token".into()],
            found: format!("`{c}`"),
        });
    }
    toks.push(Token { tok: Tok::End, loc: loc_at(chars.len()) });
    Ok(toks)
}
