use super::diagnostic::{ParseCode, ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Thing,
    Sphere,
    Machine,
    Of,
    Stages,
    Flow,
    Trigger,
    Junction,
    When,
    And,
    Or,
    Not,
    Tick,
    Int,
}

impl Keyword {
    fn from_word(w: &str) -> Option<Keyword> {
        Some(match w {
            "thing" => Keyword::Thing,
            "sphere" => Keyword::Sphere,
            "machine" => Keyword::Machine,
            "of" => Keyword::Of,
            "stages" => Keyword::Stages,
            "flow" => Keyword::Flow,
            "trigger" => Keyword::Trigger,
            "junction" => Keyword::Junction,
            "when" => Keyword::When,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "not" => Keyword::Not,
            "tick" => Keyword::Tick,
            "int" => Keyword::Int,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Kw(Keyword),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Colon,
    Pipe,
    Arrow,
    FatArrow,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Kw(k) => format!("keyword `{}`", format!("{k:?}").to_lowercase()),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: Pos,
    /// Length in characters (0 only for end of file).
    pub len: u32,
    /// First token on its line.
    pub line_start: bool,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

pub fn span_at(file: &str, pos: Pos, len: u32) -> SourceSpan {
    SourceSpan { file: file.to_string(), line: pos.line, column: pos.column, length: len.max(1) }
}

/// Splits source text into tokens, collecting lexical errors.
pub fn tokenize(file: &str, text: &str) -> (Vec<Token>, Vec<ParseDiagnostic>) {
    let mut cur = Cursor { chars: text.chars().peekable(), pos: Pos { line: 1, column: 1 } };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut last_line = 0;
    loop {
        // skip whitespace and comments
        while let Some(c) = cur.peek() {
            if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else if c.is_whitespace() {
                cur.bump();
            } else {
                break;
            }
        }
        let start = cur.pos;
        let line_start = start.line != last_line;
        let Some(c) = cur.bump() else {
            tokens.push(Token { tok: Tok::Eof, start, len: 0, line_start });
            break;
        };
        let mut len = 1;
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '.' => Tok::Dot,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '|' => Tok::Pipe,
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                len = 2;
                Tok::Arrow
            }
            '=' if cur.peek() == Some('>') => {
                cur.bump();
                len = 2;
                Tok::FatArrow
            }
            '=' => Tok::Eq,
            '<' | '>' => {
                let or_equal = cur.peek() == Some('=');
                if or_equal {
                    cur.bump();
                    len = 2;
                }
                match (c, or_equal) {
                    ('<', false) => Tok::Lt,
                    ('<', true) => Tok::Le,
                    ('>', false) => Tok::Gt,
                    _ => Tok::Ge,
                }
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                len = digits.len() as u32;
                match digits.parse() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        errors.push(ParseDiagnostic::error(
                            ParseCode::Lexical,
                            format!("integer literal `{digits}` is out of range"),
                            span_at(file, start, len),
                        ));
                        continue;
                    }
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::from(c);
                loop {
                    match cur.peek() {
                        Some(d) if d.is_ascii_alphanumeric() || d == '_' => {}
                        Some('-') => {
                            // `a->b` lexes as `a`, `->`, `b`
                            let mut ahead = cur.chars.clone();
                            ahead.next();
                            if ahead.peek() == Some(&'>') {
                                break;
                            }
                        }
                        _ => break,
                    }
                    word.push(cur.bump().unwrap());
                }
                len = word.chars().count() as u32;
                match Keyword::from_word(&word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(word),
                }
            }
            other => {
                errors.push(ParseDiagnostic::error(
                    ParseCode::Lexical,
                    format!("unexpected character `{}`", other.escape_default()),
                    span_at(file, start, 1),
                ));
                continue;
            }
        };
        last_line = start.line;
        tokens.push(Token { tok, start, len, line_start });
    }
    (tokens, errors)
}
