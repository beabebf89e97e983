use super::{ConsqlError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    DotDot,
    Semi,
    Star,
    Plus,
    Minus,
    Op(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("'{s}'"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Op(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> ConsqlError {
        ConsqlError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }
}

/// Splits `src` into tokens, dropping whitespace and `//` / `/* */`
/// comments. The last token is always [`Tok::Eof`].
pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                col,
            });
            return Ok(out);
        };
        let tok = match c {
            c if c.is_whitespace() => continue,
            '/' if cur.peek() == Some('/') => {
                while let Some(c) = cur.bump() {
                    if c == '\n' {
                        break;
                    }
                }
                continue;
            }
            '/' if cur.peek() == Some('*') => {
                cur.bump();
                let mut prev = ' ';
                loop {
                    match cur.bump() {
                        None => return Err(cur.err(line, col, "unterminated comment")),
                        Some('/') if prev == '*' => break,
                        Some(c) => prev = c,
                    }
                }
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '.' if cur.peek() == Some('.') => {
                cur.bump();
                Tok::DotDot
            }
            '.' => Tok::Dot,
            '=' => Tok::Op("="),
            '<' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    Tok::Op("<=")
                }
                Some('>') => {
                    cur.bump();
                    Tok::Op("<>")
                }
                _ => Tok::Op("<"),
            },
            '>' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Op(">=")
            }
            '>' => Tok::Op(">"),
            '!' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Op("<>")
            }
            '\'' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(cur.err(line, col, "unterminated string literal")),
                        Some('\'') if cur.peek() == Some('\'') => {
                            cur.bump();
                            s.push('\'');
                        }
                        Some('\'') => break,
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    s.push(d);
                    cur.bump();
                }
                let v = s
                    .parse()
                    .map_err(|_| cur.err(line, col, format!("integer `{s}` out of range")))?;
                Tok::Int(v)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                    s.push(d);
                    cur.bump();
                }
                Tok::Ident(s)
            }
            other => return Err(cur.err(line, col, format!("unexpected character `{other}`"))),
        };
        out.push(Token { tok, line, col });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_and_comments() {
        assert_eq!(
            toks("0..24*60-1 // tail\n/* x */ a.b"),
            vec![
                Tok::Int(0),
                Tok::DotDot,
                Tok::Int(24),
                Tok::Star,
                Tok::Int(60),
                Tok::Minus,
                Tok::Int(1),
                Tok::Ident("a".into()),
                Tok::Dot,
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("a\n  <> 'it''s'").unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
        assert_eq!(t[2].tok, Tok::Str("it's".into()));
        match tokenize("x /* open") {
            Err(ConsqlError::Syntax { line: 1, col: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
