use std::fmt;
use thiserror::Error;

/// Source position, 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Pos {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

macro_rules! keywords {
    ($($variant:ident => $text:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum Keyword {
            $($variant),*
        }

        impl Keyword {
            pub const ALL: &'static [Keyword] = &[$(Keyword::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Keyword::$variant => $text),*
                }
            }

            pub fn from_str(s: &str) -> Option<Keyword> {
                match s {
                    $($text => Some(Keyword::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

keywords! {
    Model => "MODEL",
    EndModel => "ENDMODEL",
    Table => "TABLE",
    Primary => "PRIMARY",
    Key => "KEY",
    Foreign => "FOREIGN",
    References => "REFERENCES",
    Commit => "COMMIT",
    Rollback => "ROLLBACK",
    If => "IF",
    Then => "THEN",
    Else => "ELSE",
    EndIf => "ENDIF",
    While => "WHILE",
    Do => "DO",
    EndWhile => "ENDWHILE",
    Read => "READ",
    Load => "LOAD",
    Select => "SELECT",
    From => "FROM",
    Where => "WHERE",
    Next => "NEXT",
    Catch => "CATCH",
    Insert => "INSERT",
    Into => "INTO",
    Values => "VALUES",
    Update => "UPDATE",
    Set => "SET",
    Delete => "DELETE",
    True => "TRUE",
    False => "FALSE",
    Nil => "NIL",
    Head => "HEAD",
    Tail => "TAIL",
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Nat(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    Eq,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    AndAnd,
    OrOr,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Keyword(k) => return f.write_str(k.as_str()),
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Nat(n) => return write!(f, "number {n}"),
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::Comma => ",",
            TokenKind::Semi => ";",
            TokenKind::Dot => ".",
            TokenKind::Eq => "=",
            TokenKind::Lt => "<",
            TokenKind::Gt => ">",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::Bang => "!",
            TokenKind::AndAnd => "&&",
            TokenKind::OrOr => "||",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub pos: Pos,
    pub found: char,
    pub message: String,
}

/// Split SimpleDB source into tokens. Whitespace only separates tokens.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = source.char_indices().peekable();
    let (mut line, mut col) = (1u32, 1u32);
    let bytes = source.as_bytes();

    let err = |pos: Pos, found: char, message: String| LexError {
        pos,
        found,
        message,
    };

    while let Some(&(start, c)) = chars.peek() {
        let pos = Pos::new(line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c == ' ' || c == '\t' || c == '\r' {
            chars.next();
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_ascii_alphanumeric() {
                    end = i + 1;
                    chars.next();
                } else {
                    break;
                }
            }
            let word = &source[start..end];
            col += word.len() as u32;
            let kind = match Keyword::from_str(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            };
            tokens.push(Token { kind, pos });
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = start;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    end = i + 1;
                    chars.next();
                } else {
                    break;
                }
            }
            let digits = &source[start..end];
            if let Some(&(_, d)) = chars.peek() {
                if d.is_ascii_alphabetic() {
                    let at = Pos::new(line, col + digits.len() as u32);
                    return Err(err(
                        at,
                        d,
                        format!("number `{digits}` runs into `{d}`; separate them"),
                    ));
                }
            }
            if digits.len() > 1 && digits.starts_with('0') {
                return Err(err(
                    pos,
                    '0',
                    format!("number `{digits}` has a leading zero"),
                ));
            }
            let n = digits.parse::<u64>().map_err(|_| {
                err(pos, bytes[start] as char, format!("number `{digits}` is too large"))
            })?;
            col += digits.len() as u32;
            tokens.push(Token {
                kind: TokenKind::Nat(n),
                pos,
            });
            continue;
        }

        chars.next();
        let two = |chars: &mut std::iter::Peekable<std::str::CharIndices>, want: char| {
            if matches!(chars.peek(), Some(&(_, d)) if d == want) {
                chars.next();
                true
            } else {
                false
            }
        };
        let kind = match c {
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            ',' => TokenKind::Comma,
            ';' => TokenKind::Semi,
            '.' => TokenKind::Dot,
            '=' => TokenKind::Eq,
            '<' => TokenKind::Lt,
            '>' => TokenKind::Gt,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '!' => TokenKind::Bang,
            '&' if two(&mut chars, '&') => {
                col += 1;
                TokenKind::AndAnd
            }
            '|' if two(&mut chars, '|') => {
                col += 1;
                TokenKind::OrOr
            }
            other => {
                return Err(err(pos, other, format!("unexpected character `{other}`")));
            }
        };
        col += 1;
        tokens.push(Token { kind, pos });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn model_header() {
        assert_eq!(
            kinds("MODEL example"),
            vec![
                TokenKind::Keyword(Keyword::Model),
                TokenKind::Ident("example".into())
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
        assert!(kinds(" \n\t ").is_empty());
    }

    #[test]
    fn number_glued_to_identifier() {
        let e = tokenize("42abc").unwrap_err();
        assert_eq!(e.found, 'a');
        assert_eq!(e.pos, Pos::new(1, 3));
    }

    #[test]
    fn leading_zero_rejected() {
        assert!(tokenize("007").is_err());
        assert_eq!(kinds("0"), vec![TokenKind::Nat(0)]);
    }

    #[test]
    fn operators_and_positions() {
        let toks = tokenize("x = (a && b);\n  y.HEAD").unwrap();
        let k: Vec<_> = toks.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(
            k,
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Eq,
                TokenKind::LParen,
                TokenKind::Ident("a".into()),
                TokenKind::AndAnd,
                TokenKind::Ident("b".into()),
                TokenKind::RParen,
                TokenKind::Semi,
                TokenKind::Ident("y".into()),
                TokenKind::Dot,
                TokenKind::Keyword(Keyword::Head),
            ]
        );
        assert_eq!(toks[4].pos, Pos::new(1, 8));
        assert_eq!(toks[8].pos, Pos::new(2, 3));
    }

    #[test]
    fn lone_ampersand_is_an_error() {
        let e = tokenize("a & b").unwrap_err();
        assert_eq!(e.found, '&');
        assert!(tokenize("a | b").is_err());
        assert!(tokenize("x # y").is_err());
    }

    #[test]
    fn keywords_are_case_sensitive() {
        assert_eq!(kinds("Model"), vec![TokenKind::Ident("Model".into())]);
    }
}
