use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// Unsigned numeric literal, digits with an optional fractional part.
    Number(String),
    Semi,
    Comma,
    Colon,
    ParBar,  // ||
    Bar,     // |
    AndAnd,  // &&
    Amp,     // &
    Bang,    // !
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Assign,     // :=
    RandAssign, // :~
    Arrow,      // <-
    EqEq,       // = or ==
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

/// Splits `src` into tokens. `//` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let two = |a: u8, b: u8| c == a && bytes.get(i + 1) == Some(&b);
        let (kind, len) = if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            (TokenKind::Ident(src[i..j].to_string()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < bytes.len() && bytes[j] == b'.' && bytes[j + 1].is_ascii_digit() {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            (TokenKind::Number(src[i..j].to_string()), j - i)
        } else if two(b'|', b'|') {
            (TokenKind::ParBar, 2)
        } else if two(b'&', b'&') {
            (TokenKind::AndAnd, 2)
        } else if two(b':', b'=') {
            (TokenKind::Assign, 2)
        } else if two(b':', b'~') {
            (TokenKind::RandAssign, 2)
        } else if two(b'<', b'-') {
            (TokenKind::Arrow, 2)
        } else if two(b'<', b'=') {
            (TokenKind::Le, 2)
        } else if two(b'>', b'=') {
            (TokenKind::Ge, 2)
        } else if two(b'!', b'=') {
            (TokenKind::Ne, 2)
        } else if two(b'=', b'=') {
            (TokenKind::EqEq, 2)
        } else {
            let k = match c {
                b';' => TokenKind::Semi,
                b',' => TokenKind::Comma,
                b':' => TokenKind::Colon,
                b'|' => TokenKind::Bar,
                b'&' => TokenKind::Amp,
                b'!' => TokenKind::Bang,
                b'+' => TokenKind::Plus,
                b'-' => TokenKind::Minus,
                b'*' => TokenKind::Star,
                b'/' => TokenKind::Slash,
                b'(' => TokenKind::LParen,
                b')' => TokenKind::RParen,
                b'{' => TokenKind::LBrace,
                b'}' => TokenKind::RBrace,
                b'[' => TokenKind::LBracket,
                b']' => TokenKind::RBracket,
                b'=' => TokenKind::EqEq,
                b'<' => TokenKind::Lt,
                b'>' => TokenKind::Gt,
                _ => {
                    let ch_len = src[i..].chars().next().map_or(1, char::len_utf8);
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        SourceSpan::new(i, i + ch_len),
                        format!("unexpected character {:?}", &src[i..i + ch_len]),
                    ));
                }
            };
            (k, 1)
        };
        i += len;
        out.push(Token { kind, span: SourceSpan::new(start, i) });
    }
    out.push(Token { kind: TokenKind::Eof, span: SourceSpan::new(src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn operators_and_literals() {
        assert_eq!(
            kinds("x := 0.25 || y :~ {1/2: 1}"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Assign,
                TokenKind::Number("0.25".into()),
                TokenKind::ParBar,
                TokenKind::Ident("y".into()),
                TokenKind::RandAssign,
                TokenKind::LBrace,
                TokenKind::Number("1".into()),
                TokenKind::Slash,
                TokenKind::Number("2".into()),
                TokenKind::Colon,
                TokenKind::Number("1".into()),
                TokenKind::RBrace,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn reset_and_comments() {
        assert_eq!(
            kinds("q1 <- |0> // reset\n"),
            vec![
                TokenKind::Ident("q1".into()),
                TokenKind::Arrow,
                TokenKind::Bar,
                TokenKind::Number("0".into()),
                TokenKind::Gt,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn bad_character_is_located() {
        let err = tokenize("skip ; ?").unwrap_err();
        assert_eq!(err.span, SourceSpan::new(7, 8));
        let err = tokenize("skip é").unwrap_err();
        assert_eq!(err.span, SourceSpan::new(5, 7));
    }
}
