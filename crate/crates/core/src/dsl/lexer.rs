use super::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digits with an optional fraction or exponent; `float` is set when
    /// either is present.
    Number {
        text: String,
        float: bool,
    },
    Str(String),
    Punct(char),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCT: &[char] = &['(', ')', ',', ';', '=', '/', ':', '{', '}'];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            let mut float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                float = true;
                s.push('.');
                advance(&mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    float = true;
                    while i < j {
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(Diagnostic::error(
                    line,
                    col,
                    format!("unexpected `{}` after number", chars[i]),
                ));
            }
            Tok::Number { text: s, float }
        } else if c == '"' {
            advance(&mut i, &mut line, &mut col);
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(Diagnostic::error(tline, tcol, "unterminated string"));
                }
                let d = chars[i];
                advance(&mut i, &mut line, &mut col);
                match d {
                    '"' => break,
                    '\\' => {
                        if i >= chars.len() {
                            return Err(Diagnostic::error(tline, tcol, "unterminated string"));
                        }
                        let e = chars[i];
                        let (eline, ecol) = (line, col);
                        advance(&mut i, &mut line, &mut col);
                        s.push(match e {
                            '"' => '"',
                            '\\' => '\\',
                            'n' => '\n',
                            't' => '\t',
                            other => {
                                return Err(Diagnostic::error(
                                    eline,
                                    ecol,
                                    format!("unknown escape `\\{other}`"),
                                ))
                            }
                        });
                    }
                    d => s.push(d),
                }
            }
            Tok::Str(s)
        } else if PUNCT.contains(&c) {
            advance(&mut i, &mut line, &mut col);
            Tok::Punct(c)
        } else {
            return Err(Diagnostic::error(
                line,
                col,
                format!("unexpected character `{}`", c.escape_debug()),
            ));
        };
        out.push(Token {
            tok,
            line: tline,
            column: tcol,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}
