use std::fmt;

use crate::diag::{Code, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `@name`, stored with the leading `@`.
    MmName(String),
    Int(i64),
    Float(f64),
    Str(String),
    Include,
    // keywords
    Class,
    Public,
    Private,
    Protected,
    Virtual,
    Const,
    Void,
    KwInt,
    KwBool,
    KwFloat,
    If,
    Else,
    While,
    Return,
    True,
    False,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Dot,
    Amp,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::MmName(s) => return write!(f, "`{s}`"),
            Tok::Int(v) => return write!(f, "`{v}`"),
            Tok::Float(v) => return write!(f, "`{v}`"),
            Tok::Str(_) => "string literal",
            Tok::Include => "#include",
            Tok::Class => "class",
            Tok::Public => "public",
            Tok::Private => "private",
            Tok::Protected => "protected",
            Tok::Virtual => "virtual",
            Tok::Const => "const",
            Tok::Void => "void",
            Tok::KwInt => "int",
            Tok::KwBool => "bool",
            Tok::KwFloat => "float",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Amp => "&",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Eof => "end of file",
        };
        if matches!(self, Tok::Str(_) | Tok::Eof) {
            f.write_str(s)
        } else {
            write!(f, "`{s}`")
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "class" => Tok::Class,
        "public" => Tok::Public,
        "private" => Tok::Private,
        "protected" => Tok::Protected,
        "virtual" => Tok::Virtual,
        "const" => Tok::Const,
        "void" => Tok::Void,
        "int" => Tok::KwInt,
        "bool" => Tok::KwBool,
        "float" => Tok::KwFloat,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "return" => Tok::Return,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
    tokens: Vec<Token>,
    errors: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.file, self.line, self.col)
    }

    fn push(&mut self, tok: Tok, span: Span) {
        self.tokens.push(Token { tok, span });
    }

    fn error(&mut self, span: Span, msg: impl Into<String>) {
        self.errors.push(Diagnostic::error(Code::E_PARSE, span, msg));
    }

    fn skip_trivia(&mut self) {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.span();
                    self.bump();
                    self.bump();
                    let mut closed = false;
                    while let Some(c) = self.bump() {
                        if c == '*' && self.peek() == Some('/') {
                            self.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        self.error(start, "unterminated block comment");
                    }
                }
                _ => break,
            }
        }
    }

    fn ident_tail(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, span: Span) {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let is_float = self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit());
        if is_float {
            text.push('.');
            self.bump();
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            match text.parse::<f64>() {
                Ok(v) => self.push(Tok::Float(v), span),
                Err(_) => self.error(span, format!("invalid float literal `{text}`")),
            }
        } else {
            match text.parse::<i64>() {
                Ok(v) => self.push(Tok::Int(v), span),
                Err(_) => self.error(span, format!("integer literal `{text}` out of range")),
            }
        }
    }

    fn string(&mut self, span: Span) {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    self.error(span, "unterminated string literal");
                    return;
                }
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('\\') => s.push('\\'),
                    Some('"') => s.push('"'),
                    Some('0') => s.push('\0'),
                    other => {
                        let shown = other.map(String::from).unwrap_or_default();
                        self.error(self.span(), format!("unknown escape `\\{shown}`"));
                    }
                },
                Some(c) => s.push(c),
            }
        }
        self.push(Tok::Str(s), span);
    }

    fn run(&mut self) {
        loop {
            self.skip_trivia();
            let span = self.span();
            let Some(c) = self.peek() else {
                self.push(Tok::Eof, span);
                return;
            };
            if c.is_ascii_alphabetic() || c == '_' {
                let word = self.ident_tail();
                let tok = keyword(&word).unwrap_or(Tok::Ident(word));
                self.push(tok, span);
                continue;
            }
            if c.is_ascii_digit() {
                self.number(span);
                continue;
            }
            if c == '"' {
                self.string(span);
                continue;
            }
            if c == '@' {
                self.bump();
                let name = self.ident_tail();
                if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                    self.error(span, "expected a multimethod name after `@`");
                } else {
                    self.push(Tok::MmName(format!("@{name}")), span);
                }
                continue;
            }
            if c == '#' {
                self.bump();
                let word = self.ident_tail();
                if word == "include" {
                    self.push(Tok::Include, span);
                } else {
                    self.error(span, format!("unknown directive `#{word}`"));
                }
                continue;
            }
            self.bump();
            let next = self.peek();
            let two = |lx: &mut Self, tok: Tok| {
                lx.bump();
                tok
            };
            let tok = match (c, next) {
                ('=', Some('=')) => two(self, Tok::EqEq),
                ('!', Some('=')) => two(self, Tok::NotEq),
                ('<', Some('=')) => two(self, Tok::Le),
                ('>', Some('=')) => two(self, Tok::Ge),
                ('&', Some('&')) => two(self, Tok::AndAnd),
                ('|', Some('|')) => two(self, Tok::OrOr),
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                (';', _) => Tok::Semi,
                (':', _) => Tok::Colon,
                (',', _) => Tok::Comma,
                ('.', _) => Tok::Dot,
                ('&', _) => Tok::Amp,
                ('=', _) => Tok::Assign,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('!', _) => Tok::Bang,
                ('+', _) => Tok::Plus,
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('%', _) => Tok::Percent,
                _ => {
                    self.error(span, format!("unexpected character `{c}`"));
                    continue;
                }
            };
            self.push(tok, span);
        }
    }
}

/// Splits source text into tokens; the result always ends with `Tok::Eof`.
pub fn lex(source: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
        tokens: Vec::new(),
        errors: Vec::new(),
    };
    lx.run();
    (lx.tokens, lx.errors)
}
