//! Source positions and the diagnostics catalog shared by the compiler and pre-linker.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A position in a source file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub file: String,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(file: impl Into<String>, line: u32, col: u32) -> Self {
        Span {
            file: file.into(),
            line,
            col,
        }
    }

    /// Pseudo-location used for link-time diagnostics.
    pub fn link() -> Self {
        Span::new("<link>", 0, 0)
    }

    fn key(&self) -> (&str, u32, u32) {
        (&self.file, self.line, self.col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

macro_rules! codes {
    ($($variant:ident => $text:literal,)*) => {
        /// Stable diagnostic identifiers.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[allow(non_camel_case_types)]
        pub enum Code {
            $($variant,)*
        }

        impl Code {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $text,)*
                }
            }
        }
    };
}

codes! {
    // multimethod typing anomalies (compile time)
    E_NO_APPLICABLE => "E_NO_APPLICABLE",
    E_AMBIGUOUS_RETURN => "E_AMBIGUOUS_RETURN",
    E_OVERRIDE_PARAM => "E_OVERRIDE_PARAM",
    W_NO_MOST_SPECIFIC => "W_NO_MOST_SPECIFIC",
    W_AMBIG_SUBTYPE => "W_AMBIG_SUBTYPE",
    W_LATENT_CONFLICT => "W_LATENT_CONFLICT",
    W_RETURN_CONSTRAINT => "W_RETURN_CONSTRAINT",
    // ordinary front-end and typing errors
    E_PARSE => "E_PARSE",
    E_INCLUDE => "E_INCLUDE",
    E_HEADER_BODY => "E_HEADER_BODY",
    E_TYPE => "E_TYPE",
    E_UNKNOWN_NAME => "E_UNKNOWN_NAME",
    E_UNKNOWN_CLASS => "E_UNKNOWN_CLASS",
    E_UNKNOWN_FIELD => "E_UNKNOWN_FIELD",
    E_AMBIGUOUS_FIELD => "E_AMBIGUOUS_FIELD",
    E_NO_FUNCTION => "E_NO_FUNCTION",
    E_AMBIGUOUS_CALL => "E_AMBIGUOUS_CALL",
    E_CONST_VIOLATION => "E_CONST_VIOLATION",
    E_DUPLICATE_CLASS => "E_DUPLICATE_CLASS",
    E_DUPLICATE_NAME => "E_DUPLICATE_NAME",
    E_BAD_MAIN => "E_BAD_MAIN",
    // class graph errors
    E_CYCLIC_INHERITANCE => "E_CYCLIC_INHERITANCE",
    E_UNKNOWN_PARENT => "E_UNKNOWN_PARENT",
    E_DUPLICATE_PARENT => "E_DUPLICATE_PARENT",
    E_MIXED_VIRTUALITY => "E_MIXED_VIRTUALITY",
    // shared by compile and link
    E_DUPLICATE_BODY => "E_DUPLICATE_BODY",
    E_SIGNATURE_MISMATCH => "E_SIGNATURE_MISMATCH",
    // link time
    E_CLASS_MISMATCH => "E_CLASS_MISMATCH",
    E_MISSING_BODY => "E_MISSING_BODY",
    E_NO_MAIN => "E_NO_MAIN",
    E_MULTIPLE_MAIN => "E_MULTIPLE_MAIN",
    E_LINK_AMBIGUOUS => "E_LINK_AMBIGUOUS",
    E_RETURN_CONSTRAINT => "E_RETURN_CONSTRAINT",
    E_AMBIG_POLE => "E_AMBIG_POLE",
    E_UNRESOLVED => "E_UNRESOLVED",
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub span: Span,
    pub message: String,
    pub related: Vec<Span>,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            span,
            message: message.into(),
            related: Vec::new(),
        }
    }

    pub fn warning(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            span,
            message: message.into(),
            related: Vec::new(),
        }
    }

    pub fn with_related(mut self, span: Span) -> Self {
        self.related.push(span);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.severity, self.code, self.span, self.message)
    }
}

/// Sorts diagnostics by file, position, code and message.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.span
            .key()
            .cmp(&b.span.key())
            .then(a.code.as_str().cmp(b.code.as_str()))
            .then(a.message.cmp(&b.message))
    });
}

/// One line per diagnostic, `severity code file:line:col message`, in sorted order.
pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let mut sorted = diags.to_vec();
    sort_diagnostics(&mut sorted);
    let mut out = String::new();
    for d in &sorted {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
