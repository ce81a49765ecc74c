//! Lexing and parsing of the supported Solidity subset.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod source;
pub mod span;

use std::path::PathBuf;

pub use ast::Ast;
pub use lexer::{lex, Token, TokenKind};
pub use parser::{parse, ParseOptions};
pub use printer::{expr_to_string, type_to_string};
pub use source::{ContentHash, SourceFile};
pub use span::{Diagnostic, DiagnosticKind, Severity, Span};

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("{}: invalid UTF-8 at byte {offset}", path.display())]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Lexes and parses `src`. Lexical errors are reported as diagnostics on an
/// otherwise empty tree.
pub fn parse_source(src: &str, options: &ParseOptions) -> Ast {
    match lex(src) {
        Ok(tokens) => parse(&tokens, options),
        Err(diagnostics) => Ast { diagnostics, ..Ast::default() },
    }
}

/// Parses a single expression, e.g. `pool.slot0()`.
pub fn parse_expression(src: &str) -> Result<ast::Expr, Vec<Diagnostic>> {
    let tokens = lex(src)?;
    parser::parse_expr_tokens(&tokens, &ParseOptions::default())
}
