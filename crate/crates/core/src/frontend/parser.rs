//! Recursive-descent parser over the token stream produced by [`lex`].
//!
//! Syntax errors are recorded as diagnostics and the parser resynchronizes
//! at the next member or statement boundary, so a single malformed function
//! does not hide the rest of the file.
//!
//! [`lex`]: super::lexer::lex

use super::ast::*;
use super::lexer::{Keyword, Punct, Token, TokenKind};
use super::span::{Diagnostic, DiagnosticKind, Severity, Span};

const MAX_DEPTH: usize = 64;

const ETHER_UNITS: &[&str] = &["wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Severity attached to `UnsupportedConstruct` diagnostics.
    pub unsupported_severity: Severity,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { unsupported_severity: Severity::Warning }
    }
}

/// Marker for "a diagnostic was already recorded; unwind to a sync point".
#[derive(Debug)]
struct Recover;

type PResult<T> = Result<T, Recover>;

pub fn parse(tokens: &[Token], options: &ParseOptions) -> Ast {
    let mut p = Parser { tokens, pos: 0, diags: Vec::new(), depth: 0, options: *options };
    let mut ast = Ast::default();
    p.source_unit(&mut ast);
    ast.diagnostics = p.diags;
    ast
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    diags: Vec<Diagnostic>,
    depth: usize,
    options: ParseOptions,
}

impl<'t> Parser<'t> {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self.eof_span(),
        }
    }

    fn eof_span(&self) -> Span {
        match self.tokens.last() {
            Some(t) => Span::new(t.span.end, t.span.end, t.span.line, t.span.col + t.span.len() as u32),
            None => Span::new(0, 0, 1, 1),
        }
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            return self.span();
        }
        self.tokens[self.pos - 1].span
    }

    /// Span from `start` through the last consumed token.
    fn since(&self, start: Span) -> Span {
        start.to(self.prev_span())
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos)?;
        self.pos += 1;
        Some(t)
    }

    fn at_punct(&self, p: Punct) -> bool {
        self.peek() == Some(&TokenKind::Punct(p))
    }

    fn at_punct_n(&self, n: usize, p: Punct) -> bool {
        self.peek_at(n) == Some(&TokenKind::Punct(p))
    }

    fn at_kw(&self, k: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(k))
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(n)) if n == name)
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.at_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: Punct) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump().unwrap().span)
        } else {
            Err(self.syntax_error(&[&format!("`{}`", p.as_str())]))
        }
    }

    fn expect_ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let span = self.bump().unwrap().span;
                Ok(Ident { name: name.clone(), span })
            }
            _ => Err(self.syntax_error(&["identifier"])),
        }
    }

    /// Identifier-like word, including keywords (used after `.`).
    fn expect_word(&mut self) -> PResult<Ident> {
        let name = match self.peek() {
            Some(TokenKind::Ident(n)) | Some(TokenKind::Type(n)) => n.clone(),
            Some(TokenKind::Keyword(k)) => k.as_str().to_string(),
            _ => return Err(self.syntax_error(&["member name"])),
        };
        let span = self.bump().unwrap().span;
        Ok(Ident { name, span })
    }

    fn syntax_error(&mut self, expected: &[&str]) -> Recover {
        let span = self.span();
        let found = match self.peek() {
            Some(k) => k.describe(),
            None => "end of input".to_string(),
        };
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        let message = format!("expected {}, found {}", expected.join(" or "), found);
        self.diags.push(Diagnostic::error(DiagnosticKind::SyntaxError { expected }, span, message));
        Recover
    }

    fn unsupported(&mut self, construct: &str, span: Span) {
        let d = Diagnostic {
            severity: self.options.unsupported_severity,
            span,
            kind: DiagnosticKind::UnsupportedConstruct { construct: construct.to_string() },
            message: format!("unsupported construct: {construct}"),
        };
        self.diags.push(d);
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let span = self.span();
            self.diags.push(Diagnostic::error(DiagnosticKind::NestingTooDeep, span, "nesting too deep"));
            self.depth -= 1;
            return Err(Recover);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Skips a balanced `{...}`, `(...)` or `[...]` group starting at the
    /// current opening token, returning the raw token spellings.
    fn skip_balanced(&mut self) -> Vec<String> {
        let mut text = Vec::new();
        let mut depth = 0usize;
        while let Some(t) = self.bump() {
            text.push(token_text(&t.kind));
            match t.kind {
                TokenKind::Punct(Punct::LBrace | Punct::LParen | Punct::LBracket) => depth += 1,
                TokenKind::Punct(Punct::RBrace | Punct::RParen | Punct::RBracket) => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        break;
                    }
                }
                _ => {}
            }
            if depth == 0 {
                break;
            }
        }
        text
    }

    /// Recovery: skip to just past the next `;` at nesting level zero, or
    /// past a balanced `{...}` group, without crossing an enclosing `}`.
    fn sync_member(&mut self) {
        while let Some(k) = self.peek() {
            match k {
                TokenKind::Punct(Punct::Semi) => {
                    self.pos += 1;
                    return;
                }
                TokenKind::Punct(Punct::RBrace) => return,
                TokenKind::Punct(Punct::LBrace) => {
                    self.skip_balanced();
                    return;
                }
                TokenKind::Punct(Punct::LParen | Punct::LBracket) => {
                    self.skip_balanced();
                }
                _ => self.pos += 1,
            }
        }
    }

    fn sync_statement(&mut self) {
        self.sync_member();
    }

    // ---- source unit ---------------------------------------------------

    fn source_unit(&mut self, ast: &mut Ast) {
        while let Some(k) = self.peek() {
            let start = self.span();
            let res = match k {
                TokenKind::Keyword(Keyword::Pragma) => self.pragma().map(|p| ast.pragmas.push(p)),
                TokenKind::Keyword(Keyword::Import) => self.import().map(|i| ast.imports.push(i)),
                TokenKind::Keyword(Keyword::Contract | Keyword::Interface | Keyword::Library | Keyword::Abstract) => {
                    self.contract().map(|c| ast.contracts.push(c))
                }
                TokenKind::Keyword(Keyword::Struct | Keyword::Enum | Keyword::Event | Keyword::Using) => {
                    // File-level declarations carry no permission logic.
                    self.sync_member();
                    Ok(())
                }
                TokenKind::Ident(w) if w == "error" || w == "type" => {
                    self.sync_member();
                    Ok(())
                }
                TokenKind::Keyword(Keyword::Function) => {
                    self.unsupported("free function", start);
                    self.sync_member();
                    Ok(())
                }
                TokenKind::Type(_) | TokenKind::Ident(_) | TokenKind::Keyword(Keyword::Mapping) => {
                    self.unsupported("file-level constant", start);
                    self.sync_member();
                    Ok(())
                }
                _ => Err(self.syntax_error(&["`pragma`", "`import`", "`contract`", "`interface`", "`library`"])),
            };
            if res.is_err() {
                self.sync_top_level(start);
            }
        }
    }

    fn sync_top_level(&mut self, start: Span) {
        if self.span() == start {
            self.pos += 1;
        }
        while let Some(k) = self.peek() {
            if matches!(
                k,
                TokenKind::Keyword(
                    Keyword::Contract | Keyword::Interface | Keyword::Library | Keyword::Abstract | Keyword::Pragma | Keyword::Import
                )
            ) {
                return;
            }
            self.pos += 1;
        }
    }

    fn pragma(&mut self) -> PResult<Pragma> {
        let start = self.bump().unwrap().span;
        let mut text = String::new();
        let mut prev_end = None;
        while let Some(t) = self.tokens.get(self.pos) {
            if t.kind == TokenKind::Punct(Punct::Semi) {
                break;
            }
            // Tokens that touched in the source stay glued (`^0.8` `.0`).
            if prev_end.is_some_and(|e| e != t.span.start) {
                text.push(' ');
            }
            text.push_str(&token_text(&t.kind));
            prev_end = Some(t.span.end);
            self.pos += 1;
        }
        self.expect_punct(Punct::Semi)?;
        Ok(Pragma { text, span: self.since(start) })
    }

    fn import(&mut self) -> PResult<Import> {
        let start = self.bump().unwrap().span;
        let mut path = None;
        let mut aliased = false;
        while let Some(k) = self.peek() {
            match k {
                TokenKind::Punct(Punct::Semi) => break,
                TokenKind::Str(s) if path.is_none() => path = Some(s.clone()),
                TokenKind::Punct(Punct::LBrace | Punct::Star) => aliased = true,
                TokenKind::Ident(w) if w == "as" => aliased = true,
                _ => {}
            }
            self.pos += 1;
        }
        self.expect_punct(Punct::Semi)?;
        let span = self.since(start);
        if aliased {
            self.unsupported("aliased import", span);
        }
        match path {
            Some(path) => Ok(Import { path, span }),
            None => Err(self.syntax_error(&["import path"])),
        }
    }

    // ---- contracts -----------------------------------------------------

    fn contract(&mut self) -> PResult<ContractDecl> {
        let start = self.span();
        let abstract_ = self.eat_kw(Keyword::Abstract);
        let kind = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Contract)) if abstract_ => ContractKind::AbstractContract,
            Some(TokenKind::Keyword(Keyword::Contract)) => ContractKind::Contract,
            Some(TokenKind::Keyword(Keyword::Interface)) if !abstract_ => ContractKind::Interface,
            Some(TokenKind::Keyword(Keyword::Library)) if !abstract_ => ContractKind::Library,
            _ => return Err(self.syntax_error(&["`contract`", "`interface`", "`library`"])),
        };
        self.pos += 1;
        let name = self.expect_ident()?;
        let mut decl = ContractDecl::new(name, kind, start);

        if self.eat_kw(Keyword::Is) {
            loop {
                let bstart = self.span();
                let mut base = self.expect_ident()?;
                while self.eat_punct(Punct::Dot) {
                    let part = self.expect_ident()?;
                    base.name = part.name;
                    base.span = base.span.to(part.span);
                }
                let args = if self.at_punct(Punct::LParen) { self.call_args()?.0 } else { Vec::new() };
                decl.bases.push(BaseSpec { name: base, args, span: self.since(bstart) });
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }

        self.expect_punct(Punct::LBrace)?;
        while !self.at_punct(Punct::RBrace) {
            if self.peek().is_none() {
                return Err(self.syntax_error(&["`}`"]));
            }
            let before = self.pos;
            if self.member(&mut decl).is_err() {
                self.sync_member();
                if self.pos == before {
                    self.pos += 1;
                }
            }
        }
        self.expect_punct(Punct::RBrace)?;
        decl.span = self.since(start);
        Ok(decl)
    }

    fn member(&mut self, decl: &mut ContractDecl) -> PResult<()> {
        let start = self.span();
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Function | Keyword::Constructor | Keyword::Fallback | Keyword::Receive)) => {
                // `fallback`/`receive` are only special when followed by `(`.
                if matches!(self.peek(), Some(TokenKind::Keyword(Keyword::Fallback | Keyword::Receive)))
                    && !self.at_punct_n(1, Punct::LParen)
                {
                    let v = self.state_var()?;
                    decl.state_vars.push(v);
                } else {
                    let f = self.function()?;
                    decl.functions.push(f);
                }
            }
            Some(TokenKind::Keyword(Keyword::Modifier)) => {
                let m = self.modifier()?;
                decl.modifiers.push(m);
            }
            Some(TokenKind::Keyword(Keyword::Event)) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                let params = self.param_list(true)?;
                self.eat_kw(Keyword::Anonymous);
                self.expect_punct(Punct::Semi)?;
                decl.events.push(EventDecl { name, params, span: self.since(start) });
            }
            Some(TokenKind::Ident(w)) if w == "error" && matches!(self.peek_at(1), Some(TokenKind::Ident(_))) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                let params = self.param_list(false)?;
                self.expect_punct(Punct::Semi)?;
                decl.errors.push(EventDecl { name, params, span: self.since(start) });
            }
            Some(TokenKind::Ident(w)) if w == "type" && matches!(self.peek_at(1), Some(TokenKind::Ident(_))) => {
                self.unsupported("user-defined value type", start);
                self.sync_member();
            }
            Some(TokenKind::Keyword(Keyword::Struct)) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                self.expect_punct(Punct::LBrace)?;
                let mut fields = Vec::new();
                while !self.eat_punct(Punct::RBrace) {
                    let fstart = self.span();
                    let ty = self.type_name()?;
                    let fname = self.expect_ident()?;
                    self.expect_punct(Punct::Semi)?;
                    fields.push(Param { ty, name: Some(fname), span: self.since(fstart) });
                }
                decl.structs.push(StructDecl { name, fields, span: self.since(start) });
            }
            Some(TokenKind::Keyword(Keyword::Enum)) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                self.expect_punct(Punct::LBrace)?;
                let mut variants = Vec::new();
                while !self.at_punct(Punct::RBrace) {
                    variants.push(self.expect_ident()?);
                    if !self.eat_punct(Punct::Comma) {
                        break;
                    }
                }
                self.expect_punct(Punct::RBrace)?;
                decl.enums.push(EnumDecl { name, variants, span: self.since(start) });
            }
            Some(TokenKind::Keyword(Keyword::Using)) => {
                let u = self.using()?;
                decl.using.push(u);
            }
            _ => {
                let v = self.state_var()?;
                decl.state_vars.push(v);
            }
        }
        Ok(())
    }

    fn using(&mut self) -> PResult<UsingDirective> {
        let start = self.bump().unwrap().span;
        if self.at_punct(Punct::LBrace) {
            let text = self.skip_balanced();
            if text.iter().any(|t| t == "as") {
                self.unsupported("user-defined operator", self.since(start));
            }
            self.sync_member();
            return Ok(UsingDirective { library: String::new(), target: None, span: self.since(start) });
        }
        let mut library = self.expect_ident()?.name;
        while self.eat_punct(Punct::Dot) {
            library = self.expect_ident()?.name;
        }
        if !self.eat_kw(Keyword::For) {
            return Err(self.syntax_error(&["`for`"]));
        }
        let target = if self.eat_punct(Punct::Star) { None } else { Some(self.type_name()?) };
        if self.at_ident("global") {
            self.pos += 1;
        }
        self.expect_punct(Punct::Semi)?;
        Ok(UsingDirective { library, target, span: self.since(start) })
    }

    fn state_var(&mut self) -> PResult<StateVarDecl> {
        let start = self.span();
        let ty = self.type_name()?;
        let mut visibility = Visibility::Internal;
        let (mut constant, mut immutable) = (false, false);
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Public)) => visibility = Visibility::Public,
                Some(TokenKind::Keyword(Keyword::Private)) => visibility = Visibility::Private,
                Some(TokenKind::Keyword(Keyword::Internal)) => visibility = Visibility::Internal,
                Some(TokenKind::Keyword(Keyword::External)) => visibility = Visibility::External,
                Some(TokenKind::Keyword(Keyword::Constant)) => constant = true,
                Some(TokenKind::Keyword(Keyword::Immutable)) => immutable = true,
                Some(TokenKind::Ident(w)) if w == "transient" => {}
                Some(TokenKind::Keyword(Keyword::Override)) => {
                    self.pos += 1;
                    if self.at_punct(Punct::LParen) {
                        self.skip_balanced();
                    }
                    continue;
                }
                _ => break,
            }
            self.pos += 1;
        }
        let name = self.expect_ident()?;
        let initializer = if self.eat_punct(Punct::Assign) { Some(self.expr()?) } else { None };
        self.expect_punct(Punct::Semi)?;
        Ok(StateVarDecl { name, ty, visibility, constant, immutable, initializer, span: self.since(start) })
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let start = self.span();
        let head = self.bump().unwrap();
        let (mut kind, mut name, mut name_span) = match head.kind {
            TokenKind::Keyword(Keyword::Constructor) => (FunctionKind::Constructor, String::new(), head.span),
            TokenKind::Keyword(Keyword::Fallback) => (FunctionKind::Fallback, String::new(), head.span),
            TokenKind::Keyword(Keyword::Receive) => (FunctionKind::Receive, String::new(), head.span),
            _ => (FunctionKind::Function, String::new(), head.span),
        };
        if kind == FunctionKind::Function {
            match self.peek() {
                Some(TokenKind::Ident(_)) => {
                    let id = self.expect_ident()?;
                    name = id.name;
                    name_span = id.span;
                }
                Some(TokenKind::Keyword(k @ (Keyword::Fallback | Keyword::Receive))) => {
                    // Pre-0.6 code may still use these as ordinary names.
                    name = k.as_str().to_string();
                    name_span = self.bump().unwrap().span;
                }
                Some(TokenKind::Punct(Punct::LParen)) => kind = FunctionKind::Fallback,
                _ => return Err(self.syntax_error(&["function name"])),
            }
        }
        let params = self.param_list(false)?;

        let mut visibility = None;
        let mut mutability = Mutability::Nonpayable;
        let (mut is_virtual, mut is_override) = (false, false);
        let mut modifiers_invoked = Vec::new();
        let mut returns = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Public)) => visibility = Some(Visibility::Public),
                Some(TokenKind::Keyword(Keyword::External)) => visibility = Some(Visibility::External),
                Some(TokenKind::Keyword(Keyword::Internal)) => visibility = Some(Visibility::Internal),
                Some(TokenKind::Keyword(Keyword::Private)) => visibility = Some(Visibility::Private),
                Some(TokenKind::Keyword(Keyword::Pure)) => mutability = Mutability::Pure,
                Some(TokenKind::Keyword(Keyword::View | Keyword::Constant)) => mutability = Mutability::View,
                Some(TokenKind::Keyword(Keyword::Payable)) => mutability = Mutability::Payable,
                Some(TokenKind::Keyword(Keyword::Virtual)) => is_virtual = true,
                Some(TokenKind::Keyword(Keyword::Override)) => {
                    is_override = true;
                    self.pos += 1;
                    if self.at_punct(Punct::LParen) {
                        self.skip_balanced();
                    }
                    continue;
                }
                Some(TokenKind::Keyword(Keyword::Returns)) => {
                    self.pos += 1;
                    returns = self.param_list(false)?;
                    continue;
                }
                Some(TokenKind::Ident(_)) => {
                    let mstart = self.span();
                    let mut mname = self.expect_ident()?;
                    while self.eat_punct(Punct::Dot) {
                        let part = self.expect_ident()?;
                        mname.name = part.name;
                        mname.span = mname.span.to(part.span);
                    }
                    let args = if self.at_punct(Punct::LParen) { self.call_args()?.0 } else { Vec::new() };
                    modifiers_invoked.push(ModifierInvocation { name: mname, args, span: self.since(mstart) });
                    continue;
                }
                _ => break,
            }
            self.pos += 1;
        }
        let body = if self.eat_punct(Punct::Semi) {
            None
        } else if self.at_punct(Punct::LBrace) {
            Some(self.block()?)
        } else {
            return Err(self.syntax_error(&["`{`", "`;`"]));
        };
        let visibility = visibility.unwrap_or(match kind {
            FunctionKind::Fallback | FunctionKind::Receive => Visibility::External,
            _ => Visibility::Public,
        });
        Ok(FunctionDecl {
            name,
            name_span,
            kind,
            params,
            returns,
            visibility,
            mutability,
            modifiers_invoked,
            is_virtual,
            is_override,
            body,
            span: self.since(start),
        })
    }

    fn modifier(&mut self) -> PResult<ModifierDecl> {
        let start = self.bump().unwrap().span;
        let name = self.expect_ident()?;
        let params = if self.at_punct(Punct::LParen) { self.param_list(false)? } else { Vec::new() };
        let mut is_virtual = false;
        loop {
            if self.eat_kw(Keyword::Virtual) {
                is_virtual = true;
            } else if self.eat_kw(Keyword::Override) {
                if self.at_punct(Punct::LParen) {
                    self.skip_balanced();
                }
            } else {
                break;
            }
        }
        let body = if self.eat_punct(Punct::Semi) { None } else { Some(self.block()?) };
        Ok(ModifierDecl { name, params, is_virtual, body, span: self.since(start) })
    }

    fn param_list(&mut self, allow_indexed: bool) -> PResult<Vec<Param>> {
        self.expect_punct(Punct::LParen)?;
        let mut params = Vec::new();
        if self.eat_punct(Punct::RParen) {
            return Ok(params);
        }
        loop {
            let start = self.span();
            let ty = self.type_name()?;
            loop {
                if self.eat_kw(Keyword::Memory) || self.eat_kw(Keyword::Storage) || self.eat_kw(Keyword::Calldata) {
                    continue;
                }
                if allow_indexed && self.eat_kw(Keyword::Indexed) {
                    continue;
                }
                break;
            }
            let name = if matches!(self.peek(), Some(TokenKind::Ident(_))) { Some(self.expect_ident()?) } else { None };
            params.push(Param { ty, name, span: self.since(start) });
            if !self.eat_punct(Punct::Comma) {
                break;
            }
        }
        self.expect_punct(Punct::RParen)?;
        Ok(params)
    }

    // ---- types ---------------------------------------------------------

    fn type_name(&mut self) -> PResult<TypeName> {
        self.enter()?;
        let r = self.type_name_inner();
        self.leave();
        r
    }

    fn type_name_inner(&mut self) -> PResult<TypeName> {
        let mut ty = match self.peek() {
            Some(TokenKind::Type(t)) => {
                let t = t.clone();
                self.pos += 1;
                if t == "address" {
                    self.eat_kw(Keyword::Payable);
                }
                TypeName::Elementary(t)
            }
            Some(TokenKind::Keyword(Keyword::Mapping)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let key = self.type_name()?;
                if matches!(self.peek(), Some(TokenKind::Ident(_))) {
                    self.pos += 1;
                }
                self.expect_punct(Punct::Arrow)?;
                let value = self.type_name()?;
                if matches!(self.peek(), Some(TokenKind::Ident(_))) {
                    self.pos += 1;
                }
                self.expect_punct(Punct::RParen)?;
                TypeName::Mapping(Box::new(key), Box::new(value))
            }
            Some(TokenKind::Keyword(Keyword::Function)) => {
                self.pos += 1;
                if !self.at_punct(Punct::LParen) {
                    return Err(self.syntax_error(&["`(`"]));
                }
                self.skip_balanced();
                while let Some(TokenKind::Keyword(
                    Keyword::External | Keyword::Internal | Keyword::Pure | Keyword::View | Keyword::Payable,
                )) = self.peek()
                {
                    self.pos += 1;
                }
                if self.eat_kw(Keyword::Returns) && self.at_punct(Punct::LParen) {
                    self.skip_balanced();
                }
                TypeName::Function
            }
            Some(TokenKind::Ident(_)) => {
                let mut path = vec![self.expect_ident()?.name];
                while self.at_punct(Punct::Dot) && matches!(self.peek_at(1), Some(TokenKind::Ident(_))) {
                    self.pos += 1;
                    path.push(self.expect_ident()?.name);
                }
                TypeName::UserDefined(path)
            }
            _ => return Err(self.syntax_error(&["type name"])),
        };
        while self.at_punct(Punct::LBracket) {
            let text = self.skip_balanced();
            let inner = &text[1..text.len().saturating_sub(1)];
            let len = if inner.is_empty() { None } else { Some(inner.join("")) };
            ty = TypeName::Array(Box::new(ty), len);
        }
        Ok(ty)
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_punct(Punct::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at_punct(Punct::RBrace) {
            if self.peek().is_none() {
                return Err(self.syntax_error(&["`}`"]));
            }
            let before = self.pos;
            match self.statement() {
                Ok(s) => stmts.push(s),
                Err(Recover) => {
                    if self.depth > 0 {
                        // Unwinding out of an over-deep nest; let callers resync.
                        return Err(Recover);
                    }
                    self.sync_statement();
                    if self.pos == before {
                        self.pos += 1;
                    }
                }
            }
        }
        self.expect_punct(Punct::RBrace)?;
        Ok(Block { stmts, span: self.since(start) })
    }

    fn statement(&mut self) -> PResult<Stmt> {
        self.enter()?;
        let r = self.statement_inner();
        self.leave();
        r
    }

    fn statement_inner(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Punct(Punct::LBrace)) => StmtKind::Block(self.block()?),
            Some(TokenKind::Keyword(Keyword::Unchecked)) if self.at_punct_n(1, Punct::LBrace) => {
                self.pos += 1;
                StmtKind::Block(self.block()?)
            }
            Some(TokenKind::Keyword(Keyword::If)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let cond = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                let then_branch = Box::new(self.statement()?);
                let else_branch = if self.eat_kw(Keyword::Else) { Some(Box::new(self.statement()?)) } else { None };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Some(TokenKind::Keyword(Keyword::For)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let init = if self.eat_punct(Punct::Semi) {
                    None
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                let cond = if self.at_punct(Punct::Semi) { None } else { Some(self.expr()?) };
                self.expect_punct(Punct::Semi)?;
                let step = if self.at_punct(Punct::RParen) { None } else { Some(self.expr()?) };
                self.expect_punct(Punct::RParen)?;
                let body = Box::new(self.statement()?);
                StmtKind::For { init, cond, step, body }
            }
            Some(TokenKind::Keyword(Keyword::While)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let cond = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                let body = Box::new(self.statement()?);
                StmtKind::While { cond, body }
            }
            Some(TokenKind::Keyword(Keyword::Do)) => {
                self.pos += 1;
                let body = Box::new(self.statement()?);
                if !self.eat_kw(Keyword::While) {
                    return Err(self.syntax_error(&["`while`"]));
                }
                self.expect_punct(Punct::LParen)?;
                let cond = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                self.expect_punct(Punct::Semi)?;
                StmtKind::DoWhile { body, cond }
            }
            Some(TokenKind::Keyword(Keyword::Return)) => {
                self.pos += 1;
                let value = if self.at_punct(Punct::Semi) { None } else { Some(self.expr()?) };
                self.expect_punct(Punct::Semi)?;
                StmtKind::Return(value)
            }
            Some(TokenKind::Keyword(Keyword::Require)) if self.at_punct_n(1, Punct::LParen) => {
                self.pos += 1;
                let (mut args, _) = self.call_args()?;
                self.expect_punct(Punct::Semi)?;
                if args.is_empty() {
                    return Err(self.syntax_error_at(start, &["condition"]));
                }
                let cond = args.remove(0);
                StmtKind::Require { cond, message: args.into_iter().next() }
            }
            Some(TokenKind::Keyword(Keyword::Revert)) => {
                self.pos += 1;
                let value = if self.at_punct(Punct::LParen) {
                    let (args, _) = self.call_args()?;
                    args.into_iter().next()
                } else if self.at_punct(Punct::Semi) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(Punct::Semi)?;
                StmtKind::Revert(value)
            }
            Some(TokenKind::Keyword(Keyword::Emit)) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(Punct::Semi)?;
                StmtKind::Emit(e)
            }
            Some(TokenKind::Keyword(Keyword::Break)) => {
                self.pos += 1;
                self.expect_punct(Punct::Semi)?;
                StmtKind::Break
            }
            Some(TokenKind::Keyword(Keyword::Continue)) => {
                self.pos += 1;
                self.expect_punct(Punct::Semi)?;
                StmtKind::Continue
            }
            Some(TokenKind::Ident(w)) if w == "_" && self.at_punct_n(1, Punct::Semi) => {
                self.pos += 2;
                StmtKind::Placeholder
            }
            Some(TokenKind::Keyword(Keyword::Assembly)) => {
                self.pos += 1;
                let mut text = vec!["assembly".to_string()];
                while !self.at_punct(Punct::LBrace) {
                    match self.bump() {
                        Some(t) => text.push(token_text(&t.kind)),
                        None => return Err(self.syntax_error(&["`{`"])),
                    }
                }
                text.extend(self.skip_balanced());
                self.unsupported("inline assembly", self.since(start));
                StmtKind::Unsupported { construct: "assembly".into(), text: text.join(" ") }
            }
            Some(TokenKind::Keyword(Keyword::Try)) => {
                let mut text = Vec::new();
                while !self.at_punct(Punct::LBrace) {
                    match self.bump() {
                        Some(t) => text.push(token_text(&t.kind)),
                        None => return Err(self.syntax_error(&["`{`"])),
                    }
                }
                text.extend(self.skip_balanced());
                while self.at_kw(Keyword::Catch) {
                    while !self.at_punct(Punct::LBrace) {
                        match self.bump() {
                            Some(t) => text.push(token_text(&t.kind)),
                            None => return Err(self.syntax_error(&["`{`"])),
                        }
                    }
                    text.extend(self.skip_balanced());
                }
                self.unsupported("try/catch", self.since(start));
                StmtKind::Unsupported { construct: "try/catch".into(), text: text.join(" ") }
            }
            _ => return self.simple_statement(),
        };
        Ok(Stmt { kind, span: self.since(start) })
    }

    fn syntax_error_at(&mut self, span: Span, expected: &[&str]) -> Recover {
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        let message = format!("expected {}", expected.join(" or "));
        self.diags.push(Diagnostic::error(DiagnosticKind::SyntaxError { expected }, span, message));
        Recover
    }

    /// Variable declaration or expression statement, including the `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        if let Some(vars) = self.try_var_decl_head() {
            let init = if self.eat_punct(Punct::Assign) { Some(self.expr()?) } else { None };
            self.expect_punct(Punct::Semi)?;
            return Ok(Stmt { kind: StmtKind::VarDecl { vars, init }, span: self.since(start) });
        }
        let e = self.expr()?;
        self.expect_punct(Punct::Semi)?;
        Ok(Stmt { kind: StmtKind::Expr(e), span: self.since(start) })
    }

    /// Speculatively parses `Type [loc] name` or `(Type [loc] name, , ...)`.
    /// Restores position and discards diagnostics when it does not match.
    fn try_var_decl_head(&mut self) -> Option<Vec<Option<LocalVar>>> {
        let (saved_pos, saved_diags) = (self.pos, self.diags.len());
        let result = if self.at_punct(Punct::LParen) { self.tuple_decl_head() } else { self.single_decl_head().map(|v| vec![Some(v)]) };
        match result {
            Some(vars) if self.at_punct(Punct::Assign) || self.at_punct(Punct::Semi) => Some(vars),
            _ => {
                self.pos = saved_pos;
                self.diags.truncate(saved_diags);
                None
            }
        }
    }

    fn single_decl_head(&mut self) -> Option<LocalVar> {
        match self.peek() {
            Some(TokenKind::Type(_) | TokenKind::Ident(_) | TokenKind::Keyword(Keyword::Mapping)) => {}
            _ => return None,
        }
        let ty = self.type_name().ok()?;
        while self.eat_kw(Keyword::Memory) || self.eat_kw(Keyword::Storage) || self.eat_kw(Keyword::Calldata) {}
        match self.peek() {
            Some(TokenKind::Ident(_)) => {
                let name = self.expect_ident().ok()?;
                Some(LocalVar { ty: Some(ty), name })
            }
            _ => None,
        }
    }

    fn tuple_decl_head(&mut self) -> Option<Vec<Option<LocalVar>>> {
        self.pos += 1;
        let mut vars = Vec::new();
        let mut any = false;
        loop {
            if self.at_punct(Punct::Comma) || self.at_punct(Punct::RParen) {
                vars.push(None);
            } else {
                vars.push(Some(self.single_decl_head()?));
                any = true;
            }
            if self.eat_punct(Punct::RParen) {
                break;
            }
            if !self.eat_punct(Punct::Comma) {
                return None;
            }
        }
        any.then_some(vars)
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.assignment();
        self.leave();
        r
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.ternary()?;
        let op = match self.peek() {
            Some(TokenKind::Punct(p)) => match p {
                Punct::Assign => Some(None),
                Punct::PlusAssign => Some(Some(BinOp::Add)),
                Punct::MinusAssign => Some(Some(BinOp::Sub)),
                Punct::StarAssign => Some(Some(BinOp::Mul)),
                Punct::SlashAssign => Some(Some(BinOp::Div)),
                Punct::PercentAssign => Some(Some(BinOp::Mod)),
                Punct::PipeAssign => Some(Some(BinOp::BitOr)),
                Punct::AmpAssign => Some(Some(BinOp::BitAnd)),
                Punct::CaretAssign => Some(Some(BinOp::BitXor)),
                Punct::ShlAssign => Some(Some(BinOp::Shl)),
                Punct::ShrAssign => Some(Some(BinOp::Shr)),
                _ => None,
            },
            _ => None,
        };
        match op {
            Some(op) => {
                self.pos += 1;
                let rhs = self.expr()?;
                let span = lhs.span.to(rhs.span);
                Ok(Expr::new(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), span))
            }
            None => Ok(lhs),
        }
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if !self.eat_punct(Punct::Question) {
            return Ok(cond);
        }
        let a = self.expr()?;
        self.expect_punct(Punct::Colon)?;
        let b = self.expr()?;
        let span = cond.span.to(b.span);
        Ok(Expr::new(ExprKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)), span))
    }

    fn binop_here(&self) -> Option<(BinOp, u8)> {
        let p = match self.peek() {
            Some(TokenKind::Punct(p)) => *p,
            _ => return None,
        };
        Some(match p {
            Punct::OrOr => (BinOp::Or, 1),
            Punct::AndAnd => (BinOp::And, 2),
            Punct::EqEq => (BinOp::Eq, 3),
            Punct::NotEq => (BinOp::Ne, 3),
            Punct::Lt => (BinOp::Lt, 4),
            Punct::Le => (BinOp::Le, 4),
            Punct::Gt => (BinOp::Gt, 4),
            Punct::Ge => (BinOp::Ge, 4),
            Punct::Pipe => (BinOp::BitOr, 5),
            Punct::Caret => (BinOp::BitXor, 6),
            Punct::Amp => (BinOp::BitAnd, 7),
            Punct::Shl => (BinOp::Shl, 8),
            Punct::Shr | Punct::Sar => (BinOp::Shr, 8),
            Punct::Plus => (BinOp::Add, 9),
            Punct::Minus => (BinOp::Sub, 9),
            Punct::Star => (BinOp::Mul, 10),
            Punct::Slash => (BinOp::Div, 10),
            Punct::Percent => (BinOp::Mod, 10),
            Punct::StarStar => (BinOp::Pow, 11),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop_here() {
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            self.enter()?;
            let next = if op == BinOp::Pow { prec } else { prec + 1 };
            let rhs = self.binary(next);
            self.leave();
            let rhs = rhs?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let op = match self.peek() {
            Some(TokenKind::Punct(Punct::Bang)) => Some(UnOp::Not),
            Some(TokenKind::Punct(Punct::Minus)) => Some(UnOp::Neg),
            Some(TokenKind::Punct(Punct::Tilde)) => Some(UnOp::BitNot),
            Some(TokenKind::Punct(Punct::PlusPlus)) => Some(UnOp::PreInc),
            Some(TokenKind::Punct(Punct::MinusMinus)) => Some(UnOp::PreDec),
            Some(TokenKind::Keyword(Keyword::Delete)) => Some(UnOp::Delete),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            self.enter()?;
            let operand = self.unary();
            self.leave();
            let operand = operand?;
            let span = start.to(operand.span);
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Some(TokenKind::Punct(Punct::Dot)) => {
                    self.pos += 1;
                    let member = self.expect_word()?;
                    let span = e.span.to(member.span);
                    e = Expr::new(ExprKind::Member(Box::new(e), member.name), span);
                }
                Some(TokenKind::Punct(Punct::LBracket)) => {
                    self.pos += 1;
                    let index = if self.at_punct(Punct::RBracket) { None } else { Some(Box::new(self.expr()?)) };
                    if self.at_punct(Punct::Colon) {
                        let s = self.span();
                        self.unsupported("array slice", s);
                        while !self.at_punct(Punct::RBracket) && self.peek().is_some() {
                            self.pos += 1;
                        }
                    }
                    let end = self.expect_punct(Punct::RBracket)?;
                    let span = e.span.to(end);
                    e = Expr::new(ExprKind::Index(Box::new(e), index), span);
                }
                Some(TokenKind::Punct(Punct::LParen)) => {
                    let (args, arg_names) = self.call_args()?;
                    let span = e.span.to(self.prev_span());
                    e = canonicalize_call(Expr::new(
                        ExprKind::Call { callee: Box::new(e), args, arg_names, options: Vec::new() },
                        span,
                    ));
                }
                Some(TokenKind::Punct(Punct::LBrace))
                    if matches!(self.peek_at(1), Some(TokenKind::Ident(_))) && self.at_punct_n(2, Punct::Colon) =>
                {
                    let options = self.named_pairs()?;
                    if !self.at_punct(Punct::LParen) {
                        return Err(self.syntax_error(&["`(`"]));
                    }
                    let (args, arg_names) = self.call_args()?;
                    let span = e.span.to(self.prev_span());
                    e = Expr::new(ExprKind::Call { callee: Box::new(e), args, arg_names, options }, span);
                }
                Some(TokenKind::Punct(Punct::PlusPlus)) => {
                    let end = self.bump().unwrap().span;
                    let span = e.span.to(end);
                    e = Expr::new(ExprKind::Unary(UnOp::PostInc, Box::new(e)), span);
                }
                Some(TokenKind::Punct(Punct::MinusMinus)) => {
                    let end = self.bump().unwrap().span;
                    let span = e.span.to(end);
                    e = Expr::new(ExprKind::Unary(UnOp::PostDec, Box::new(e)), span);
                }
                _ => return Ok(e),
            }
        }
    }

    /// `{name: expr, ...}`
    fn named_pairs(&mut self) -> PResult<Vec<(String, Expr)>> {
        self.expect_punct(Punct::LBrace)?;
        let mut pairs = Vec::new();
        while !self.at_punct(Punct::RBrace) {
            let name = self.expect_ident()?.name;
            self.expect_punct(Punct::Colon)?;
            pairs.push((name, self.expr()?));
            if !self.eat_punct(Punct::Comma) {
                break;
            }
        }
        self.expect_punct(Punct::RBrace)?;
        Ok(pairs)
    }

    /// `(a, b)` or `({x: a, y: b})`. Returns arguments and, for the named
    /// form, their names in the same order.
    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<String>)> {
        self.expect_punct(Punct::LParen)?;
        if self.at_punct(Punct::LBrace) {
            let pairs = self.named_pairs()?;
            self.expect_punct(Punct::RParen)?;
            let (names, args) = pairs.into_iter().unzip();
            return Ok((args, names));
        }
        let mut args = Vec::new();
        if !self.at_punct(Punct::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        self.expect_punct(Punct::RParen)?;
        Ok((args, Vec::new()))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let tok = match self.peek() {
            Some(t) => t,
            None => return Err(self.syntax_error(&["expression"])),
        };
        let kind = match tok {
            TokenKind::Ident(name) => {
                self.pos += 1;
                if name == "now" {
                    return Ok(block_timestamp(start));
                }
                ExprKind::Ident(name.clone())
            }
            TokenKind::Keyword(k @ (Keyword::Msg | Keyword::Block | Keyword::Payable | Keyword::Selfdestruct | Keyword::Require | Keyword::Revert)) => {
                self.pos += 1;
                ExprKind::Ident(k.as_str().to_string())
            }
            TokenKind::Type(t) => {
                self.pos += 1;
                let t = t.clone();
                if t == "address" {
                    self.eat_kw(Keyword::Payable);
                }
                ExprKind::TypeExpr(TypeName::Elementary(t))
            }
            TokenKind::Keyword(Keyword::Mapping) => ExprKind::TypeExpr(self.type_name()?),
            TokenKind::Number(n) => {
                self.pos += 1;
                let mut text = n.clone();
                if let Some(TokenKind::Ident(unit)) = self.peek() {
                    if ETHER_UNITS.contains(&unit.as_str()) {
                        text = format!("{text} {unit}");
                        self.pos += 1;
                    }
                }
                ExprKind::Number(text)
            }
            TokenKind::Str(_) => {
                let mut s = String::new();
                while let Some(TokenKind::Str(part)) = self.peek() {
                    s.push_str(part);
                    self.pos += 1;
                }
                ExprKind::Str(s)
            }
            TokenKind::HexStr(h) => {
                self.pos += 1;
                ExprKind::HexStr(h.clone())
            }
            TokenKind::Keyword(Keyword::True) => {
                self.pos += 1;
                ExprKind::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.pos += 1;
                ExprKind::Bool(false)
            }
            TokenKind::Keyword(Keyword::New) => {
                self.pos += 1;
                ExprKind::New(self.type_name()?)
            }
            TokenKind::Punct(Punct::LParen) => {
                self.pos += 1;
                let mut items: Vec<Option<Expr>> = Vec::new();
                let mut saw_comma = false;
                loop {
                    if self.at_punct(Punct::Comma) || self.at_punct(Punct::RParen) {
                        items.push(None);
                    } else {
                        items.push(Some(self.expr()?));
                    }
                    if self.eat_punct(Punct::Comma) {
                        saw_comma = true;
                        continue;
                    }
                    break;
                }
                self.expect_punct(Punct::RParen)?;
                if !saw_comma {
                    match items.pop().flatten() {
                        Some(inner) => return Ok(inner),
                        None => ExprKind::Tuple(Vec::new()),
                    }
                } else {
                    ExprKind::Tuple(items)
                }
            }
            TokenKind::Punct(Punct::LBracket) => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.at_punct(Punct::RBracket) {
                    items.push(self.expr()?);
                    if !self.eat_punct(Punct::Comma) {
                        break;
                    }
                }
                self.expect_punct(Punct::RBracket)?;
                ExprKind::ArrayLit(items)
            }
            _ => return Err(self.syntax_error(&["expression"])),
        };
        Ok(Expr::new(kind, self.since(start)))
    }
}

fn block_timestamp(span: Span) -> Expr {
    Expr::new(ExprKind::Member(Box::new(Expr::new(ExprKind::Ident("block".into()), span)), "timestamp".into()), span)
}

/// `_msgSender()` is the Context idiom for `msg.sender`.
fn canonicalize_call(e: Expr) -> Expr {
    if let ExprKind::Call { callee, args, .. } = &e.kind {
        if args.is_empty() && callee.as_ident() == Some("_msgSender") {
            let msg = Expr::new(ExprKind::Ident("msg".into()), callee.span);
            return Expr::new(ExprKind::Member(Box::new(msg), "sender".into()), e.span);
        }
    }
    e
}

fn token_text(k: &TokenKind) -> String {
    match k {
        TokenKind::Ident(s) | TokenKind::Type(s) | TokenKind::Number(s) => s.clone(),
        TokenKind::Keyword(kw) => kw.as_str().to_string(),
        TokenKind::Str(s) => format!("{s:?}"),
        TokenKind::HexStr(s) => format!("hex\"{s}\""),
        TokenKind::Punct(p) => p.as_str().to_string(),
    }
}

/// Parses a standalone expression covering the whole token stream.
pub fn parse_expr_tokens(tokens: &[Token], options: &ParseOptions) -> Result<Expr, Vec<Diagnostic>> {
    let mut p = Parser { tokens, pos: 0, diags: Vec::new(), depth: 0, options: *options };
    match p.expr() {
        Ok(e) if p.pos == tokens.len() => Ok(e),
        Ok(_) => {
            p.syntax_error(&["end of expression"]);
            Err(p.diags)
        }
        Err(Recover) => Err(p.diags),
    }
}
