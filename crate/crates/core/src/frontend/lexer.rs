//! Tokenizer for the supported Solidity subset.
//!
//! Comments and whitespace are dropped; every token keeps the span of the
//! text it was produced from.

use std::fmt;

use super::span::{Diagnostic, DiagnosticKind, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Abstract,
    Anonymous,
    Assembly,
    Block,
    Break,
    Calldata,
    Catch,
    Constant,
    Constructor,
    Continue,
    Contract,
    Delete,
    Do,
    Else,
    Emit,
    Enum,
    Event,
    External,
    Fallback,
    False,
    For,
    Function,
    If,
    Immutable,
    Import,
    Indexed,
    Interface,
    Internal,
    Is,
    Library,
    Mapping,
    Memory,
    Modifier,
    Msg,
    New,
    Override,
    Payable,
    Pragma,
    Private,
    Public,
    Pure,
    Receive,
    Require,
    Return,
    Returns,
    Revert,
    Selfdestruct,
    Storage,
    Struct,
    True,
    Try,
    Unchecked,
    Using,
    View,
    Virtual,
    While,
}

impl Keyword {
    pub fn from_word(word: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match word {
            "abstract" => Abstract,
            "anonymous" => Anonymous,
            "assembly" => Assembly,
            "block" => Block,
            "break" => Break,
            "calldata" => Calldata,
            "catch" => Catch,
            "constant" => Constant,
            "constructor" => Constructor,
            "continue" => Continue,
            "contract" => Contract,
            "delete" => Delete,
            "do" => Do,
            "else" => Else,
            "emit" => Emit,
            "enum" => Enum,
            "event" => Event,
            "external" => External,
            "fallback" => Fallback,
            "false" => False,
            "for" => For,
            "function" => Function,
            "if" => If,
            "immutable" => Immutable,
            "import" => Import,
            "indexed" => Indexed,
            "interface" => Interface,
            "internal" => Internal,
            "is" => Is,
            "library" => Library,
            "mapping" => Mapping,
            "memory" => Memory,
            "modifier" => Modifier,
            "msg" => Msg,
            "new" => New,
            "override" => Override,
            "payable" => Payable,
            "pragma" => Pragma,
            "private" => Private,
            "public" => Public,
            "pure" => Pure,
            "receive" => Receive,
            "require" => Require,
            "return" => Return,
            "returns" => Returns,
            "revert" => Revert,
            "selfdestruct" => Selfdestruct,
            "storage" => Storage,
            "struct" => Struct,
            "true" => True,
            "try" => Try,
            "unchecked" => Unchecked,
            "using" => Using,
            "view" => View,
            "virtual" => Virtual,
            "while" => While,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Abstract => "abstract",
            Anonymous => "anonymous",
            Assembly => "assembly",
            Block => "block",
            Break => "break",
            Calldata => "calldata",
            Catch => "catch",
            Constant => "constant",
            Constructor => "constructor",
            Continue => "continue",
            Contract => "contract",
            Delete => "delete",
            Do => "do",
            Else => "else",
            Emit => "emit",
            Enum => "enum",
            Event => "event",
            External => "external",
            Fallback => "fallback",
            False => "false",
            For => "for",
            Function => "function",
            If => "if",
            Immutable => "immutable",
            Import => "import",
            Indexed => "indexed",
            Interface => "interface",
            Internal => "internal",
            Is => "is",
            Library => "library",
            Mapping => "mapping",
            Memory => "memory",
            Modifier => "modifier",
            Msg => "msg",
            New => "new",
            Override => "override",
            Payable => "payable",
            Pragma => "pragma",
            Private => "private",
            Public => "public",
            Pure => "pure",
            Receive => "receive",
            Require => "require",
            Return => "return",
            Returns => "returns",
            Revert => "revert",
            Selfdestruct => "selfdestruct",
            Storage => "storage",
            Struct => "struct",
            True => "true",
            Try => "try",
            Unchecked => "unchecked",
            Using => "using",
            View => "view",
            Virtual => "virtual",
            While => "while",
        }
    }
}

/// True for `address`, `bool`, `string`, `bytes`, `bytesN`, `uint`, `uintN`, `int`, `intN`.
pub fn is_elementary_type(word: &str) -> bool {
    fn sized(rest: &str, valid: impl Fn(u32) -> bool) -> bool {
        rest.is_empty() || (!rest.starts_with('0') && rest.parse::<u32>().map(&valid).unwrap_or(false))
    }
    match word {
        "address" | "bool" | "string" | "bytes" | "byte" => true,
        _ => {
            if let Some(rest) = word.strip_prefix("uint") {
                sized(rest, |n| n % 8 == 0 && (8..=256).contains(&n))
            } else if let Some(rest) = word.strip_prefix("int") {
                sized(rest, |n| n % 8 == 0 && (8..=256).contains(&n))
            } else if let Some(rest) = word.strip_prefix("bytes") {
                !rest.is_empty() && sized(rest, |n| (1..=32).contains(&n))
            } else {
                false
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Question,
    Colon,
    ColonAssign,
    Arrow,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    StarStar,
    Bang,
    AndAnd,
    OrOr,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Shl,
    Shr,
    Sar,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    PipeAssign,
    AmpAssign,
    CaretAssign,
    ShlAssign,
    ShrAssign,
    PlusPlus,
    MinusMinus,
    ThinArrow,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        use Punct::*;
        match self {
            LParen => "(",
            RParen => ")",
            LBrace => "{",
            RBrace => "}",
            LBracket => "[",
            RBracket => "]",
            Semi => ";",
            Comma => ",",
            Dot => ".",
            Question => "?",
            Colon => ":",
            ColonAssign => ":=",
            Arrow => "=>",
            Assign => "=",
            EqEq => "==",
            NotEq => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            StarStar => "**",
            Bang => "!",
            AndAnd => "&&",
            OrOr => "||",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            Tilde => "~",
            Shl => "<<",
            Shr => ">>",
            Sar => ">>>",
            PlusAssign => "+=",
            MinusAssign => "-=",
            StarAssign => "*=",
            SlashAssign => "/=",
            PercentAssign => "%=",
            PipeAssign => "|=",
            AmpAssign => "&=",
            CaretAssign => "^=",
            ShlAssign => "<<=",
            ShrAssign => ">>=",
            PlusPlus => "++",
            MinusMinus => "--",
            ThinArrow => "->",
        }
    }

    fn name(self) -> &'static str {
        use Punct::*;
        match self {
            LParen => "lparen",
            RParen => "rparen",
            LBrace => "lbrace",
            RBrace => "rbrace",
            LBracket => "lbracket",
            RBracket => "rbracket",
            Semi => "semi",
            Comma => "comma",
            Dot => "dot",
            _ => self.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident(String),
    Keyword(Keyword),
    /// Elementary type names are keywords of the subset, kept with their spelling.
    Type(String),
    Number(String),
    Str(String),
    HexStr(String),
    Punct(Punct),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "ident:{s}"),
            TokenKind::Keyword(k) => write!(f, "kw:{}", k.as_str()),
            TokenKind::Type(t) => write!(f, "kw:{t}"),
            TokenKind::Number(n) => write!(f, "num:{n}"),
            TokenKind::Str(s) => write!(f, "str:{s:?}"),
            TokenKind::HexStr(s) => write!(f, "hex:{s}"),
            TokenKind::Punct(p) => f.write_str(p.name()),
        }
    }
}

impl TokenKind {
    /// Human-readable spelling used in diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Keyword(k) => format!("`{}`", k.as_str()),
            TokenKind::Type(t) => format!("`{t}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Str(_) | TokenKind::HexStr(_) => "string literal".to_string(),
            TokenKind::Punct(p) => format!("`{}`", p.as_str()),
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

const PUNCTS: &[(&str, Punct)] = &[
    (">>>", Punct::Sar),
    ("<<=", Punct::ShlAssign),
    (">>=", Punct::ShrAssign),
    ("**", Punct::StarStar),
    ("==", Punct::EqEq),
    ("!=", Punct::NotEq),
    ("<=", Punct::Le),
    (">=", Punct::Ge),
    ("&&", Punct::AndAnd),
    ("||", Punct::OrOr),
    ("<<", Punct::Shl),
    (">>", Punct::Shr),
    ("+=", Punct::PlusAssign),
    ("-=", Punct::MinusAssign),
    ("*=", Punct::StarAssign),
    ("/=", Punct::SlashAssign),
    ("%=", Punct::PercentAssign),
    ("|=", Punct::PipeAssign),
    ("&=", Punct::AmpAssign),
    ("^=", Punct::CaretAssign),
    ("++", Punct::PlusPlus),
    ("--", Punct::MinusMinus),
    ("=>", Punct::Arrow),
    ("->", Punct::ThinArrow),
    (":=", Punct::ColonAssign),
    ("(", Punct::LParen),
    (")", Punct::RParen),
    ("{", Punct::LBrace),
    ("}", Punct::RBrace),
    ("[", Punct::LBracket),
    ("]", Punct::RBracket),
    (";", Punct::Semi),
    (",", Punct::Comma),
    (".", Punct::Dot),
    ("?", Punct::Question),
    (":", Punct::Colon),
    ("=", Punct::Assign),
    ("<", Punct::Lt),
    (">", Punct::Gt),
    ("+", Punct::Plus),
    ("-", Punct::Minus),
    ("*", Punct::Star),
    ("/", Punct::Slash),
    ("%", Punct::Percent),
    ("!", Punct::Bang),
    ("&", Punct::Amp),
    ("|", Punct::Pipe),
    ("^", Punct::Caret),
    ("~", Punct::Tilde),
];

/// Tokenize `src`. All lexical errors are collected; if any occur the
/// whole diagnostic list is returned instead of tokens.
pub fn lex(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let span_here = |cur: &Cursor| Span::new(start, cur.pos, line, col);

        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            cur.eat_while(|c| c != '\n');
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            let mut closed = false;
            while cur.peek().is_some() {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    closed = true;
                    break;
                }
                cur.bump();
            }
            if !closed {
                errors.push(Diagnostic::error(
                    DiagnosticKind::UnterminatedComment,
                    span_here(&cur),
                    "unterminated block comment",
                ));
            }
            continue;
        }

        // hex"..." / unicode"..." prefixes
        let prefixed = ["hex", "unicode"].into_iter().find(|p| {
            cur.starts_with(p) && matches!(cur.src[cur.pos + p.len()..].chars().next(), Some('"' | '\''))
        });
        if let Some(prefix) = prefixed {
            for _ in 0..prefix.len() {
                cur.bump();
            }
            match lex_string(&mut cur) {
                Some(body) => {
                    let kind = if prefix == "hex" { TokenKind::HexStr(body) } else { TokenKind::Str(body) };
                    tokens.push(Token { kind, span: span_here(&cur) });
                }
                None => errors.push(Diagnostic::error(
                    DiagnosticKind::UnterminatedString,
                    span_here(&cur),
                    "unterminated string literal",
                )),
            }
            continue;
        }

        if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            let word = &src[start..cur.pos];
            let kind = if let Some(kw) = Keyword::from_word(word) {
                TokenKind::Keyword(kw)
            } else if is_elementary_type(word) {
                TokenKind::Type(word.to_string())
            } else {
                TokenKind::Ident(word.to_string())
            };
            tokens.push(Token { kind, span: span_here(&cur) });
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            if cur.starts_with("0x") || cur.starts_with("0X") {
                cur.bump();
                cur.bump();
                cur.eat_while(|c| c.is_ascii_hexdigit() || c == '_');
            } else {
                cur.eat_while(|c| c.is_ascii_digit() || c == '_');
                if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                    cur.bump();
                    cur.eat_while(|c| c.is_ascii_digit() || c == '_');
                }
                if matches!(cur.peek(), Some('e' | 'E'))
                    && (cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                        || (cur.peek_at(1) == Some('-') && cur.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
                {
                    cur.bump();
                    if cur.peek() == Some('-') {
                        cur.bump();
                    }
                    cur.eat_while(|c| c.is_ascii_digit());
                }
            }
            tokens.push(Token { kind: TokenKind::Number(src[start..cur.pos].to_string()), span: span_here(&cur) });
            continue;
        }

        if c == '"' || c == '\'' {
            match lex_string(&mut cur) {
                Some(body) => tokens.push(Token { kind: TokenKind::Str(body), span: span_here(&cur) }),
                None => errors.push(Diagnostic::error(
                    DiagnosticKind::UnterminatedString,
                    span_here(&cur),
                    "unterminated string literal",
                )),
            }
            continue;
        }

        if let Some((text, p)) = PUNCTS.iter().find(|(text, _)| cur.starts_with(text)) {
            for _ in 0..text.len() {
                cur.bump();
            }
            tokens.push(Token { kind: TokenKind::Punct(*p), span: span_here(&cur) });
            continue;
        }

        cur.bump();
        errors.push(Diagnostic::error(
            DiagnosticKind::InvalidCharacter,
            span_here(&cur),
            format!("invalid character {c:?}"),
        ));
    }

    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

/// Consumes a quoted literal starting at the opening quote. Returns the
/// unescaped body, or `None` when the input or the line ends first.
fn lex_string(cur: &mut Cursor) -> Option<String> {
    let quote = cur.bump()?;
    let mut body = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => return None,
            Some(c) if c == quote => {
                cur.bump();
                return Some(body);
            }
            Some('\\') => {
                cur.bump();
                match cur.bump()? {
                    'n' => body.push('\n'),
                    't' => body.push('\t'),
                    'r' => body.push('\r'),
                    '\n' => {}
                    other => body.push(other),
                }
            }
            Some(c) => {
                cur.bump();
                body.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<String> {
        lex(src).unwrap().into_iter().map(|t| t.kind.to_string()).collect()
    }

    #[test]
    fn selfdestruct_statement() {
        assert_eq!(kinds("selfdestruct(_owner);"), ["kw:selfdestruct", "lparen", "ident:_owner", "rparen", "semi"]);
    }

    #[test]
    fn empty_input() {
        assert!(lex("").unwrap().is_empty());
        assert!(lex("  // only a comment\n /* and a block */ ").unwrap().is_empty());
    }

    #[test]
    fn elementary_types_are_keywords() {
        assert_eq!(kinds("uint256 uint int8 bytes32 bytes address bool string uint7 bytes33 uintx"), [
            "kw:uint256",
            "kw:uint",
            "kw:int8",
            "kw:bytes32",
            "kw:bytes",
            "kw:address",
            "kw:bool",
            "kw:string",
            "ident:uint7",
            "ident:bytes33",
            "ident:uintx",
        ]);
    }

    #[test]
    fn compound_operators() {
        assert_eq!(kinds("a += 1; b **= c >>= d"), [
            "ident:a", "+=", "num:1", "semi", "ident:b", "**", "=", "ident:c", ">>=", "ident:d"
        ]);
    }

    #[test]
    fn numbers_and_strings() {
        let toks = lex(r#"0xdeadBEEF 1_000 1e18 2.5 "a\"b" hex"00ff" unicode"ü""#).unwrap();
        let k: Vec<_> = toks.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(k, vec![
            TokenKind::Number("0xdeadBEEF".into()),
            TokenKind::Number("1_000".into()),
            TokenKind::Number("1e18".into()),
            TokenKind::Number("2.5".into()),
            TokenKind::Str("a\"b".into()),
            TokenKind::HexStr("00ff".into()),
            TokenKind::Str("ü".into()),
        ]);
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let toks = lex("a\n  bb").unwrap();
        assert_eq!(toks[1].span, Span::new(4, 6, 2, 3));
    }

    #[test]
    fn unterminated_string_is_reported_with_span() {
        let errs = lex("x = \"abc\n;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, DiagnosticKind::UnterminatedString);
        assert_eq!(errs[0].span.start, 4);
        assert_eq!(errs[0].span.line, 1);
    }

    #[test]
    fn invalid_character_is_reported() {
        let errs = lex("a # b ` c").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.kind == DiagnosticKind::InvalidCharacter));
        assert_eq!(errs[0].span, Span::new(2, 3, 1, 3));
    }

    #[test]
    fn non_ascii_outside_strings_is_invalid() {
        assert!(lex("contract Ä {}").is_err());
        assert!(lex("// Ä is fine in comments\n").is_ok());
    }
}
