//! Syntax tree for the supported Solidity subset. Every node carries the
//! span of the source text it was parsed from.

use super::span::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub pragmas: Vec<Pragma>,
    pub imports: Vec<Import>,
    pub contracts: Vec<ContractDecl>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Ast {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn contract(&self, name: &str) -> Option<&ContractDecl> {
        self.contracts.iter().find(|c| c.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pragma {
    /// Everything after `pragma` up to the semicolon, e.g. `solidity ^0.8.0`.
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContractKind {
    Contract,
    AbstractContract,
    Interface,
    Library,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpec {
    pub name: Ident,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractDecl {
    pub name: Ident,
    pub kind: ContractKind,
    pub bases: Vec<BaseSpec>,
    pub state_vars: Vec<StateVarDecl>,
    pub functions: Vec<FunctionDecl>,
    pub modifiers: Vec<ModifierDecl>,
    pub events: Vec<EventDecl>,
    pub structs: Vec<StructDecl>,
    pub enums: Vec<EnumDecl>,
    pub errors: Vec<EventDecl>,
    pub using: Vec<UsingDirective>,
    pub span: Span,
}

impl ContractDecl {
    pub fn new(name: Ident, kind: ContractKind, span: Span) -> Self {
        ContractDecl {
            name,
            kind,
            bases: Vec::new(),
            state_vars: Vec::new(),
            functions: Vec::new(),
            modifiers: Vec::new(),
            events: Vec::new(),
            structs: Vec::new(),
            enums: Vec::new(),
            errors: Vec::new(),
            using: Vec::new(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsingDirective {
    pub library: String,
    pub target: Option<TypeName>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    pub fn is_public(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::External => "external",
            Visibility::Internal => "internal",
            Visibility::Private => "private",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutability {
    Pure,
    View,
    Payable,
    Nonpayable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    /// `uint256`, `address`, `address payable` (recorded as `address`), ...
    Elementary(String),
    Mapping(Box<TypeName>, Box<TypeName>),
    Array(Box<TypeName>, Option<String>),
    /// Possibly qualified (`IERC20`, `Lib.Struct`).
    UserDefined(Vec<String>),
    Function,
}

impl TypeName {
    pub fn is_uint(&self) -> bool {
        matches!(self, TypeName::Elementary(t) if t.starts_with("uint") || t.starts_with("int"))
    }

    pub fn is_address(&self) -> bool {
        matches!(self, TypeName::Elementary(t) if t == "address")
    }

    pub fn is_elementary(&self) -> bool {
        matches!(self, TypeName::Elementary(_))
    }

    /// Canonical spelling, used for signatures.
    pub fn canonical(&self) -> String {
        match self {
            TypeName::Elementary(t) => match t.as_str() {
                "uint" => "uint256".to_string(),
                "int" => "int256".to_string(),
                "byte" => "bytes1".to_string(),
                _ => t.clone(),
            },
            TypeName::Mapping(k, v) => format!("mapping({}=>{})", k.canonical(), v.canonical()),
            TypeName::Array(elem, len) => match len {
                Some(n) => format!("{}[{}]", elem.canonical(), n),
                None => format!("{}[]", elem.canonical()),
            },
            TypeName::UserDefined(path) => path.join("."),
            TypeName::Function => "function".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVarDecl {
    pub name: Ident,
    pub ty: TypeName,
    pub visibility: Visibility,
    pub constant: bool,
    pub immutable: bool,
    pub initializer: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: Option<Ident>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
    Receive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierInvocation {
    pub name: Ident,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    /// Empty for constructor, fallback and receive.
    pub name: String,
    pub name_span: Span,
    pub kind: FunctionKind,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub modifiers_invoked: Vec<ModifierInvocation>,
    pub is_virtual: bool,
    pub is_override: bool,
    pub body: Option<Block>,
    pub span: Span,
}

impl FunctionDecl {
    pub fn is_constructor(&self) -> bool {
        self.kind == FunctionKind::Constructor
    }

    pub fn display_name(&self) -> &str {
        match self.kind {
            FunctionKind::Function => &self.name,
            FunctionKind::Constructor => "constructor",
            FunctionKind::Fallback => "fallback",
            FunctionKind::Receive => "receive",
        }
    }

    /// `name(type,...)` with canonical parameter types.
    pub fn signature(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| p.ty.canonical()).collect();
        format!("{}({})", self.display_name(), params.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub is_virtual: bool,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDecl {
    pub name: Ident,
    pub fields: Vec<Param>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDecl {
    pub name: Ident,
    pub variants: Vec<Ident>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVar {
    pub ty: Option<TypeName>,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Block),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    Return(Option<Expr>),
    Require { cond: Expr, message: Option<Expr> },
    /// `revert;`, `revert("msg")`, `revert Err(args)`.
    Revert(Option<Expr>),
    Emit(Expr),
    Expr(Expr),
    /// Tuple declarations keep `None` for skipped positions.
    VarDecl { vars: Vec<Option<LocalVar>>, init: Option<Expr> },
    /// The `_;` placeholder inside a modifier body.
    Placeholder,
    Break,
    Continue,
    /// A statement the subset does not model (assembly, try/catch). Its raw
    /// token text is kept so later passes can still look for keywords.
    Unsupported { construct: String, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Pow => "**",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            And => "&&",
            Or => "||",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            Shl => "<<",
            Shr => ">>",
        }
    }

    pub fn is_comparison(self) -> bool {
        use BinOp::*;
        matches!(self, Eq | Ne | Lt | Le | Gt | Ge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
    Delete,
}

impl UnOp {
    pub fn writes_operand(self) -> bool {
        matches!(self, UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec | UnOp::Delete)
    }
}

/// `None` is plain `=`; otherwise the arithmetic operator of `op=`.
pub type AssignOp = Option<BinOp>;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Member(Box<Expr>, String),
    Index(Box<Expr>, Option<Box<Expr>>),
    Call { callee: Box<Expr>, args: Vec<Expr>, arg_names: Vec<String>, options: Vec<(String, Expr)> },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Assign(AssignOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Tuple(Vec<Option<Expr>>),
    ArrayLit(Vec<Expr>),
    Number(String),
    Str(String),
    HexStr(String),
    Bool(bool),
    /// Elementary type in expression position, e.g. the callee of `uint256(x)`.
    TypeExpr(TypeName),
    New(TypeName),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Name of a plain identifier expression.
    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// True for `a.b` where `a` is the identifier `base`.
    pub fn is_member_of(&self, base: &str, member: &str) -> bool {
        matches!(&self.kind, ExprKind::Member(obj, m) if m == member && obj.as_ident() == Some(base))
    }

    pub fn is_msg_sender(&self) -> bool {
        self.is_member_of("msg", "sender")
    }

    pub fn is_block_timestamp(&self) -> bool {
        self.is_member_of("block", "timestamp")
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Member(e, _) | ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Index(a, b) => {
                a.walk(f);
                if let Some(b) = b {
                    b.walk(f);
                }
            }
            ExprKind::Call { callee, args, options, .. } => {
                callee.walk(f);
                for a in args {
                    a.walk(f);
                }
                for (_, o) in options {
                    o.walk(f);
                }
            }
            ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Ternary(a, b, c) => {
                a.walk(f);
                b.walk(f);
                c.walk(f);
            }
            ExprKind::Tuple(items) => {
                for e in items.iter().flatten() {
                    e.walk(f);
                }
            }
            ExprKind::ArrayLit(items) => {
                for e in items {
                    e.walk(f);
                }
            }
            ExprKind::Ident(_)
            | ExprKind::Number(_)
            | ExprKind::Str(_)
            | ExprKind::HexStr(_)
            | ExprKind::Bool(_)
            | ExprKind::TypeExpr(_)
            | ExprKind::New(_) => {}
        }
    }

    /// Identifier at the root of a member/index chain (`a` in `a.b[c].d`).
    pub fn root_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            ExprKind::Member(e, _) | ExprKind::Index(e, _) => e.root_ident(),
            _ => None,
        }
    }
}

impl Stmt {
    /// Visits every expression directly owned by this statement and by all
    /// nested statements.
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match &self.kind {
            StmtKind::Block(b) => {
                for s in &b.stmts {
                    s.walk_exprs(f);
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                f(cond);
                then_branch.walk_exprs(f);
                if let Some(e) = else_branch {
                    e.walk_exprs(f);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    i.walk_exprs(f);
                }
                if let Some(c) = cond {
                    f(c);
                }
                if let Some(s) = step {
                    f(s);
                }
                body.walk_exprs(f);
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                f(cond);
                body.walk_exprs(f);
            }
            StmtKind::Return(e) | StmtKind::Revert(e) => {
                if let Some(e) = e {
                    f(e);
                }
            }
            StmtKind::Require { cond, message } => {
                f(cond);
                if let Some(m) = message {
                    f(m);
                }
            }
            StmtKind::Emit(e) | StmtKind::Expr(e) => f(e),
            StmtKind::VarDecl { init, .. } => {
                if let Some(e) = init {
                    f(e);
                }
            }
            StmtKind::Placeholder | StmtKind::Break | StmtKind::Continue | StmtKind::Unsupported { .. } => {}
        }
    }
}
