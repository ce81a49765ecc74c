//! Analysis-ready form of a parsed file: inheritance is flattened, modifiers
//! are inlined, and every function body becomes a control-flow graph of
//! straight-line blocks.

pub mod access;
pub mod calls;
pub mod cfg;
mod inherit;
mod lower;
pub mod prelude;
pub mod typing;

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::{ContractKind, Expr, FunctionKind, LocalVar, Mutability, Param, TypeName, Visibility};
use crate::frontend::Span;

pub use calls::{CallGraph, CallKind, CallSite, ExternalCallSite, ExternalKind};
pub use lower::{lower, Lowered};

pub type BlockId = usize;
pub type FuncId = usize;

/// Name of the synthetic creation-time function holding state-variable
/// initializers.
pub const STATE_INIT: &str = "<state-init>";

#[derive(Debug, Clone, PartialEq)]
pub struct StateVarInfo {
    pub name: String,
    pub ty: TypeName,
    pub visibility: Visibility,
    pub constant: bool,
    pub immutable: bool,
    pub initializer: Option<Expr>,
    /// Initializer present, or written by a constructor.
    pub initialized_at_creation: bool,
    /// Signatures of functions (by qualified key) that write / read it.
    pub written_by: BTreeSet<String>,
    pub read_by: BTreeSet<String>,
    /// Contract the declaration came from.
    pub declared_in: String,
    /// Supplied by the ambient prelude rather than the scanned source.
    pub ambient: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Decl { vars: Vec<Option<LocalVar>>, init: Option<Expr> },
    Emit(Expr),
    /// Value produced by `return e;` (the control transfer is the block's
    /// terminator).
    SetReturn(Expr),
    /// Statement the subset does not model; `text` is its raw token text.
    Opaque { construct: String, text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Jump(BlockId),
    Branch { cond: Expr, then_bb: BlockId, else_bb: BlockId },
    Return,
    Revert(Option<Expr>),
    Selfdestruct(Expr),
    End,
}

impl Terminator {
    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Terminator::Jump(b) => vec![*b],
            Terminator::Branch { then_bb, else_bb, .. } => {
                if then_bb == else_bb {
                    vec![*then_bb]
                } else {
                    vec![*then_bb, *else_bb]
                }
            }
            _ => Vec::new(),
        }
    }

    pub fn is_exit(&self) -> bool {
        matches!(self, Terminator::Return | Terminator::Revert(_) | Terminator::Selfdestruct(_) | Terminator::End)
    }
}

/// Where a block's statements came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Body,
    Modifier(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub stmts: Vec<Stmt>,
    pub term: Terminator,
    pub span: Span,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    /// First block of the function's own body (after inlined modifier
    /// prologues); `None` when the body is never reached.
    pub body_entry: Option<BlockId>,
}

impl Cfg {
    pub const ENTRY: BlockId = 0;

    pub fn successors(&self, b: BlockId) -> Vec<BlockId> {
        self.blocks[b].term.successors()
    }

    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for b in &self.blocks {
            for s in b.term.successors() {
                preds[s].push(b.id);
            }
        }
        preds
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.iter().map(|b| b.term.successors().len()).sum()
    }

    pub fn exits(&self) -> impl Iterator<Item = &BasicBlock> {
        self.blocks.iter().filter(|b| b.term.is_exit())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierParam {
    pub modifier: String,
    pub param: Param,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionIR {
    pub id: FuncId,
    /// `name(type,...)`; unique within the unit except for overridden
    /// functions, which are keyed `Base::sig`.
    pub signature: String,
    pub key: String,
    pub name: String,
    pub kind: FunctionKind,
    pub visibility: Visibility,
    pub mutability: Mutability,
    /// Constructors and the synthetic state-initializer function.
    pub is_constructor: bool,
    /// Shadowed by a more derived definition; only reachable via `super`.
    pub overridden: bool,
    pub ambient: bool,
    pub declared_in: String,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub modifier_params: Vec<ModifierParam>,
    /// Modifiers inlined into the CFG, outermost first.
    pub modifiers: Vec<String>,
    pub cfg: Cfg,
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
    /// Every local name (params, returns, modifier params, declared locals)
    /// with its declared type when known.
    pub locals: BTreeMap<String, Option<TypeName>>,
    pub has_body: bool,
    pub span: Span,
    pub name_span: Span,
}

impl FunctionIR {
    /// `Public(f)`: externally callable and not shadowed.
    pub fn is_public(&self) -> bool {
        self.visibility.is_public() && !self.overridden && !self.is_constructor
    }

    pub fn is_local(&self, name: &str) -> bool {
        self.locals.contains_key(name)
    }

    pub fn param_type(&self, name: &str) -> Option<&TypeName> {
        self.params
            .iter()
            .chain(self.modifier_params.iter().map(|m| &m.param))
            .find(|p| p.name.as_ref().is_some_and(|n| n.name == name))
            .map(|p| &p.ty)
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.param_type(name).is_some()
    }

    pub fn display(&self) -> String {
        if self.name == STATE_INIT {
            STATE_INIT.to_string()
        } else {
            self.signature.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractUnit {
    pub name: String,
    pub kind: ContractKind,
    /// Most derived first.
    pub linearization: Vec<String>,
    pub state_vars: BTreeMap<String, StateVarInfo>,
    pub functions: Vec<FunctionIR>,
    pub call_graph: CallGraph,
    pub events: BTreeSet<String>,
    pub structs: BTreeMap<String, Vec<Param>>,
    /// `using L for T` directives in scope: (library, target type or `*`).
    pub using: Vec<(String, Option<TypeName>)>,
    /// Names of contracts, interfaces and libraries declared in the file.
    pub known_types: BTreeMap<String, ContractKind>,
    pub span: Span,
}

impl ContractUnit {
    pub fn function(&self, id: FuncId) -> &FunctionIR {
        &self.functions[id]
    }

    pub fn by_key(&self, key: &str) -> Option<&FunctionIR> {
        self.functions.iter().find(|f| f.key == key)
    }

    /// Callable functions with this name (overridden ones excluded).
    pub fn by_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a FunctionIR> + 'a {
        self.functions.iter().filter(move |f| f.name == name && !f.overridden)
    }

    pub fn state_var(&self, name: &str) -> Option<&StateVarInfo> {
        self.state_vars.get(name)
    }

    /// True when `name`, seen inside `f`, denotes a state variable.
    pub fn is_state_in(&self, f: &FunctionIR, name: &str) -> bool {
        !f.is_local(name) && self.state_vars.contains_key(name)
    }

    pub fn constructors(&self) -> impl Iterator<Item = &FunctionIR> {
        self.functions.iter().filter(|f| f.is_constructor)
    }
}

