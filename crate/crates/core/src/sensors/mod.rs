//! Sensitive operations: minting on token contracts, writes to critical
//! variables, implementation changes on proxies, self-destruction, and
//! state fed by other contracts' outputs.

pub mod critical;
pub mod proxy;
pub mod taint;
pub mod token;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::Span;
use crate::ir::access::{block_accesses, AccessKind};
use crate::ir::{ContractUnit, FunctionIR, StmtKind, Terminator};
use crate::pdg::PrivilegeSet;

pub use critical::{detect_critical_vars, detect_modify_crit, CriticalVar};
pub use proxy::{detect_change_impl, detect_proxy, ProxyFacts};
pub use taint::{taint_outputs, SourceKey, TaintFact, TaintOptions, TaintPath};
pub use token::{detect_mint, detect_token, TokenFacts};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub span: Span,
    pub note: String,
}

impl Evidence {
    pub fn new(span: Span, note: impl Into<String>) -> Self {
        Evidence { span, note: note.into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SensorOptions {
    pub exclude_privilege_vars: bool,
    pub taint: TaintOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FunctionSensitive {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mint: Option<Evidence>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub modify_crit_vars: BTreeMap<String, Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change_impl: Option<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selfdestruct: Option<Evidence>,
}

impl FunctionSensitive {
    pub fn is_empty(&self) -> bool {
        *self == FunctionSensitive::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SensitiveFacts {
    pub token: TokenFacts,
    pub proxy: ProxyFacts,
    pub critical_vars: BTreeMap<String, CriticalVar>,
    /// Keyed by function key; functions with nothing sensitive are omitted.
    pub functions: BTreeMap<String, FunctionSensitive>,
    pub taint: Vec<TaintFact>,
}

impl SensitiveFacts {
    pub fn of(&self, key: &str) -> Option<&FunctionSensitive> {
        self.functions.get(key)
    }
}

/// Span of the first write to `var` in `f`.
pub(crate) fn write_span(f: &FunctionIR, var: &str) -> Option<Span> {
    let is_var = |n: &str| n == var;
    f.cfg.blocks.iter().find_map(|b| block_accesses(b, &is_var).into_iter().find(|a| a.kind == AccessKind::Write && a.name == var).map(|a| a.span))
}

/// A `selfdestruct` terminator, or the keyword inside an opaque statement,
/// in `f` or anything it calls.
pub fn detect_selfdestruct(unit: &ContractUnit, f: &FunctionIR) -> Option<Evidence> {
    for g in unit.call_graph.reachable_from(f.id) {
        let g = unit.function(g);
        let via = if g.id == f.id { String::new() } else { format!(" via {}", g.display()) };
        for b in &g.cfg.blocks {
            if let Terminator::Selfdestruct(_) = b.term {
                return Some(Evidence::new(b.span, format!("selfdestruct{via}")));
            }
            for s in &b.stmts {
                if let StmtKind::Opaque { text, .. } = &s.kind {
                    if text.contains("selfdestruct") {
                        return Some(Evidence::new(s.span, format!("selfdestruct in {}{via}", "assembly")));
                    }
                }
            }
        }
    }
    None
}

/// All sensor facts for one unit. `token` comes first because balances are
/// kept out of the privilege set; `privilege` is only consulted when
/// privileged variables are excluded from the critical set.
pub fn analyze(unit: &ContractUnit, token: TokenFacts, privilege: &PrivilegeSet, opts: SensorOptions) -> SensitiveFacts {
    let mut excluded: BTreeSet<String> = token.balance_vars.clone();
    if opts.exclude_privilege_vars {
        excluded.extend(privilege.names());
    }
    let critical_vars = detect_critical_vars(unit, &excluded);
    let proxy = detect_proxy(unit);
    let mut functions = BTreeMap::new();
    for f in &unit.functions {
        let fs = FunctionSensitive {
            mint: if token.is_token && !f.is_constructor { detect_mint(unit, f, &token.balance_vars) } else { None },
            modify_crit_vars: detect_modify_crit(unit, f, &critical_vars),
            change_impl: detect_change_impl(unit, f, &proxy),
            selfdestruct: if f.is_constructor { None } else { detect_selfdestruct(unit, f) },
        };
        if !fs.is_empty() {
            functions.insert(f.key.clone(), fs);
        }
    }
    let taint = taint_outputs(unit, opts.taint);
    SensitiveFacts { token, proxy, critical_vars, functions, taint }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, ParseOptions};
    use crate::ir::lower;

    fn unit(src: &str) -> ContractUnit {
        let ast = parse_source(src, &ParseOptions::default());
        assert!(!ast.has_errors(), "{:?}", ast.diagnostics);
        lower(&ast).units.pop().unwrap()
    }

    fn facts(u: &ContractUnit) -> SensitiveFacts {
        let token = detect_token(u);
        let pdg = crate::pdg::build(u, &token.balance_vars);
        analyze(u, token, &pdg.privilege, SensorOptions::default())
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mint_on_balance_table() {
        let u = unit(include_str!("../../tests/fixtures/canonical/mint.sol"));
        let s = facts(&u);
        assert!(s.token.is_token);
        assert_eq!(s.token.balance_vars, set(&["_balances"]));
        assert!(s.of("mint(address,uint256)").unwrap().mint.is_some());
    }

    #[test]
    fn empty_contract_has_no_facts() {
        let u = unit("contract A {}");
        assert_eq!(facts(&u), SensitiveFacts::default());
    }

    #[test]
    fn transfer_and_burn_are_not_mints() {
        let u = unit(
            "contract T { mapping(address => uint) bal;
               function balanceOf(address a) public view returns (uint) { return bal[a]; }
               function transfer(address to, uint v) public { bal[msg.sender] -= v; bal[to] += v; }
               function burn(uint v) public { bal[msg.sender] = bal[msg.sender] - v; }
               function grant(address to, uint v) public { bal[to] = bal[to] + v; } }",
        );
        let s = facts(&u);
        assert!(s.token.is_token);
        assert!(s.of("transfer(address,uint256)").is_none_or(|f| f.mint.is_none()));
        assert!(s.of("burn(uint256)").is_none_or(|f| f.mint.is_none()));
        assert!(s.of("grant(address,uint256)").unwrap().mint.is_some());
    }

    #[test]
    fn registry_mapping_is_not_a_token() {
        let src = format!(
            "contract R {{ mapping(uint => address[]) registeredOfType; {} }}",
            include_str!("../../tests/fixtures/fragments/false_positive_fragment.sol")
        );
        let s = facts(&unit(&src));
        assert!(!s.token.is_token);
    }

    #[test]
    fn fee_is_critical() {
        let u = unit(include_str!("../../tests/fixtures/canonical/crivar.sol"));
        let s = facts(&u);
        assert!(s.critical_vars.contains_key("_fee"));
        assert!(!s.critical_vars.contains_key("_balances"));
        assert_eq!(s.of("changeFee(uint256)").unwrap().modify_crit_vars.keys().collect::<Vec<_>>(), ["_fee"]);
    }

    #[test]
    fn unread_variable_is_not_critical() {
        let u = unit("contract A { uint private x; function set(uint v) public { x = v; } }");
        assert!(facts(&u).critical_vars.is_empty());
    }

    #[test]
    fn two_writers_of_initialized_var() {
        let u = unit(
            "contract A { uint private rate = 5; uint y;
               function a(uint v) public { rate = v; } function b() public { rate = 0; }
               function use() public { y = rate; } }",
        );
        let s = facts(&u);
        assert!(s.of("a(uint256)").unwrap().modify_crit_vars.contains_key("rate"));
        assert!(s.of("b()").unwrap().modify_crit_vars.contains_key("rate"));
    }

    #[test]
    fn proxy_through_upgrade_helper() {
        let u = unit(include_str!("../../tests/fixtures/canonical/proxy.sol"));
        let s = facts(&u);
        assert!(s.proxy.is_proxy);
        assert!(s.of("change_implementation(address,bytes)").unwrap().change_impl.is_some());
    }

    #[test]
    fn proxy_through_fallback_delegatecall() {
        let u = unit(
            "contract P { address impl; address admin = msg.sender;
               function setImpl(address i) public { require(msg.sender == admin); impl = i; }
               fallback() external payable { (bool ok, ) = impl.delegatecall(msg.data); require(ok); } }",
        );
        let s = facts(&u);
        assert!(s.proxy.is_proxy);
        assert_eq!(s.proxy.impl_vars, set(&["impl"]));
        assert!(s.of("setImpl(address)").unwrap().change_impl.is_some());
    }

    #[test]
    fn proxy_through_assembly_fallback() {
        let u = unit(
            "contract P { address public implementation;
               function upgrade(address i) public { implementation = i; }
               fallback() external payable { address target = implementation;
                 assembly { let r := delegatecall(gas(), target, 0, calldatasize(), 0, 0) } } }",
        );
        let s = facts(&u);
        assert_eq!(s.proxy.impl_vars, set(&["implementation"]));
        assert!(s.of("upgrade(address)").unwrap().change_impl.is_some());
    }

    #[test]
    fn upgrade_function_alone_is_not_a_proxy() {
        let u = unit("contract A { address impl; function upgradeTo(address i) public { impl = i; } }");
        let s = facts(&u);
        assert!(!s.proxy.is_proxy);
        assert!(s.of("upgradeTo(address)").is_none_or(|f| f.change_impl.is_none()));
    }

    #[test]
    fn selfdestruct_keyword() {
        let u = unit(include_str!("../../tests/fixtures/canonical/selfdestruct.sol"));
        assert!(facts(&u).of("close()").unwrap().selfdestruct.is_some());
    }

    #[test]
    fn price_fed_by_pool() {
        let u = unit(include_str!("../../tests/fixtures/canonical/output.sol"));
        let s = facts(&u);
        let price = s.taint.iter().find(|t| t.var == "price").unwrap();
        let key = SourceKey { target: "pool".into(), callee: "slot0".into(), site: None };
        assert_eq!(price.sources, [key].into());
        let notes: Vec<&str> = price.paths[0].steps.iter().map(|e| e.note.as_str()).collect();
        assert_eq!(notes[0], "output of pool.slot0");
        assert!(notes.last().unwrap().starts_with("assigned to price"));
    }

    #[test]
    fn no_external_calls_no_taint() {
        let u = unit("contract A { uint x; function f(uint v) public { x = v * 2; } }");
        assert!(facts(&u).taint.is_empty());
    }

    #[test]
    fn two_oracles_are_two_sources() {
        let u = unit(
            "interface IOracle { function read() external view returns (uint); }
             contract A { IOracle oracleA; IOracle oracleB; uint price;
               function update() public { uint a = oracleA.read(); uint b = oracleB.read(); price = (a + b) / 2; } }",
        );
        let s = facts(&u);
        assert_eq!(s.taint.iter().find(|t| t.var == "price").unwrap().sources.len(), 2);
    }

    #[test]
    fn distinct_sites_and_guards() {
        let u = unit(
            "interface IOracle { function read() external view returns (uint); }
             contract A { IOracle oracle; uint price;
               function update() public { uint a = oracle.read(); uint b = oracle.read(); require(b > 0); price = a + b; } }",
        );
        let n = |opts: TaintOptions| taint_outputs(&u, opts).iter().find(|t| t.var == "price").map_or(0, |t| t.sources.len());
        assert_eq!(n(TaintOptions::default()), 1);
        assert_eq!(n(TaintOptions { distinct_sites: true, respect_guards: false }), 2);
        assert_eq!(n(TaintOptions { distinct_sites: false, respect_guards: true }), 0);
    }
}
