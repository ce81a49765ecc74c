use cdsentry::analysis::{scan_str, AnalysisOptions};
use cdsentry::frontend::{parse_source, DiagnosticKind, ParseOptions};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "contract", "library", "interface", "is", "function", "modifier", "constructor", "fallback", "receive", "public",
    "external", "internal", "private", "view", "returns", "return", "if", "else", "while", "for", "do", "require",
    "revert", "emit", "event", "mapping", "=>", "address", "uint256", "bool", "bytes", "string", "memory", "calldata",
    "msg.sender", "block.timestamp", "selfdestruct", "assembly", "unchecked", "new", "delete", "{", "}", "(", ")", "[",
    "]", ";", ",", ".", "=", "==", "+=", "-", "*", "/", "?", ":", "!", "&&", "||", "<", ">", "x", "y", "owner", "_",
    "1", "0x1f", "\"s\"", "//c\n", "/*c*/", "pragma solidity ^0.8.0;", "import \"a.sol\";", "struct", "enum", "using",
];

fn token_soup() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS), 0..80).prop_map(|w| w.join(" "))
}

fn check(src: &str) {
    let ast = parse_source(src, &ParseOptions::default());
    for d in &ast.diagnostics {
        assert!(d.span.start <= d.span.end && d.span.end <= src.len(), "span {:?} outside {} bytes", d.span, src.len());
        assert!(d.span.line >= 1 || src.is_empty() || d.span == Default::default());
    }
    // the full pipeline must also survive whatever the parser accepted
    let _ = scan_str(src, &AnalysisOptions::default());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn arbitrary_text_never_panics(src in "\\PC{0,200}") {
        check(&src);
    }

    #[test]
    fn token_soup_never_panics(src in token_soup()) {
        check(&src);
    }

    #[test]
    fn soup_inside_a_function_never_panics(body in token_soup()) {
        check(&format!("contract A {{ address owner; function f(uint x) public {{ {body} }} }}"));
    }
}

#[test]
fn deep_nesting_is_a_diagnostic_not_a_crash() {
    for open in ["(", "{", "["] {
        let close = match open { "(" => ")", "{" => "}", _ => "]" };
        let body = format!("x = {}1{};", open.repeat(5000), close.repeat(5000));
        let src = format!("contract A {{ function f() public {{ {body} }} }}");
        let ast = parse_source(&src, &ParseOptions::default());
        assert!(ast.diagnostics.iter().any(|d| d.kind == DiagnosticKind::NestingTooDeep || d.severity == cdsentry::frontend::Severity::Error));
    }
}

#[test]
fn invalid_utf8_is_reported() {
    let r = cdsentry::frontend::SourceFile::from_bytes("bad.sol", vec![b'c', 0xff, 0xfe]);
    assert!(r.is_err());
}

const STMTS: &[&str] = &[
    "require(msg.sender == owner);",
    "require(block.timestamp > unlock);",
    "require(sigs.length >= threshold);",
    "fee = v;",
    "balances[to] += v;",
    "balances[msg.sender] -= v;",
    "owner = to;",
    "uint256 p = oracle.latestAnswer(); price = p;",
    "(, int24 t, , , , , ) = pool.slot0(); price = uint256(t);",
    "helper(v);",
    "if (msg.sender != owner) revert();",
    "if (v > fee) { fee = v; } else { return; }",
    "for (uint i = 0; i < v; i++) { total += i; }",
    "while (v > 0) { v--; }",
    "emit Transfer(msg.sender, to, v);",
    "selfdestruct(payable(owner));",
    "ERC1967Utils.upgradeToAndCall(to, \"\");",
    "assembly { let x := sload(0) }",
    "unchecked { total += 1; }",
];

const HEADERS: &[&str] = &[
    "function f(address to, uint256 v, bytes[] memory sigs) public",
    "function g(address to, uint256 v, bytes[] memory sigs) external onlyOwner",
    "function helper(uint256 v) internal",
    "function mint(address to, uint256 v, bytes[] memory sigs) public onlyOwner",
    "function transfer(address to, uint256 v, bytes[] memory sigs) public",
];

fn contract() -> impl Strategy<Value = String> {
    let func = (proptest::sample::select(HEADERS), proptest::collection::vec(proptest::sample::select(STMTS), 0..6))
        .prop_map(|(h, body)| format!("    {h} {{ {} }}\n", body.join(" ")));
    proptest::collection::vec(func, 1..5).prop_map(|fs| {
        let mut seen = std::collections::BTreeSet::new();
        let fs: Vec<String> = fs.into_iter().filter(|f| seen.insert(f.split('(').next().unwrap().to_string())).collect();
        format!(
            "contract C {{\n    address owner; uint256 fee; uint256 unlock; uint256 threshold; uint256 total; uint256 price;\n    mapping(address => uint256) balances;\n    constructor() {{ owner = msg.sender; }}\n    modifier onlyOwner() {{ require(msg.sender == owner); _; }}\n    function balanceOf(address a) public view returns (uint256) {{ return balances[a]; }}\n{}}}\n",
            fs.concat()
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_contracts_analyse_cleanly_and_repeatably(src in contract()) {
        let opts = AnalysisOptions::default();
        let a = scan_str(&src, &opts);
        prop_assert!(!a.has_errors(), "{}: {:?}", src, a.diagnostics);
        prop_assert_eq!(a, scan_str(&src, &opts));
    }
}
