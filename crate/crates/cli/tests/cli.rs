use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use tangleforge::rewrite::canonical_key;
use tangleforge_cli::schema::{schema_for, schema_id, SCHEMAS};
use tangleforge_cli::{parse_tm, serialize_tm};

fn fixture(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    dir.join(name).to_string_lossy().into_owned()
}

fn tangleforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangleforge"))
        .args(args)
        .env_remove("TANGLEFORGE_MAX_ENUM")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = tangleforge(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TM_FIXTURES: [&str; 8] = [
    "unknot.tm",
    "trefoil.tm",
    "figure_eight.tm",
    "r3_left.tm",
    "fusion_chain.tm",
    "square_a.tm",
    "square_b.tm",
    "gaussian_pair.tm",
];

/// One representative invocation per report-producing subcommand, keyed by
/// schema name.
fn invocations() -> Vec<(&'static str, Vec<String>)> {
    let f = fixture;
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        ("check", v(&["check", &f("trefoil.tm")])),
        ("check", v(&["check", &f("gaussian_pair.tm")])),
        ("color", v(&["color", &f("r3_left.tm"), "--given", "x=0", "--given", "y=1", "--given", "z=2"])),
        ("enumerate", v(&["enumerate", &f("trefoil.tm"), "--list"])),
        ("cap", v(&["cap", &f("trefoil.tm"), "--kmax", "6"])),
        ("complexity", v(&["complexity", &f("square_b.tm")])),
        ("rewrite", v(&["rewrite", &f("r3_left.tm")])),
        ("rewrite", v(&["rewrite", &f("r3_left.tm"), "--move", r#"{"move":"R3-slide","interactions":["s","t"],"direction":"right"}"#])),
        ("equiv", v(&["equiv", &f("trefoil.tm"), &f("unknot.tm"), "--depth", "4"])),
        ("fuse", v(&["fuse", "--csv", &f("estimators.csv"), "--omega", "0.5"])),
        ("geodesic-check", v(&["geodesic-check", "--dim", "2", "--grid", "5", "--seed", "1"])),
        ("faultsim", v(&["faultsim", "--streams", &f("streams.csv"), "--faults", &f("faults.csv")])),
        ("aqc-gap", v(&["aqc", "gap", "--grid", "101"])),
        ("aqc-entangle", v(&["aqc", "entangle", "--lambdas", "3", "--grid", "32"])),
        ("aqc-twosat", v(&["aqc", "twosat", "--grid", "32"])),
        ("detect", v(&["detect", "--panel", &f("search_trends.csv"), "--lags", "2"])),
        ("synth", v(&["synth", "--spec", &f("agent_model.json"), "--seed", "3", "--format", "json"])),
    ]
}

#[test]
fn documented_examples() {
    let e = json(&["enumerate", &fixture("trefoil.tm")]);
    assert_eq!(e["count"], 9);
    let eq = json(&["equiv", &fixture("trefoil.tm"), &fixture("unknot.tm"), "--depth", "4"]);
    assert_eq!(eq["verdict"], "distinguished");
    let missing = tangleforge(&["cap", "nosuch.tm"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(missing.stdout.is_empty());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nosuch.tm"));
}

#[test]
fn exit_code_contract() {
    assert_eq!(tangleforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tangleforge(&["enumerate"]).status.code(), Some(2));
    assert_eq!(tangleforge(&["cap", &fixture("trefoil.tm"), "--kmax", "40"]).status.code(), Some(2));
    assert_eq!(tangleforge(&["fuse", "--csv", &fixture("estimators.csv"), "--omega", "1.5"]).status.code(), Some(1));
    assert_eq!(tangleforge(&["detect", "--panel", &fixture("search_trends.csv"), "--lags", "0"]).status.code(), Some(1));
    assert_eq!(tangleforge(&["synth", "--spec", &fixture("unstable.json"), "--seed", "0"]).status.code(), Some(1));
    let help = tangleforge(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(!help.stdout.is_empty());
}

#[test]
fn enumeration_cap_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_tangleforge"))
        .args(["enumerate", &fixture("trefoil.tm"), "--quandle", "dihedral 5"])
        .env("TANGLEFORGE_MAX_ENUM", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&["enumerate", &fixture("trefoil.tm"), "--quandle", "dihedral 5"])["count"], 5);
}

#[test]
fn seeded_commands_are_byte_identical() {
    for args in [
        vec!["geodesic-check", "--dim", "3", "--grid", "7", "--seed", "99"],
        vec!["synth", "--spec", &fixture("agent_model.json"), "--seed", "5"],
        vec!["synth", "--spec", &fixture("cyclic.json"), "--seed", "5", "--format", "json"],
    ] {
        let a = tangleforge(&args);
        let b = tangleforge(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = tangleforge(&["synth", "--spec", &fixture("agent_model.json"), "--seed", "5"]);
    let b = tangleforge(&["synth", "--spec", &fixture("agent_model.json"), "--seed", "6"]);
    assert_ne!(a.stdout, b.stdout);
    for (_, args) in invocations() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(tangleforge(&args).stdout, tangleforge(&args).stdout, "{args:?}");
    }
}

#[test]
fn tm_round_trip_preserves_canonical_key() {
    for name in TM_FIXTURES {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let doc = parse_tm(&text).unwrap();
        let again = parse_tm(&serialize_tm(&doc.machine, &doc.coloring)).unwrap();
        assert_eq!(canonical_key(&again.machine), canonical_key(&doc.machine), "{name}");
        assert_eq!(again.coloring, doc.coloring, "{name}");
        assert_eq!(serialize_tm(&again.machine, &again.coloring), serialize_tm(&doc.machine, &doc.coloring));
    }
    let trefoil = parse_tm(&std::fs::read_to_string(fixture("trefoil.tm")).unwrap()).unwrap();
    assert_eq!((trefoil.machine.arcs.len(), trefoil.machine.interactions.len()), (3, 3));
}

#[test]
fn rewrite_emits_parseable_machines() {
    let out = tangleforge(&[
        "rewrite",
        &fixture("trefoil.tm"),
        "--move",
        r#"{"move":"R1-insert","arcs":["a0"]}"#,
        "--format",
        "tm",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = parse_tm(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(doc.machine.interactions.len(), 4);
}

#[test]
fn csv_outputs() {
    let synth = tangleforge(&["synth", "--spec", &fixture("agent_model.json"), "--seed", "1"]);
    let text = String::from_utf8(synth.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("X,Y,Z"));
    assert_eq!(text.lines().count(), 2001);
    let fused = tangleforge(&["fuse", "--csv", &fixture("estimators.csv"), "--omega", "0.5", "--format", "csv"]);
    assert_eq!(fused.status.code(), Some(0));
    assert!(String::from_utf8(fused.stdout).unwrap().starts_with("t,"));
    let gap = tangleforge(&["aqc", "gap", "--grid", "101", "--format", "csv"]);
    assert_eq!(String::from_utf8(gap.stdout).unwrap().lines().count(), 102);
}

#[test]
fn reports_validate_against_published_schemas() {
    let mut covered = std::collections::BTreeSet::new();
    for (name, args) in invocations() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let report = json(&args);
        let schema: Value = serde_json::from_str(schema_for(name).unwrap()).unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        assert_eq!(report["schema"], schema_id(name));
        covered.insert(name);
    }
    assert_eq!(covered.len(), SCHEMAS.len());
    let printed = json(&["schema", "detect"]);
    assert_eq!(printed, serde_json::from_str::<Value>(schema_for("detect").unwrap()).unwrap());
}
