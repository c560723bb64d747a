use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pgcl::cli::{run_check, run_refine, RunConfig, EXIT_HOLDS, EXIT_NOT_REFINED, EXIT_UNKNOWN, EXIT_UNSUPPORTED};
use pgcl::logic::{Mode, Verdict};
use pgcl::syntax::pretty_print;
use pgcl::testing::{corpus, ProgramShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn pgclc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgclc")).args(args).env_remove("PGCLC_TIME_MS").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn schema() -> jsonschema::Validator {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{report:#}");
    let depths: Vec<u64> = report["depths"].as_array().unwrap().iter().map(|d| d["depth"].as_u64().unwrap()).collect();
    assert_eq!(depths, (1..=depths.len() as u64).collect::<Vec<_>>());
}

#[test]
fn skip_holds_at_depth_one() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "skip.pgcl", "var x;\nskip");
    let out = pgclc(&["check", "--mode", "l", "--budget", "5", "--json", s(&p), "may P[true] > 1/2"]);
    assert_eq!(out.status.code(), Some(EXIT_HOLDS));
    let report = json_of(&out);
    assert_valid(&report);
    assert_eq!(report["verdict"], serde_json::json!({"kind": "holds", "depth": 1}));
}

#[test]
fn divergence_is_unknown() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "loop.pgcl", "var x;\nwhile true { skip }");
    let out = pgclc(&["check", "--budget", "10", "--json", s(&p), "may P[true] > 0"]);
    assert_eq!(out.status.code(), Some(EXIT_UNKNOWN));
    let report = json_of(&out);
    assert_valid(&report);
    assert_eq!(report["verdict"]["kind"], "unknown");
    assert_eq!(report["verdict"]["depth"], 10);
    assert!(report["depths"].as_array().unwrap().iter().all(|d| d["raw"] == 1));
}

#[test]
fn malformed_inputs_exit_one_with_a_location() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "a.pgcl", "var x;\nx := 1");
    let out = pgclc(&["check", s(&p), "may P[x = 1] >> 1/2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1, column 15"), "{err}");

    let bad = write(&dir, "bad.pgcl", "var x;\nx := 1 +\n");
    let out = pgclc(&["check", s(&bad), "may true"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(pgclc(&["check", "--budget", "0", s(&p), "may true"]).status.code(), Some(1));
    assert_eq!(pgclc(&["check", s(&p)]).status.code(), Some(1));
    assert_eq!(pgclc(&["check", "missing.pgcl", "may true"]).status.code(), Some(1));
    assert_eq!(pgclc(&["check", "--backend", "quantum", s(&p), "may true"]).status.code(), Some(1));
    assert_eq!(pgclc(&["check", "--init", "w=1", s(&p), "may true"]).status.code(), Some(1));
}

#[test]
fn fragment_violations_exit_two() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "a.pgcl", "var x;\nx := 1");
    assert_eq!(pgclc(&["check", "--mode", "l", s(&p), "must P[x = 1] > 0"]).status.code(), Some(EXIT_UNSUPPORTED));
    assert_eq!(pgclc(&["check", "--mode", "u", s(&p), "may P[x = 1] > 0"]).status.code(), Some(EXIT_UNSUPPORTED));
    let out = pgclc(&["check", "--mode", "b", s(&p), "must P[x = 1] > 0 | P[x = 0] > 0"]);
    assert_eq!(out.status.code(), Some(EXIT_UNSUPPORTED));
}

#[test]
fn formula_may_come_from_a_file_and_init_sets_the_store() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "inc.pgcl", "var x, y;\ny := x + 1");
    let f = write(&dir, "phi.txt", "must P[y = 3] > 1/2\n");
    let out = pgclc(&["check", "--mode", "u", "--init", "x=2", s(&p), s(&f)]);
    assert_eq!(out.status.code(), Some(EXIT_HOLDS), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(pgclc(&["check", "--mode", "u", s(&p), s(&f)]).status.code(), Some(EXIT_UNKNOWN));
}

#[test]
fn text_and_json_verdicts_agree() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "coin.pgcl", "var c;\nwhile c = 0 { c :~ {1/2: 0, 1/2: 1} }");
    for (formula, mode) in [("must P[c = 1] > 3/4", "u"), ("may P[c = 1] > 0.99", "b"), ("may P[c = 0] > 0", "l")] {
        let text = pgclc(&["check", "--mode", mode, "--budget", "9", s(&p), formula]);
        let json = pgclc(&["check", "--mode", mode, "--budget", "9", "--json", s(&p), formula]);
        assert_eq!(text.status.code(), json.status.code());
        let report = json_of(&json);
        assert_valid(&report);
        let verdict = match report["verdict"]["kind"].as_str().unwrap() {
            "holds" => format!("holds (witnessed at depth {})", report["verdict"]["depth"]),
            _ => format!("unknown (budget exhausted at depth {})", report["verdict"]["depth"]),
        };
        let out = String::from_utf8_lossy(&text.stdout);
        assert!(out.contains(&verdict), "{out} vs {verdict}");
    }
}

#[test]
fn dumps_one_file_per_depth() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "race.pgcl", "var x;\nx := 1 || x := 2");
    let dump = dir.path().join("gens");
    let out = pgclc(&["check", "--budget", "3", "--dump-gensets", s(&dump), s(&p), "may P[x = 3] > 0"]);
    assert_eq!(out.status.code(), Some(EXIT_UNKNOWN));
    for n in 1..=3 {
        let doc: Value = serde_json::from_str(&fs::read_to_string(dump.join(format!("F_{n}.json"))).unwrap()).unwrap();
        assert_eq!(doc["depth"], n);
        assert_eq!(doc["members"].as_array().unwrap().len() as u64, doc["pruned"].as_u64().unwrap());
    }
    let f2: Value = serde_json::from_str(&fs::read_to_string(dump.join("F_2.json")).unwrap()).unwrap();
    let weights: Vec<&Value> = f2["members"].as_array().unwrap().iter().map(|m| &m[0]["weight"]).collect();
    assert_eq!(weights, vec!["1/1", "1/1"]);
}

#[test]
fn oracle_check_agrees_on_corpus_programs() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (i, p) in corpus(&mut rng, &ProgramShape::default(), 9).iter().enumerate() {
        let path = write(&dir, &format!("p{i}.pgcl"), &format!("var x, y, z;\n{}", pretty_print(p)));
        let out = pgclc(&["check", "--budget", "5", "--json", "--oracle-check", s(&path), "may P[x = 2] > 1/2"]);
        let report = json_of(&out);
        assert_valid(&report);
        assert_eq!(report["oracle"]["agree"], true, "{p}");
        assert!(report["oracle"]["stopped"].is_null());
    }
}

#[test]
fn quantum_programs_run_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "q.pgcl", "bits 1 qubits 1;\nH(q1); M[x1 <- q1]");
    let out = pgclc(&["check", "--json", s(&p), "may P[x1 = 1] > 1/4"]);
    assert_eq!(out.status.code(), Some(EXIT_HOLDS));
    let report = json_of(&out);
    assert_valid(&report);
    assert_eq!(report["backend"], "quantum");
    assert_eq!(report["verdict"]["depth"], 2);
    assert_eq!(pgclc(&["check", s(&p), "may P[x1 = 1] > 1/2"]).status.code(), Some(EXIT_UNKNOWN));

    let keep = write(&dir, "keep.pgcl", "bits 2 qubits 1;\nM[x2 <- q1]");
    assert_eq!(pgclc(&["check", "--init", "x1=1", s(&keep), "must P[x1 = 1 && x2 = 0] > 0.9"]).status.code(), Some(EXIT_HOLDS));

    let gates = write(&dir, "gates.json", r#"[{"name": "NOT", "size": 2, "matrix": [[0,0],[1,0],[1,0],[0,0]]}]"#);
    let custom = write(&dir, "custom.pgcl", "bits 1 qubits 1;\nNOT(q1); M[x1 <- q1]");
    let out = pgclc(&["check", "--gates", s(&gates), s(&custom), "must P[x1 = 1] > 0.9"]);
    assert_eq!(out.status.code(), Some(EXIT_HOLDS), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(pgclc(&["check", s(&custom), "must P[x1 = 1] > 0.9"]).status.code(), Some(1));
}

#[test]
fn time_cap_turns_into_unknown_with_a_reason() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "loop.pgcl", "var x;\nwhile true { x :~ {1/2: 0, 1/2: 1} + x := 2 }");
    let out = Command::new(env!("CARGO_BIN_EXE_pgclc"))
        .args(["check", "--json", "--budget", "50", s(&p), "may P[x = 7] > 0"])
        .env("PGCLC_TIME_MS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_UNKNOWN));
    let report = json_of(&out);
    assert_valid(&report);
    assert!(report["verdict"]["limit"].as_str().unwrap().contains("time"), "{report:#}");
    assert_eq!(report["caps"]["time_ms"], 0);
}

#[test]
fn refine_examples() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.pgcl", "var x;\nx := 0");
    let q = write(&dir, "q.pgcl", "var x;\nx := 0 + x := 1");
    let code = |mode: &str, a: &Path, b: &Path| pgclc(&["refine", "--mode", mode, "--budget", "3", s(a), s(b)]).status.code();
    assert_eq!(code("b", &p, &p), Some(EXIT_HOLDS));
    assert_eq!(code("l", &p, &q), Some(EXIT_HOLDS));
    assert_eq!(code("u", &p, &q), Some(EXIT_NOT_REFINED));
    assert_eq!(code("u", &q, &p), Some(EXIT_HOLDS));
    assert_eq!(code("l", &q, &p), Some(EXIT_NOT_REFINED));

    let lhs = write(&dir, "lhs.pgcl", "var x, y;\nx := 1 +[1/3] (y := 1 + y := 2; x := y)");
    let rhs = write(&dir, "rhs.pgcl", "var x, y;\n(x := 1 +[1/3] y := 1) + (x := 1 +[1/3] (y := 2; x := y))");
    assert_eq!(code("b", &lhs, &rhs), Some(EXIT_HOLDS));
    assert_eq!(code("b", &rhs, &lhs), Some(EXIT_HOLDS));

    let out = pgclc(&["refine", "--json", "--budget", "3", s(&p), s(&q)]);
    let report = json_of(&out);
    assert_valid(&report);
    assert_eq!(report["refinement"]["depth_bounded"], true);

    let quantum = write(&dir, "quantum.pgcl", "bits 1 qubits 1;\nskip");
    assert_eq!(code("b", &p, &quantum), Some(1));
}

#[test]
fn library_entry_points_match_the_binary() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "skip.pgcl", "var x;\nskip");
    let cfg = RunConfig { mode: Mode::Lower, budget: 5, ..Default::default() };
    let report = run_check(&p, "may P[true] > 1/2", &cfg).unwrap();
    assert_eq!(report.verdict, Some(Verdict::Holds { depth: 1 }));
    assert_eq!(report.exit_code(), EXIT_HOLDS);
    assert!(report.to_text().contains("holds (witnessed at depth 1)"));
    let report = run_refine(&p, &p, &cfg).unwrap();
    assert_eq!(report.exit_code(), EXIT_HOLDS);
    let err = run_check(&p, "must P[true] > 0", &cfg).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_UNSUPPORTED);
}
