//! Command-line behavior: outputs, goldens and exit codes.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use common::fixture_path;
use tmkit::cli::{self, EXIT_CLEAN, EXIT_ERRORS, EXIT_USAGE};
use tmkit::export::from_json;
use tmkit::{ModelDocument, ThimacId, Trace};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut argv = vec!["tmkit"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn fx(name: &str) -> String {
    fixture_path(name).to_str().unwrap().to_owned()
}

fn write_temp(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tmkit"));
    cmd.env_remove("TMKIT_MODE");
    cmd
}

#[test]
fn strict_check_of_the_car_is_clean() {
    let r = run(&["check", &fx("car"), "--mode", "strict"]);
    assert_eq!(r.code, EXIT_CLEAN, "{}", r.stdout);
    assert!(r.stdout.ends_with("errors=0 warnings=3\n"), "{}", r.stdout);
    assert!(!r.stdout.contains("ERROR"));
}

#[test]
fn missing_file_is_an_io_error() {
    let r = run(&["check", "nonexistent.tm"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("cannot read"));
    assert!(r.stdout.is_empty());
}

#[test]
fn rerouted_car_fails_with_one_bypass() {
    let r = run(&["check", &fx("car_bypass")]);
    assert_eq!(r.code, EXIT_ERRORS);
    let errors: Vec<&str> = r.stdout.lines().filter(|l| l.starts_with("ERROR")).collect();
    assert_eq!(
        errors,
        ["ERROR BOUNDARY_BYPASS transfer.Ignition:signal->transfer.Car.Engine:signal: \
          flow between `Ignition` and `Car.Engine` bypasses object thimac `Car`"]
    );
}

#[test]
fn check_golden_for_the_car() {
    let r = run(&["check", &fx("car")]);
    let golden = "\
WARNING SAME_MACHINE_TRIGGER process.Car.Engine:signal~>create.Car.Engine:rotation: trigger stays inside machine `Car.Engine`
WARNING SAME_MACHINE_TRIGGER process.Car.FuelSystem:signal~>create.Car.FuelSystem:fuel: trigger stays inside machine `Car.FuelSystem`
WARNING SAME_MACHINE_TRIGGER process.Car.Transmission:signal~>create.Car.Transmission:position: trigger stays inside machine `Car.Transmission`
errors=0 warnings=3
";
    assert_eq!(r.stdout, golden);
    assert_eq!(r.code, EXIT_CLEAN);
}

#[test]
fn corpus_is_clean_in_relaxed_mode() {
    for f in tmkit::corpus::FIXTURES {
        let r = run(&["check", &fx(f.name), "--mode", "relaxed"]);
        let expected = if f.name == "car_bypass" { EXIT_ERRORS } else { EXIT_CLEAN };
        assert_eq!(r.code, expected, "{}: {}", f.name, r.stdout);
        let strict = run(&["check", &fx(f.name), "--mode", "strict"]);
        assert_eq!(strict.code, expected, "{}: {}", f.name, strict.stdout);
    }
}

#[test]
fn illegal_flows_are_errors_only_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        dir.path(),
        "loose.tm",
        "thimac A { machine { process; } }\nthimac B { machine { receive; } }\nflow process.A -> receive.B;\n",
    );
    let relaxed = run(&["check", &path]);
    assert_eq!(relaxed.code, EXIT_CLEAN);
    assert!(relaxed.stdout.starts_with("WARNING ILLEGAL_INTER_FLOW process.A->receive.B:"));
    let strict = run(&["check", &path, "--mode", "STRICT"]);
    assert_eq!(strict.code, EXIT_ERRORS);
    assert!(strict.stdout.starts_with("ERROR ILLEGAL_INTER_FLOW process.A->receive.B:"));
}

#[test]
fn mode_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        dir.path(),
        "loose.tm",
        "thimac A { machine { process; } }\nthimac B { machine { receive; } }\nflow process.A -> receive.B;\n",
    );
    let status = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = binary();
        cmd.arg("check").arg(&path).args(extra);
        if let Some(mode) = env {
            cmd.env("TMKIT_MODE", mode);
        }
        cmd.output().unwrap().status.code().unwrap()
    };
    assert_eq!(status(None, &[]), EXIT_CLEAN);
    assert_eq!(status(Some("strict"), &[]), EXIT_ERRORS);
    assert_eq!(status(Some("strict"), &["--mode", "relaxed"]), EXIT_CLEAN);
    assert_eq!(status(Some("sideways"), &[]), EXIT_USAGE);
}

#[test]
fn parse_errors_are_positioned() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(dir.path(), "bad.tm", "thimac A {\n  machine { fly; }\n}\n");
    let r = run(&["check", &path]);
    assert_eq!(r.code, EXIT_ERRORS);
    let first = r.stdout.lines().next().unwrap();
    assert!(first.starts_with("ERROR SYNTAX_ERROR "), "{first}");
    assert!(first.contains(&format!("{path}:2:13:")), "{first}");
    let r = run(&["classify", &path]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stdout.is_empty() && r.stderr.contains("SYNTAX_ERROR"));
}

#[test]
fn non_utf8_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bin.tm");
    std::fs::write(&path, [0xff, 0xfe, 0x00]).unwrap();
    assert_eq!(run(&["check", path.to_str().unwrap()]).code, EXIT_USAGE);
}

#[test]
fn classify_golden_for_the_car() {
    let r = run(&["classify", &fx("car")]);
    assert_eq!(r.code, EXIT_CLEAN);
    let golden = "\
THIMAC            DECLARED  COMPUTED  NOTE
Car               oo        OO
Car.Engine        -         LEAF
Car.Transmission  -         LEAF
Car.FuelSystem    -         LEAF
";
    assert_eq!(r.stdout, golden);
}

#[test]
fn classify_lists_courses_and_programs() {
    let r = run(&["classify", &fx("degree_course")]);
    assert_eq!(r.code, EXIT_CLEAN);
    let row = |id: &str| {
        r.stdout
            .lines()
            .find(|l| l.split_whitespace().next() == Some(id))
            .unwrap_or_else(|| panic!("no row for {id}"))
            .to_owned()
    };
    assert!(row("DegreeProgram").contains("shared parts only"));
    assert!(row("Course").contains("LEAF"));
    let doc = tmkit::corpus::load("degree_course");
    let course = ThimacId::new("Course");
    assert!(doc.model.part_links().iter().any(|l| l.part == course));
}

#[test]
fn classify_flags_declared_objects_that_are_not() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        dir.path(),
        "leaky.tm",
        "thimac Box oo { thimac Lid { machine { transfer; } } }\n\
         thimac Hand { machine { transfer; } }\n\
         flow transfer.Hand -> transfer.Box.Lid;\n",
    );
    let r = run(&["classify", &path]);
    let row = r.stdout.lines().find(|l| l.starts_with("Box ")).unwrap();
    assert!(row.contains("NON_OO") && row.ends_with("MISMATCH"), "{row}");
    assert_eq!(run(&["check", &path]).code, EXIT_ERRORS);
}

#[test]
fn classify_of_an_empty_model_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(dir.path(), "empty.tm", "");
    let r = run(&["classify", &path]);
    assert_eq!(r.code, EXIT_CLEAN);
    assert_eq!(r.stdout, "THIMAC  DECLARED  COMPUTED  NOTE\n");
}

#[test]
fn impact_of_deleting_a_polygon() {
    let r = run(&["impact", &fx("polygon_style"), "--delete", "PolygonInstance"]);
    assert_eq!(r.code, EXIT_CLEAN);
    assert_eq!(r.stdout, "PolygonInstance\nPolygonInstance.Point\n");
}

#[test]
fn impact_of_deleting_a_leaf_and_an_unknown() {
    let r = run(&["impact", &fx("car"), "--delete", "Car.Engine"]);
    assert_eq!(r.stdout, "Car.Engine\n");
    let r = run(&["impact", &fx("car"), "--delete", "Bus"]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stderr.starts_with("ERROR UNKNOWN_THIMAC Bus"));
}

#[test]
fn impact_matches_the_closure_oracle_on_every_fixture() {
    for f in tmkit::corpus::FIXTURES {
        let doc = tmkit::corpus::load(f.name);
        for t in doc.model.thimacs() {
            let r = run(&["impact", &fx(f.name), "--delete", t.id.as_str()]);
            let got: Vec<&str> = r.stdout.lines().collect();
            let mut want: BTreeSet<ThimacId> = common::closure_oracle(
                doc.model.part_links(),
                &t.id,
                &[tmkit::LinkKind::Composite],
            );
            want.insert(t.id.clone());
            let want: Vec<&str> = want.iter().map(ThimacId::as_str).collect();
            assert_eq!(got, want, "{} {}", f.name, t.id);
        }
    }
}

#[test]
fn simulate_the_drive() {
    let r = run(&["simulate", &fx("car"), "--behavior", "drive"]);
    assert_eq!(r.code, EXIT_CLEAN, "{}{}", r.stdout, r.stderr);
    let mut events: Vec<&str> = Vec::new();
    for line in r.stdout.lines().filter(|l| l.starts_with("fire ")) {
        let e = line.split(' ').nth(1).unwrap();
        if events.last() != Some(&e) {
            events.push(e);
        }
    }
    assert_eq!(events, ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"]);
    assert!(r.stdout.contains("fire E1 transfer.Car:ignition consumed=[1] emitted=[1]\n"));
    assert!(r.stdout.contains("final 7 process.Car:movement\n"));
    assert!(r.stdout.contains("tokens external=3 created=3 triggered=1\n"));
    assert!(r.stdout.ends_with(
        "conservation process_neutral pass (process_firings=4)\n\
         conservation exits_via_transfer pass (exits=0)\n\
         conservation mint_accounting pass (minted=7 final=7 exited=0)\n"
    ));
    assert!(!r.stdout.contains("WARNING") && !r.stdout.contains("ERROR"));
}

#[test]
fn simulate_the_course_update() {
    let r = run(&["simulate", &fx("degree_course"), "--behavior", "addCourse"]);
    assert_eq!(r.code, EXIT_CLEAN);
    let last_fire = r.stdout.lines().rev().find(|l| l.starts_with("fire ")).unwrap();
    assert!(last_fire.starts_with("fire D10 "), "{last_fire}");
    assert!(r
        .stdout
        .lines()
        .any(|l| l.starts_with("final ") && l.ends_with(" process.DegreeProgram:instance")));
}

#[test]
fn cyclic_behavior_is_not_simulated() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        dir.path(),
        "loop.tm",
        "thimac A { machine { create; process; } flow create.A -> process.A; }\n\
         event E1 over { create.A };\nevent E2 over { process.A };\n\
         behavior spin { E1 -> E2; E2 -> E1; }\n",
    );
    let r = run(&["simulate", &path, "--behavior", "spin"]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stdout.contains("CYCLIC_BEHAVIOR spin"), "{}", r.stdout);
    assert!(!r.stdout.contains("fire "));
}

#[test]
fn out_of_order_chronology_is_not_simulated() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        dir.path(),
        "back.tm",
        "thimac A { machine { create; process; } flow create.A -> process.A; }\n\
         event E1 over { create.A };\nevent E2 over { process.A };\n\
         behavior back { E2 -> E1; }\n",
    );
    let r = run(&["simulate", &path, "--behavior", "back"]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stdout.contains("ERROR DEP_VIOLATION back"), "{}", r.stdout);
    assert_eq!(run(&["check", &path]).code, EXIT_ERRORS);
}

#[test]
fn strict_simulation_of_the_drive_starves() {
    let r = run(&["simulate", &fx("car"), "--behavior", "drive", "--mode", "strict"]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stdout.starts_with("ERROR STARVED_FLOW <boundary>->transfer.Car:ignition"), "{}", r.stdout);
}

#[test]
fn unknown_behavior() {
    let r = run(&["simulate", &fx("car"), "--behavior", "fly"]);
    assert_eq!(r.code, EXIT_ERRORS);
    assert!(r.stderr.starts_with("ERROR UNKNOWN_BEHAVIOR fly"));
    let r = run(&["export", &fx("car"), "--format", "dot-behavior", "--behavior", "fly"]);
    assert_eq!(r.code, EXIT_ERRORS);
}

#[test]
fn trace_json_is_written_and_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let r = run(&[
        "simulate",
        &fx("car"),
        "--behavior",
        "drive",
        "--trace-json",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_CLEAN);
    let text = std::fs::read_to_string(&out).unwrap();
    let trace: Trace = from_json(text.trim_end()).unwrap();
    assert_eq!(trace.fired_events(), ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"]);
}

#[test]
fn export_static_dot_of_the_car() {
    let r = run(&["export", &fx("car"), "--format", "dot-static"]);
    assert_eq!(r.code, EXIT_CLEAN);
    graphviz_rust::parse(&r.stdout).unwrap();
    assert_eq!(r.stdout.matches("subgraph \"cluster_").count(), 4);
}

#[test]
fn export_behavior_dot_golden() {
    let r = run(&["export", &fx("assembly"), "--format", "dot-behavior", "--behavior", "assemble"]);
    assert_eq!(r.code, EXIT_CLEAN);
    graphviz_rust::parse(&r.stdout).unwrap();
    assert_eq!(r.stdout.matches(" -> ").count(), 2);
}

#[test]
fn export_json_reimports() {
    for f in tmkit::corpus::FIXTURES {
        let r = run(&["export", &fx(f.name), "--format", "json"]);
        assert_eq!(r.code, EXIT_CLEAN);
        let back: ModelDocument = from_json(r.stdout.trim_end()).unwrap();
        assert_eq!(back, tmkit::corpus::load(f.name), "{}", f.name);
    }
}

#[test]
fn dot_behavior_requires_a_behavior() {
    let r = run(&["export", &fx("car"), "--format", "dot-behavior"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stdout.is_empty());
    assert!(r.stderr.contains("--behavior"));
}

#[test]
fn help_version_and_bad_flags() {
    let r = run(&["--help"]);
    assert_eq!(r.code, EXIT_CLEAN);
    assert!(r.stdout.contains("check") && r.stdout.contains("simulate"));
    assert_eq!(run(&["--version"]).code, EXIT_CLEAN);
    assert_eq!(run(&["check", &fx("car"), "--bogus"]).code, EXIT_USAGE);
    assert_eq!(run(&[]).code, EXIT_USAGE);
    assert_eq!(run(&["export", &fx("car"), "--format", "svg"]).code, EXIT_USAGE);
    assert_eq!(run(&["check", &fx("car"), "--mode", "lenient"]).code, EXIT_USAGE);
}

#[test]
fn color_is_opt_in() {
    let plain = run(&["check", &fx("car_bypass")]);
    assert!(!plain.stdout.contains('\x1b'));
    let colored = run(&["--color", "check", &fx("car_bypass")]);
    assert!(colored.stdout.contains('\x1b'));
    assert_eq!(colored.code, plain.code);
}

#[test]
fn binary_exit_codes_match_the_library() {
    let cases: &[(&[&str], i32)] = &[
        (&["check", "fixtures/car.tm"], EXIT_CLEAN),
        (&["check", "fixtures/car_bypass.tm"], EXIT_ERRORS),
        (&["check", "fixtures/missing.tm"], EXIT_USAGE),
        (&["export", "fixtures/car.tm", "--format", "dot-behavior"], EXIT_USAGE),
    ];
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for (args, code) in cases {
        let out = binary().current_dir(&root).args(*args).output().unwrap();
        assert_eq!(out.status.code(), Some(*code), "{args:?}");
    }
}

#[test]
fn warnings_alone_never_fail() {
    for f in tmkit::corpus::FIXTURES {
        let r = run(&["check", &fx(f.name)]);
        let has_error = r.stdout.lines().any(|l| l.starts_with("ERROR"));
        assert_eq!(r.code == EXIT_ERRORS, has_error, "{}", f.name);
    }
}
