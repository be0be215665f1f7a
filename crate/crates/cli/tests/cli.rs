use std::fs;
use std::path::Path;
use std::process::Command;

use anosov_limits::pipeline::{cmd_boundary, cmd_classify, cmd_enumerate, cmd_limit_cone, Context};
use anosov_limits::{parse_scenario, verify, EXIT_ACCEPTANCE, EXIT_CONFIG};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anosov-limits"))
}

fn ctx(text: &str, dir: &Path) -> Context {
    Context::new(parse_scenario(text).unwrap(), dir, None)
}

const SYM2: &str = "preset.name = sym2-triangle\nball.radius = 8\n";
const DEFORMED: &str = "preset.name = reflection\npreset.t = 2\nball.radius = 8\n";

#[test]
fn single_generator_ball() {
    let dir = tempfile::tempdir().unwrap();
    let c = ctx("preset.name = single\npreset.generators = 2 0 0 0 1 0 0 0 0.5\nball.radius = 3\n", dir.path());
    assert_eq!(cmd_enumerate(&c).unwrap().element_count, 6);
    let cone = cmd_limit_cone(&c).unwrap();
    assert_eq!(cone.summary.interval.0, cone.summary.interval.1);
    let csv = fs::read_to_string(dir.path().join("cone.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("angle,norm,word"));
}

#[test]
fn relations_collapse_the_sym2_ball() {
    let dir = tempfile::tempdir().unwrap();
    let n = cmd_enumerate(&ctx("preset.name = sym2-triangle\nball.radius = 6\n", dir.path())).unwrap().element_count;
    assert!(n < 4 * 3usize.pow(5), "{n}");
}

#[test]
fn cone_csv_is_sorted_with_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let c = ctx(DEFORMED, dir.path());
    let out = cmd_limit_cone(&c).unwrap();
    assert!(out.summary.width > 1e-2);
    let csv = fs::read_to_string(dir.path().join("cone.csv")).unwrap();
    let angles: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(angles.windows(2).all(|w| w[0] <= w[1]));
    let first = csv.lines().nth(1).unwrap().split(',').next().unwrap();
    let mantissa = first.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{first}");
    assert!(!csv.contains('\r'));
    let fuchsian = cmd_limit_cone(&ctx(SYM2, tempfile::tempdir().unwrap().path())).unwrap();
    assert!(fuchsian.summary.width < 1e-3);
}

#[test]
fn boundary_reports() {
    let dir = tempfile::tempdir().unwrap();
    let f = cmd_boundary(&ctx(SYM2, dir.path())).unwrap();
    assert!(f.report.conic_residual < 1e-5);
    assert!(fs::read_to_string(dir.path().join("boundary.svg")).unwrap().contains("<svg"));
    let d = cmd_boundary(&ctx(DEFORMED, tempfile::tempdir().unwrap().path())).unwrap();
    assert!(d.report.conic_residual > 1e-3);
    assert_eq!(d.report.oppositeness.injectivity_violations, 0);
    assert!(d.report.tangent_max_angle < 1e-3);
}

#[test]
fn classification_digests() {
    let dir = tempfile::tempdir().unwrap();
    let f = cmd_classify(&ctx(&format!("{SYM2}classify.chambers = 3\n"), dir.path())).unwrap();
    assert_eq!(f.digests.len(), 3);
    for d in &f.digests {
        assert_eq!(d.radial_cells, 1);
        assert!(d.best_direction.abs() <= 0.02);
    }
    let lines = fs::read_to_string(dir.path().join("classification.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), f.records.len());
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["target_flag"].as_array().unwrap().len(), 9);
    assert!(first["verdicts"]["horospherical"].as_bool().unwrap());

    let d = cmd_classify(&ctx(&format!("{DEFORMED}classify.chambers = 4\n"), tempfile::tempdir().unwrap().path())).unwrap();
    for dg in &d.digests {
        assert_eq!(dg.radial_cells, 1, "{dg:?}");
        assert!((dg.best_direction - dg.jordan_angle).abs() <= 0.02, "{dg:?}");
        assert_eq!(dg.horospherical, dg.targets);
    }
}

#[test]
fn empty_target_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_classify(&ctx(&format!("{DEFORMED}classify.chambers = 0\n"), dir.path())).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(fs::read_to_string(dir.path().join("classification.jsonl")).unwrap(), "");
}

#[test]
fn outputs_are_deterministic() {
    let text = format!("{DEFORMED}classify.chambers = 2\nseed = 4\n");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let c = ctx(&text, dir);
        cmd_limit_cone(&c).unwrap();
        cmd_boundary(&c).unwrap();
        cmd_classify(&c).unwrap();
    }
    for f in ["cone.csv", "cone_summary.json", "boundary.csv", "boundary.svg", "boundary_report.json", "classification.jsonl"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn binary_exit_codes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "preset.name = nonsense\n").unwrap();
    let out = bin().args(["enumerate", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let good = dir.path().join("good.cfg");
    fs::write(&good, "preset.name = reflection\nball.radius = 4\n").unwrap();
    let cache = dir.path().join("shared-cache");
    let out = bin()
        .args(["enumerate", "--radius", "5", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path())
        .env("ANOSOV_LIMITS_CACHE", &cache)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let entries: Vec<_> = fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run_report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"]["radius"], 5);
    assert!(report["element_count"].as_u64().unwrap() > 0);

    let out = bin().args(["enumerate", "--radius", "15", "--config"]).arg(&good).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let out = bin().args(["verify", "--list"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), verify::CRITERIA.len());
}

#[test]
fn noise_generators_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noise.cfg");
    fs::write(&cfg, "preset.name = noise\nball.radius = 6\nseed = 3\n").unwrap();
    let out = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_ACCEPTANCE));
    let table = String::from_utf8_lossy(&out.stdout);
    let qi = table.lines().find(|l| l.starts_with("11 ")).unwrap();
    assert!(qi.contains("FAIL"), "{qi}");
}

#[test]
fn fuzz_corpus_seeds_parse_without_panicking() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut valid = 0;
    for entry in fs::read_dir(root.join("parse_scenario")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        valid += usize::from(parse_scenario(&text).is_ok());
    }
    assert!(valid >= 5);
    let mut caches = 0;
    for entry in fs::read_dir(root.join("parse_ball_cache")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        caches += usize::from(anosov_core::group::cache::parse_ball_cache(&text).is_ok());
    }
    assert_eq!(caches, 2);
}
