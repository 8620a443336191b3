use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use rdslab_core::field::{h1_norm, l2_norm, lp_norm};
use rdslab_core::{Field, Grid};

const BASE: &str = r#"
[spec]
lambda = 2.0
epsilon = 1.0
domain_radius = 8.0
nonlinearity = { kind = "cubic", alpha3 = 1.0, scale = 1.0 }
forcing = { amplitude = 2.0, delta = 0.1, width = 1.0 }

[grid]
points_per_axis = 65

[noise]
seed = 17
window = [-3.0, 3.0]
dt = 0.01
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdslab"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_config(dir: &Path, name: &str, text: &str) -> Output {
    let config = dir.join(format!("{name}.toml"));
    std::fs::write(&config, text).unwrap();
    bin()
        .args(["run", "--quiet", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(dir.join(name))
        .output()
        .unwrap()
}

fn summary(dir: &Path, name: &str, experiment: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(name).join(format!("{experiment}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn check<'a>(s: &'a Value, name: &str) -> &'a Value {
    s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn zero_horizon_simulation_reports_initial_norms() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "experiment = \"simulate\"\n{BASE}\n[simulate]\nhorizon = 0.0\ntail_radii = [2.0]\n\n\
         [[initial.members]]\nkind = \"gaussian\"\namplitude = 1.5\ncenter = [0.5]\nwidth = 2.0\n"
    );
    let out = run_config(dir.path(), "sim", &text);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "sim", "simulate");
    let g = Grid::new(1, 8.0, 65).unwrap();
    let u0 = Field::from_fn(g, |x| 1.5 * (-((x[0] - 0.5) / 2.0).powi(2)).exp());
    let fin = &s["results"]["final"];
    assert_eq!(fin["l2"].as_f64().unwrap(), l2_norm(&u0));
    assert_eq!(fin["h1"].as_f64().unwrap(), h1_norm(&u0));
    assert_eq!(fin["lp"].as_f64().unwrap(), lp_norm(&u0, 4.0).unwrap());
    assert_eq!(s["results"]["stored_states"], 1);
    let csv = std::fs::read_to_string(dir.path().join("sim/simulate_norms.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,l2,h1,lp,tail_l2_2,tail_h1_2");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn zero_duration_cocycle_test_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("experiment = \"cocycle-test\"\n{BASE}\n[cocycle-test]\nt = 0.0\ns = 0.0\ntau = 0.3\n");
    let out = run_config(dir.path(), "coc", &text);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "coc", "cocycle-test");
    assert_eq!(s["results"]["residual"].as_f64().unwrap(), 0.0);
    assert_eq!(check(&s, "identity_bitwise")["passed"], true);
    assert_eq!(s["passed"], true);
}

#[test]
fn reference_equilibrium_converges_with_monotone_history_tail() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_root().join("configs/equilibrium.toml");
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS converged"));
    let s: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("equilibrium_summary.json")).unwrap()).unwrap();
    assert_eq!(s["results"]["converged"], true);
    let csv = std::fs::read_to_string(dir.path().join("equilibrium_history.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,increment,relative");
    let incs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(incs.len(), 7);
    assert!(incs[incs.len() - 5..].windows(2).all(|w| w[1] < w[0]), "{incs:?}");
}

#[test]
fn describe_cites_results_and_rejects_unknown_names() {
    let text = |name: &str| bin().args(["describe", name]).output().unwrap();
    let eq = text("equilibrium");
    assert_eq!(eq.status.code(), Some(0));
    assert!(String::from_utf8(eq.stdout).unwrap().contains("Lemma 6.3"));
    let tail = text("tail");
    let tail = String::from_utf8(tail.stdout).unwrap();
    assert!(tail.contains("Lemma 4.4"));
    assert!(tail.contains("k, l2_tail, h1_tail, l2_fraction, h1_fraction"));
    assert_eq!(text("unknown").status.code(), Some(2));
}

#[test]
fn summaries_are_byte_identical_outside_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "experiment = \"tail\"\n{BASE}\n[tail]\ntau = 0.5\nhorizon = 3.0\nradii = [0.0, 2.0, 4.0]\ncheck_radius = 4.0\nmax_fraction = 1.0\n"
    );
    let strip = |v: &mut Value| {
        v.as_object_mut().unwrap().remove("metadata").unwrap();
        serde_json::to_string(v).unwrap()
    };
    assert_eq!(run_config(dir.path(), "a", &text).status.code(), Some(0));
    assert_eq!(run_config(dir.path(), "b", &text).status.code(), Some(0));
    let (mut a, mut b) = (summary(dir.path(), "a", "tail"), summary(dir.path(), "b", "tail"));
    assert!(a["metadata"]["generated_at_unix"].is_u64());
    assert_eq!(strip(&mut a), strip(&mut b));
    let csv = |n: &str| std::fs::read(dir.path().join(n).join("tail.csv")).unwrap();
    assert_eq!(csv("a"), csv("b"));
}

#[test]
fn violated_contract_exits_with_one_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "experiment = \"tail\"\n{BASE}\n[tail]\nhorizon = 2.0\nradii = [0.0, 1.0]\ncheck_radius = 0.0\nmax_fraction = 0.5\n"
    );
    let out = run_config(dir.path(), "t", &text);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(dir.path(), "t", "tail");
    assert_eq!(s["passed"], false);
    assert_eq!(check(&s, "tail_fraction_l2")["passed"], false);
}

#[test]
fn configuration_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown_experiment",
            format!("experiment = \"nonsense\"\n{BASE}"),
            "experiment",
        ),
        (
            "unknown_field",
            format!("experiment = \"pullback\"\n{BASE}\n[pullback]\nhorizon = 1.0\ncolour = 3\n"),
            "pullback",
        ),
        (
            "window",
            format!("experiment = \"pullback\"\n{BASE}\n[pullback]\nhorizon = 10.0\n"),
            "noise.window",
        ),
        (
            "contraction",
            format!(
                "experiment = \"equilibrium\"\n{}\n[equilibrium]\nschedule = [1.0, 2.0]\n",
                BASE.replace("lambda = 2.0", "lambda = 0.5")
            ),
            "lambda",
        ),
    ];
    for (name, text, field) in cases {
        let out = run_config(dir.path(), name, &text);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(field), "{name}: {err}");
        assert!(!dir.path().join(name).exists(), "{name} wrote output");
    }
}

#[test]
fn off_lattice_durations_are_snapped_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("experiment = \"pullback\"\n{BASE}\n[pullback]\nhorizon = 1.004\n");
    assert_eq!(run_config(dir.path(), "p", &text).status.code(), Some(0));
    let s = summary(dir.path(), "p", "pullback");
    let snap = &s["snapping"][0];
    assert_eq!(snap["field"], "pullback.horizon");
    assert_eq!(snap["requested"].as_f64().unwrap(), 1.004);
    assert_eq!(s["config"]["pullback"]["horizon"].as_f64().unwrap(), 1.0);
    assert_eq!(s["noise_paths"][0]["seed"], 17);
}

#[test]
fn shipped_configs_resolve_without_snapping() {
    let dir = repo_root().join("configs");
    let mut seen = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let (cfg, snaps) = rdslab_cli::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(snaps.is_empty(), "{}", path.display());
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), cfg.experiment.name());
        seen.push(cfg.experiment);
    }
    assert_eq!(seen.len(), rdslab_cli::ExperimentKind::ALL.len());
}
