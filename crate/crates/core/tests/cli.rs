mod common;

use common::*;
use heom_core::cli::*;
use heom_core::HeomError;
use std::fs;
use std::path::{Path, PathBuf};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut argv = vec!["heom", cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    argv.extend_from_slice(extra);
    main_with_args(argv)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn edited(name: &str, from: &str, to: &str) -> String {
    let text = fs::read_to_string(config_path(name)).unwrap();
    assert!(text.contains(from));
    text.replace(from, to)
}

fn csv_rows(path: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,cluster_id"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn shipped_configs_parse() {
    for entry in fs::read_dir(config_path("")).unwrap() {
        let p = entry.unwrap().path();
        ConfigDocument::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn parse_rejects_unknown_keys() {
    let text = edited("toy_dephasing.toml", "kind = \"schur\"", "kind = \"schur\"\ntolerance = 1.0");
    assert!(matches!(ConfigDocument::parse(&text), Err(HeomError::Config(_))));
    let text = edited("toy_dephasing.toml", "c = [0.0, 0.5]", "c = [0.0, 0.5]\nweight = 2.0");
    assert!(ConfigDocument::parse(&text).is_err());
}

#[test]
fn parse_rejects_non_finite_numbers() {
    for bad in ["nan", "inf", "-inf"] {
        let text = edited("toy_dephasing.toml", "gamma = [1.0, 0.0]", &format!("gamma = [{bad}, 0.0]"));
        assert!(ConfigDocument::parse(&text).is_err(), "{bad}");
    }
    let text = edited("reduced_spin_boson.toml", "alpha = 2.0", "alpha = nan");
    assert!(ConfigDocument::parse(&text).is_err());
}

#[test]
fn parse_requires_exactly_one_bath() {
    let toy = fs::read_to_string(config_path("toy_dephasing.toml")).unwrap();
    let both = format!("{toy}\n[spin_boson]\nalpha = 2.0\nomega0 = 2.0\neta = 0.5\ntemperature = 0.5\nlambda = 50.0\nn_poles = 11\n");
    assert!(ConfigDocument::parse(&both).is_err());
    let neither = "[system]\ndim = 1\nhamiltonian = [[0.0, 0.0]]\n[run]\n";
    assert!(ConfigDocument::parse(neither).is_err());
}

#[test]
fn config_round_trips_through_toml() {
    let doc = ConfigDocument::load(&config_path("toy_dephasing.toml")).unwrap();
    let again = ConfigDocument::parse(&doc.to_toml().unwrap()).unwrap();
    assert_eq!(again.to_toml().unwrap(), doc.to_toml().unwrap());
}

#[test]
fn fit_bath_prints_descending_table() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = Command::FitBath(CommonArgs {
        config: config_path("bath_fit.toml"),
        out: dir.path().into(),
        seed: None,
        threads: 1,
        fault_radius_scale: None,
    });
    let o = execute(&cmd).unwrap();
    assert_eq!(o.exit_code, EXIT_OK);
    let nus: Vec<f64> = o
        .stdout
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f.len() == 3 && f[0].parse::<usize>().is_ok()).then(|| f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(nus.len(), 11);
    assert!(nus.windows(2).all(|w| w[0] > w[1]));
    assert!((nus[10] - std::f64::consts::PI).abs() / std::f64::consts::PI < 3e-3);
    assert!(dir.path().join("fit.toml").exists());
    let bundle = fs::read_to_string(dir.path().join("bundle.toml")).unwrap();
    assert!(bundle.contains("command = \"fit-bath\""));
}

#[test]
fn fit_bath_with_no_poles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("bath_fit.toml", "n_poles = 11", "n_poles = 0"));
    assert_eq!(run("fit-bath", &cfg, &dir.path().join("out"), &[]), EXIT_OK);
    let fit = fs::read_to_string(dir.path().join("out/fit.toml")).unwrap();
    let table: toml::Table = toml::from_str(&fit).unwrap();
    assert_eq!(table["fit"]["nu"].as_array().unwrap().len(), 0);
}

#[test]
fn fit_bath_rejects_nonpositive_temperature() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["0.0", "-1.0"] {
        let cfg = write_config(dir.path(), &edited("bath_fit.toml", "temperature = 0.5", &format!("temperature = {t}")));
        assert_eq!(run("fit-bath", &cfg, &dir.path().join("out"), &[]), EXIT_ERROR);
    }
}

#[test]
fn uncoupled_spectrum_matches_diagonal_blocks() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("spectrum", &config_path("uncoupled.toml"), dir.path(), &[]), EXIT_OK);
    let got: Vec<heom_core::C64> = csv_rows(&dir.path().join("eigenvalues.csv")).into_iter().map(|(a, b)| c(a, b)).collect();
    // -i[σx,·] has eigenvalues {0, 0, 2i, -2i}; block n shifts them by -γ_n.
    let model = uncoupled(heom_core::superop::SystemOperator::pauli_x(), &[c(1.0, 0.0), c(1.5, 0.5)]);
    let t = heom_core::hierarchy::build_truncation(&model, 3.0).unwrap();
    let mut want = Vec::new();
    for n in t.indices() {
        let g = heom_core::hierarchy::gamma_n(&model, n).unwrap();
        for w in [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)] {
            want.push(w - g);
        }
    }
    assert!(spectrum_distance(&got, &want) < 1e-12);
}

#[test]
fn reduced_spin_boson_spectrum_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("naive_instability.toml", "kind = \"naive\"", "kind = \"schur\""));
    let cmd = Command::Spectrum(CommonArgs { config: cfg, out: dir.path().join("out"), seed: None, threads: 1, fault_radius_scale: None });
    let o = execute(&cmd).unwrap();
    assert_eq!(o.exit_code, EXIT_OK);
    assert!(o.stdout.contains("stable = true"), "{}", o.stdout);
}

#[test]
fn unstable_spectrum_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = Command::Spectrum(CommonArgs {
        config: config_path("naive_instability.toml"),
        out: dir.path().into(),
        seed: None,
        threads: 1,
        fault_radius_scale: None,
    });
    let o = execute(&cmd).unwrap();
    assert_eq!(o.exit_code, EXIT_OK);
    assert!(o.stdout.contains("stable = false"));
}

#[test]
fn oversized_truncation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("naive_instability.toml", "kind = \"naive\"", "kind = \"naive\"\nsize_cap = 10"));
    assert_eq!(run("spectrum", &cfg, &dir.path().join("out"), &[]), EXIT_ERROR);
}

#[test]
fn converge_with_single_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("toy_dephasing.toml", "gamma_stars = [4.0, 8.0, 16.0, 32.0]", "gamma_star = 4.0"));
    let out = dir.path().join("out");
    assert_eq!(run("converge", &cfg, &out, &[]), EXIT_OK);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("hausdorff=none"));
}

#[test]
fn converge_toy_distances_decrease() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("converge", &config_path("toy_dephasing.toml"), dir.path(), &[]), EXIT_OK);
    let bundle: toml::Table = toml::from_str(&fs::read_to_string(dir.path().join("bundle.toml")).unwrap()).unwrap();
    let d: Vec<f64> = bundle["summary"]["distances"].as_array().unwrap().iter().map(|v| v.as_float().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    for k in 0..4 {
        assert!(dir.path().join(format!("eigenvalues_{k}.csv")).exists());
    }
}

#[test]
fn converge_contrasts_naive_and_schur() {
    let dir = tempfile::tempdir().unwrap();
    let text = edited("reduced_spin_boson.toml", "gamma_stars = [1.0, 2.0, 4.0]", "gamma_stars = [2.0, 4.0]");
    let unstable_counts = |kind: &str| -> Vec<usize> {
        let cfg = write_config(dir.path(), &text.replace("kind = \"schur\"", &format!("kind = \"{kind}\"")));
        let out = dir.path().join(kind);
        assert_eq!(run("converge", &cfg, &out, &[]), EXIT_OK);
        fs::read_to_string(out.join("report.txt"))
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("STEP"))
            .map(|l| l.split("unstable_count=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap())
            .collect()
    };
    let naive = unstable_counts("naive");
    let schur = unstable_counts("schur");
    // At γ* = 2 both kinds are still unstable; at γ* = 4 only the naive truncation is.
    assert!(naive[1] > 0, "{naive:?}");
    assert_eq!(schur[1], 0, "{schur:?}");
}

#[test]
fn check_bounds_uncoupled_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("uncoupled.toml", "gamma_star = 3.0", "gamma_stars = [1.0, 2.0, 4.0]"));
    let out = dir.path().join("out");
    assert_eq!(run("check-bounds", &cfg, &out, &[]), EXIT_OK);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().filter(|l| l.starts_with("CHECK")).all(|l| l.contains(" PASS ")));
}

#[test]
fn check_bounds_reduced_spin_boson_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = Command::CheckBounds(CommonArgs {
        config: config_path("reduced_spin_boson.toml"),
        out: dir.path().into(),
        seed: None,
        threads: 1,
        fault_radius_scale: None,
    });
    let o = execute(&cmd).unwrap();
    assert_eq!(o.exit_code, EXIT_OK, "{}", o.stdout.lines().filter(|l| l.contains("FAIL")).collect::<Vec<_>>().join("\n"));
    assert!(o.stdout.contains("failures=0"));
}

#[test]
fn check_bounds_surfaces_corrupted_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("toy_dephasing.toml", "gamma_stars = [4.0, 8.0, 16.0, 32.0]", "gamma_stars = [2.0, 4.0, 8.0]"));
    let out = dir.path().join("out");
    assert_eq!(run("check-bounds", &cfg, &out, &["--fault-radius-scale", "0.01"]), EXIT_CHECK_FAILED);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("CHECK column_radius") && l.contains(" FAIL ")));
}

#[test]
fn bundle_reproduces_eigenvalue_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_eq!(run("spectrum", &config_path("naive_instability.toml"), &first, &["--seed", "7"]), EXIT_OK);
    let bundle = fs::read_to_string(first.join("bundle.toml")).unwrap();
    let embedded = config_from_bundle(&bundle).unwrap();
    assert_eq!(embedded.run.seed, 7);
    let cfg = write_config(dir.path(), &embedded.to_toml().unwrap());
    let second = dir.path().join("second");
    assert_eq!(run("spectrum", &cfg, &second, &[]), EXIT_OK);
    assert_eq!(fs::read(first.join("eigenvalues.csv")).unwrap(), fs::read(second.join("eigenvalues.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &edited("uncoupled.toml", "gamma_star = 3.0", "gamma_stars = [1.0, 2.0, 4.0]"));
    let out = dir.path().join("out");
    assert_eq!(run("check-bounds", &cfg, &out, &["--seed", "42"]), EXIT_OK);
    let bundle: toml::Table = toml::from_str(&fs::read_to_string(out.join("bundle.toml")).unwrap()).unwrap();
    assert_eq!(bundle["meta"]["seed"].as_integer(), Some(42));
    assert_eq!(bundle["config"]["run"]["seed"].as_integer(), Some(42));
}

#[test]
fn missing_config_file_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("spectrum", &dir.path().join("nope.toml"), dir.path(), &[]), EXIT_ERROR);
    assert_eq!(main_with_args(["heom", "bogus"]), EXIT_ERROR);
}
