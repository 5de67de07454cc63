//! One line per acceptance criterion, with pinned tolerances and runtime budgets.

#![allow(clippy::approx_constant)]

mod common;

use common::*;
use faer::Mat;
use heom_core::assembly::*;
use heom_core::bath::{aaa_fit_bose, FitTarget};
use heom_core::cli::{execute, CommonArgs, Command, ConfigDocument, EXIT_OK};
use heom_core::hierarchy::*;
use heom_core::linalg::Lu;
use heom_core::spectra::{self, convergence_trace, Window};
use heom_core::C64;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

const TABLE_NU: [f64; 11] = [341.9, 110.8, 63.00, 41.63, 29.38, 21.57, 16.35, 12.63, 9.426, 6.283, 3.145];
const TABLE_R: [f64; 11] = [219.2, 24.98, 9.358, 4.958, 3.055, 2.009, 1.367, 1.058, 1.002, 1.000, 1.000];
const LOW_NU_TOL: f64 = 3e-3;
const LOW_R_TOL: f64 = 5e-3;
const MID_NU_TOL: f64 = 1e-2;
const TOP_TOL: f64 = 5e-2;
const ZERO_MODE_TOL: f64 = 1e-9;
const STABILITY_TOL: f64 = 1e-8;
const DISTANCE_DROP: f64 = 2.0;
const SLOWEST_STEP_TOL: f64 = 1e-4;
const ORACLE_TOL: f64 = 1e-10;
const UNSTABLE_RE: f64 = 1e-6;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> HeomModel {
    ConfigDocument::load(&config_path(name)).unwrap().model().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

type Verdict = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Verdict);

fn bath_fit_reproduces_pole_table() -> Verdict {
    let fit = aaa_fit_bose(0.5, 50.0, FitTarget::Poles(11)).map_err(|e| e.to_string())?;
    if fit.len() != 11 {
        return Err(format!("{} poles", fit.len()));
    }
    let worst = |range: std::ops::Range<usize>, got: &[f64], want: &[f64]| range.map(|j| rel(got[j], want[j])).fold(0.0, f64::max);
    let low_nu = worst(8..11, &fit.nu, &TABLE_NU);
    let low_r = worst(8..11, &fit.r, &TABLE_R);
    let mid_nu = worst(2..8, &fit.nu, &TABLE_NU);
    let top = rel(fit.nu[0], TABLE_NU[0]).max(rel(fit.r[0], TABLE_R[0]));
    let detail = format!("nu9-11 {low_nu:.2e} r9-11 {low_r:.2e} nu3-8 {mid_nu:.2e} top {top:.2e}");
    if low_nu <= LOW_NU_TOL && low_r <= LOW_R_TOL && mid_nu <= MID_NU_TOL && top <= TOP_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn zero_mode_ratio(model: &HeomModel, gamma_star: f64) -> f64 {
    let t = build_truncation(model, gamma_star).unwrap();
    let l = assemble_schur_terminated(model, &t).unwrap();
    let ev = spectra::eigenvalues(&l).unwrap();
    ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min) / l.norm()
}

fn terminated_liouvillian_has_zero_mode() -> Verdict {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let d = 2 + k % 2;
        let n = 1 + (k / 2) % 3;
        worst = worst.max(zero_mode_ratio(&random_model(&mut r, d, n), 2.5));
    }
    worst = worst.max(zero_mode_ratio(&load("naive_instability.toml"), 4.0));
    let detail = format!("21 models, max min|λ|/‖L‖ = {worst:.2e}");
    if worst <= ZERO_MODE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn deep_terminated_spin_boson_is_stable_and_gapped() -> Verdict {
    let model = load("spin_boson_nu10.toml");
    let mut parts = Vec::new();
    let mut ok = true;
    for gs in [6.0, 9.0, 12.0] {
        let t = build_truncation(&model, gs).unwrap();
        let l = assemble_schur_terminated(&model, &t).unwrap();
        let ev = spectra::eigenvalues(&l).unwrap();
        let norm = l.norm();
        let zero = spectra::zero_mode(&ev).unwrap();
        let abscissa = ev.iter().enumerate().filter(|(i, _)| *i != zero).map(|(_, z)| z.re).fold(f64::NEG_INFINITY, f64::max);
        let rep = spectra::classify(&ev, norm, STABILITY_TOL, spectra::CLUSTER_TOL);
        ok &= abscissa <= STABILITY_TOL * norm && rep.gapped;
        parts.push(format!("γ*={gs} size={} abscissa={abscissa:.2e} gapped={}", l.size(), rep.gapped));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sweep(model: &HeomModel, gammas: &[f64], window: Option<Window>) -> (bool, String) {
    let trace = convergence_trace(model, gammas, window, TruncationKind::SchurTerminated, DEFAULT_SIZE_CAP).unwrap();
    let d = trace.distances();
    let slow: Vec<C64> = trace.slowest_sequence().into_iter().flatten().collect();
    let last_step = if slow.len() == gammas.len() { (slow[slow.len() - 1] - slow[slow.len() - 2]).norm() } else { f64::INFINITY };
    let drop = d[0] / d[d.len() - 1];
    let ok = d.len() == 3 && drop >= DISTANCE_DROP && last_step <= SLOWEST_STEP_TOL;
    (ok, format!("distances {:.2e} {:.2e} {:.2e} drop {drop:.1}x slowest step {last_step:.2e}", d[0], d[1], d[2]))
}

fn spectra_converge_under_threshold_doubling() -> Verdict {
    let window = Window { re_min: -3.0, re_max: 0.1, im_max: 3.0 };
    let (ok_toy, toy) = sweep(&toy_dephasing(), &[4.0, 8.0, 16.0, 32.0], Some(window));
    let (ok_sb, sb) = sweep(&load("reduced_spin_boson.toml"), &[2.0, 4.0, 8.0, 16.0], None);
    let detail = format!("toy: {toy}; spin-boson: {sb}");
    if ok_toy && ok_sb {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bound_certification_suite_passes() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cmd = Command::CheckBounds(CommonArgs {
        config: config_path("reduced_spin_boson.toml"),
        out: dir.path().into(),
        seed: None,
        threads: 1,
        fault_radius_scale: None,
    });
    let o = execute(&cmd).map_err(|e| e.to_string())?;
    let checks: Vec<&str> = o.stdout.lines().filter(|l| l.starts_with("CHECK ")).collect();
    let count = |p: &str| checks.iter().filter(|l| l[6..].starts_with(p)).count();
    let failures = checks.iter().filter(|l| l.contains(" FAIL ")).count();
    let counts = [
        ("column_radius", count("column_radius["), 1),
        ("diagonal_resolvent", count("diagonal_resolvent["), 50),
        ("gershgorin_resolvent", count("gershgorin_resolvent["), 20),
        ("tail_resolvent", count("tail_resolvent["), 15),
        ("offdiag", count("offdiag_"), 6),
        ("schur_defect_decrease", count("schur_defect_decrease["), 2),
        ("unstable_enclosure", count("unstable_enclosure["), 1),
    ];
    let short: Vec<String> = counts.iter().filter(|(_, got, want)| got < want).map(|(n, got, want)| format!("{n} {got}<{want}")).collect();
    let exact_ok = counts[1].1 == 50 && counts[3].1 == 15 && counts[4].1 == 6 && counts[5].1 == 2;
    let detail = format!(
        "{} checks, {failures} failures, radius {} diag {} cert {} tail {} offdiag {} defect {} enclosure {}",
        checks.len(),
        counts[0].1,
        counts[1].1,
        counts[2].1,
        counts[3].1,
        counts[4].1,
        counts[5].1,
        counts[6].1
    );
    if o.exit_code == EXIT_OK && failures == 0 && short.is_empty() && exact_ok {
        Ok(detail)
    } else {
        Err(format!("{detail} {short:?}"))
    }
}

fn terminator_matches_dense_oracles() -> Verdict {
    let model = pure_dephasing(c(1.3, 0.0), c(0.4, 0.7), c(0.2, -0.5), c(-0.3, 0.1));
    let root = Truncation::from_indices(1, vec![MultiIndex::zero(1)]).unwrap();
    let l = assemble_schur_terminated(&model, &root).unwrap();
    let idx: Vec<MultiIndex> = (0..=6).map(|k| MultiIndex(vec![k])).collect();
    let full = oracle_matrix(&model, &idx, |n, m| n.0[0] == 0 || m.0[0] == 0);
    let a = full.as_ref().submatrix(0, 0, 4, 4).to_owned();
    let b = full.as_ref().submatrix(0, 4, 4, 24).to_owned();
    let cm = full.as_ref().submatrix(4, 0, 24, 4).to_owned();
    let dm = full.as_ref().submatrix(4, 4, 24, 24).to_owned();
    let s: Mat<C64> = &a - &b * Lu::new(dm.as_ref()).unwrap().solve(cm.as_ref()).unwrap();
    let root_err = rel_diff(l.matrix.as_ref(), s.as_ref());

    let toy = toy_dephasing();
    let mut tri_err: f64 = 0.0;
    for depth in [4usize, 12] {
        let t = build_truncation(&toy, depth as f64).unwrap();
        for (kind, term) in [(TruncationKind::Naive, false), (TruncationKind::SchurTerminated, true)] {
            let ev = spectra::eigenvalues(&assemble(&toy, &t, kind).unwrap()).unwrap();
            let mut want = dephasing_tridiagonal(&toy, depth, term, 1.0);
            want.extend(dephasing_tridiagonal(&toy, depth, term, -1.0));
            for k in 0..=depth {
                want.extend([c(-(k as f64), 0.0); 2]);
            }
            let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
            tri_err = tri_err.max(spectrum_distance(&ev, &want) / scale);
        }
    }
    let detail = format!("root terminator vs depth-6 Schur {root_err:.2e}, dephasing vs tridiagonal {tri_err:.2e}");
    if root_err <= ORACLE_TOL && tri_err <= ORACLE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn naive_truncation_unstable_where_terminated_is_not() -> Verdict {
    let doc = ConfigDocument::load(&config_path("naive_instability.toml")).map_err(|e| e.to_string())?;
    let model = doc.model().map_err(|e| e.to_string())?;
    let gs = doc.thresholds().map_err(|e| e.to_string())?[0];
    let t = build_truncation(&model, gs).unwrap();
    let abscissa = |kind| {
        let ev = spectra::eigenvalues(&assemble(&model, &t, kind).unwrap()).unwrap();
        let n = ev.iter().filter(|z| z.re > UNSTABLE_RE).count();
        (n, ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    };
    let (n_naive, a_naive) = abscissa(TruncationKind::Naive);
    let (n_schur, a_schur) = abscissa(TruncationKind::SchurTerminated);
    let detail = format!("γ*={gs} naive: {n_naive} with Re λ > {UNSTABLE_RE:e} (max {a_naive:.3e}); schur: {n_schur} (max {a_schur:.2e})");
    if n_naive > 0 && n_schur == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("bath_fit_reproduces_pole_table", Duration::from_secs(10), bath_fit_reproduces_pole_table),
        ("terminated_liouvillian_has_zero_mode", Duration::from_secs(120), terminated_liouvillian_has_zero_mode),
        ("deep_terminated_spin_boson_is_stable_and_gapped", Duration::from_secs(600), deep_terminated_spin_boson_is_stable_and_gapped),
        ("spectra_converge_under_threshold_doubling", Duration::from_secs(600), spectra_converge_under_threshold_doubling),
        ("bound_certification_suite_passes", Duration::from_secs(900), bound_certification_suite_passes),
        ("terminator_matches_dense_oracles", Duration::from_secs(60), terminator_matches_dense_oracles),
        ("naive_truncation_unstable_where_terminated_is_not", Duration::from_secs(60), naive_truncation_unstable_where_terminated_is_not),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let (pass, detail) = match verdict {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.1}s, budget {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of 7 criteria pass", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
