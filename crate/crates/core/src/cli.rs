//! Command-line front end: strict TOML configs, subcommands and result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, TruncationKind};
use crate::bath::{aaa_fit_bose, mode_subset, spin_boson_model, FitTarget, RationalBathFit, SpinBosonParams};
use crate::bounds::{run_bound_suite, SuiteConfig, SuiteReport};
use crate::error::{HeomError, Result};
use crate::hierarchy::{build_truncation_capped, decay_rates, BathMode, HeomModel, DEFAULT_SIZE_CAP};
use crate::linalg::C64;
use crate::spectra::{self, convergence_trace, ConvergenceTrace, SpectrumReport, Window, CLUSTER_TOL, STABILITY_TOL};
use crate::superop::SystemOperator;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_boson: Option<SpinBosonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSection>,
    #[serde(default)]
    pub run: RunSection,
}

/// Complex numbers are `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dim: usize,
    /// Row-major.
    pub hamiltonian: Vec<ComplexPair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub gamma: ComplexPair,
    pub c: ComplexPair,
    pub c_prime: ComplexPair,
    pub c_dblprime: ComplexPair,
    /// Row-major.
    pub q: Vec<ComplexPair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonSection {
    pub alpha: f64,
    pub omega0: f64,
    pub eta: f64,
    pub temperature: f64,
    pub lambda: f64,
    pub n_poles: usize,
    /// Keep fluctuation modes with ν ≤ nu_max; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<f64>,
    /// Frozen fit; computed by AAA when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FrozenFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenFit {
    pub nu: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_stars: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Naive,
    Schur,
}

impl From<KindName> for TruncationKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Naive => TruncationKind::Naive,
            KindName::Schur => TruncationKind::SchurTerminated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_kind")]
    pub kind: KindName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
    #[serde(default = "default_stability_tol")]
    pub stability_tol: f64,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSection>,
    #[serde(default = "default_oracle_factor")]
    pub oracle_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_extra_depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect_z: Option<ComplexPair>,
    /// Fit to a validation tolerance instead of a fixed pole count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_tolerance: Option<f64>,
}

fn default_kind() -> KindName {
    KindName::Schur
}
fn default_size_cap() -> usize {
    DEFAULT_SIZE_CAP
}
fn default_stability_tol() -> f64 {
    STABILITY_TOL
}
fn default_cluster_tol() -> f64 {
    CLUSTER_TOL
}
fn default_samples() -> usize {
    64
}
fn default_oracle_factor() -> f64 {
    crate::bounds::DEFAULT_ORACLE_FACTOR
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            seed: 0,
            size_cap: default_size_cap(),
            stability_tol: default_stability_tol(),
            cluster_tol: default_cluster_tol(),
            samples: default_samples(),
            window: None,
            oracle_factor: default_oracle_factor(),
            tail_extra_depth: None,
            defect_z: None,
            fit_tolerance: None,
        }
    }
}

fn finite(name: &str, xs: impl IntoIterator<Item = f64>) -> Result<()> {
    if xs.into_iter().any(|x| !x.is_finite()) {
        return Err(HeomError::Config(format!("{name} must be finite")));
    }
    Ok(())
}

fn pairs(v: &[ComplexPair]) -> impl Iterator<Item = f64> + '_ {
    v.iter().flat_map(|p| p.iter().copied())
}

fn to_c(p: ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

fn operator(name: &str, dim: usize, entries: &[ComplexPair]) -> Result<SystemOperator> {
    if entries.len() != dim * dim {
        return Err(HeomError::Config(format!("{name} needs {} entries, got {}", dim * dim, entries.len())));
    }
    let c: Vec<C64> = entries.iter().map(|&p| to_c(p)).collect();
    SystemOperator::new(dim, &c)
}

impl ConfigDocument {
    /// Parse and validate; unknown keys and non-finite numbers are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = toml::from_str(text).map_err(|e| HeomError::Config(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HeomError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.modes, &self.spin_boson) {
            (Some(_), Some(_)) => return Err(HeomError::Config("give either [[modes]] or [spin_boson], not both".into())),
            (None, None) => return Err(HeomError::Config("one of [[modes]] or [spin_boson] is required".into())),
            (Some(_), None) if self.system.is_none() => return Err(HeomError::Config("[[modes]] needs a [system] section".into())),
            (None, Some(_)) if self.system.is_some() => {
                return Err(HeomError::Config("[system] is fixed by [spin_boson] and must be omitted".into()))
            }
            _ => {}
        }
        if let Some(s) = &self.system {
            finite("system.hamiltonian", pairs(&s.hamiltonian))?;
        }
        for m in self.modes.iter().flatten() {
            finite("mode parameters", m.gamma.iter().chain(&m.c).chain(&m.c_prime).chain(&m.c_dblprime).copied())?;
            finite("mode q", pairs(&m.q))?;
        }
        if let Some(sb) = &self.spin_boson {
            finite("spin_boson", [sb.alpha, sb.omega0, sb.eta, sb.temperature, sb.lambda])?;
            finite("spin_boson.nu_max", sb.nu_max)?;
            if let Some(f) = &sb.fit {
                finite("spin_boson.fit", f.nu.iter().chain(&f.r).copied())?;
            }
        }
        if let Some(t) = &self.truncation {
            finite("truncation", t.gamma_star.into_iter().chain(t.gamma_stars.iter().flatten().copied()))?;
            if t.gamma_star.is_some() && t.gamma_stars.is_some() {
                return Err(HeomError::Config("give either truncation.gamma_star or truncation.gamma_stars".into()));
            }
        }
        let r = &self.run;
        finite("run", [r.stability_tol, r.cluster_tol, r.oracle_factor])?;
        finite("run.tail_extra_depth", r.tail_extra_depth)?;
        finite("run.defect_z", r.defect_z.iter().flat_map(|p| p.iter().copied()))?;
        finite("run.fit_tolerance", r.fit_tolerance)?;
        if let Some(w) = &r.window {
            finite("run.window", [w.re_min, w.re_max, w.im_max])?;
        }
        if r.samples == 0 {
            return Err(HeomError::Config("run.samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Vec<f64>> {
        let t = self.truncation.as_ref().ok_or_else(|| HeomError::Config("[truncation] section is required".into()))?;
        match (&t.gamma_star, &t.gamma_stars) {
            (Some(g), None) => Ok(vec![*g]),
            (None, Some(v)) if !v.is_empty() => Ok(v.clone()),
            _ => Err(HeomError::Config("truncation needs gamma_star or a nonempty gamma_stars".into())),
        }
    }

    pub fn spin_boson_params(&self) -> Result<SpinBosonParams> {
        let sb = self.spin_boson.as_ref().ok_or_else(|| HeomError::Config("[spin_boson] section is required".into()))?;
        Ok(SpinBosonParams {
            alpha: sb.alpha,
            omega0: sb.omega0,
            eta: sb.eta,
            temperature: sb.temperature,
            lambda: sb.lambda,
            n_fit_poles: sb.n_poles,
        })
    }

    /// The bath fit: frozen in the config, or computed.
    pub fn bath_fit(&self) -> Result<RationalBathFit> {
        let sb = self.spin_boson.as_ref().ok_or_else(|| HeomError::Config("[spin_boson] section is required".into()))?;
        match &sb.fit {
            Some(f) => RationalBathFit::from_poles(sb.temperature, sb.lambda, &f.nu, &f.r),
            None => {
                let target = match self.run.fit_tolerance {
                    Some(tol) => FitTarget::Tolerance(tol),
                    None => FitTarget::Poles(sb.n_poles),
                };
                aaa_fit_bose(sb.temperature, sb.lambda, target)
            }
        }
    }

    pub fn model(&self) -> Result<HeomModel> {
        if let Some(sb) = &self.spin_boson {
            let full = spin_boson_model(&self.spin_boson_params()?, &self.bath_fit()?)?;
            return Ok(match sb.nu_max {
                Some(nu) => mode_subset(&full, nu),
                None => full,
            });
        }
        let sys = self.system.as_ref().expect("validated");
        let h = operator("system.hamiltonian", sys.dim, &sys.hamiltonian)?;
        let modes = self
            .modes
            .iter()
            .flatten()
            .map(|m| BathMode::new(to_c(m.gamma), to_c(m.c), to_c(m.c_prime), to_c(m.c_dblprime), operator("mode q", sys.dim, &m.q)?))
            .collect::<Result<Vec<_>>>()?;
        HeomModel::new(h, modes)
    }
}

#[derive(Debug, Parser)]
#[command(name = "heom", version, about = "Truncated HEOM Liouvillians: spectra, convergence and bound certification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the Bose function with symmetrized AAA and print the pole table.
    FitBath(CommonArgs),
    /// Assemble one truncation and write its spectrum.
    Spectrum(CommonArgs),
    /// Spectra along increasing thresholds with window distances.
    Converge(CommonArgs),
    /// Run the bound certification suite; exits nonzero on any failure.
    CheckBounds(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Multiplies every radius bound (test hook).
    #[arg(long, hide = true)]
    pub fault_radius_scale: Option<f64>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Self::FitBath(a) | Self::Spectrum(a) | Self::Converge(a) | Self::CheckBounds(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FitBath(_) => "fit-bath",
            Self::Spectrum(_) => "spectrum",
            Self::Converge(_) => "converge",
            Self::CheckBounds(_) => "check-bounds",
        }
    }
}

/// Result of one command: text for stdout and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Bundle<'a> {
    meta: Meta,
    summary: toml::Table,
    config: &'a ConfigDocument,
}

#[derive(Serialize)]
struct Meta {
    command: String,
    version: String,
    seed: u64,
    threads: usize,
    elapsed_seconds: f64,
    files: Vec<String>,
}

/// Parse `argv` and run; errors become a diagnostic on stderr and exit code 2.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(o) => {
            print!("{}", o.stdout);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    let args = cmd.args();
    crate::linalg::set_threads(args.threads);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(args.threads.max(1)).build_global();
    let mut config = ConfigDocument::load(&args.config)?;
    if let Some(s) = args.seed {
        config.run.seed = s;
    }
    fs::create_dir_all(&args.out)?;
    let start = Instant::now();
    let (stdout, summary, files, exit_code) = match cmd {
        Command::FitBath(_) => fit_bath(&config, &args.out)?,
        Command::Spectrum(_) => spectrum(&config, &args.out)?,
        Command::Converge(_) => converge(&config, &args.out)?,
        Command::CheckBounds(_) => check_bounds(&config, &args.out, args.fault_radius_scale.unwrap_or(1.0))?,
    };
    let bundle = Bundle {
        meta: Meta {
            command: cmd.name().into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.run.seed,
            threads: args.threads,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            files,
        },
        summary,
        config: &config,
    };
    let text = toml::to_string(&bundle).map_err(|e| HeomError::Config(e.to_string()))?;
    fs::write(args.out.join("bundle.toml"), text)?;
    Ok(Outcome { stdout, exit_code })
}

/// The config embedded in a result bundle.
pub fn config_from_bundle(text: &str) -> Result<ConfigDocument> {
    let table: toml::Table = toml::from_str(text).map_err(|e| HeomError::Config(e.to_string()))?;
    let cfg = table.get("config").ok_or_else(|| HeomError::Config("bundle has no [config]".into()))?;
    let s = toml::to_string(cfg).map_err(|e| HeomError::Config(e.to_string()))?;
    ConfigDocument::parse(&s)
}

type CommandOutput = (String, toml::Table, Vec<String>, i32);

fn fit_bath(config: &ConfigDocument, out: &Path) -> Result<CommandOutput> {
    let sb = config.spin_boson.as_ref().ok_or_else(|| HeomError::Config("[spin_boson] section is required".into()))?;
    if !(sb.temperature > 0.0) {
        return Err(HeomError::InvalidArgument(format!("temperature {} must be positive", sb.temperature)));
    }
    let fit = config.bath_fit()?;
    let table = pole_table(&fit);
    #[derive(Serialize)]
    struct FitFile<'a> {
        fit: &'a RationalBathFit,
    }
    fs::write(out.join("fit.toml"), toml::to_string(&FitFile { fit: &fit }).map_err(|e| HeomError::Config(e.to_string()))?)?;
    fs::write(out.join("report.txt"), &table)?;
    let mut summary = toml::Table::new();
    summary.insert("n_poles".into(), (fit.len() as i64).into());
    summary.insert("max_rel_error".into(), fit.max_rel_error.into());
    Ok((table, summary, vec!["fit.toml".into(), "report.txt".into()], EXIT_OK))
}

/// Poles and residues, descending in ν.
pub fn pole_table(fit: &RationalBathFit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# T = {} Lambda = {} grid = {} {} points", fit.temperature, fit.lambda, fit.grid.spacing, fit.grid.points);
    let _ = writeln!(s, "{:>4} {:>14} {:>14}", "j", "nu_j", "r_j");
    for (j, (nu, r)) in fit.nu.iter().zip(&fit.r).enumerate() {
        let _ = writeln!(s, "{:>4} {:>14.6} {:>14.6}", j + 1, nu, r);
    }
    let _ = writeln!(s, "max_rel_error = {:.3e}", fit.max_rel_error);
    if !fit.discarded.is_empty() {
        let _ = writeln!(s, "discarded_poles = {:?}", fit.discarded);
    }
    s
}

fn fmt_c(z: C64) -> String {
    format!("{} {}", z.re, z.im)
}

/// `re,im,cluster_id` rows in sorted order.
pub fn eigenvalue_csv(rep: &SpectrumReport) -> String {
    let mut s = String::from("re,im,cluster_id\n");
    for (z, c) in rep.eigenvalues.iter().zip(&rep.cluster_ids) {
        let _ = writeln!(s, "{},{},{}", z.re, z.im, c);
    }
    s
}

fn spectrum_lines(rep: &SpectrumReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dimension = {}", rep.eigenvalues.len());
    let _ = writeln!(s, "matrix_norm = {:e}", rep.matrix_norm);
    let _ = writeln!(s, "stability_tol = {:e}", rep.tol);
    let _ = writeln!(s, "spectral_abscissa = {:e}", rep.spectral_abscissa);
    let _ = writeln!(s, "zero_mode_error = {:e}", rep.zero_mode_error);
    let _ = writeln!(s, "stable = {}", rep.stable);
    let _ = writeln!(s, "gapped = {}", rep.gapped);
    let _ = writeln!(s, "gap = {:e}", rep.gap);
    let _ = writeln!(s, "decay_gap = {:e}", rep.decay_gap);
    let _ = writeln!(s, "clusters = {}", rep.n_clusters());
    if let Some(z) = rep.slowest_nonzero {
        let _ = writeln!(s, "slowest_nonzero = {}", fmt_c(z));
    }
    s
}

fn report_for(config: &ConfigDocument, l: &crate::assembly::TruncatedLiouvillian) -> Result<SpectrumReport> {
    let ev = spectra::eigenvalues(l)?;
    Ok(spectra::classify(&ev, l.norm(), config.run.stability_tol, config.run.cluster_tol))
}

fn spectrum(config: &ConfigDocument, out: &Path) -> Result<CommandOutput> {
    let gs = config.thresholds()?;
    if gs.len() != 1 {
        return Err(HeomError::Config("spectrum takes a single truncation.gamma_star".into()));
    }
    let model = config.model()?;
    let trunc = build_truncation_capped(&model, gs[0], config.run.size_cap)?;
    let kind: TruncationKind = config.run.kind.into();
    let l = assemble(&model, &trunc, kind)?;
    let rep = report_for(config, &l)?;
    fs::write(out.join("eigenvalues.csv"), eigenvalue_csv(&rep))?;
    let mut text = format!("kind = {}\ngamma_star = {}\nmodes = {}\nindices = {}\n", kind.name(), gs[0], model.n_modes(), trunc.len());
    text.push_str(&spectrum_lines(&rep));
    fs::write(out.join("report.txt"), &text)?;
    let mut summary = toml::Table::new();
    summary.insert("stable".into(), rep.stable.into());
    summary.insert("gapped".into(), rep.gapped.into());
    summary.insert("spectral_abscissa".into(), rep.spectral_abscissa.into());
    summary.insert("zero_mode_error".into(), rep.zero_mode_error.into());
    summary.insert("dimension".into(), (rep.eigenvalues.len() as i64).into());
    Ok((text, summary, vec!["eigenvalues.csv".into(), "report.txt".into()], EXIT_OK))
}

fn converge(config: &ConfigDocument, out: &Path) -> Result<CommandOutput> {
    let gs = config.thresholds()?;
    let model = config.model()?;
    let kind: TruncationKind = config.run.kind.into();
    let window = config.run.window.map(|w| Window { re_min: w.re_min, re_max: w.re_max, im_max: w.im_max });
    let trace = convergence_trace(&model, &gs, window, kind, config.run.size_cap)?;
    let mut files = Vec::new();
    for (k, step) in trace.steps.iter().enumerate() {
        let name = format!("eigenvalues_{k}.csv");
        fs::write(out.join(&name), eigenvalue_csv(&step.report))?;
        files.push(name);
    }
    fs::write(out.join("trace.csv"), trace_csv(&trace))?;
    files.push("trace.csv".into());
    let text = trace_report(&trace);
    fs::write(out.join("report.txt"), &text)?;
    files.push("report.txt".into());
    let mut summary = toml::Table::new();
    summary.insert("steps".into(), (trace.steps.len() as i64).into());
    summary.insert("distances".into(), toml::Value::Array(trace.distances().into_iter().map(toml::Value::from).collect()));
    summary.insert("all_stable".into(), trace.steps.iter().all(|s| s.report.stable).into());
    Ok((text, summary, files, EXIT_OK))
}

pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut s = String::from("step,gamma_star,gamma_prime,indices,in_window,hausdorff,stable,spectral_abscissa,slowest_re,slowest_im\n");
    for (k, st) in trace.steps.iter().enumerate() {
        let z = st.report.slowest_nonzero.unwrap_or(C64::new(f64::NAN, f64::NAN));
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{},{},{},{}",
            st.gamma_star,
            st.gamma_prime,
            st.size,
            st.in_window.len(),
            st.hausdorff_to_previous.map_or(String::new(), |d| d.to_string()),
            st.report.stable,
            st.report.spectral_abscissa,
            z.re,
            z.im
        );
    }
    s
}

fn trace_report(trace: &ConvergenceTrace) -> String {
    let mut s = String::new();
    let w = trace.window;
    let _ = writeln!(s, "kind = {}", trace.kind.name());
    let _ = writeln!(s, "window = re [{}, {}] |im| <= {}", w.re_min, w.re_max, w.im_max);
    for st in &trace.steps {
        let unstable = st.report.eigenvalues.iter().filter(|z| z.re > st.report.tol).count();
        let _ = writeln!(
            s,
            "STEP gamma_star={} gamma_prime={} indices={} in_window={} hausdorff={} stable={} unstable_count={} abscissa={:e} slowest={}",
            st.gamma_star,
            st.gamma_prime,
            st.size,
            st.in_window.len(),
            st.hausdorff_to_previous.map_or("none".to_string(), |d| format!("{d:e}")),
            st.report.stable,
            unstable,
            st.report.spectral_abscissa,
            st.report.slowest_nonzero.map_or("none".to_string(), fmt_c)
        );
    }
    s
}

/// Suite settings derived from a config.
pub fn suite_config(config: &ConfigDocument, radius_scale: f64) -> Result<SuiteConfig> {
    let r = &config.run;
    Ok(SuiteConfig {
        gamma_stars: config.thresholds()?,
        samples: r.samples,
        seed: r.seed,
        tail_extra_depth: r.tail_extra_depth,
        oracle_factor: r.oracle_factor,
        defect_z: r.defect_z.map(to_c),
        radius_scale,
        size_cap: r.size_cap,
        ..SuiteConfig::default()
    })
}

fn check_bounds(config: &ConfigDocument, out: &Path, radius_scale: f64) -> Result<CommandOutput> {
    let model = config.model()?;
    let suite = suite_config(config, radius_scale)?;
    for t in &suite.gamma_stars {
        decay_rates(&model, &build_truncation_capped(&model, *t, suite.size_cap)?)?;
    }
    let rep: SuiteReport = run_bound_suite(&model, &suite)?;
    let text = rep.render();
    fs::write(out.join("report.txt"), &text)?;
    let mut summary = toml::Table::new();
    summary.insert("checks".into(), (rep.checks.len() as i64).into());
    summary.insert("failures".into(), (rep.failures() as i64).into());
    let code = if rep.all_pass() { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((text, summary, vec!["report.txt".into()], code))
}
