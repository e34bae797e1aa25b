use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hoferlab::certificates::{
    certify_negside, certify_thm15, certify_thm16, hofer_norms, locate_extrema, short_time_search, Certificate,
    CertifyOptions, HoferOptions, Verdict,
};
use hoferlab::complex::{Chain, Classification, GradedComplex};
use hoferlab::dynamics::constructions::SampleGrid;
use hoferlab::dynamics::{HamiltonianSystem, DEFAULT_STEPS};
use hoferlab::filtration::{
    is_essential_filtered, minimality_verdict, spectral_value, validate_filtration, FiltrationMap,
};
use hoferlab::morse::{build_morse_complex, fundamental_cycle, SampledFunction};
use hoferlab::orbits::{scan_fixed_points, ScanOptions};

const SUCCESS: u8 = 0;
const STRUCTURAL: u8 = 1;
const REFUTED: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hoferlab", version, about = "Filtered complexes, Hamiltonian orbit scans and Hofer-length certificates")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graded GF(2) chain complexes.
    #[command(subcommand)]
    Complex(ComplexCommand),
    /// Filtrations of a complex: spectral values and essentiality.
    #[command(subcommand)]
    Filtration(FiltrationCommand),
    /// Discrete Morse complexes of sampled functions on the 2-torus.
    #[command(subcommand)]
    Morse(MorseCommand),
    /// Contractible 1-periodic orbits.
    #[command(subcommand)]
    Orbits(OrbitsCommand),
    /// Positive and negative Hofer norms of a torus system.
    Hofer(HoferArgs),
    /// Certificates for the length-minimality criteria.
    #[command(subcommand)]
    Certify(CertifyCommand),
}

#[derive(Subcommand, Debug)]
enum ComplexCommand {
    /// Check grading and ∂∘∂ = 0.
    Validate { complex: PathBuf },
    /// GF(2) Betti numbers per degree.
    Homology { complex: PathBuf },
    /// Classify a chain as not-cycle, boundary, or nontrivial cycle.
    Classify {
        complex: PathBuf,
        /// Chain: ids joined by `+`, `0`, `top`, or `H<k>[:<i>]`.
        #[arg(long)]
        chain: String,
    },
}

#[derive(Args, Debug, Serialize)]
struct FiltrationInput {
    /// Complex file.
    #[arg(long)]
    complex: PathBuf,
    /// Filtration file.
    #[arg(long)]
    filtration: PathBuf,
}

#[derive(Subcommand, Debug)]
enum FiltrationCommand {
    /// Check that the boundary strictly lowers the filtration.
    Validate(FiltrationInput),
    /// Least value over all representatives of a class.
    Spectral {
        #[command(flatten)]
        input: FiltrationInput,
        /// Class: ids joined by `+`, `top`, or `H<k>[:<i>]`.
        #[arg(long)]
        class: String,
    },
    /// Essentiality of a basis element for a class, plain and filtered.
    Essential {
        #[command(flatten)]
        input: FiltrationInput,
        /// Basis element id.
        #[arg(long)]
        element: String,
        /// Class: ids joined by `+`, `top`, or `H<k>[:<i>]`.
        #[arg(long)]
        class: String,
    },
    /// Minimality certificate for the class's value at an element.
    Verdict {
        #[command(flatten)]
        input: FiltrationInput,
        /// Basis element id.
        #[arg(long)]
        element: String,
        /// Class: ids joined by `+`, `top`, or `H<k>[:<i>]`.
        #[arg(long)]
        class: String,
    },
}

#[derive(Subcommand, Debug)]
enum MorseCommand {
    /// Build the filtered complex of a system on T² or of a raw sample grid.
    Build(MorseArgs),
}

#[derive(Args, Debug, Serialize)]
struct MorseArgs {
    /// Autonomous system on the 2-torus.
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    system: Option<PathBuf>,
    /// Raw grid file `{"values": [[...], ...]}`.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Samples per direction when reading a system.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Also write the complex in its own file.
    #[arg(long)]
    complex_out: Option<PathBuf>,
    /// Also write the filtration in its own file.
    #[arg(long)]
    filtration_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OrbitsCommand {
    /// Newton search for fixed points of the time-1 map from a seed grid.
    Scan {
        /// Hamiltonian system file.
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScanArgs {
    /// Seeds per phase-space direction.
    #[arg(long = "grid", default_value_t = ScanOptions::default().resolution)]
    resolution: usize,
    /// Closing tolerance `|φ¹(x) − x − m|_∞`.
    #[arg(long, default_value_t = ScanOptions::default().tol)]
    tol: f64,
    /// Integrator steps on [0, 1].
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    /// Integrator steps for the first Newton pass.
    #[arg(long, default_value_t = ScanOptions::default().coarse_steps)]
    coarse_steps: usize,
    /// Newton iterations per seed.
    #[arg(long, default_value_t = ScanOptions::default().max_iterations)]
    max_iterations: usize,
    /// Samples kept per reported orbit.
    #[arg(long, default_value_t = ScanOptions::default().record)]
    record: usize,
}

impl ScanArgs {
    fn options(&self) -> ScanOptions {
        ScanOptions {
            resolution: self.resolution,
            tol: self.tol,
            steps: self.steps,
            coarse_steps: self.coarse_steps,
            max_iterations: self.max_iterations,
            record: self.record,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct HoferArgs {
    /// Hamiltonian system file.
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    hofer: HoferGridArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct HoferGridArgs {
    /// Spatial samples per torus direction.
    #[arg(long = "hofer-space", default_value_t = HoferOptions::default().space)]
    space: usize,
    /// Time intervals of the quadrature.
    #[arg(long = "hofer-time", default_value_t = HoferOptions::default().time_intervals)]
    time_intervals: usize,
    /// Skip the Newton polish of grid extrema.
    #[arg(long)]
    no_refine: bool,
}

impl HoferGridArgs {
    fn options(&self) -> HoferOptions {
        HoferOptions {
            space: self.space,
            time_intervals: self.time_intervals,
            refine: !self.no_refine,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct CertifyArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Points per torus direction for pointwise inequality checks.
    #[arg(long, default_value_t = SampleGrid::default().space)]
    check_space: usize,
    /// Time samples for pointwise inequality checks.
    #[arg(long, default_value_t = SampleGrid::default().time)]
    check_time: usize,
    /// Samples of the linearized flow for the under-twisted tests.
    #[arg(long, default_value_t = CertifyOptions::default().twist_samples)]
    twist_samples: usize,
    /// Slack on action comparisons.
    #[arg(long, default_value_t = CertifyOptions::default().action_tol)]
    action_tol: f64,
    /// Cap scale position between the verified floor (0) and 1/(2π) (1).
    #[arg(long, default_value_t = CertifyOptions::default().cap_fraction)]
    cap_fraction: f64,
    #[command(flatten)]
    hofer: HoferGridArgs,
}

impl CertifyArgs {
    fn options(&self) -> CertifyOptions {
        CertifyOptions {
            scan: self.scan.options(),
            grid: SampleGrid {
                space: self.check_space,
                time: self.check_time,
            },
            twist_samples: self.twist_samples,
            action_tol: self.action_tol,
            cap_fraction: self.cap_fraction,
            hofer: self.hofer.options(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum CertifyCommand {
    /// Quasi-autonomous system with under-twisted extrema and actions in range.
    Thm15 {
        /// Hamiltonian system file.
        #[arg(long)]
        system: PathBuf,
        /// Fixed global maximum (default: located on the check grid).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Option<Vec<f64>>,
        /// Fixed global minimum (default: located on the check grid).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Option<Vec<f64>>,
        #[command(flatten)]
        args: CertifyArgs,
    },
    /// H dominates K at P, and K has no orbit above the action of P.
    Thm16 {
        /// System whose path is certified.
        #[arg(long)]
        h: PathBuf,
        /// Comparison system lying below it.
        #[arg(long)]
        k: PathBuf,
        /// Common fixed maximum (default: located for H).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Option<Vec<f64>>,
        #[command(flatten)]
        args: CertifyArgs,
    },
    /// Negative-length minimality through the reversed system and a cap at Q.
    Negside {
        /// Hamiltonian system file.
        #[arg(long)]
        system: PathBuf,
        /// Fixed global minimum (default: located on the check grid).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Option<Vec<f64>>,
        #[command(flatten)]
        args: CertifyArgs,
    },
    /// Halve ε until εH(εt, ·) is certified against its cap at P.
    ShortTime {
        /// Hamiltonian system file.
        #[arg(long)]
        system: PathBuf,
        /// Fixed global maximum (default: located on the check grid).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Option<Vec<f64>>,
        /// First ε tried.
        #[arg(long, default_value_t = 0.05)]
        eps_start: f64,
        /// Smallest ε tried before giving up.
        #[arg(long, default_value_t = 1e-3)]
        eps_min: f64,
        #[command(flatten)]
        args: CertifyArgs,
    },
}

/// Structural failure: bad input, bad parameters, or a failed computation.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

struct Outcome {
    command: &'static str,
    parameters: Value,
    result: Value,
    text: String,
    code: u8,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure(format!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e)))
}

fn load_system(path: &Path) -> Result<HamiltonianSystem, Failure> {
    Ok(HamiltonianSystem::load(path)?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// `0`, ids joined by `+`, `top` (first class of the highest nonzero
/// homology degree), or `H<k>` / `H<k>:<i>`.
fn parse_chain(complex: &GradedComplex, spec: &str) -> Result<Chain, Failure> {
    let spec = spec.trim();
    if spec == "0" {
        return Ok(Chain::zero());
    }
    if spec == "top" {
        let ranks = complex.homology_ranks()?;
        let Some((&degree, _)) = ranks.iter().rev().find(|(_, &r)| r > 0) else {
            return Err(Failure("`top`: the complex has zero homology".into()));
        };
        return Ok(complex.representative(degree, 0)?.expect("rank is positive"));
    }
    if let Some(rest) = spec.strip_prefix('H') {
        if let Some((k, i)) = rest.split_once(':').or(Some((rest, "0"))) {
            if let (Ok(k), Ok(i)) = (k.parse::<i64>(), i.parse::<usize>()) {
                return complex
                    .representative(k, i)?
                    .ok_or_else(|| Failure(format!("`{spec}`: degree {k} has fewer than {} classes", i + 1)));
            }
        }
    }
    let chain: Chain = spec.split('+').map(|s| s.trim().to_string()).collect();
    complex.chain_degree(&chain)?;
    Ok(chain)
}

fn classification_name(c: &Classification) -> &'static str {
    match c {
        Classification::NotCycle { .. } => "not-cycle",
        Classification::Boundary { .. } => "boundary",
        Classification::NontrivialCycle => "nontrivial-cycle",
    }
}

fn chain_text(c: &Chain) -> String {
    if c.is_zero() {
        "0".into()
    } else {
        c.ids().collect::<Vec<_>>().join(" + ")
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Certified => SUCCESS,
        Verdict::RefutedHypothesis => REFUTED,
        Verdict::Inconclusive => INCONCLUSIVE,
    }
}

fn certificate_outcome(command: &'static str, parameters: Value, cert: Certificate) -> Outcome {
    Outcome {
        command,
        parameters,
        text: cert.summary(),
        code: verdict_code(cert.verdict),
        result: to_value(&cert),
    }
}

fn point_or(given: &Option<Vec<f64>>, located: impl FnOnce() -> Result<Vec<f64>, Failure>) -> Result<Vec<f64>, Failure> {
    match given {
        Some(p) => Ok(p.clone()),
        None => located(),
    }
}

fn run_complex(cmd: &ComplexCommand) -> Result<Outcome, Failure> {
    match cmd {
        ComplexCommand::Validate { complex } => {
            let c: GradedComplex = parse_file(complex)?;
            let violations = c.validate();
            let mut text = format!("{} generators, {} violation(s)\n", c.len(), violations.len());
            for v in &violations {
                text += &format!("  {v}\n");
            }
            Ok(Outcome {
                command: "complex validate",
                parameters: json!({ "complex": complex }),
                result: json!({ "valid": violations.is_empty(), "violations": violations }),
                text,
                code: if violations.is_empty() { SUCCESS } else { REFUTED },
            })
        }
        ComplexCommand::Homology { complex } => {
            let c: GradedComplex = parse_file(complex)?;
            let violations = c.validate();
            if !violations.is_empty() {
                return Ok(Outcome {
                    command: "complex homology",
                    parameters: json!({ "complex": complex }),
                    text: format!("not a complex: {}\n", violations[0]),
                    result: json!({ "valid": false, "violations": violations }),
                    code: REFUTED,
                });
            }
            let ranks = c.homology_ranks()?;
            let text = ranks.iter().map(|(k, r)| format!("H{k}: {r}\n")).collect();
            Ok(Outcome {
                command: "complex homology",
                parameters: json!({ "complex": complex }),
                result: json!({ "valid": true, "ranks": ranks }),
                text,
                code: SUCCESS,
            })
        }
        ComplexCommand::Classify { complex, chain } => {
            let c: GradedComplex = parse_file(complex)?;
            let z = parse_chain(&c, chain)?;
            let class = c.classify_chain(&z)?;
            Ok(Outcome {
                command: "complex classify",
                parameters: json!({ "complex": complex, "chain": chain }),
                text: format!("{}: {}\n", chain_text(&z), classification_name(&class)),
                result: json!({ "chain": z, "classification": class }),
                code: SUCCESS,
            })
        }
    }
}

fn load_filtered(input: &FiltrationInput) -> Result<(GradedComplex, FiltrationMap), Failure> {
    Ok((parse_file(&input.complex)?, parse_file(&input.filtration)?))
}

fn run_filtration(cmd: &FiltrationCommand) -> Result<Outcome, Failure> {
    match cmd {
        FiltrationCommand::Validate(input) => {
            let (c, f) = load_filtered(input)?;
            let complex_violations = c.validate();
            let violations = validate_filtration(&c, &f)?;
            let ok = complex_violations.is_empty() && violations.is_empty();
            let mut text = format!("{} filtration violation(s)\n", violations.len());
            for v in &violations {
                text += &format!("  {} ({}) has {} ({}) in its boundary\n", v.element, v.element_value, v.face, v.face_value);
            }
            Ok(Outcome {
                command: "filtration validate",
                parameters: to_value(input),
                result: json!({ "valid": ok, "complex_violations": complex_violations, "violations": violations }),
                text,
                code: if ok { SUCCESS } else { REFUTED },
            })
        }
        FiltrationCommand::Spectral { input, class } => {
            let (c, f) = load_filtered(input)?;
            let z = parse_chain(&c, class)?;
            let s = spectral_value(&c, &f, &z)?;
            Ok(Outcome {
                command: "filtration spectral",
                parameters: json!({ "complex": input.complex, "filtration": input.filtration, "class": class }),
                text: format!("spectral value {} attained by {}\n", s.value, chain_text(&s.representative)),
                result: json!({ "class": z, "spectral": s }),
                code: SUCCESS,
            })
        }
        FiltrationCommand::Essential { input, element, class } => {
            let (c, f) = load_filtered(input)?;
            let z = parse_chain(&c, class)?;
            let plain = hoferlab::filtration::is_essential(&c, element, &z)?;
            let report = is_essential_filtered(&c, &f, element, &z)?;
            Ok(Outcome {
                command: "filtration essential",
                parameters: json!({ "complex": input.complex, "filtration": input.filtration, "element": element, "class": class }),
                text: format!(
                    "homologically essential: {plain}\ncondition 1: {}\ncondition 2: {}\nessential with respect to the filtration: {}\n",
                    report.condition1.holds, report.condition2.holds, report.verdict
                ),
                result: json!({ "homologically_essential": plain, "report": report }),
                code: SUCCESS,
            })
        }
        FiltrationCommand::Verdict { input, element, class } => {
            let (c, f) = load_filtered(input)?;
            let z = parse_chain(&c, class)?;
            let v = minimality_verdict(&c, &f, element, &z)?;
            Ok(Outcome {
                command: "filtration verdict",
                parameters: json!({ "complex": input.complex, "filtration": input.filtration, "element": element, "class": class }),
                text: format!(
                    "value {} at {}: {}{}\n",
                    v.element_value,
                    v.element,
                    if v.certified { "certified minimal" } else { "not certified" },
                    v.failing_condition.as_deref().map(|c| format!(" ({c} fails)")).unwrap_or_default()
                ),
                code: if v.certified { SUCCESS } else { REFUTED },
                result: to_value(&v),
            })
        }
    }
}

fn run_morse(args: &MorseArgs) -> Result<Outcome, Failure> {
    let f = match (&args.system, &args.samples) {
        (Some(path), _) => SampledFunction::from_system(&load_system(path)?, args.resolution)?,
        (None, Some(path)) => {
            let text = read(path)?;
            SampledFunction::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let m = build_morse_complex(&f)?;
    let top = fundamental_cycle(&m.complex)?;
    let spectral = spectral_value(&m.complex, &m.filtration, &top)?;
    if let Some(path) = &args.complex_out {
        write_json(path, &to_value(&m.complex))?;
    }
    if let Some(path) = &args.filtration_out {
        write_json(path, &to_value(&m.filtration))?;
    }
    let ranks = m.complex.homology_ranks()?;
    let mut text = format!("{} critical cells at resolution {}\n", m.critical.len(), m.resolution);
    for c in &m.critical {
        text += &format!("  {} degree {} value {} at {:?}\n", c.id, c.degree, c.value, c.point);
    }
    text += &format!("homology ranks {ranks:?}\nfundamental class value {} (grid max {})\n", spectral.value, f.max());
    Ok(Outcome {
        command: "morse build",
        parameters: to_value(args),
        result: json!({
            "morse": m,
            "homology_ranks": ranks,
            "fundamental_cycle": top,
            "fundamental_value": spectral.value,
            "grid_max": f.max(),
        }),
        text,
        code: SUCCESS,
    })
}

fn run_certify(cmd: &CertifyCommand) -> Result<Outcome, Failure> {
    match cmd {
        CertifyCommand::Thm15 { system, p, q, args } => {
            let h = load_system(system)?;
            let opts = args.options();
            let located = locate_extrema(&h, opts.grid.space)?;
            let p = point_or(p, || Ok(located.0.clone()))?;
            let q = point_or(q, || Ok(located.1.clone()))?;
            let cert = certify_thm15(&h, &p, &q, &opts)?;
            let params = json!({ "system": system, "p": p, "q": q, "options": opts });
            Ok(certificate_outcome("certify thm15", params, cert))
        }
        CertifyCommand::Thm16 { h, k, p, args } => {
            let hs = load_system(h)?;
            let ks = load_system(k)?;
            let opts = args.options();
            let p = point_or(p, || Ok(locate_extrema(&hs, opts.grid.space)?.0))?;
            let cert = certify_thm16(&hs, &ks, &p, &opts)?;
            let params = json!({ "h": h, "k": k, "p": p, "options": opts });
            Ok(certificate_outcome("certify thm16", params, cert))
        }
        CertifyCommand::Negside { system, q, args } => {
            let h = load_system(system)?;
            let opts = args.options();
            let q = point_or(q, || Ok(locate_extrema(&h, opts.grid.space)?.1))?;
            let cert = certify_negside(&h, &q, &opts)?;
            let params = json!({ "system": system, "q": q, "options": opts });
            Ok(certificate_outcome("certify negside", params, cert))
        }
        CertifyCommand::ShortTime { system, p, eps_start, eps_min, args } => {
            let h = load_system(system)?;
            let opts = args.options();
            let p = point_or(p, || Ok(locate_extrema(&h, opts.grid.space)?.0))?;
            let report = short_time_search(&h, &p, *eps_start, *eps_min, &opts)?;
            let mut text = String::new();
            for a in &report.attempts {
                text += &format!("ε = {}: {:?} {:?}\n", a.epsilon, a.verdict, a.failed);
            }
            text += &match report.epsilon {
                Some(e) => format!("certified at ε = {e}\n"),
                None => format!("no ε ≥ {eps_min} certified\n"),
            };
            Ok(Outcome {
                command: "certify short-time",
                parameters: json!({ "system": system, "p": p, "eps_start": eps_start, "eps_min": eps_min, "options": opts }),
                code: if report.epsilon.is_some() { SUCCESS } else { INCONCLUSIVE },
                result: to_value(&report),
                text,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Complex(c) => run_complex(c),
        Command::Filtration(c) => run_filtration(c),
        Command::Morse(MorseCommand::Build(args)) => run_morse(args),
        Command::Orbits(OrbitsCommand::Scan { system, scan }) => {
            let h = load_system(system)?;
            let report = scan_fixed_points(&h, &scan.options())?;
            let mut text = format!(
                "{} orbits, scan {}\n",
                report.orbits.len(),
                if report.is_complete() { "complete" } else { "found non-isolated fixed points" }
            );
            for o in &report.orbits {
                text += &format!(
                    "  {:?} action {} CZ {} nondegenerate {}\n",
                    o.start,
                    o.action.map_or("-".to_string(), |a| a.to_string()),
                    o.cz_index,
                    o.nondegenerate
                );
            }
            Ok(Outcome {
                command: "orbits scan",
                parameters: json!({ "system": system, "options": scan.options() }),
                result: to_value(&report),
                text,
                code: SUCCESS,
            })
        }
        Command::Hofer(args) => {
            let h = load_system(&args.system)?;
            let r = hofer_norms(&h, &args.hofer.options())?;
            Ok(Outcome {
                command: "hofer",
                parameters: json!({ "system": args.system, "options": args.hofer.options() }),
                text: format!(
                    "positive {}\nnegative {}\nlength {}\nerror estimate {:e}\nmean defect {:e}\n",
                    r.positive, r.negative, r.length, r.error_estimate, r.mean_defect
                ),
                result: to_value(&r),
                code: SUCCESS,
            })
        }
        Command::Certify(c) => run_certify(c),
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("HOFERLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure(format!("HOFERLAB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { STRUCTURAL } else { SUCCESS });
        }
    };
    if let Err(Failure(msg)) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(STRUCTURAL);
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(STRUCTURAL);
        }
    };
    let report = json!({
        "command": outcome.command,
        "parameters": outcome.parameters,
        "result": outcome.result,
        "exit_code": outcome.code,
    });
    let rendered = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => format!("{}\n{}", outcome.command, outcome.text),
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(STRUCTURAL);
            }
        }
        None => print!("{rendered}"),
    }
    ExitCode::from(outcome.code)
}
