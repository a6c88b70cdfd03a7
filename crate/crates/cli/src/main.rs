//! `ovconv`: evaluate transforms, densities and moments of operator-valued
//! laws, and run the identity and oracle check suites.

mod oracles;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ovconv::algebra::linalg;
use ovconv::convolve::{identity_check, CheckReport, IdentityName};
use ovconv::fock::{FockSpace, JSpec, DEFAULT_MAX_ROWS};
use ovconv::json::{mat_value, parse_mat, IdentityCaseJson, JSpecJson, Model, ModelFile};
use ovconv::law::Node;
use ovconv::transforms::{self, density, trace_state, Grid};
use ovconv::{zoo, AlgElem, Error, JointRealization, Mat, SolverSettings};

#[derive(Parser)]
#[command(name = "ovconv", version, about = "Operator-valued convolutions over M_d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print F, G and h of a law at one point.
    Eval(EvalArgs),
    /// Print the density of a law on a grid as CSV.
    Density(DensityArgs),
    /// Print moments of a law, or of a J-additive combination of laws.
    Moments(MomentsArgs),
    /// Run identity and oracle suites.
    Check(CheckArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (schema "ovconv/1"); without it the built-in zoo is used.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Base dimension of the built-in zoo.
    #[arg(long, default_value_t = 1)]
    d: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    law: String,
    /// JSON matrix of the point, (n·d) x (n·d).
    #[arg(long, conflicts_with = "point_iy")]
    point: Option<PathBuf>,
    /// Evaluate at i·y·1.
    #[arg(long)]
    point_iy: Option<f64>,
    #[arg(long, default_value_t = 1)]
    level: usize,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    law: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// "trace" or a JSON matrix file.
    #[arg(long, default_value = "trace")]
    state: String,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// A single law.
    #[arg(long, conflicts_with = "fock")]
    law: Option<String>,
    /// Comma-separated laws combined in the truncated free product.
    #[arg(long, value_delimiter = ',')]
    fock: Vec<String>,
    /// A family name (free, boolean, monotone, orthogonal, sfree) or one
    /// builtin tag per law, comma-separated.
    #[arg(long, value_delimiter = ',')]
    jspec: Vec<String>,
    /// JSON list of JSpec objects, one per law.
    #[arg(long, conflicts_with = "jspec")]
    jspec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Also print the Boolean cumulants B^[n](1, ..., 1).
    #[arg(long)]
    cumulants: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Suite names, or "all".
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "all")]
    suite: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Overrides the tolerance of the identity suites.
    #[arg(long)]
    tol: Option<f64>,
    /// Run an identity case from a JSON file instead of the built-in suites.
    #[arg(long, conflicts_with = "suite")]
    case: Option<PathBuf>,
}

/// A command failure and its exit code.
enum Failure {
    Input(String),
    Numerical(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_model(args: &ModelArgs) -> Result<Model, Failure> {
    match &args.model {
        Some(path) => {
            let file: ModelFile = serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
            Ok(file.resolve()?)
        }
        None => Ok(Model { d: args.d, cpmaps: zoo::cpmaps(args.d)?, laws: zoo::laws(args.d)? }),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let law = model.law(&a.law)?;
    let b = match (&a.point, a.point_iy) {
        (Some(path), _) => {
            let m = parse_mat(&read(path)?)?;
            if m.nrows() % model.d != 0 {
                return Err(input(format!("point size {} is not a multiple of d = {}", m.nrows(), model.d)));
            }
            AlgElem::new(model.d, m.nrows() / model.d, m)?
        }
        (None, Some(y)) => AlgElem::iy(model.d, a.level.max(1), y),
        (None, None) => return Err(input("give --point or --point-iy")),
    };
    let settings = SolverSettings::default();
    let f = transforms::f(law, &b, &settings)?;
    let g = f.inverse()?;
    let h = &f - &b;
    print_json(&json!({
        "law": a.law,
        "level": b.n(),
        "F": mat_value(f.matrix()),
        "G": mat_value(g.matrix()),
        "h": mat_value(h.matrix()),
    }));
    Ok(())
}

fn cmd_density(a: DensityArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let law = model.law(&a.law)?;
    if !(a.from < a.to) || a.steps < 2 {
        return Err(input("need --from < --to and --steps >= 2"));
    }
    let state = match a.state.as_str() {
        "trace" => trace_state(model.d),
        path => parse_mat(&read(Path::new(path))?)?,
    };
    let grid = Grid { t_min: a.from, t_max: a.to, steps: a.steps };
    let rows = density(law, &state, grid, a.epsilon, &SolverSettings::default())?;
    let mut failed = 0;
    let mut last_error = String::new();
    println!("t,rho");
    for (t, rho) in &rows {
        match rho {
            Ok(v) => println!("{t},{v}"),
            Err(e) => {
                eprintln!("warning: t = {t}: {e}");
                failed += 1;
                last_error = e.to_string();
                println!("{t},");
            }
        }
    }
    if failed == rows.len() {
        return Err(Failure::Numerical(last_error));
    }
    Ok(())
}

fn realization_of(model: &Model, name: &str) -> Result<ovconv::Realization, Failure> {
    model
        .law(name)?
        .to_realization()
        .ok_or_else(|| input(format!("law {name:?} has no finite realization")))
}

fn max_rows() -> Result<usize, Failure> {
    match std::env::var("OVCONV_MAX_DIM") {
        Ok(v) => v.trim().parse().map_err(|_| input(format!("OVCONV_MAX_DIM={v:?} is not a row count"))),
        Err(_) => Ok(DEFAULT_MAX_ROWS),
    }
}

fn jspecs(a: &MomentsArgs, count: usize) -> Result<Vec<JSpec>, Failure> {
    if let Some(path) = &a.jspec_file {
        let list: Vec<JSpecJson> = serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
        return list.iter().map(|j| j.to_spec().map_err(Failure::from)).collect();
    }
    match a.jspec.as_slice() {
        [] => Err(input("--fock needs --jspec or --jspec-file")),
        [family] if family.chars().all(|ch| ch.is_ascii_lowercase()) => Ok(JSpec::family(family)?),
        tags => tags.iter().map(|t| t.parse::<JSpec>().map_err(Failure::from)).collect(),
    }
    .and_then(|specs: Vec<JSpec>| {
        if specs.len() == count {
            Ok(specs)
        } else {
            Err(input(format!("{} JSpecs for {count} laws", specs.len())))
        }
    })
}

fn cmd_moments(a: MomentsArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let d = model.d;
    let one = linalg::identity(d);
    if a.order == 0 {
        return Err(input("--order must be at least 1"));
    }
    // moment(k) = E[X^k] with unit coefficients, k = 1..=order.
    let moments: Vec<Mat> = if let Some(name) = &a.law {
        let law = model.law(name)?;
        match (law.to_realization(), law.node()) {
            (Some(r), _) => (1..=a.order).map(|k| r.moment(&vec![one.clone(); k + 1])).collect::<Result<_, _>>()?,
            (None, Node::Bernoulli(_) | Node::Semicircular(_)) => (1..=a.order)
                .map(|k| transforms::leaf_moments(law, &vec![one.clone(); k - 1]))
                .collect::<Result<_, _>>()?,
            _ => return Err(input(format!("law {name:?} has no finite realization"))),
        }
    } else if !a.fock.is_empty() {
        let parts = a
            .fock
            .iter()
            .map(|n| realization_of(&model, n).and_then(|r| Ok(JointRealization::direct(&[r])?)))
            .collect::<Result<Vec<_>, _>>()?;
        let specs = jspecs(&a, parts.len())?;
        let fock = FockSpace::build_joint(&parts, a.order, max_rows()?)?;
        (1..=a.order)
            .map(|k| fock.j_moment(&specs, &vec![one.clone(); k + 1], &[]))
            .collect::<Result<_, _>>()?
    } else {
        return Err(input("give --law or --fock"));
    };
    let mut out = json!({
        "order": a.order,
        "moments": moments.iter().enumerate().map(|(k, m)| json!({"k": k + 1, "value": mat_value(m)})).collect::<Vec<_>>(),
    });
    if a.cumulants {
        let cumulants = unit_cumulants(&moments);
        out["boolean_cumulants"] = Value::Array(
            cumulants.iter().enumerate().map(|(k, m)| json!({"k": k + 1, "value": mat_value(m)})).collect(),
        );
    }
    print_json(&out);
    Ok(())
}

/// `B^{[n]}(1, …, 1)` from `M^{[n]}(1, …, 1)`: with unit arguments the
/// recursion only involves the moments at unit arguments.
fn unit_cumulants(moments: &[Mat]) -> Vec<Mat> {
    let mut out: Vec<Mat> = Vec::with_capacity(moments.len());
    for n in 1..=moments.len() {
        let mut acc = moments[n - 1].clone();
        for k in 1..n {
            acc -= &moments[k - 1] * &out[n - k - 1];
        }
        out.push(acc);
    }
    out
}

fn report_line(r: &CheckReport) -> String {
    format!(
        "{} {:<16} d={} max residual {:.3e} (tol {:.0e})",
        if r.pass { "PASS" } else { "FAIL" },
        r.name,
        r.d,
        r.max_residual,
        r.tol
    )
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let settings = SolverSettings::default();
    let mut reports: Vec<CheckReport> = Vec::new();
    let mut errors: Vec<(String, Failure)> = Vec::new();
    if let Some(path) = &a.case {
        let case: IdentityCaseJson = serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let mut case = case.to_case()?;
        if let Some(tol) = a.tol {
            case.tol = tol;
        }
        match identity_check(&case, &settings) {
            Ok(r) => reports.push(r),
            Err(e) => errors.push((case.name.to_string(), e.into())),
        }
    } else {
        let mut identities: Vec<IdentityName> = Vec::new();
        let mut oracle_names: Vec<&str> = Vec::new();
        for s in &a.suite {
            if s == "all" {
                identities.extend(IdentityName::ALL.iter().copied());
                oracle_names.extend(oracles::NAMES.iter().copied());
            } else if oracles::is_oracle(s) {
                oracle_names.push(oracles::NAMES.iter().find(|n| *n == s).expect("listed"));
            } else {
                identities.push(s.parse().map_err(|_| input(format!("unknown suite {s:?}")))?);
            }
        }
        if a.levels.is_empty() || a.levels.contains(&0) || a.samples == 0 {
            return Err(input("levels must be positive and samples nonzero"));
        }
        for &d in &a.d {
            for &name in &identities {
                let mut case = zoo::default_case(name, d, a.levels.clone(), a.samples, a.seed)?;
                if let Some(tol) = a.tol {
                    case.tol = tol;
                }
                match identity_check(&case, &settings) {
                    Ok(r) => reports.push(r),
                    Err(e) => errors.push((format!("{name} d={d}"), e.into())),
                }
            }
            for name in &oracle_names {
                match oracles::run(name, d, a.seed, &settings) {
                    Ok(r) => reports.push(r),
                    Err(e) => errors.push((format!("{name} d={d}"), e.into())),
                }
            }
        }
    }
    for r in &reports {
        eprintln!("{}", report_line(r));
    }
    let mut error_list = BTreeMap::new();
    for (name, f) in &errors {
        let msg = match f {
            Failure::Input(m) | Failure::Numerical(m) => m.clone(),
            Failure::Check => String::new(),
        };
        eprintln!("ERROR {name}: {msg}");
        error_list.insert(name.clone(), msg);
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let pass = failed == 0 && errors.is_empty();
    eprintln!("{} of {} suites passed", reports.len() - failed, reports.len() + errors.len());
    print_json(&json!({ "pass": pass, "reports": reports, "errors": error_list }));
    if failed > 0 || errors.iter().any(|(_, f)| matches!(f, Failure::Input(_))) {
        return Err(Failure::Check);
    }
    if let Some((_, Failure::Numerical(m))) = errors.first() {
        return Err(Failure::Numerical(m.clone()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Density(a) => cmd_density(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Check(a) => cmd_check(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
