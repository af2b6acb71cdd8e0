//! Command-line front end: `hardcore <subcommand> [flags]`.
//!
//! Every output starts with a `#` header holding the version, the command
//! and the full resolved configuration, so identical configurations give
//! byte-identical output for the deterministic subcommands. Exit codes: 0
//! success, 1 domain/input failure or failing verdict, 2 resource limit.

mod parse;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::certifier::{self, CertifyOptions, Rounding};
use crate::error::Error;
use crate::gadgets::{self, io as gio, GadgetSpec, Graph, Label};
use crate::measure::{self, formulas, Init, Phase};
use crate::moments::{self, OccupancyPair, OverlapPoint};
use crate::reconstruction::{self, DecayOptions};
use crate::reduction::{self, GlauberOptions, Mode};
use crate::treegibbs::{self, ModelParams};
pub use parse::{merge_config, parse_axis, parse_rational, parse_range};

#[derive(Parser, Debug)]
#[command(name = "hardcore", version, about = "Hardcore model toolkit: fixed points, moments, certification, gadgets, reconstruction, reduction")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, env = "HARDCORE_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,
    /// key=value file; entries fill flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tree fixed points, λ_c, residuals and extra conditions.
    FixedPoints(FixedPointsArgs),
    /// Moment exponent functions.
    #[command(subcommand)]
    Moments(MomentsCmd),
    /// Interval certification of the second-moment condition.
    Certify(CertifyArgs),
    /// Gadget construction and statistics.
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Exact partition functions and moment formulas.
    #[command(subcommand)]
    Z(ZCmd),
    /// Samplers.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Broadcast reconstruction statistics.
    Reconstruct(ReconstructArgs),
    /// MAX-CUT reduction experiment.
    Reduce(ReduceArgs),
}

#[derive(Args, Debug)]
pub struct FixedPointsArgs {
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    /// Also refine to this many bits.
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum MomentsCmd {
    /// Evaluate one function at a point alpha,beta[,gamma,delta[,epsilon]].
    Eval(MomentsEvalArgs),
    /// CSV grid over one or two coordinates.
    Grid(MomentsGridArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Phi1,
    F,
    Ghat,
    Tau,
    H1,
    Psi,
    Phi,
}

#[derive(Args, Debug)]
pub struct MomentsEvalArgs {
    #[arg(long, value_enum)]
    pub func: Func,
    #[arg(long)]
    pub point: String,
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MomentsGridArgs {
    #[arg(long, value_enum)]
    pub func: Func,
    /// Base point; the varied coordinates are overwritten.
    #[arg(long)]
    pub point: String,
    /// name:lo:hi:steps
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingArg {
    Directed,
    Nudge,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub nbhd: f64,
    /// γ cells x δ cells.
    #[arg(long, default_value = "100x32")]
    pub grid: String,
    #[arg(long, default_value_t = 4)]
    pub refine: u32,
    #[arg(long, value_enum, default_value_t = RoundingArg::Directed)]
    pub rounding: RoundingArg,
    /// Include wall time (makes the report run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SizeArgs {
    /// Side size |W±|.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub psi: Option<f64>,
    /// Trees per side; overrides the exponent rule.
    #[arg(long)]
    pub m: Option<usize>,
    /// Tree depth (even); overrides the exponent rule.
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SizeArgs {
    fn spec(&self, d: u32) -> crate::Result<GadgetSpec> {
        if self.m.is_some() || self.depth.is_some() {
            GadgetSpec::with_sizes(self.n, self.m.unwrap_or(1), self.depth.unwrap_or(0), d, self.seed)
        } else {
            match (self.theta, self.psi) {
                (Some(t), Some(p)) => GadgetSpec::new(self.n, t, p, d, self.seed),
                _ => Err(Error::Input("give --theta and --psi, or --m/--depth".into())),
            }
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum GadgetCmd {
    /// Sample G (or G̃ with --tilde).
    Sample(GadgetSampleArgs),
    /// Attach trees to a G̃ file.
    AppendTrees(AppendTreesArgs),
    /// Build H^G from an H file and a gadget file.
    BuildHg(BuildHgArgs),
    /// Short-cycle counts of W-cycles.
    Cycles(CyclesArgs),
}

#[derive(Args, Debug)]
pub struct GadgetSampleArgs {
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long)]
    pub tilde: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AppendTreesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub depth: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildHgArgs {
    #[arg(long)]
    pub h: PathBuf,
    #[arg(long)]
    pub gadget: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CyclesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ZCmd {
    /// Z of a graph file.
    Exact(ZExactArgs),
    /// Z(η) with the U vertices pinned.
    Conditional(ZConditionalArgs),
    /// Closed-form E Z^{α,β}(η) and E Z², optionally against sampled graphs.
    Formulas(ZFormulasArgs),
}

#[derive(Args, Debug)]
pub struct ZExactArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Rational or decimal, e.g. 1, 3/2, 0.25.
    #[arg(long, default_value = "1")]
    pub lambda: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseArg {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
pub struct ZConditionalArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Lines `<vertex id> <0|1>` for every U vertex.
    #[arg(long)]
    pub eta: PathBuf,
    #[arg(long, default_value = "1")]
    pub lambda: String,
    #[arg(long, value_enum)]
    pub phase: Option<PhaseArg>,
    /// Restrict to exactly this many occupied W+ (needs --w-minus).
    #[arg(long, requires = "w_minus")]
    pub w_plus: Option<usize>,
    #[arg(long, requires = "w_plus")]
    pub w_minus: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ZFormulasArgs {
    #[arg(long)]
    pub n: usize,
    /// |U±|.
    #[arg(long, default_value_t = 1)]
    pub m_prime: usize,
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub beta: String,
    /// Occupied U+ and U- counts, "ep,em".
    #[arg(long, default_value = "0,0")]
    pub eta: String,
    #[arg(long, default_value = "1")]
    pub lambda: String,
    /// Compare with Monte Carlo means over sampled G̃.
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 100_000)]
    pub graphs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SampleCmd {
    /// Heat-bath Glauber chains; CSV trajectory.
    Glauber(GlauberArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitArg {
    Empty,
    Plus,
    Minus,
}

#[derive(Args, Debug)]
pub struct GlauberArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Empty)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent chains with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignArg {
    Plus,
    Minus,
    Both,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long, default_value_t = 6)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// a..b (inclusive) or a comma list.
    #[arg(long, default_value = "2..8")]
    pub levels: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = SignArg::Both)]
    pub sign: SignArg,
    /// Table draws allowed per level; deeper levels get fewer samples.
    #[arg(long, default_value_t = 2_000_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 1000)]
    pub min_samples: usize,
    #[arg(long, default_value_t = 0.5)]
    pub zeta1: f64,
    #[arg(long)]
    pub tail_threshold: Option<f64>,
    /// Levels for the decay fit (default: all with ℓ ≥ 4).
    #[arg(long)]
    pub fit_levels: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Glauber,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    pub h: PathBuf,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Cross-edges per H-edge and sign class (default from the spec).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    #[arg(long, default_value = "8")]
    pub lambda: String,
    #[arg(long, default_value_t = 2000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        CliError { code, kind, message: message.into() }
    }

    /// A failing verdict: the output is written, the exit code is 1.
    fn verdict(what: &str) -> Self {
        CliError::new(1, "verdict", format!("{what} failed"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Resource(_) => (2, "resource"),
            Error::Capacity(_) => (2, "capacity"),
            Error::Domain(_) => (1, "domain"),
            Error::IntervalDomain(_) => (1, "interval-domain"),
            Error::Convergence { .. } => (1, "convergence"),
            Error::Consistency(_) => (1, "consistency"),
            Error::Parse { .. } => (1, "parse"),
            Error::Input(_) => (1, "input"),
        };
        CliError::new(code, kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(1, "io", e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::new(1, "input", msg)
}

/// Parse and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: kind=config message={:?}", e);
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = writeln!(stderr, "error: kind=usage message={:?}", e.to_string().lines().next().unwrap_or(""));
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: kind=resource message={:?}", e.to_string());
            return 2;
        }
    };
    let header = header(&cli.cmd);
    // Output is buffered so the worker pool never touches the caller's writer.
    let mut buf: Vec<u8> = Vec::new();
    let res = pool.install(|| dispatch(&cli.cmd, &header, &mut buf));
    let _ = stdout.write_all(&buf);
    let _ = stdout.flush();
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: kind={} message={:?}", e.kind, e.message);
            e.code
        }
    }
}

fn header(cmd: &Command) -> String {
    let name = match cmd {
        Command::FixedPoints(_) => "fixed-points",
        Command::Moments(MomentsCmd::Eval(_)) => "moments eval",
        Command::Moments(MomentsCmd::Grid(_)) => "moments grid",
        Command::Certify(_) => "certify",
        Command::Gadget(GadgetCmd::Sample(_)) => "gadget sample",
        Command::Gadget(GadgetCmd::AppendTrees(_)) => "gadget append-trees",
        Command::Gadget(GadgetCmd::BuildHg(_)) => "gadget build-hg",
        Command::Gadget(GadgetCmd::Cycles(_)) => "gadget cycles",
        Command::Z(ZCmd::Exact(_)) => "z exact",
        Command::Z(ZCmd::Conditional(_)) => "z conditional",
        Command::Z(ZCmd::Formulas(_)) => "z formulas",
        Command::Sample(SampleCmd::Glauber(_)) => "sample glauber",
        Command::Reconstruct(_) => "reconstruct",
        Command::Reduce(_) => "reduce",
    };
    format!("# hardcore {}\n# command: {name}\n# config: {cmd:?}\n", env!("CARGO_PKG_VERSION"))
}

/// Header plus body to the file or stdout. Graph files keep the header as
/// comments, which the reader skips.
fn emit(out: &Option<PathBuf>, header: &str, body: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => {
            std::fs::write(p, format!("{header}{body}"))?;
            writeln!(stdout, "{header}# wrote {}", p.display())?;
        }
        None => write!(stdout, "{header}{body}")?,
    }
    Ok(())
}

fn read_graph(p: &Path) -> CliResult<Graph> {
    let text = std::fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
    Ok(gio::from_text(&text)?)
}

fn rational(s: &str, what: &str) -> CliResult<BigRational> {
    parse_rational(s).map_err(|e| input(format!("{what}: {e}")))
}

fn dispatch(cmd: &Command, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::FixedPoints(a) => fixed_points(a, header, stdout),
        Command::Moments(MomentsCmd::Eval(a)) => moments_eval(a, header, stdout),
        Command::Moments(MomentsCmd::Grid(a)) => moments_grid(a, header, stdout),
        Command::Certify(a) => certify(a, header, stdout),
        Command::Gadget(g) => gadget(g, header, stdout),
        Command::Z(z) => zcmd(z, header, stdout),
        Command::Sample(SampleCmd::Glauber(a)) => glauber(a, header, stdout),
        Command::Reconstruct(a) => reconstruct(a, header, stdout),
        Command::Reduce(a) => reduce(a, header, stdout),
    }
}

fn fixed_points(a: &FixedPointsArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let params = ModelParams::new(a.d, a.lambda)?;
    let fp = treegibbs::solve_fixed_points(params, a.tol)?;
    let lc = treegibbs::critical_fugacity_exact(a.d)?;
    let res = treegibbs::residuals(&fp)?;
    let extra = treegibbs::check_extra_conditions(&fp, a.d);
    let mut s = String::new();
    let _ = writeln!(s, "d = {}", a.d);
    let _ = writeln!(s, "lambda = {}", a.lambda);
    let _ = writeln!(s, "lambda_c = {lc}");
    let _ = writeln!(s, "lambda_c_float = {}", fp.lambda_c);
    let regime = if a.lambda > fp.lambda_c { "non-uniqueness" } else { "uniqueness" };
    let _ = writeln!(s, "regime = {regime}");
    for (k, v) in [("q_plus", fp.q_plus), ("q_minus", fp.q_minus), ("p_plus", fp.p_plus), ("p_minus", fp.p_minus), ("p_star", fp.p_star)] {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "iterations = {}", fp.iterations);
    let _ = writeln!(s, "solver_residual = {:e}", fp.residual);
    let _ = writeln!(s, "residual_h_p_plus = {:e}", res.h_plus);
    let _ = writeln!(s, "residual_h_p_minus = {:e}", res.h_minus);
    let _ = writeln!(s, "residual_tree_relation = {:e}", res.tree_relation);
    let _ = writeln!(s, "residual_pq_relation = {:e}", res.pq_relation);
    let _ = writeln!(s, "extra_product = {}", extra.product);
    let _ = writeln!(s, "extra_product_margin = {}", extra.product_margin);
    let _ = writeln!(s, "extra_q_plus_margin = {}", extra.q_plus_margin);
    let _ = writeln!(s, "extra_conditions = {}", if extra.product_ok && extra.q_plus_ok { "pass" } else { "fail" });
    if let Some(bits) = a.bits {
        let pr = treegibbs::precise::fixed_points_precise(a.d, &a.lambda.to_string(), (fp.q_plus, fp.q_minus, fp.p_star), bits)?;
        let _ = writeln!(s, "precise_bits = {bits}");
        let _ = writeln!(s, "precise_q_plus = {}", pr.q_plus);
        let _ = writeln!(s, "precise_q_minus = {}", pr.q_minus);
        let _ = writeln!(s, "precise_p_plus = {}", pr.p_plus);
        let _ = writeln!(s, "precise_p_minus = {}", pr.p_minus);
        let _ = writeln!(s, "precise_p_star = {}", pr.p_star);
    }
    emit(&a.out, header, &s, stdout)
}

#[derive(Debug, Clone, Copy, Default)]
struct Coords {
    c: [Option<f64>; 5],
}

const COORD_NAMES: [&str; 5] = ["alpha", "beta", "gamma", "delta", "epsilon"];

impl Coords {
    fn parse(s: &str) -> CliResult<Coords> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| input(format!("point coordinate {x:?}: {e}"))))
            .collect::<CliResult<_>>()?;
        if v.len() < 2 || v.len() > 5 {
            return Err(input("point is alpha,beta[,gamma,delta[,epsilon]]"));
        }
        let mut c = Coords::default();
        for (i, x) in v.into_iter().enumerate() {
            c.c[i] = Some(x);
        }
        Ok(c)
    }

    fn need(&self, i: usize, f: Func) -> CliResult<f64> {
        self.c[i].ok_or_else(|| input(format!("{f:?} needs {}", COORD_NAMES[i])))
    }
}

fn eval_func(f: Func, c: &Coords, d: u32, lambda: f64) -> CliResult<f64> {
    let params = ModelParams::new(d, lambda)?;
    let pt = OccupancyPair::new(c.need(0, f)?, c.need(1, f)?)?;
    Ok(match f {
        Func::Phi1 => moments::phi1(pt, params)?,
        Func::Tau => moments::tau(pt, d)?,
        Func::F => {
            let (g, dl) = (c.need(2, f)?, c.need(3, f)?);
            let e = match c.c[4] {
                Some(e) => e,
                None => moments::epsilon_hat(pt, g, dl)?,
            };
            moments::second_moment_f(pt, OverlapPoint::new(g, dl, e), params)?
        }
        Func::Ghat => moments::ghat(pt, c.need(2, f)?, c.need(3, f)?, params)?,
        Func::H1 => moments::h1_bound(pt, c.need(2, f)?, c.need(3, f)?, d)?,
        Func::Psi => moments::psi_upper(pt, c.need(2, f)?, c.need(3, f)?, d)?,
        Func::Phi => moments::phi_cert(pt, c.need(2, f)?, c.need(3, f)?, d)?,
    })
}

fn moments_eval(a: &MomentsEvalArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let c = Coords::parse(&a.point)?;
    let v = eval_func(a.func, &c, a.d, a.lambda)?;
    emit(&a.out, header, &format!("{:?} = {v:.17e}\n", a.func).to_lowercase(), stdout)
}

fn moments_grid(a: &MomentsGridArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let base = Coords::parse(&a.point)?;
    let coord = |name: &str| COORD_NAMES.iter().position(|&n| n == name).ok_or_else(|| input(format!("unknown coordinate {name:?}")));
    let (xn, xs) = parse_axis(&a.x).map_err(input)?;
    let xi = coord(&xn)?;
    let y = match &a.y {
        Some(y) => {
            let (yn, ys) = parse_axis(y).map_err(input)?;
            Some((coord(&yn)?, yn, ys))
        }
        None => None,
    };
    let mut s = String::new();
    match &y {
        Some((_, yn, _)) => {
            let _ = writeln!(s, "{xn},{yn},value,error");
        }
        None => {
            let _ = writeln!(s, "{xn},value,error");
        }
    }
    let ys: Vec<Option<f64>> = match &y {
        Some((_, _, v)) => v.iter().map(|&t| Some(t)).collect(),
        None => vec![None],
    };
    for &xv in &xs {
        for &yv in &ys {
            let mut c = base;
            c.c[xi] = Some(xv);
            if let (Some((yi, _, _)), Some(yv)) = (&y, yv) {
                c.c[*yi] = Some(yv);
            }
            let (v, err) = match eval_func(a.func, &c, a.d, a.lambda) {
                Ok(v) => (format!("{v:.17e}"), String::new()),
                Err(e) => (String::from("nan"), e.kind.to_string()),
            };
            match yv {
                Some(yv) => {
                    let _ = writeln!(s, "{xv},{yv},{v},{err}");
                }
                None => {
                    let _ = writeln!(s, "{xv},{v},{err}");
                }
            }
        }
    }
    emit(&a.out, header, &s, stdout)
}

fn certify(a: &CertifyArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let (gx, gy) = a
        .grid
        .split_once('x')
        .and_then(|(x, y)| Some((x.parse::<usize>().ok()?, y.parse::<usize>().ok()?)))
        .ok_or_else(|| input(format!("grid {:?} is not <gamma>x<delta>", a.grid)))?;
    if gx == 0 || gy == 0 {
        return Err(input("grid dimensions must be positive"));
    }
    let fp = treegibbs::solve_fixed_points(ModelParams::new(a.d, a.lambda)?, 1e-15)?;
    let opts = CertifyOptions {
        nbhd: a.nbhd,
        grid: (gx, gy),
        refine: a.refine,
        rounding: match a.rounding {
            RoundingArg::Directed => Rounding::Directed,
            RoundingArg::Nudge => Rounding::Nudge,
        },
        ..CertifyOptions::default()
    };
    let pre = certifier::certify_preliminaries(&fp, a.nbhd)?;
    let rep = certifier::certify_condition1(&fp, &opts)?;
    let pass = pre.pass && rep.pass;
    let body = format!("{}{}overall = {}\n", pre.to_text(), rep.to_text(a.timing), if pass { "pass" } else { "fail" });
    emit(&a.out, header, &body, stdout)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::verdict("certification"))
    }
}

fn gadget(g: &GadgetCmd, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match g {
        GadgetCmd::Sample(a) => {
            let spec = a.size.spec(a.d)?;
            let gt = gadgets::sample_gtilde(&spec);
            let out = if a.tilde { gt } else { gadgets::append_trees(&gt, &spec)? };
            let mut body = format!(
                "# n = {} m = {} depth = {} m_prime = {} seed = {}\n",
                spec.n, spec.m, spec.tree_depth, spec.m_prime, spec.seed
            );
            body.push_str(&gio::to_text(&out));
            emit(&a.out, header, &body, stdout)
        }
        GadgetCmd::AppendTrees(a) => {
            let gt = read_graph(&a.input)?;
            let n = gt.vertices_with(Label::WPlus).len();
            let mp = gt.vertices_with(Label::UPlus).len();
            let b = (gt.d() as usize).saturating_sub(1).max(1);
            let leaves = b.checked_pow(a.depth).ok_or_else(|| input("tree depth too large"))?;
            if mp == 0 || mp % leaves != 0 {
                return Err(input(format!("|U+| = {mp} is not a multiple of (d-1)^depth = {leaves}")));
            }
            let spec = GadgetSpec::with_sizes(n, mp / leaves, a.depth, gt.d(), 0)?;
            let g = gadgets::append_trees(&gt, &spec)?;
            emit(&a.out, header, &gio::to_text(&g), stdout)
        }
        GadgetCmd::BuildHg(a) => {
            let h = read_graph(&a.h)?;
            let gad = read_graph(&a.gadget)?;
            let hg = gadgets::build_hg(&h, &gad, a.k)?;
            emit(&a.out, header, &gio::to_text(&hg), stdout)
        }
        GadgetCmd::Cycles(a) => {
            let g = read_graph(&a.input)?;
            let dens = match (a.alpha, a.beta) {
                (Some(x), Some(y)) => Some((x, y)),
                (None, None) => None,
                _ => return Err(input("give both --alpha and --beta")),
            };
            let stats = gadgets::count_short_cycles(&g, a.max_len, dens)?;
            let mut s = String::from("length,count,count_simple,lambda,delta\n");
            for c in stats {
                let _ = writeln!(s, "{},{},{},{},{}", c.length, c.count, c.count_simple, c.lambda, c.delta.map_or(String::new(), |x| x.to_string()));
            }
            emit(&a.out, header, &s, stdout)
        }
    }
}

fn read_eta(g: &Graph, p: &Path) -> CliResult<Vec<bool>> {
    let text = std::fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
    let mut bits = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parsed = (|| {
            let v: usize = it.next()?.parse().ok()?;
            let b = match it.next()? {
                "0" => false,
                "1" => true,
                _ => return None,
            };
            it.next().is_none().then_some((v, b))
        })();
        let (v, b) = parsed.ok_or_else(|| CliError::from(Error::Parse { line: i + 1, msg: format!("expected `<id> <0|1>`, got {line:?}") }))?;
        bits.insert(v, b);
    }
    let us = measure::u_vertices(g);
    let eta: Vec<bool> = us
        .iter()
        .map(|v| bits.remove(v).ok_or_else(|| input(format!("eta has no entry for U vertex {v}"))))
        .collect::<CliResult<_>>()?;
    if let Some(v) = bits.keys().next() {
        return Err(input(format!("eta entry {v} is not a U vertex")));
    }
    Ok(eta)
}

fn zcmd(z: &ZCmd, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match z {
        ZCmd::Exact(a) => {
            let g = read_graph(&a.graph)?;
            let lam = rational(&a.lambda, "lambda")?;
            let v = measure::exact_partition(&g, &lam)?;
            let body = format!("vertices = {}\nedges = {}\nlambda = {lam}\nZ = {v}\nZ_float = {:e}\n", g.len(), g.edge_count(), v.to_f64().unwrap_or(f64::NAN));
            emit(&a.out, header, &body, stdout)
        }
        ZCmd::Conditional(a) => {
            let g = read_graph(&a.graph)?;
            let lam = rational(&a.lambda, "lambda")?;
            let eta = read_eta(&g, &a.eta)?;
            let phase = a.phase.map(|p| match p {
                PhaseArg::Plus => Phase::Plus,
                PhaseArg::Minus => Phase::Minus,
            });
            let counts = a.w_plus.zip(a.w_minus);
            let v = measure::conditional_partition(&g, &lam, &eta, phase, counts)?;
            let body = format!(
                "lambda = {lam}\nconsistent = {}\nZ_eta = {}\nZ_eta_float = {:e}\n",
                v.consistent,
                v.value,
                v.value.to_f64().unwrap_or(f64::NAN)
            );
            emit(&a.out, header, &body, stdout)
        }
        ZCmd::Formulas(a) => {
            let alpha = rational(&a.alpha, "alpha")?;
            let beta = rational(&a.beta, "beta")?;
            let lam = rational(&a.lambda, "lambda")?;
            let (ep, em) = a
                .eta
                .split_once(',')
                .and_then(|(x, y)| Some((x.trim().parse::<usize>().ok()?, y.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| input(format!("eta {:?} is not ep,em", a.eta)))?;
            let spec = GadgetSpec::with_sizes(a.n, a.m_prime, 0, a.d, a.seed)?;
            let e1 = formulas::expected_z(&spec, &alpha, &beta, (ep, em), &lam)?;
            let e2 = formulas::expected_z2(&spec, &alpha, &beta, (ep, em), &lam)?;
            let mut s = format!(
                "n = {}\nm_prime = {}\nd = {}\nalpha = {alpha}\nbeta = {beta}\neta = {ep},{em}\nlambda = {lam}\nfirst = {e1}\nfirst_float = {:e}\nsecond = {e2}\nsecond_float = {:e}\n",
                a.n,
                a.m_prime,
                a.d,
                e1.to_f64().unwrap_or(f64::NAN),
                e2.to_f64().unwrap_or(f64::NAN)
            );
            let mut ok = true;
            if a.check {
                let c = measure::moment_monte_carlo(&spec, &[(alpha, beta)], (ep, em), &lam, a.graphs, a.seed)?.remove(0);
                let (z1, z2) = c.z_scores();
                ok = z1 <= 3.0 && z2 <= 3.0;
                let _ = writeln!(s, "graphs = {}", c.graphs);
                let _ = writeln!(s, "first_mean = {:e}\nfirst_se = {:e}\nfirst_z = {z1:.3}", c.first_mean, c.first_se);
                let _ = writeln!(s, "second_mean = {:e}\nsecond_se = {:e}\nsecond_z = {z2:.3}", c.second_mean, c.second_se);
                let _ = writeln!(s, "check = {}", if ok { "pass" } else { "fail" });
            }
            emit(&a.out, header, &s, stdout)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::verdict("moment check"))
            }
        }
    }
}

fn glauber(a: &GlauberArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let g = read_graph(&a.graph)?;
    if a.chains == 0 {
        return Err(input("need at least one chain"));
    }
    let init = match a.init {
        InitArg::Empty => Init::Empty,
        InitArg::Plus => Init::Plus,
        InitArg::Minus => Init::Minus,
    };
    let runs: Vec<(Init, u64)> = (0..a.chains as u64).map(|i| (init.clone(), a.seed.wrapping_add(i))).collect();
    let traces = measure::glauber_chains(&g, a.lambda, a.sweeps, &runs)?;
    let mut s = String::from("chain,seed,sweep,w_plus,w_minus,phase\n");
    for (c, t) in traces.iter().enumerate() {
        for i in 0..t.phase.len() {
            let _ = writeln!(s, "{c},{},{i},{},{},{}", t.seed, t.w_plus[i], t.w_minus[i], t.phase[i]);
        }
    }
    for (c, t) in traces.iter().enumerate() {
        let _ = writeln!(s, "# chain {c}: plus_fraction = {} phase_held = {}", t.plus_fraction(0), t.phase_held());
    }
    emit(&a.out, header, &s, stdout)
}

fn reconstruct(a: &ReconstructArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let levels = parse_range(&a.levels).map_err(input)?;
    let fit_levels = match &a.fit_levels {
        Some(f) => parse_range(f).map_err(input)?,
        None => levels.iter().copied().filter(|&l| l >= 4).collect(),
    };
    let fp = treegibbs::solve_fixed_points(ModelParams::new(a.d, a.lambda)?, 1e-15)?;
    let opts = DecayOptions {
        levels,
        samples: a.samples,
        max_cost: a.budget,
        min_samples: a.min_samples,
        zeta1: a.zeta1,
        tail_threshold: a.tail_threshold,
        fit_levels,
        seed: a.seed,
    };
    let signs: &[i8] = match a.sign {
        SignArg::Plus => &[1],
        SignArg::Minus => &[-1],
        SignArg::Both => &[1, -1],
    };
    let mut s = String::new();
    let mut notes = String::new();
    for (i, &sign) in signs.iter().enumerate() {
        let e = reconstruction::estimate_decay(&fp, a.d, a.lambda, sign, &opts)?;
        let csv = e.to_csv();
        let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |x| x.1) };
        s.push_str(body);
        let _ = writeln!(
            notes,
            "# sign {sign}: fitted_rate = {} predicted_rate = {} degenerate = {}",
            e.fitted_rate.map_or("nan".into(), |r| r.to_string()),
            e.predicted_rate,
            e.degenerate
        );
    }
    s.push_str(&notes);
    emit(&a.out, header, &s, stdout)
}

fn reduce(a: &ReduceArgs, header: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let h = read_graph(&a.h)?;
    let spec = a.size.spec(a.d)?;
    let lam = rational(&a.lambda, "lambda")?;
    let k = a.k.unwrap_or_else(|| spec.default_k());
    let mode = match a.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Glauber => Mode::Glauber,
    };
    let gl = GlauberOptions { sweeps: a.sweeps, burn_in: a.burn_in, seed: a.size.seed };
    let r = reduction::run_reduction(&h, &spec, &lam, k, mode, &gl)?;
    emit(&a.out, header, &r.to_text(), stdout)
}
