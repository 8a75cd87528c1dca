use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfwave_core::json::{self, FamilyJson, MaskJson, SetJson, SystemJson, TreeJson};
use lfwave_core::{
    basic_step, build_basic_tree, build_family, build_mask, build_wavelets, elementary_from_tree,
    enumerate_windows, export_grid_csv, seeded_assignment, unit_assignment, validate_elementary,
    validate_tree, verify_all, verify_family, verify_system, Error, Report,
};

const EXIT_FAIL: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_USAGE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "lfwave",
    about = "Tree-generated Riesz wavelets on local fields of positive characteristic",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Build, check and edit N-valid trees
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Elementary sets of cosets
    #[command(subcommand)]
    Set(SetCmd),
    /// Refinement masks
    #[command(subcommand)]
    Mask(MaskCmd),
    /// Scaling spectra and their duals
    #[command(subcommand)]
    Mra(MraCmd),
    /// Wavelet spectra
    #[command(subcommand)]
    Wavelets(WaveletsCmd),
    /// Full verification of a wavelet system
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Spatial samples for plotting
    #[command(subcommand)]
    Export(ExportCmd),
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Tolerance {
    /// Absolute tolerance for the numerical checks
    #[arg(long, env = "LFWAVE_TOL", default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum TreeCmd {
    /// The basic N-valid tree
    Basic {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        s: u32,
        #[arg(long = "N")]
        n: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Check N-validity; exits 2 on an invalid tree
    Validate { file: PathBuf },
    /// Move a leaf under a new parent
    Step {
        file: PathBuf,
        #[arg(long)]
        node: usize,
        #[arg(long)]
        target: usize,
        #[command(flatten)]
        output: Output,
    },
    /// List the k-windows of a tree
    Windows {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SetCmd {
    /// The elementary set of an N-valid tree
    Build {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check the (N, M)-elementary conditions
    Validate {
        file: PathBuf,
        #[arg(long = "N")]
        n: Option<u32>,
        #[arg(long = "M")]
        m: Option<u32>,
    },
}

#[derive(Subcommand)]
enum MaskCmd {
    /// Seeded mask values on an elementary set
    Build {
        #[arg(long)]
        set: PathBuf,
        #[arg(long = "A")]
        lower: f64,
        #[arg(long = "B")]
        upper: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random phases as well as moduli
        #[arg(long, conflicts_with = "unit")]
        complex: bool,
        /// All values 1
        #[arg(long)]
        unit: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum MraCmd {
    /// Scaling spectrum and dual from a tree and a mask on its set
    Build {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check a family file
    Verify {
        file: PathBuf,
        #[command(flatten)]
        tol: Tolerance,
    },
}

#[derive(Subcommand)]
enum WaveletsCmd {
    /// Wavelet masks and spectra from a family file
    Build {
        family: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check a wavelet system file
    Verify {
        file: PathBuf,
        #[command(flatten)]
        tol: Tolerance,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Every check, including finite sections
    All {
        system: PathBuf,
        /// Shift depth for the finite sections (default N+1)
        #[arg(long)]
        depth: Option<u32>,
        /// Dilation levels, e.g. -1..1
        #[arg(long, default_value = "-1..1", allow_hyphen_values = true, value_parser = parse_levels)]
        levels: RangeInclusive<i32>,
        #[command(flatten)]
        tol: Tolerance,
        /// Also write the report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExportCmd {
    /// CSV samples of φ, φ̃, ψ and ψ̃ on the spatial grid
    Grid {
        system: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_levels(s: &str) -> Result<RangeInclusive<i32>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let a: i32 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: i32 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty level range {s}"));
    }
    Ok(a..=b)
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema(_) => EXIT_SCHEMA,
            _ => EXIT_FAIL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    })
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    json::parse(&text).map_err(|e| Failure {
        code: EXIT_SCHEMA,
        message: format!("{}: {e}", path.display()),
    })
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure {
            code: EXIT_USAGE,
            message: format!("{}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_tol(tol: f64) -> Result<f64, Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Failure {
            code: EXIT_USAGE,
            message: format!("tolerance must be positive, got {tol}"),
        })
    }
}

fn finish_report(report: &Report, extra: Option<&Path>) -> CliResult {
    let text = json::to_pretty(report);
    if let Some(path) = extra {
        fs::write(path, &text).map_err(|e| Failure {
            code: EXIT_USAGE,
            message: format!("{}: {e}", path.display()),
        })?;
    }
    print!("{text}");
    for c in report.failing() {
        eprintln!("check failed: {}", c.name);
    }
    Ok(if report.passed { 0 } else { EXIT_FAIL })
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Commands::Tree(cmd) => tree(cmd),
        Commands::Set(cmd) => set(cmd),
        Commands::Mask(MaskCmd::Build {
            set,
            lower,
            upper,
            seed,
            complex,
            unit,
            output,
        }) => {
            let set = json::set_from_json(&load::<SetJson>(&set)?)?;
            let assignment = if unit {
                unit_assignment(&set)
            } else {
                seeded_assignment(&set, lower, upper, seed, complex)
            };
            let mask = build_mask(&set, &assignment, lower, upper)?;
            emit(&output, &json::to_pretty(&json::mask_to_json(&mask)))?;
            Ok(0)
        }
        Commands::Mra(MraCmd::Build { tree, mask, output }) => {
            let tree = json::tree_from_json(&load::<TreeJson>(&tree)?)?;
            let (params, assignment, lower, upper) =
                json::mask_assignment_from_json(&load::<MaskJson>(&mask)?)?;
            if params != tree.params() {
                let t = tree.params();
                return Err(Error::ParamMismatch {
                    p1: t.p(),
                    s1: t.s(),
                    p2: params.p(),
                    s2: params.s(),
                }
                .into());
            }
            let set = elementary_from_tree(&tree)?;
            let mask = build_mask(&set, &assignment, lower, upper)?;
            let family = build_family(&tree, &mask)?;
            emit(&output, &json::to_pretty(&json::family_to_json(&family)))?;
            Ok(0)
        }
        Commands::Mra(MraCmd::Verify { file, tol }) => {
            let tol = check_tol(tol.tol)?;
            let family = json::family_from_json(&load::<FamilyJson>(&file)?)?;
            finish_report(&verify_family(&family, tol)?, None)
        }
        Commands::Wavelets(WaveletsCmd::Build { family, output }) => {
            let family = json::family_from_json(&load::<FamilyJson>(&family)?)?;
            let system = build_wavelets(&family)?;
            emit(&output, &json::to_pretty(&json::system_to_json(&system)))?;
            Ok(0)
        }
        Commands::Wavelets(WaveletsCmd::Verify { file, tol }) => {
            let tol = check_tol(tol.tol)?;
            let system = json::system_from_json(&load::<SystemJson>(&file)?)?;
            finish_report(&verify_system(&system, tol)?, None)
        }
        Commands::Verify(VerifyCmd::All {
            system,
            depth,
            levels,
            tol,
            report,
        }) => {
            let tol = check_tol(tol.tol)?;
            let system = json::system_from_json(&load::<SystemJson>(&system)?)?;
            let depth = depth.unwrap_or(system.family().n() + 1);
            let r = verify_all(&system, depth, levels, tol)?;
            finish_report(&r, report.as_deref())
        }
        Commands::Export(ExportCmd::Grid { system, output }) => {
            let system = json::system_from_json(&load::<SystemJson>(&system)?)?;
            emit(&output, &export_grid_csv(&system)?)?;
            Ok(0)
        }
    }
}

fn tree(cmd: TreeCmd) -> CliResult {
    match cmd {
        TreeCmd::Basic { p, s, n, output } => {
            let t = build_basic_tree(p, s, n)?;
            emit(&output, &json::to_pretty(&json::tree_to_json(&t)))?;
            Ok(0)
        }
        TreeCmd::Validate { file } => {
            let t = json::tree_from_json(&load::<TreeJson>(&file)?)?;
            let report = validate_tree(&t);
            print!("{}", json::to_pretty(&json::tree_report_json(&report)));
            Ok(if report.is_valid() { 0 } else { EXIT_FAIL })
        }
        TreeCmd::Step {
            file,
            node,
            target,
            output,
        } => {
            let t = json::tree_from_json(&load::<TreeJson>(&file)?)?;
            let stepped = basic_step(&t, node, target)?;
            emit(&output, &json::to_pretty(&json::tree_to_json(&stepped)))?;
            Ok(0)
        }
        TreeCmd::Windows { file, k } => {
            let t = json::tree_from_json(&load::<TreeJson>(&file)?)?;
            let k = k.unwrap_or(t.n() as usize);
            let windows = enumerate_windows(&t, k)?;
            print!("{}", json::to_pretty(&json::windows_json(&windows)));
            Ok(0)
        }
    }
}

fn set(cmd: SetCmd) -> CliResult {
    match cmd {
        SetCmd::Build { tree, output } => {
            let t = json::tree_from_json(&load::<TreeJson>(&tree)?)?;
            let set = elementary_from_tree(&t)?;
            emit(&output, &json::to_pretty(&json::set_to_json(&set)))?;
            Ok(0)
        }
        SetCmd::Validate { file, n, m } => {
            let set = json::set_from_json(&load::<SetJson>(&file)?)?;
            let report = validate_elementary(
                set.params(),
                set.cosets(),
                n.unwrap_or(set.n()),
                m.unwrap_or(set.m()),
            );
            let ok = report.is_valid() && report.within_window;
            let mut value = serde_json::to_value(&report).map_err(Error::from)?;
            value["format"] = json::FORMAT.into();
            value["valid"] = ok.into();
            print!("{}", json::to_pretty(&value));
            Ok(if ok { 0 } else { EXIT_FAIL })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
