mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use pptes_core::fixtures::{
    ensure_passed, pyramid_sextet, tiles_sextet, verify_intersection_counts,
};
use pptes_core::invariants::{classify_quintuple, invariants, sixth_state};
use pptes_core::pptes::{
    check_state, projector_state, reconstruct, state_for_sextet, state_from_angles,
};
use pptes_core::search::kernel_product_states;
use pptes_core::stabilizer::stabilizer;
use pptes_core::upb::{
    normalizing_permutation, permute, quintuple_symbols, symbol_with_tol, upb_from_angles,
    upb_symbols, FAMILY_SYMBOL, SYMBOL_TOL,
};
use pptes_core::witness::{witness_for_state, DEFAULT_RESTARTS};
use pptes_core::{
    Error, ErrorKind, ProductVector, Result, SearchConfig, Symbol, Tolerances, UpbAngles,
};

use io::{read_json, read_state, read_tuple, IloFile, StateFile};

#[derive(Parser)]
#[command(
    name = "pptes",
    version,
    about = "Rank-four PPT entangled states of two qutrits"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "QUTRIT_PPTES_SEED", default_value_t = 0)]
    seed: u64,
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unextendible product bases and reference configurations.
    #[command(subcommand)]
    Upb(UpbCommand),
    /// Invariants and symbol of a quintuple.
    Invariants {
        #[arg(long)]
        quintuple: PathBuf,
    },
    /// Class of a quintuple and the sixth product state of its kernel, if regular.
    Classify {
        #[arg(long)]
        quintuple: PathBuf,
    },
    /// Build, check and reconstruct rank-four PPT entangled states.
    #[command(subcommand)]
    Pptes(PptesCommand),
    /// Product states in the kernel of a state.
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Permutations of the kernel sextet induced by local symmetries.
    Stabilizer(SextetSource),
    /// Entanglement witness from the kernel projector.
    Witness {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// Built-in reference checks.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Subcommand)]
enum UpbCommand {
    /// Family member with the given angles.
    Gen {
        #[command(flatten)]
        angles: AngleArgs,
        /// Print the normalized projector state instead of the vectors.
        #[arg(long)]
        state: bool,
    },
    Tiles {
        #[arg(long)]
        state: bool,
    },
    /// Kernel sextet of the Pyramid state.
    Pyramid {
        #[arg(long)]
        state: bool,
    },
}

#[derive(Args)]
struct AngleArgs {
    #[arg(long, allow_hyphen_values = true)]
    gamma_a: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta_a: f64,
    #[arg(long, allow_hyphen_values = true)]
    phi_a: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma_b: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta_b: f64,
    #[arg(long, allow_hyphen_values = true)]
    phi_b: f64,
}

#[derive(Subcommand)]
enum PptesCommand {
    /// `(A ⊗ B) Π (A ⊗ B)†` from an angles file and an optional `{A, B}` file.
    Build {
        #[arg(long)]
        angles: PathBuf,
        #[arg(long)]
        ilo: Option<PathBuf>,
    },
    /// Rank, PPT test and entanglement decision.
    Check {
        #[arg(long)]
        state: PathBuf,
    },
    /// Recover the UPB and local maps of a rank-4 PPTES.
    Reconstruct {
        #[arg(long)]
        state: PathBuf,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Product states in the kernel of a state.
    Products {
        #[arg(long)]
        state: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SextetSource {
    /// State whose kernel sextet is used.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Six product vectors.
    #[arg(long)]
    sextet: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Product-state counts of the reference subspaces and symbol closure of UPB sextets.
    Verify,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn search_config(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        ..SearchConfig::default()
    }
}

fn upb_state_or_vectors(upb: &[ProductVector], state: bool) -> Result<Value> {
    if state {
        to_value(&StateFile(projector_state(upb)?))
    } else {
        to_value(&upb)
    }
}

/// Scan of all 720 ordered quintuples: which symbols occur and whether each
/// is brought to the family symbol by its reordering.
fn symbol_closure(name: &str, sextet: &[ProductVector], tol: &Tolerances) -> Result<Value> {
    let family: Symbol = FAMILY_SYMBOL.parse()?;
    let symbols = quintuple_symbols(sextet, tol, SYMBOL_TOL)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut normalizes = true;
    for (idx, sym) in pptes_core::upb::ordered_quintuples()
        .into_iter()
        .zip(symbols)
    {
        let Some(sym) = sym else {
            normalizes = false;
            continue;
        };
        seen.insert(sym);
        normalizes &= match normalizing_permutation(&sym) {
            Some(sigma) => {
                let q = permute(&permute(sextet, &idx), &sigma);
                symbol_with_tol(&invariants(&q, tol)?, SYMBOL_TOL)? == Some(family)
            }
            None => false,
        };
    }
    let matches_table = seen == upb_symbols();
    Ok(json!({
        "name": name,
        "symbols": seen.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "matches_table": matches_table,
        "normalizes": normalizes,
        "pass": matches_table && normalizes,
    }))
}

fn run(cli: &Cli) -> Result<Value> {
    let tol = Tolerances::default();
    let cfg = search_config(cli.seed);
    match &cli.command {
        Command::Upb(UpbCommand::Gen { angles, state }) => {
            let angles = UpbAngles {
                gamma_a: angles.gamma_a,
                theta_a: angles.theta_a,
                phi_a: angles.phi_a,
                gamma_b: angles.gamma_b,
                theta_b: angles.theta_b,
                phi_b: angles.phi_b,
            };
            upb_state_or_vectors(&upb_from_angles(&angles)?, *state)
        }
        Command::Upb(UpbCommand::Tiles { state }) => {
            upb_state_or_vectors(&upb_from_angles(&UpbAngles::tiles())?, *state)
        }
        Command::Upb(UpbCommand::Pyramid { state }) => {
            let sextet = pyramid_sextet();
            if *state {
                to_value(&StateFile(state_for_sextet(&sextet, &tol)?))
            } else {
                to_value(&sextet)
            }
        }
        Command::Invariants { quintuple } => {
            let q = read_tuple(quintuple, 5)?;
            let s = invariants(&q, &tol)?;
            let symbol = symbol_with_tol(&s, SYMBOL_TOL)?;
            Ok(json!({ "invariants": to_value(&s)?, "symbol": symbol.map(|s| s.to_string()) }))
        }
        Command::Classify { quintuple } => {
            to_value(&classify_quintuple(&read_tuple(quintuple, 5)?, &tol)?)
        }
        Command::Pptes(PptesCommand::Build { angles, ilo }) => {
            let angles: UpbAngles = read_json(angles)?;
            angles.validate()?;
            let ilo: Option<IloFile> = ilo.as_deref().map(read_json).transpose()?;
            let rho = state_from_angles(&angles, ilo.as_ref().map(|m| (&m.a, &m.b)))?;
            to_value(&StateFile(rho))
        }
        Command::Pptes(PptesCommand::Check { state }) => {
            to_value(&check_state(&read_state(state)?, &cfg, &tol)?)
        }
        Command::Pptes(PptesCommand::Reconstruct { state }) => {
            let r = reconstruct(&read_state(state)?, &cfg, &tol)?;
            info!(
                "symbol {}, reordering {}, residual {:e}",
                r.symbol, r.permutation, r.residual
            );
            to_value(&r)
        }
        Command::Kernel(KernelCommand::Products { state }) => {
            to_value(&kernel_product_states(&read_state(state)?, &cfg, &tol)?)
        }
        Command::Stabilizer(source) => {
            let sextet = match (&source.state, &source.sextet) {
                (Some(state), _) => kernel_product_states(&read_state(state)?, &cfg, &tol)?,
                (None, Some(path)) => read_tuple(path, 6)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            if sextet.len() != 6 {
                return Err(Error::KernelProductCount {
                    found: sextet.len(),
                });
            }
            to_value(&stabilizer(&sextet, &tol)?)
        }
        Command::Witness { state, restarts } => to_value(&witness_for_state(
            &read_state(state)?,
            *restarts,
            cli.seed,
            &tol,
        )?),
        Command::Fixtures(FixturesCommand::Verify) => {
            let reports = verify_intersection_counts(&cfg, &tol)?;
            let mut closure = vec![
                symbol_closure("tiles", &tiles_sextet(), &tol)?,
                symbol_closure("pyramid", &pyramid_sextet(), &tol)?,
            ];
            let mut rng = pptes_core::sampling::rng_from_seed(cli.seed);
            let upb = upb_from_angles(&pptes_core::sampling::random_angles(&mut rng, 0.05))?;
            let mut sextet = upb.to_vec();
            sextet.push(sixth_state(&upb, &tol)?);
            closure.push(symbol_closure("random", &sextet, &tol)?);
            let closure_pass = closure.iter().all(|c| c["pass"] == json!(true));
            let report = json!({
                "counts": to_value(&reports)?,
                "symbol_closure": closure,
                "pass": closure_pass && reports.iter().all(|r| r.pass),
            });
            ensure_passed(&reports)?;
            if !closure_pass {
                eprintln!("{report}");
                return Err(Error::NotUpbType);
            }
            Ok(report)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Input => 1,
        ErrorKind::Inconsistency => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(value) => {
            let text = if cli.pretty {
                serde_json::to_string_pretty(&value)
            } else {
                serde_json::to_string(&value)
            };
            println!("{}", text.expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
