use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use woodtrace::workflow::{self, WorkflowError, WorkspaceConfig};

#[derive(Parser, Debug)]
#[command(
    name = "woodtrace",
    version,
    about = "Zero-knowledge chain of custody for physical objects"
)]
struct Cli {
    /// Ledger file (JSON).
    #[arg(long, global = true, default_value = "ledger.json")]
    ledger: PathBuf,
    /// This actor's key file (JSON).
    #[arg(long, global = true, default_value = "keys.json")]
    keys: PathBuf,
    /// Proving key file.
    #[arg(long, global = true, default_value = "custody.pk")]
    pk: PathBuf,
    /// Verification key file.
    #[arg(long, global = true, default_value = "custody.vk")]
    vk: PathBuf,
    /// Accept records whose parent is not registered (proof and signature only).
    #[arg(long, global = true)]
    permissive: bool,
    #[arg(long, global = true)]
    verbose: bool,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate proving and verification keys for the custody circuit.
    Setup {
        /// Deterministic setup for reproducible test keys.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate this actor's key pair.
    Keygen,
    /// Register a new root object (a standing tree) and write its tag.
    Plant {
        #[arg(long)]
        tag: PathBuf,
    },
    /// Read a tag and print the handoff string for its object.
    Handoff {
        #[arg(long)]
        tag: PathBuf,
    },
    /// Register a child of the object named in a handoff string.
    Derive {
        #[arg(long)]
        handoff: String,
        #[arg(long)]
        tag: PathBuf,
    },
    /// Walk an object's provenance back to genesis and re-verify it.
    Trace {
        /// Object id in decimal.
        #[arg(long)]
        id: String,
    },
    /// Time proof generation.
    Bench {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

fn run(cli: &Cli, cfg: &WorkspaceConfig) -> Result<ExitCode, WorkflowError> {
    match &cli.command {
        Command::Setup { seed } => {
            let mut rng = match seed {
                Some(s) => ChaCha20Rng::seed_from_u64(*s),
                None => ChaCha20Rng::from_rng(OsRng).expect("os entropy"),
            };
            let report = workflow::cmd_setup(cfg, &mut rng)?;
            if cli.json {
                println!("{}", serde_json::to_string(&report).unwrap());
            } else {
                println!("proving key:      {}", cfg.proving_key_path.display());
                println!("verification key: {}", cfg.verification_key_path.display());
                println!("fingerprint:      {}", report.verification_key_fingerprint);
                println!("constraints:      {}", report.constraints);
                println!("note: single-party setup; whoever ran it could forge proofs");
            }
        }
        Command::Keygen => {
            let address = workflow::cmd_keygen(cfg, &mut OsRng)?;
            if cli.json {
                println!(
                    "{}",
                    json!({ "address": address.to_string(), "keys": cfg.keys_path })
                );
            } else {
                println!("address: {address}");
                println!("keys:    {}", cfg.keys_path.display());
            }
        }
        Command::Plant { tag } | Command::Derive { tag, .. } => {
            let report = match &cli.command {
                Command::Derive { handoff, .. } => {
                    workflow::cmd_derive(cfg, handoff, tag, &mut OsRng)?
                }
                _ => workflow::cmd_plant(cfg, tag, &mut OsRng)?,
            };
            if cli.json {
                println!("{}", serde_json::to_string(&report).unwrap());
            } else {
                println!("w_id:       {}", report.w_id);
                println!("p_id:       {}", report.p_id);
                println!("registrant: {}", report.registrant);
                println!("tag:        {}", tag.display());
            }
        }
        Command::Handoff { tag } => {
            let s = workflow::cmd_handoff(cfg, tag)?;
            if cli.json {
                println!("{}", json!({ "handoff": s }));
            } else {
                println!("{s}");
            }
        }
        Command::Trace { id } => {
            let trace = workflow::cmd_trace(cfg, id)?;
            let verdict = if trace.verified { "VERIFIED" } else { "FAILED" };
            if cli.json {
                let chain: Vec<_> = trace
                    .chain
                    .iter()
                    .map(|r| json!({ "w_id": r.w_id.to_string(), "p_id": r.p_id.to_string(), "registrant": r.registrant.to_string() }))
                    .collect();
                println!(
                    "{}",
                    json!({ "chain": chain, "verified": trace.verified, "genesis_id": woodtrace::genesis_id().to_string() })
                );
            } else {
                println!("{:<78} {:<78} registrant", "w_id", "p_id");
                for r in &trace.chain {
                    println!(
                        "{:<78} {:<78} {}",
                        r.w_id.to_string(),
                        r.p_id.to_string(),
                        r.registrant
                    );
                }
                println!("{verdict}");
            }
            if !trace.verified {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench { trials } => {
            let report = workflow::cmd_bench(cfg, *trials, &mut OsRng)?;
            if cli.json {
                println!("{}", serde_json::to_string(&report).unwrap());
            } else {
                println!("trials:      {}", report.trials);
                println!("constraints: {}", report.constraints);
                println!(
                    "prove ms:    mean {:.1}  median {:.1}  min {:.1}  max {:.1}",
                    report.mean_ms, report.median_ms, report.min_ms, report.max_ms
                );
                println!(
                    "verified:    {}",
                    if report.all_verified {
                        "all"
                    } else {
                        "NOT ALL"
                    }
                );
            }
            if !report.all_verified {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = WorkspaceConfig {
        ledger_path: cli.ledger.clone(),
        keys_path: cli.keys.clone(),
        proving_key_path: cli.pk.clone(),
        verification_key_path: cli.vk.clone(),
        strict_parent: !cli.permissive,
    };
    if cli.verbose {
        eprintln!("config: {}", serde_json::to_string(&cfg).unwrap());
    }
    match run(&cli, &cfg) {
        Ok(code) => code,
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
