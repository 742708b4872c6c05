use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nehari_core::io::{
    emit_instance, error_exit_code, exit_code, generate_instance, read_instance, run_check,
    run_oracle, run_solve, write_atomic, CheckReport, RunReport, SolveFlags,
};
use nehari_core::{NehariError, SchurOutcome};

#[derive(Parser)]
#[command(
    name = "nehari",
    version,
    about = "Minimal matrix deviation bounds for block-Hankel data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute rho^2_min for an instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// CSV iteration trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write every iterate next to the trace.
        #[arg(long, short)]
        verbose: bool,
        #[arg(long)]
        json: bool,
    },
    /// Decide feasibility of the instance's rho.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a seeded random instance.
    Generate {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        support: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        dominance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Largest eigenvalue of Gamma* Gamma (scalar instances only).
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
}

fn fail(e: &NehariError) -> i32 {
    eprintln!("error: {e}");
    error_exit_code(e)
}

fn fmt_matrix(m: &[Vec<[f64; 2]>]) -> String {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|[re, im]| {
                    if *im == 0.0 {
                        format!("{re:.12}")
                    } else {
                        format!("{re:.12}{im:+.12}i")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
        })
        .collect::<Vec<_>>()
        .join("\n  ")
}

fn print_solve(report: &RunReport) {
    println!("status: {:?}", report.status);
    println!("theorem path: {:?}", report.theorem_path);
    println!("iterations: {}", report.iterations);
    if let Some(m) = &report.rho_sq_min {
        println!("rho_sq_min:\n  {}", fmt_matrix(m));
    }
    if let Some(m) = &report.rho_min {
        println!("rho_min:\n  {}", fmt_matrix(m));
    }
    if let Some(c) = &report.certificate {
        println!("fixed-point residual: {:.3e}", c.fixed_point_residual);
        println!("feasibility margin: {:.3e}", c.feasibility_margin);
        println!("strongly positive: {}", c.strongly_positive);
    }
    if let Some(msg) = &report.message {
        println!("{msg}");
    }
    println!("wall time: {:.3} ms", report.wall_time_ms);
}

fn print_check(report: &CheckReport) {
    println!(
        "direct: {} (margin {:.6e}{})",
        if report.direct.feasible {
            "feasible"
        } else {
            "infeasible"
        },
        report.direct.margin,
        if report.direct.boundary {
            ", boundary"
        } else {
            ""
        }
    );
    match &report.schur {
        SchurOutcome::Verdict(v) => println!(
            "schur: {} (margin {:.6e})",
            if v.feasible { "feasible" } else { "infeasible" },
            v.margin
        ),
        SchurOutcome::NotApplicable { min_eig } => {
            println!("schur: not applicable (R^2 - A22 min eigenvalue {min_eig:.6e})")
        }
    }
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve {
            instance,
            delta,
            tol,
            max_iter,
            trace,
            verbose,
            json,
        } => {
            let inst = match read_instance(&instance) {
                Ok(i) => i,
                Err(e) => return fail(&e),
            };
            let flags = SolveFlags {
                delta,
                tol,
                max_iter,
                trace,
                verbose,
                block_order: None,
            };
            match run_solve(&inst, &flags) {
                Ok(report) => {
                    if json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&report).expect("report serializes")
                        );
                    } else {
                        print_solve(&report);
                    }
                    if let Some(msg) = &report.message {
                        eprintln!("{msg}");
                    }
                    report.exit_code()
                }
                Err(e) => fail(&e),
            }
        }
        Command::Check { instance, json } => {
            let report =
                read_instance(&instance).and_then(|i| run_check(&i, &SolveFlags::default()));
            match report {
                Ok(r) => {
                    if json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&r).expect("report serializes")
                        );
                    } else {
                        print_check(&r);
                    }
                    r.exit_code()
                }
                Err(e) => fail(&e),
            }
        }
        Command::Generate {
            dim,
            support,
            seed,
            dominance,
            out,
        } => {
            let written = generate_instance(dim, support, seed, dominance)
                .and_then(|inst| write_atomic(&out, emit_instance(&inst).as_bytes()));
            match written {
                Ok(()) => {
                    println!(
                        "wrote {} (dim {dim}, support {support}, seed {seed}, dominance {dominance})",
                        out.display()
                    );
                    exit_code::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Oracle { instance } => match read_instance(&instance).and_then(|i| run_oracle(&i))
        {
            Ok(v) => {
                println!("{v:.17e}");
                exit_code::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}
