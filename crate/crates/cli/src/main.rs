use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psdlab::rational::from_wire;
use psdlab::MonomialOrder;
use psdlab_cli::{
    cmd_basis, cmd_corpus, cmd_filtration, cmd_gram, cmd_kernel, cmd_report, cmd_sample, cmd_test, cmd_verify,
    read_form, CmdError, CmdResult, Mode, RunConfig, EXIT_DATA, EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "psdlab", version, about = "Gram-matrix cones between sums of squares and nonnegative forms")]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, global = true, env = "PSDLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shape {
    #[arg(short = 'n')]
    n: usize,
    #[arg(short = 'd')]
    d: usize,
    /// Monomial order: lex or example34.
    #[arg(long, default_value = "lex")]
    order: String,
}

#[derive(Subcommand)]
enum Command {
    /// List the ordered monomial basis.
    Basis(Shape),
    /// Describe the chain of varieties and the separation pattern.
    Filtration(Shape),
    /// Print the canonical Gram matrix of a form.
    Gram {
        form: PathBuf,
        #[arg(long, default_value = "lex")]
        order: String,
    },
    /// List the generators of the Gram kernel.
    Kernel(Shape),
    /// Run a membership test on a form file.
    Test {
        form: PathBuf,
        /// sos, psd, ci, interior or boundary.
        #[arg(long, default_value = "sos")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        lift: u32,
        #[arg(long, default_value = "lex")]
        order: String,
        /// Margin for the interior test, as a rational such as 1/100.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check a certificate against a form.
    Verify { certificate: PathBuf, form: PathBuf },
    /// Summarize the cone chain for forms of degree 2d in n+1 variables.
    Report(Shape),
    /// Print a named form, or list the names.
    Corpus { name: Option<String> },
    /// Minimize a form on the unit sphere.
    Sample {
        form: PathBuf,
        #[arg(long, default_value_t = 16)]
        starts: usize,
    },
}

fn order(name: &str) -> Result<MonomialOrder, CmdError> {
    Ok(name.parse::<MonomialOrder>()?)
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Basis(s) => cmd_basis(s.n, s.d, order(&s.order)?),
        Command::Filtration(s) => cmd_filtration(s.n, s.d, order(&s.order)?),
        Command::Gram { form, order: o } => cmd_gram(&read_form(form)?, order(o)?),
        Command::Kernel(s) => cmd_kernel(s.n, s.d, order(&s.order)?),
        Command::Test { form, mode, level, lift, order: o, eps, max_iter, tol } => {
            let mode: Mode = mode.parse().map_err(|message| CmdError { exit: EXIT_USAGE, message })?;
            let eps = eps
                .as_deref()
                .map(from_wire)
                .transpose()
                .map_err(|e| CmdError { exit: EXIT_USAGE, message: e.to_string() })?;
            let cfg = RunConfig { seed: cli.seed, order: order(o)?, level: *level, lift: *lift, max_iter: *max_iter, tol: *tol };
            cmd_test(&read_form(form)?, mode, eps.as_ref(), &cfg)
        }
        Command::Verify { certificate, form } => cmd_verify(certificate, &read_form(form)?),
        Command::Report(s) => cmd_report(s.n, s.d, order(&s.order)?),
        Command::Corpus { name } => cmd_corpus(name.as_deref()),
        Command::Sample { form, starts } => cmd_sample(&read_form(form)?, cli.seed, *starts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            let rendered = serde_json::to_string_pretty(&out.json).expect("JSON values serialize");
            if let Some(path) = &cli.json_out {
                if let Err(e) = std::fs::write(path, format!("{rendered}\n")) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_DATA);
                }
            }
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let mut stdout = std::io::stdout().lock();
            let _ = match &out.text {
                Some(text) => write!(stdout, "{text}"),
                None => writeln!(stdout, "{rendered}"),
            };
            ExitCode::from(out.exit)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}
