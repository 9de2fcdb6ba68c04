//! `commdim` command-line front end.
//!
//! Exit codes: 0 success / Yes / pass, 1 No / fail, 2 Unknown, 64 usage
//! error, 65 data-format error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use commdim::bounds::{classical_dim_bounds, phi_table, BoundReport, PhiRow};
use commdim::ensembles::{antidist_matrix, gate_matrix, Gate};
use commdim::factor::{a7_explicit, nmf, verify_factorization, NmfConfig};
use commdim::io::{self, FactorizationJson, MatrixJson};
use commdim::majorize::{uw_leq, uw_leq_identity, Answer, MajorizeConfig};
use commdim::matcore::{deterministic_dimension, numerical_rank, reduce};
use commdim::quantum::{gram, qubit_implementation, quantum_dim_lower_bound, verify_ensemble};
use commdim::shared::{block_factorization, min_coordinated_actions, mix};
use commdim::{CommMatrix, Error, Tolerances};

const EXIT_FAIL: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser, Debug)]
#[command(name = "commdim", version, about = "Dimension bounds for one-way communication matrices")]
struct Cli {
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,

    /// JSON file overriding the default tolerances.
    #[arg(long, global = true, value_name = "FILE")]
    tolerances: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named communication matrix.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Qubit realization of A_n.
    #[command(subcommand)]
    Quantum(QuantumCmd),
    /// Numerical rank.
    Rank(InArg),
    /// Drop zero columns and duplicate rows.
    Reduce {
        #[command(flatten)]
        input: InArg,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Bracket the classical dimension (nonnegative rank).
    Bounds(BoundsCmd),
    /// Face-count table for r+ in a range.
    Table(TableArgs),
    /// Search for C = W H with inner dimension r.
    Nmf {
        #[command(flatten)]
        input: InArg,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check the built-in explicit factorization of A_7.
    FactorCheckA7,
    /// Decide C <= D (ultraweak majorization).
    Majorize(MajorizeArgs),
    /// Shared-randomness protocols.
    #[command(subcommand)]
    Sr(SrCmd),
}

#[derive(Args, Debug)]
struct InArg {
    /// Matrix file (.csv, otherwise JSON).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args, Debug, Clone, Copy)]
struct SearchArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
}

impl SearchArgs {
    fn config(self) -> NmfConfig {
        NmfConfig { seed: self.seed, restarts: self.restarts, max_iter: self.max_iter, ..NmfConfig::default() }
    }
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    /// Antidistinguishability matrix A_n.
    Antidist {
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// NOT, XOR or AMBIG3.
    Gate {
        #[arg(long)]
        name: String,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum QuantumCmd {
    /// Check states and effects of the n-outcome qubit realization.
    Verify {
        #[arg(long)]
        n: usize,
    },
    /// Write the matrix tr(rho_a E_b).
    Gram {
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct BoundsCmd {
    #[command(subcommand)]
    table: Option<BoundsSub>,
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Also run the NMF upper-bound search.
    #[arg(long)]
    nmf: bool,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Subcommand, Debug)]
enum BoundsSub {
    Table(TableArgs),
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Inclusive range, e.g. 3..7.
    #[arg(long, value_parser = parse_range)]
    rplus: (usize, usize),
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["d", "identity"])))]
struct MajorizeArgs {
    #[arg(long, value_name = "FILE")]
    c: PathBuf,
    #[arg(long, value_name = "FILE")]
    d: Option<PathBuf>,
    /// Compare against the d-symbol identity channel.
    #[arg(long, value_name = "D")]
    identity: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum SrCmd {
    /// Matrix realized by a protocol.
    Mix {
        #[arg(long, value_name = "FILE")]
        protocol: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Block factorization and coordinated-action bound for a protocol.
    Bound {
        #[arg(long, value_name = "FILE")]
        protocol: PathBuf,
    },
    /// Fewest coordinated actions given a nonnegative-rank lower bound.
    Witness {
        #[arg(long)]
        lb: usize,
        #[arg(long)]
        d: usize,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo = lo.trim().parse().map_err(|_| format!("bad lower end in {s:?}"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper end in {s:?}"))?;
    Ok((lo, hi))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSize(_)
            | Error::UnknownName(_)
            | Error::InvalidRange { .. }
            | Error::InvalidParams(_) => EXIT_USAGE,
            Error::NmfFailed { .. } | Error::NotFound { .. } => EXIT_FAIL,
            _ => EXIT_DATA,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Failure>;

struct Ctx {
    json: bool,
    tol: Tolerances,
}

impl Ctx {
    fn emit<T: Serialize>(&self, report: &T, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(report).expect("reports serialize"));
        } else {
            print!("{}", human());
        }
    }

    fn load(&self, path: &Path) -> Result<CommMatrix, Failure> {
        io::read_comm_matrix(path, &self.tol).map_err(|e| with_path(path, e))
    }
}

fn with_path(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn fmt_matrix(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:9.6}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Writes to `out` if given, otherwise prints the matrix as JSON.
fn write_or_print(out: Option<&Path>, m: &Array2<f64>) -> Result<(), Failure> {
    match out {
        Some(path) => io::write_matrix(path, m)?,
        None => print!("{}", io::format_matrix_json(m)),
    }
    Ok(())
}

fn gen(cmd: GenCmd) -> CmdResult {
    let (matrix, out) = match cmd {
        GenCmd::Antidist { n, out } => (antidist_matrix(n)?, out),
        GenCmd::Gate { name, out } => (gate_matrix(name.parse::<Gate>()?), out),
    };
    write_or_print(out.as_deref(), matrix.as_array())?;
    Ok(0)
}

fn quantum(ctx: &Ctx, cmd: QuantumCmd) -> CmdResult {
    match cmd {
        QuantumCmd::Verify { n } => {
            let report = verify_ensemble(&qubit_implementation(n)?, &ctx.tol);
            // always JSON: the report is the point of this command
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            Ok(if report.pass { 0 } else { EXIT_FAIL })
        }
        QuantumCmd::Gram { n, out } => {
            let g = gram(&qubit_implementation(n)?, &ctx.tol)?;
            write_or_print(out.as_deref(), g.as_array())?;
            Ok(0)
        }
    }
}

fn rank(ctx: &Ctx, input: &InArg) -> CmdResult {
    let c = ctx.load(&input.input)?;
    let rank = numerical_rank(&c, &ctx.tol);
    let report = json!({
        "rows": c.rows(),
        "cols": c.cols(),
        "rank": rank,
        "quantum_dim_lb": quantum_dim_lower_bound(&c, &ctx.tol),
    });
    ctx.emit(&report, || format!("{}x{} matrix, rank {rank}\n", c.rows(), c.cols()));
    Ok(0)
}

fn reduce_cmd(ctx: &Ctx, input: &InArg, out: Option<&Path>) -> CmdResult {
    let c = ctx.load(&input.input)?;
    let red = reduce(&c, &ctx.tol);
    let dim_d = deterministic_dimension(&c, &ctx.tol).ok();
    if let Some(path) = out {
        io::write_matrix(path, red.reduced.as_array())?;
    }
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let report = json!({
        "kept_rows": one_based(&red.kept_rows),
        "kept_cols": one_based(&red.kept_cols),
        "reduced": MatrixJson::from(red.reduced.as_array()),
        "deterministic_dimension": dim_d,
    });
    ctx.emit(&report, || {
        let mut s = format!(
            "{}x{} -> {}x{}\nrows kept: {:?}\ncols kept: {:?}\n",
            c.rows(),
            c.cols(),
            red.reduced.rows(),
            red.reduced.cols(),
            one_based(&red.kept_rows),
            one_based(&red.kept_cols)
        );
        if let Some(d) = dim_d {
            s.push_str(&format!("deterministic dimension: {d}\n"));
        }
        s.push_str(&fmt_matrix(red.reduced.as_array()));
        s
    });
    Ok(0)
}

fn table(ctx: &Ctx, args: &TableArgs) -> CmdResult {
    let (lo, hi) = args.rplus;
    let rows: Vec<PhiRow> = phi_table(lo, hi)?;
    ctx.emit(&rows, || {
        let mut s = format!("{:>4} {:>12} {:>12}\n", "r+", "phi'", "phi_3");
        for r in &rows {
            s.push_str(&format!("{:>4} {:>12} {:>12}\n", r.r_plus, r.phi_prime, r.phi_3));
        }
        s
    });
    Ok(0)
}

fn bounds(ctx: &Ctx, cmd: BoundsCmd) -> CmdResult {
    if let Some(BoundsSub::Table(args)) = cmd.table {
        return table(ctx, &args);
    }
    let Some(input) = cmd.input else {
        return Err(Failure { code: EXIT_USAGE, message: "bounds needs --in FILE or the table subcommand".into() });
    };
    let c = ctx.load(&input)?;
    let cfg = cmd.search.config();
    let report: BoundReport = classical_dim_bounds(&c, &ctx.tol, cmd.nmf.then_some(&cfg))?;
    ctx.emit(&report, || {
        let best = report.best_lower();
        let mut s = format!("rank {}\n", report.rank);
        if let Some(rn) = report.rnrank {
            s.push_str(&format!("restricted nonnegative rank {rn}\n"));
        }
        for b in &report.lower_bounds {
            s.push_str(&format!("  lower {:>4}  {:?}\n", b.value, b.source));
        }
        for b in &report.upper_bounds {
            s.push_str(&format!("  upper {:>4}  {:?}\n", b.value, b.source));
        }
        s.push_str(&format!("{} <= nrank <= {}  (lower from {:?})\n", report.lb, report.ub, best.source));
        if let Some(seed) = report.nmf_seed {
            s.push_str(&format!("seed {seed}\n"));
        }
        s
    });
    Ok(0)
}

fn nmf_cmd(ctx: &Ctx, input: &InArg, r: usize, search: SearchArgs, out: Option<&Path>) -> CmdResult {
    let c = ctx.load(&input.input)?;
    let cfg = search.config();
    match nmf(&c, r, &cfg) {
        Ok(f) => {
            let file = FactorizationJson::from(&f);
            if let Some(path) = out {
                let mut text = serde_json::to_string_pretty(&file).expect("reports serialize");
                text.push('\n');
                std::fs::write(path, text).map_err(Error::from)?;
            }
            let report = json!({
                "pass": true,
                "inner_dim": r,
                "residual": f.residual,
                "seed": f.seed,
                "restarts": f.restarts_used,
                "best_restart": f.best_restart,
                "iterations": f.iterations,
            });
            ctx.emit(&report, || {
                let mut s = format!(
                    "found r = {r}: residual {:.3e} (restart {}, {} iterations, seed {})\n",
                    f.residual, f.best_restart, f.iterations, f.seed
                );
                if out.is_none() {
                    s.push_str("W =\n");
                    s.push_str(&fmt_matrix(&f.w));
                    s.push_str("H =\n");
                    s.push_str(&fmt_matrix(&f.h));
                }
                s
            });
            Ok(0)
        }
        Err(Error::NmfFailed { best_residual }) => {
            let report = json!({
                "pass": false,
                "inner_dim": r,
                "best_residual": best_residual,
                "seed": cfg.seed,
                "restarts": cfg.restarts,
            });
            ctx.emit(&report, || {
                format!("no factorization at r = {r}: best residual {best_residual:.3e} (seed {})\n", cfg.seed)
            });
            Ok(EXIT_FAIL)
        }
        Err(e) => Err(e.into()),
    }
}

fn factor_check_a7(ctx: &Ctx) -> CmdResult {
    let a7 = antidist_matrix(7)?;
    let (w, h) = a7_explicit();
    let report = verify_factorization(a7.view(), w.view(), h.view(), ctx.tol.recon_tol)?;
    ctx.emit(&report, || {
        format!(
            "A_7 = W H with inner dimension 6: residual {:.3e} (tolerance {:.1e}), {} negative entries, {}\n",
            report.residual,
            report.tolerance,
            report.negative_entries.len(),
            if report.pass { "pass" } else { "FAIL" }
        )
    });
    Ok(if report.pass { 0 } else { EXIT_FAIL })
}

fn majorize(ctx: &Ctx, args: &MajorizeArgs) -> CmdResult {
    let c = ctx.load(&args.c)?;
    let answer = match (&args.d, args.identity) {
        (Some(d), _) => {
            let d = ctx.load(d)?;
            let cfg = MajorizeConfig { seed: args.seed, ..MajorizeConfig::default() };
            uw_leq(&c, &d, &ctx.tol, &cfg)
        }
        (None, Some(k)) => {
            let cfg = NmfConfig { seed: args.seed, ..NmfConfig::default() };
            uw_leq_identity(&c, k, &ctx.tol, &cfg)?
        }
        (None, None) => unreachable!("clap requires --d or --identity"),
    };
    let (label, code, residual) = match &answer {
        Answer::Yes { witness } => ("YES", 0, Some(witness.residual)),
        Answer::No { .. } => ("NO", EXIT_FAIL, None),
        Answer::Unknown { best_residual } => ("UNKNOWN", EXIT_UNKNOWN, *best_residual),
    };
    let mut report = json!({ "answer": label, "residual": residual, "seed": args.seed });
    match &answer {
        Answer::Yes { witness } => {
            report["witness"] = json!({ "L": MatrixJson::from(&witness.l), "R": MatrixJson::from(&witness.r) });
        }
        Answer::No { reason } => report["reason"] = serde_json::to_value(reason).expect("serializes"),
        Answer::Unknown { .. } => {}
    }
    ctx.emit(&report, || {
        let mut s = label.to_string();
        if let Some(r) = residual {
            s.push_str(&format!("  residual {r:.3e}"));
        }
        if let Answer::No { reason } = &answer {
            s.push_str(&format!(
                "  nonnegative rank >= {} ({:?}) exceeds d = {}",
                reason.lower_bound, reason.source, reason.d
            ));
        }
        s.push_str(&format!("  (seed {})\n", args.seed));
        if let Answer::Yes { witness } = &answer {
            s.push_str("L =\n");
            s.push_str(&fmt_matrix(&witness.l));
            s.push_str("R =\n");
            s.push_str(&fmt_matrix(&witness.r));
        }
        s
    });
    Ok(code)
}

fn sr(ctx: &Ctx, cmd: SrCmd) -> CmdResult {
    match cmd {
        SrCmd::Mix { protocol, out } => {
            let p = io::read_protocol(&protocol, &ctx.tol).map_err(|e| with_path(&protocol, e))?;
            let m = mix(&p, &ctx.tol)?;
            write_or_print(out.as_deref(), m.as_array())?;
            Ok(0)
        }
        SrCmd::Bound { protocol } => {
            let p = io::read_protocol(&protocol, &ctx.tol).map_err(|e| with_path(&protocol, e))?;
            let m = mix(&p, &ctx.tol)?;
            let bf = block_factorization(&p);
            let block_residual = bf
                .product()
                .iter()
                .zip(m.as_array().iter())
                .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
            let bounds = classical_dim_bounds(&m, &ctx.tol, None)?;
            let min_k = min_coordinated_actions(bounds.lb, p.d())?;
            let consistent = p.k() >= min_k && block_residual <= ctx.tol.recon_tol;
            let report = json!({
                "d": p.d(),
                "k": p.k(),
                "inner_dim": bf.inner_dim(),
                "block_residual": block_residual,
                "nrank_lb": bounds.lb,
                "min_k": min_k,
                "consistent": consistent,
            });
            ctx.emit(&report, || {
                format!(
                    "d = {}, k = {}: block factorization has inner dimension {} (residual {:.1e})\n\
                     nonnegative rank >= {}, so at least {} coordinated actions; protocol uses {}\n",
                    p.d(),
                    p.k(),
                    bf.inner_dim(),
                    block_residual,
                    bounds.lb,
                    min_k,
                    p.k()
                )
            });
            Ok(if consistent { 0 } else { EXIT_FAIL })
        }
        SrCmd::Witness { lb, d } => {
            let k = min_coordinated_actions(lb, d)?;
            let report = json!({ "nrank_lb": lb, "d": d, "min_k": k });
            ctx.emit(&report, || format!("nonnegative rank >= {lb} with d = {d} needs k >= {k}\n"));
            Ok(0)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let tol = match &cli.tolerances {
        Some(path) => io::read_tolerances(path)?,
        None => Tolerances::default(),
    };
    let ctx = Ctx { json: cli.json, tol };
    match cli.command {
        Command::Gen(cmd) => gen(cmd),
        Command::Quantum(cmd) => quantum(&ctx, cmd),
        Command::Rank(input) => rank(&ctx, &input),
        Command::Reduce { input, out } => reduce_cmd(&ctx, &input, out.as_deref()),
        Command::Bounds(cmd) => bounds(&ctx, cmd),
        Command::Table(args) => table(&ctx, &args),
        Command::Nmf { input, r, search, out } => nmf_cmd(&ctx, &input, r, search, out.as_deref()),
        Command::FactorCheckA7 => factor_check_a7(&ctx),
        Command::Majorize(args) => majorize(&ctx, &args),
        Command::Sr(cmd) => sr(&ctx, cmd),
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("commdim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..7"), Ok((3, 7)));
        assert_eq!(parse_range("8..=8"), Ok((8, 8)));
        assert!(parse_range("3-7").is_err());
        assert!(parse_range("a..7").is_err());
    }
}
