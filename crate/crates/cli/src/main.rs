//! Command line front end: builds systems and probability models from JSON
//! descriptors and prints signature data as text tables or JSON.
//!
//! Exit codes: 0 success, 2 input error, 3 a computation violated an internal
//! invariant. Output is deterministic given the inputs and the seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::json;
use sigkit::io::{LifetimeModelFile, PermutationModelFile, StateModelFile, SystemDescriptor};
use sigkit::subsets::{binomial_lcm, ids_from_mask, mask_from_ids};
use sigkit::{
    boland_signature, check_condition_exchangeable_pair, check_state_exchangeability,
    decompose_joint_reliability, empirical_joint_signature, joint_reliability_direct,
    joint_structure_signature, joint_structure_tail, joint_tail, multi_tail, q0_multi,
    signature_matrix_from_tail, structure_tail, ComponentStateModel, ConditionWitness,
    ExactSignatureMatrix, ExactTailMatrix, PermutationModel, Rational, StructureFunction,
};

#[derive(Parser)]
#[command(
    name = "sigkit",
    version,
    about = "Exact and Monte Carlo signature computations for systems sharing components"
)]
struct Cli {
    /// Output format for results on stdout.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Worker thread count; the SIGKIT_THREADS variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Signature and survival tail of one system under exchangeable lifetimes.
    Signature {
        /// System descriptor (JSON).
        system: PathBuf,
    },
    /// Joint tail and signature matrices of two systems on one component pool.
    Joint {
        system1: PathBuf,
        system2: PathBuf,
        /// Lifetime ordering model (JSON); exchangeable when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Joint tail array of several systems on one component pool.
    Multi {
        /// System descriptors (JSON), all on the same pool.
        #[arg(required = true)]
        systems: Vec<PathBuf>,
        /// Lifetime ordering model (JSON); exchangeable when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Probability under exchangeable lifetimes that each given subset is
    /// exactly the set of longest lived components of its size.
    Q0 {
        /// Component count.
        n: usize,
        /// Subsets as comma separated component ids; "-" is the empty set.
        #[arg(required = true)]
        sets: Vec<String>,
    },
    /// Monte Carlo estimate of the joint signature of two systems.
    Simulate {
        system1: PathBuf,
        system2: PathBuf,
        /// Lifetime model (JSON).
        model: PathBuf,
        /// Sample count.
        #[arg(long, visible_alias = "n", default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent sample partitions; results never depend on threads.
        #[arg(long, default_value_t = 64)]
        partitions: u32,
    },
    /// Compare direct joint reliability with its signature decomposition on a
    /// time grid.
    DecomposeCheck {
        system1: PathBuf,
        system2: PathBuf,
        /// Component state model (JSON).
        state: PathBuf,
        /// Time grid as lo:hi:count, applied to both axes.
        #[arg(long, default_value = "0:2:5")]
        grid: String,
    },
    /// Check permutation invariance of the component state distribution at a
    /// pair of times, and state exchangeability at the earlier one.
    CheckExchangeability {
        /// Component state model (JSON).
        state: PathBuf,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<sigkit::Error> for CliError {
    fn from(err: sigkit::Error) -> Self {
        let code = match err {
            sigkit::Error::InvariantViolation(_) => 3,
            _ => 2,
        };
        CliError {
            message: err.to_string(),
            code,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let output = match &cli.command {
        Command::Signature { system } => cmd_signature(system, cli.format)?,
        Command::Joint {
            system1,
            system2,
            model,
        } => cmd_joint(system1, system2, model.as_deref(), cli.format)?,
        Command::Multi { systems, model } => cmd_multi(systems, model.as_deref(), cli.format)?,
        Command::Q0 { n, sets } => cmd_q0(*n, sets, cli.format)?,
        Command::Simulate {
            system1,
            system2,
            model,
            samples,
            seed,
            partitions,
        } => cmd_simulate(system1, system2, model, *samples, *seed, *partitions, cli.format)?,
        Command::DecomposeCheck {
            system1,
            system2,
            state,
            grid,
        } => cmd_decompose_check(system1, system2, state, grid, cli.format)?,
        Command::CheckExchangeability { state, t1, t2 } => {
            cmd_check_exchangeability(state, *t1, *t2, cli.format)?
        }
    };
    println!("{}", output.trim_end());
    Ok(())
}

/// SIGKIT_THREADS beats --threads; without either, rayon picks the machine
/// parallelism on first use.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let picked = match std::env::var("SIGKIT_THREADS") {
        Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
            CliError::input(format!(
                "SIGKIT_THREADS must be a positive integer, got {raw:?}"
            ))
        })?),
        Err(_) => flag,
    };
    if let Some(count) = picked {
        if count == 0 {
            return Err(CliError::input("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()
            .map_err(|err| CliError::input(format!("thread pool: {err}")))?;
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::input(format!("{}: {err}", path.display())))?;
    serde_json::from_str(&text).map_err(|err| CliError::input(format!("{}: {err}", path.display())))
}

fn load_system(path: &Path) -> Result<StructureFunction, CliError> {
    let descriptor: SystemDescriptor = read_json(path)?;
    descriptor
        .build()
        .map_err(|err| CliError::input(format!("{}: {err}", path.display())))
}

fn load_permutation_model(path: &Path) -> Result<PermutationModel<Rational>, CliError> {
    let file: PermutationModelFile = read_json(path)?;
    file.build()
        .map_err(|err| CliError::input(format!("{}: {err}", path.display())))
}

fn load_state_model(path: &Path) -> Result<ComponentStateModel, CliError> {
    let file: StateModelFile = read_json(path)?;
    file.build()
        .map_err(|err| CliError::input(format!("{}: {err}", path.display())))
}

/// Exact values as text: integers print bare; everything else is scaled to
/// one common denominator so a whole lane reads against a single scale. The
/// denominator always absorbs the subset-count denominators for n components.
fn rational_cells(values: &[Rational], n: usize) -> Vec<String> {
    if values.iter().all(Rational::is_integer) {
        return values.iter().map(ToString::to_string).collect();
    }
    let mut den = binomial_lcm(n);
    for v in values {
        den = den.lcm(v.denom());
    }
    values
        .iter()
        .map(|v| {
            if v.is_integer() {
                v.to_string()
            } else {
                let scaled = v.numer() * (&den / v.denom());
                format!("{scaled}/{den}")
            }
        })
        .collect()
}

/// Canonical reduced strings, the machine form used in JSON output.
fn reduced_strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(ToString::to_string).collect()
}

fn matrix_cells(rows: &[Vec<Rational>], n: usize) -> Vec<Vec<String>> {
    let flat: Vec<Rational> = rows.iter().flatten().cloned().collect();
    let cells = rational_cells(&flat, n);
    let width = rows.first().map(Vec::len).unwrap_or(0);
    cells.chunks(width).map(<[String]>::to_vec).collect()
}

fn aligned_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|row| row.get(j))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, cell)| format!("{cell:>width$}", width = widths[j]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn tail_rows(tail: &ExactTailMatrix) -> Vec<Vec<Rational>> {
    let n = tail.n();
    (0..=n)
        .map(|k| (0..=n).map(|l| tail.prob(k, l).clone()).collect())
        .collect()
}

fn sig_rows(sig: &ExactSignatureMatrix) -> Vec<Vec<Rational>> {
    let n = sig.n();
    (1..=n)
        .map(|k| (1..=n).map(|l| sig.prob(k, l).clone()).collect())
        .collect()
}

fn cmd_signature(path: &Path, format: Format) -> Result<String, CliError> {
    let phi = load_system(path)?;
    let n = phi.n();
    let sig = boland_signature::<Rational>(&phi);
    let tail = structure_tail::<Rational>(&phi);
    Ok(match format {
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "n: {n}").unwrap();
            writeln!(out, "signature: {}", rational_cells(sig.values(), n).join(" ")).unwrap();
            writeln!(out, "tail: {}", rational_cells(tail.values(), n).join(" ")).unwrap();
            out
        }
        Format::Json => json!({
            "n": n,
            "signature": reduced_strings(sig.values()),
            "tail": reduced_strings(tail.values()),
        })
        .to_string(),
    })
}

fn cmd_joint(
    path1: &Path,
    path2: &Path,
    model: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let phi1 = load_system(path1)?;
    let phi2 = load_system(path2)?;
    let tail = match model {
        None => joint_structure_tail::<Rational>(&phi1, &phi2)?,
        Some(path) => {
            let model = load_permutation_model(path)?;
            joint_tail(&phi1, &phi2, &model.bivariate_quality())?
        }
    };
    let sig = signature_matrix_from_tail(&tail)?;
    let n = phi1.n();
    Ok(match format {
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "n: {n}").unwrap();
            writeln!(out, "joint tail Pr(K1 > k, K2 > l), k,l = 0..{n}:").unwrap();
            out.push_str(&aligned_rows(&matrix_cells(&tail_rows(&tail), n)));
            writeln!(out, "joint signature Pr(K1 = k, K2 = l), k,l = 1..{n}:").unwrap();
            out.push_str(&aligned_rows(&matrix_cells(&sig_rows(&sig), n)));
            out
        }
        Format::Json => json!({
            "n": n,
            "tail": tail_rows(&tail).iter().map(|row| reduced_strings(row)).collect::<Vec<_>>(),
            "signature": sig_rows(&sig).iter().map(|row| reduced_strings(row)).collect::<Vec<_>>(),
        })
        .to_string(),
    })
}

fn cmd_multi(
    paths: &[PathBuf],
    model: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let systems: Vec<StructureFunction> = paths
        .iter()
        .map(|p| load_system(p))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&StructureFunction> = systems.iter().collect();
    let arr = match model {
        None => multi_tail::<Rational>(&refs, None)?,
        Some(path) => multi_tail(&refs, Some(&load_permutation_model(path)?))?,
    };
    let (n, m) = (arr.n(), arr.m());
    let side = n + 1;
    // row-major coordinates, last axis fastest, matching the array layout
    let coords: Vec<Vec<usize>> = (0..arr.values().len())
        .map(|idx| {
            let mut rest = idx;
            let mut ks = vec![0usize; m];
            for axis in (0..m).rev() {
                ks[axis] = rest % side;
                rest /= side;
            }
            ks
        })
        .collect();
    Ok(match format {
        Format::Text => {
            let cells = rational_cells(arr.values(), n);
            let mut out = String::new();
            writeln!(out, "n: {n}, systems: {m}").unwrap();
            writeln!(out, "Pr(K1 > k1, ..., Km > km) by (k1, ..., km):").unwrap();
            for (ks, cell) in coords.iter().zip(&cells) {
                let key = ks
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ");
                writeln!(out, "({key}): {cell}").unwrap();
            }
            out
        }
        Format::Json => {
            let entries: Vec<serde_json::Value> = coords
                .iter()
                .zip(arr.values())
                .map(|(ks, value)| json!({ "k": ks, "value": value.to_string() }))
                .collect();
            json!({ "n": n, "m": m, "entries": entries }).to_string()
        }
    })
}

fn parse_set(token: &str, n: usize) -> Result<u32, CliError> {
    let trimmed = token.trim();
    if trimmed == "-" {
        return Ok(0);
    }
    let ids = trimmed
        .split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| {
                CliError::input(format!(
                    "bad subset {token:?}: expected comma separated ids in 1..={n}"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mask_from_ids(&ids, n)?)
}

fn cmd_q0(n: usize, sets: &[String], format: Format) -> Result<String, CliError> {
    let masks = sets
        .iter()
        .map(|token| parse_set(token, n))
        .collect::<Result<Vec<_>, _>>()?;
    let value = q0_multi(n, &masks)?;
    Ok(match format {
        Format::Text => value.to_string(),
        Format::Json => json!({
            "n": n,
            "sets": masks.iter().map(|&mask| ids_from_mask(mask)).collect::<Vec<_>>(),
            "value": value.to_string(),
        })
        .to_string(),
    })
}

fn cmd_simulate(
    path1: &Path,
    path2: &Path,
    model_path: &Path,
    samples: usize,
    seed: u64,
    partitions: u32,
    format: Format,
) -> Result<String, CliError> {
    let phi1 = load_system(path1)?;
    let phi2 = load_system(path2)?;
    let file: LifetimeModelFile = read_json(model_path)?;
    let model = file
        .build()
        .map_err(|err| CliError::input(format!("{}: {err}", model_path.display())))?;
    let (sig, report) = empirical_joint_signature(&model, &phi1, &phi2, samples, seed, partitions)?;
    let n = phi1.n();
    let sig_rows: Vec<Vec<f64>> = (1..=n)
        .map(|k| (1..=n).map(|l| *sig.prob(k, l)).collect())
        .collect();
    let se_rows: Vec<Vec<f64>> = (1..=n)
        .map(|k| (1..=n).map(|l| report.standard_error(k, l)).collect())
        .collect();
    let count_rows: Vec<Vec<u64>> = (1..=n)
        .map(|k| (1..=n).map(|l| report.count(k, l)).collect())
        .collect();
    Ok(match format {
        Format::Text => {
            let display = |rows: &[Vec<f64>]| {
                aligned_rows(
                    &rows
                        .iter()
                        .map(|row| row.iter().map(ToString::to_string).collect())
                        .collect::<Vec<Vec<String>>>(),
                )
            };
            let mut out = String::new();
            writeln!(
                out,
                "n: {n}, samples: {samples}, seed: {seed}, partitions: {partitions}"
            )
            .unwrap();
            writeln!(out, "empirical joint signature Pr(K1 = k, K2 = l), k,l = 1..{n}:").unwrap();
            out.push_str(&display(&sig_rows));
            writeln!(out, "standard errors:").unwrap();
            out.push_str(&display(&se_rows));
            writeln!(out, "counts:").unwrap();
            out.push_str(&aligned_rows(
                &count_rows
                    .iter()
                    .map(|row| row.iter().map(ToString::to_string).collect())
                    .collect::<Vec<Vec<String>>>(),
            ));
            out
        }
        Format::Json => json!({
            "n": n,
            "samples": samples,
            "seed": seed,
            "partitions": partitions,
            "signature": sig_rows,
            "standard_errors": se_rows,
            "counts": count_rows,
        })
        .to_string(),
    })
}

fn parse_grid(raw: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::input(format!(
            "grid must be lo:hi:count with 0 <= lo <= hi finite and count >= 1, got {raw:?}"
        ))
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi < lo || count == 0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

fn cmd_decompose_check(
    path1: &Path,
    path2: &Path,
    state_path: &Path,
    grid: &str,
    format: Format,
) -> Result<String, CliError> {
    let phi1 = load_system(path1)?;
    let phi2 = load_system(path2)?;
    let state = load_state_model(state_path)?;
    let points = parse_grid(grid)?;
    let sig = joint_structure_signature::<Rational>(&phi1, &phi2)?.to_f64();
    let cells: Vec<(f64, f64)> = points
        .iter()
        .flat_map(|&t1| points.iter().map(move |&t2| (t1, t2)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(t1, t2)| {
            let direct = joint_reliability_direct(&phi1, &phi2, &state, t1, t2)?;
            let decomposed = decompose_joint_reliability(&sig, &state, t1, t2)?;
            Ok((t1, t2, direct, decomposed, (direct - decomposed).abs()))
        })
        .collect::<sigkit::Result<Vec<_>>>()?;
    let max_residual = rows.iter().map(|row| row.4).fold(0.0, f64::max);
    let verdict = if max_residual <= 1e-10 {
        "holds"
    } else if max_residual > 1e-6 {
        "fails"
    } else {
        "inconclusive"
    };
    Ok(match format {
        Format::Text => {
            let mut table = vec![vec![
                "t1".to_string(),
                "t2".to_string(),
                "direct".to_string(),
                "decomposed".to_string(),
                "residual".to_string(),
            ]];
            for (t1, t2, direct, decomposed, residual) in &rows {
                table.push(vec![
                    t1.to_string(),
                    t2.to_string(),
                    direct.to_string(),
                    decomposed.to_string(),
                    format!("{residual:.3e}"),
                ]);
            }
            let mut out = aligned_rows(&table);
            writeln!(
                out,
                "decomposition {verdict} (max residual {max_residual:.3e})"
            )
            .unwrap();
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|(t1, t2, direct, decomposed, residual)| {
                    json!({
                        "t1": t1,
                        "t2": t2,
                        "direct": direct,
                        "decomposed": decomposed,
                        "residual": residual,
                    })
                })
                .collect();
            json!({
                "rows": rows,
                "max_residual": max_residual,
                "verdict": verdict,
            })
            .to_string()
        }
    })
}

/// Component states as a string, component 1 first.
fn state_bits(mask: u32, n: usize) -> String {
    (0..n)
        .map(|i| if mask >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn witness_json(witness: &ConditionWitness, n: usize) -> serde_json::Value {
    json!({
        "x": state_bits(witness.base.0, n),
        "y": state_bits(witness.base.1, n),
        "image_x": state_bits(witness.image.0, n),
        "image_y": state_bits(witness.image.1, n),
        "sigma": witness.sigma.iter().map(|&j| j + 1).collect::<Vec<_>>(),
        "base_prob": witness.base_prob,
        "image_prob": witness.image_prob,
        "band": witness.band,
    })
}

fn witness_text(witness: &ConditionWitness, n: usize) -> String {
    let sigma: Vec<usize> = witness.sigma.iter().map(|&j| j + 1).collect();
    format!(
        "  witness: x={} y={} vs image x={} y={} under sigma {:?}; Pr {} vs {}, band {:.3e}",
        state_bits(witness.base.0, n),
        state_bits(witness.base.1, n),
        state_bits(witness.image.0, n),
        state_bits(witness.image.1, n),
        sigma,
        witness.base_prob,
        witness.image_prob,
        witness.band,
    )
}

fn cmd_check_exchangeability(
    state_path: &Path,
    t1: f64,
    t2: f64,
    format: Format,
) -> Result<String, CliError> {
    let state = load_state_model(state_path)?;
    let n = state.n();
    let pair = check_condition_exchangeable_pair(&state, t1, t2)?;
    let earlier = t1.min(t2);
    let single = check_state_exchangeability(&state, earlier)?;
    Ok(match format {
        Format::Text => {
            let mut out = String::new();
            writeln!(
                out,
                "pair condition at ({t1}, {t2}): {} (pairs checked: {})",
                if pair.holds { "holds" } else { "fails" },
                pair.pairs_checked
            )
            .unwrap();
            if let Some(witness) = &pair.witness {
                writeln!(out, "{}", witness_text(witness, n)).unwrap();
            }
            writeln!(
                out,
                "state exchangeability at {earlier}: {}",
                if single.holds { "holds" } else { "fails" }
            )
            .unwrap();
            if let Some(witness) = &single.witness {
                writeln!(out, "{}", witness_text(witness, n)).unwrap();
            }
            out
        }
        Format::Json => json!({
            "t1": t1,
            "t2": t2,
            "pair_condition": {
                "holds": pair.holds,
                "pairs_checked": pair.pairs_checked,
                "witness": pair.witness.as_ref().map(|w| witness_json(w, n)),
            },
            "state_exchangeability": {
                "t": earlier,
                "holds": single.holds,
                "pairs_checked": single.pairs_checked,
                "witness": single.witness.as_ref().map(|w| witness_json(w, n)),
            },
        })
        .to_string(),
    })
}
