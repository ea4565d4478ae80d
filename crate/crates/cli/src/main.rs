//! `channel-moments`: transfer matrices, norm scans, spectra, circuit
//! simulations and Monte-Carlo checks from the command line.

mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use channel_moments::channels::{pauli_string, NoiseKind, Pauli};
use channel_moments::localized::{gram_for_basis, EnvRule};
use channel_moments::moments::{
    frame_potential_mc, hierarchy_scan, norm_squared, spectrum, transfer, EnsembleKind, EnsembleSpec,
};
use channel_moments::twirlsim::{
    evolve_with_cap, initial_state, mc_expectation_moments, reference_purities, variance_reference, Ansatz, CircuitSpec,
    InitialState, NoisePlacement, RefEnsemble, DEFAULT_MAX_QUBITS,
};
use channel_moments::weingarten::{gram_matrix, weingarten_matrix};
use channel_moments::{BasisKind, Entries, Error, SymmetricGroup};

use output::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "channel-moments", version, about = "Moment operators of random quantum channels")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Base seed for random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Floating-point arithmetic.
    #[arg(long, global = true)]
    float: bool,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Global {
    fn exact(&self) -> bool {
        self.exact || !self.float
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gram and Weingarten matrices as exact rationals.
    Weingarten {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        d: u64,
    },
    /// Transfer matrix of an ensemble.
    Transfer(EnsembleArgs),
    /// Norms of concatenated cHaar moment operators over a grid.
    Hierarchy {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        t: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
        d: Vec<u64>,
        /// Environment dimensions: integers, `d` or `d^p`.
        #[arg(long, value_delimiter = ',', default_value = "1,2,d,d^2")]
        env: Vec<String>,
    },
    /// Purity trajectories of noisy layered circuits.
    Simulate {
        #[arg(long, value_delimiter = ',', default_value = "hea")]
        ansatz: Vec<String>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "depolarizing")]
        noise: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        layers: usize,
        /// Override the initial state (zero or plus).
        #[arg(long)]
        initial: Option<String>,
        /// Apply noise to every qubit after every gate.
        #[arg(long)]
        full_register: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_QUBITS)]
        max_qubits: usize,
        /// Environment dimension of the cHaar reference row (default d²).
        #[arg(long)]
        d_env: Option<u64>,
    },
    /// Eigenvalues and leading eigenvectors of the moment operator.
    Spectrum(EnsembleArgs),
    /// Run an invariant suite.
    Verify {
        #[arg(long, value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
    },
    /// Monte-Carlo estimates checked against exact values.
    Mc {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, value_enum, default_value_t = McQuantity::FramePotential)]
        quantity: McQuantity,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Pauli observable for `--quantity expectation`, e.g. `ZI`.
        #[arg(long)]
        observable: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EnsembleName {
    Haar,
    Chaar,
    Depolarize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BasisName {
    Permutation,
    Localized,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum McQuantity {
    FramePotential,
    Expectation,
}

#[derive(Args, Debug, Clone)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value_t = EnsembleName::Haar)]
    ensemble: EnsembleName,
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long, default_value_t = 2)]
    d: u64,
    #[arg(long = "d-env", default_value_t = 1)]
    d_env: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = BasisName::Permutation)]
    basis: BasisName,
}

impl EnsembleArgs {
    fn spec(&self) -> EnsembleSpec {
        let s = match self.ensemble {
            EnsembleName::Haar => EnsembleSpec::haar(self.t, self.d),
            EnsembleName::Chaar => EnsembleSpec::chaar(self.t, self.d, self.d_env),
            EnsembleName::Depolarize => EnsembleSpec::depolarize(self.t, self.d),
        };
        s.with_k(self.k)
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "ensemble": format!("{:?}", self.ensemble).to_lowercase(),
            "t": self.t, "d": self.d, "d_env": self.d_env, "k": self.k,
            "basis": format!("{:?}", self.basis).to_lowercase(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::SingularGram { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

/// Runs a command; `Ok(false)` signals failed checks.
fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let mut ok = true;
    let report = match &cli.command {
        Command::Weingarten { t, d } => cmd_weingarten(g, *t, *d)?,
        Command::Transfer(a) => cmd_transfer(g, a)?,
        Command::Hierarchy { t, k, d, env } => cmd_hierarchy(g, t, k, d, env)?,
        Command::Simulate { ansatz, n, noise, gamma, layers, initial, full_register, max_qubits, d_env } => {
            cmd_simulate(g, ansatz, *n, noise, gamma, *layers, initial.as_deref(), *full_register, *max_qubits, *d_env)?
        }
        Command::Spectrum(a) => cmd_spectrum(g, a)?,
        Command::Verify { suite, samples } => {
            let (r, passed) = verify::run(global_config(g), g.seed, *suite, *samples)?;
            ok = passed;
            r
        }
        Command::Mc { ensemble, quantity, samples, observable } => {
            let (r, passed) = cmd_mc(g, ensemble, *quantity, *samples, observable.as_deref())?;
            ok = passed;
            r
        }
    };
    report.write(g.format, g.out.as_deref())?;
    Ok(ok)
}

fn global_config(g: &Global) -> serde_json::Value {
    json!({
        "seed": g.seed,
        "threads": g.threads,
        "mode": if g.exact() { "exact" } else { "float" },
        "format": format!("{:?}", g.format).to_lowercase(),
    })
}

fn cmd_weingarten(g: &Global, t: usize, d: u64) -> Result<Report> {
    let group = SymmetricGroup::new(t)?;
    let labels = group.labels();
    let gram = gram_matrix(t, d)?;
    let wg = weingarten_matrix(t, d)?;
    let mut r = Report::new("weingarten", global_config(g), json!({ "t": t, "d": d }), &["matrix", "sigma", "pi", "value"]);
    for (name, m) in [("gram", &gram), ("weingarten", &wg)] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                r.row(vec![name.into(), labels[i].clone(), labels[j].clone(), m.get(i, j).to_string()]);
            }
        }
    }
    Ok(r)
}

fn entry_strings(e: &Entries) -> Vec<Vec<String>> {
    match e {
        Entries::Exact(m) => (0..m.rows()).map(|i| m.row(i).iter().map(|v| v.to_string()).collect()).collect(),
        Entries::Float(m) => (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| output::float(m[(i, j)])).collect()).collect(),
    }
}

fn cmd_transfer(g: &Global, a: &EnsembleArgs) -> Result<Report> {
    let basis = match a.basis {
        BasisName::Permutation => BasisKind::Permutation,
        BasisName::Localized => BasisKind::Localized,
    };
    let tau = transfer(&a.spec(), basis, g.exact())?;
    let labels = SymmetricGroup::new(a.t)?.labels();
    let prefix = if basis == BasisKind::Localized { "l" } else { "" };
    let mut r = Report::new("transfer", global_config(g), a.config(), &["sigma", "pi", "value"]);
    for (i, row) in entry_strings(&tau.entries).into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            r.row(vec![format!("{prefix}{}", labels[i]), format!("{prefix}{}", labels[j]), v]);
        }
    }
    Ok(r)
}

fn parse_env(s: &str) -> Result<EnvRule> {
    let s = s.trim();
    if s == "d" {
        return Ok(EnvRule::Power(1));
    }
    if let Some(p) = s.strip_prefix("d^") {
        return Ok(EnvRule::Power(p.parse().with_context(|| format!("bad environment rule '{s}'"))?));
    }
    Ok(EnvRule::Fixed(s.parse().with_context(|| format!("bad environment rule '{s}'"))?))
}

fn cmd_hierarchy(g: &Global, t: &[usize], k: &[usize], d: &[u64], env: &[String]) -> Result<Report> {
    let rules: Vec<EnvRule> = env.iter().map(|s| parse_env(s)).collect::<Result<_>>()?;
    let tab = hierarchy_scan(t, k, d, &rules, g.exact())?;
    let cfg = json!({ "t": t, "k": k, "d": d, "env": env });
    let mut r = Report::new("hierarchy", global_config(g), cfg, &["t", "k", "d", "d_env", "norm2", "trace", "eps_dep", "flags"]);
    for row in &tab.rows {
        let flags: Vec<String> = tab
            .flags
            .iter()
            .filter(|f| (f.t, f.k, f.d, f.d_env) == (row.t, row.k, row.d, row.d_env))
            .map(|f| format!("{:?}", f.kind))
            .collect();
        r.row(vec![
            row.t.to_string(),
            row.k.to_string(),
            row.d.to_string(),
            row.d_env.to_string(),
            value_string(&row.norm2),
            value_string(&row.trace),
            output::float(row.eps_dep),
            flags.join(";"),
        ]);
    }
    for (t, d, de) in &tab.skipped {
        r.note(format!("skipped t={t} d={d} d_env={de}: singular Gram"));
    }
    r.note(format!("flags: {}", tab.flags.len()));
    Ok(r)
}

fn value_string(v: &channel_moments::Value) -> String {
    match v {
        channel_moments::Value::Exact(q) => q.to_string(),
        channel_moments::Value::Float(x) => output::float(*x),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    g: &Global,
    ansatz: &[String],
    n: usize,
    noise: &[String],
    gamma: &[f64],
    layers: usize,
    initial: Option<&str>,
    full_register: bool,
    max_qubits: usize,
    d_env: Option<u64>,
) -> Result<Report> {
    let ansatze: Vec<Ansatz> = ansatz.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let noises: Vec<NoiseKind> = if noise.iter().any(|s| s == "all") {
        NoiseKind::ALL.to_vec()
    } else {
        noise.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    let init: Option<InitialState> = initial.map(|s| s.parse()).transpose()?;
    let mut specs = Vec::new();
    for &a in &ansatze {
        for &nk in &noises {
            for &gm in gamma {
                let mut s = CircuitSpec::new(a, n, layers, nk, gm);
                if let Some(i) = init {
                    s = s.with_initial(i);
                }
                if full_register {
                    s = s.with_placement(NoisePlacement::FullRegister);
                }
                specs.push(s);
            }
        }
    }
    let trajectories: Vec<Vec<f64>> = specs
        .par_iter()
        .map(|s| evolve_with_cap(s, max_qubits).map(|t| t.purities))
        .collect::<Result<_, _>>()?;
    let d = 1u64 << n;
    let de = d_env.unwrap_or(d * d);
    let cfg = json!({
        "ansatz": ansatz, "n": n, "noise": noises.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "gamma": gamma, "layers": layers, "initial": initial, "full_register": full_register,
        "max_qubits": max_qubits, "d_env": de,
    });
    let mut r = Report::new("simulate", global_config(g), cfg, &["ansatz", "noise", "gamma", "n", "L_index", "purity"]);
    let refs = reference_purities(n, de);
    for (name, v) in [("ref-haar", refs.haar), ("ref-chaar", refs.chaar), ("ref-depolarize", refs.depolarize)] {
        r.row(vec!["reference".into(), name.into(), "0".into(), n.to_string(), "-1".into(), output::float(v)]);
    }
    for (s, tr) in specs.iter().zip(&trajectories) {
        for (l, p) in tr.iter().enumerate() {
            r.row(vec![
                s.ansatz.to_string(),
                s.noise.name().into(),
                output::float(s.gamma),
                n.to_string(),
                l.to_string(),
                output::float(*p),
            ]);
        }
    }
    Ok(r)
}

fn cmd_spectrum(g: &Global, a: &EnsembleArgs) -> Result<Report> {
    let rep = spectrum(&a.spec())?;
    let labels = SymmetricGroup::new(a.t)?.labels();
    let mut r = Report::new("spectrum", global_config(g), a.config(), &["kind", "index", "label", "re", "im"]);
    for (i, z) in rep.eigenvalues.iter().enumerate() {
        r.row(vec!["eigenvalue".into(), i.to_string(), String::new(), output::float(z.re), output::float(z.im)]);
    }
    for (kind, v) in [("right", &rep.leading_right), ("closed_form_right", &rep.closed_form_right), ("left", &rep.leading_left)] {
        for (i, x) in v.iter().enumerate() {
            r.row(vec![kind.into(), i.to_string(), labels[i].clone(), output::float(*x), "0".into()]);
        }
    }
    r.note(format!(
        "residuals: right {:e}, closed_form {:e}, left {:e}",
        rep.residuals.right, rep.residuals.closed_form, rep.residuals.left
    ));
    Ok(r)
}

fn cmd_mc(g: &Global, a: &EnsembleArgs, quantity: McQuantity, samples: u64, observable: Option<&str>) -> Result<(Report, bool)> {
    let spec = a.spec();
    let mut cfg = a.config();
    cfg["quantity"] = json!(quantity.to_possible_value().map(|v| v.get_name().to_string()));
    cfg["samples"] = json!(samples);
    match quantity {
        McQuantity::FramePotential => {
            let est = frame_potential_mc(&spec, samples, g.seed)?;
            let tau = transfer(&spec, BasisKind::Permutation, true)?;
            let exact = norm_squared(&tau, &gram_for_basis(tau.basis, true)?)?;
            let z = if est.std_error > 0.0 { (est.mean - exact.to_f64()) / est.std_error } else { 0.0 };
            let pass = z.abs() < 3.0 || (est.std_error == 0.0 && (est.mean - exact.to_f64()).abs() < 1e-12);
            let mut r = Report::new("mc", global_config(g), cfg, &["quantity", "estimate", "std_error", "exact", "z", "pass"]);
            r.row(vec![
                "frame_potential".into(),
                output::float(est.mean),
                output::float(est.std_error),
                value_string(&exact),
                output::float(z),
                pass.to_string(),
            ]);
            Ok((r, pass))
        }
        McQuantity::Expectation => {
            let d = spec.d() as usize;
            if !d.is_power_of_two() {
                bail!("expectation sampling needs a qubit register, got d = {d}");
            }
            let n = d.trailing_zeros() as usize;
            let labels = match observable {
                Some(s) => Pauli::parse_string(s)?,
                None => {
                    let mut v = vec![Pauli::I; n];
                    v[0] = Pauli::Z;
                    v
                }
            };
            if labels.len() != n {
                bail!("observable must act on {n} qubits");
            }
            cfg["observable"] = json!(labels.iter().map(|p| p.symbol()).collect::<String>());
            let o = pauli_string(&labels);
            let rho = initial_state(n, InitialState::Zero);
            let est = mc_expectation_moments(&spec, &rho, &o, samples, g.seed)?;
            let reference = match spec.kind {
                EnsembleKind::Haar { .. } => RefEnsemble::Haar,
                EnsembleKind::CHaar { d_env, .. } => RefEnsemble::CHaar(d_env),
                _ => RefEnsemble::Depolarize,
            };
            let exact = variance_reference(&rho, &o, reference)?;
            let z = if est.second_moment_se > 0.0 { (est.second_moment - exact.second_moment) / est.second_moment_se } else { 0.0 };
            let pass = z.abs() < 3.0;
            let mut r = Report::new("mc", global_config(g), cfg, &["quantity", "estimate", "std_error", "exact", "z", "pass"]);
            let zm = if est.mean_se > 0.0 { (est.mean - exact.mean) / est.mean_se } else { 0.0 };
            r.row(vec!["mean".into(), output::float(est.mean), output::float(est.mean_se), output::float(exact.mean), output::float(zm), (zm.abs() < 3.0).to_string()]);
            r.row(vec![
                "second_moment".into(),
                output::float(est.second_moment),
                output::float(est.second_moment_se),
                output::float(exact.second_moment),
                output::float(z),
                pass.to_string(),
            ]);
            r.row(vec!["variance".into(), output::float(est.variance), output::float(est.variance_se), output::float(exact.variance), String::new(), String::new()]);
            Ok((r, pass && zm.abs() < 3.0))
        }
    }
}
