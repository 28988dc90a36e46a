use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use afields::algebroid::{sample_box, validate_structure_equations};
use afields::grid::{convergence_study, march_evolutionary, Evolution, Norms, Stencil};
use afields::hamiltonian::{hamilton_report, integrate_hamilton_k1};
use afields::lagrangian::euler_lagrange_report;
use afields::legendre::{solution_transport, LegendreMap};
use afields::models;
use afields::prolongation::{CoWhitneyPoint, Side};
use afields::registry::{load_model, Model};
use afields::{Error, GridField, Result};

#[derive(Parser)]
#[command(name = "afields", version, about = "Field theories on Lie algebroids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StencilArg {
    Central,
    Forward,
}

impl From<StencilArg> for Stencil {
    fn from(s: StencilArg) -> Self {
        match s {
            StencilArg::Central => Stencil::Central,
            StencilArg::Forward => Stencil::Forward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Residual of the exact solution sampled on each grid (wave only).
    Exact,
    /// Marched solution against a run on a finer grid.
    March,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structure equations at random base points.
    Validate {
        model: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler-Lagrange or Hamilton residual of a field stored as CSV.
    Residual {
        model: String,
        field: PathBuf,
        #[arg(long, value_enum, default_value_t = StencilArg::Central)]
        stencil: StencilArg,
        /// Include per-node residuals.
        #[arg(long)]
        nodes: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// March an evolutionary model, or integrate Hamilton's equations when k = 1.
    Solve {
        model: String,
        #[arg(long)]
        steps: usize,
        /// Spacing of the periodic axis, or the time step when k = 1.
        #[arg(long)]
        h: f64,
        /// Marching step as a multiple of h.
        #[arg(long, default_value_t = 0.5)]
        cfl: f64,
        /// Initial point `q.., p..` for k = 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        initial: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transport a Lagrangian field to the Hamiltonian side.
    Legendre {
        model: String,
        field: PathBuf,
        /// Where to write the transported field.
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long)]
        nodes: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the order of accuracy over a list of spacings.
    Convergence {
        model: String,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, default_value_t = 0.5)]
        cfl: f64,
        #[arg(long, default_value_t = 0.25)]
        time: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(value: &impl Serialize, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn points_for(h: f64) -> Result<usize> {
    let p = (1.0 / h).round();
    if p.is_nan() || p < 3.0 || ((1.0 / h) - p).abs() > 1e-9 * p {
        return Err(Error::Invalid(format!(
            "1/h must be an integer >= 3, got h = {h}"
        )));
    }
    Ok(p as usize)
}

fn read_field(path: &PathBuf) -> Result<GridField> {
    GridField::read_csv(BufReader::new(File::open(path)?))
}

fn evolution(model: &Model) -> Result<&Evolution> {
    model.evolution.as_ref().ok_or_else(|| {
        Error::NonEvolutionary(format!("model {} has no marching scheme", model.name))
    })
}

fn validate(model: &Model, samples: usize, tol: Option<f64>, seed: u64) -> Result<Value> {
    let alg = &model.algebroid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = sample_box(&mut rng, alg.base_dim(), samples);
    let tol = tol.unwrap_or(alg.default_tolerance());
    let report = validate_structure_equations(alg, &pts, tol)?;
    Ok(json!({
        "model": model.name,
        "base_dim": alg.base_dim(),
        "rank": alg.rank(),
        "derivatives": format!("{:?}", alg.derivative_source()),
        "report": report,
    }))
}

fn residual(model: &Model, field: &GridField, stencil: Stencil, nodes: bool) -> Result<Value> {
    let mut v = match field.layout.side {
        Side::Lagrangian => serde_json::to_value(euler_lagrange_report(
            model.require_lagrangian()?,
            field,
            stencil,
        )?)?,
        Side::Hamiltonian => serde_json::to_value(hamilton_report(
            model.require_hamiltonian()?,
            field,
            stencil,
        )?)?,
    };
    if !nodes {
        v.as_object_mut().map(|o| o.remove("nodes"));
    }
    Ok(json!({ "model": model.name, "side": field.layout.side, "residual": v }))
}

fn solve(
    model: &Model,
    steps: usize,
    h: f64,
    cfl: f64,
    initial: Option<Vec<f64>>,
    out: &PathBuf,
) -> Result<Value> {
    let sys = model.require_hamiltonian()?;
    let writer = BufWriter::new(File::create(out)?);
    if sys.k() == 1 {
        let (n, m) = (sys.n(), sys.m());
        let x0 = initial.unwrap_or_else(|| {
            let mut x = vec![0.0; n + m];
            x[n..].fill(1.0);
            x
        });
        let p0 = CoWhitneyPoint::from_flat(n, m, 1, &x0)?;
        let traj = integrate_hamilton_k1(sys, &p0, h * steps as f64, steps)?;
        traj.write_csv(writer)?;
        let last = traj.last();
        return Ok(json!({
            "model": model.name,
            "kind": "hamilton-k1",
            "steps": steps,
            "dt": h,
            "final": last.flat(),
            "energy_initial": sys.value(&p0)?,
            "energy_final": sys.value(last)?,
        }));
    }
    let evo = evolution(model)?;
    let init = evo.sample_initial(points_for(h)?)?;
    let (field, report) = march_evolutionary(evo, &init, cfl * h, steps)?;
    field.write_csv(writer)?;
    Ok(json!({ "model": model.name, "kind": "march", "report": report }))
}

fn legendre(model: &Model, field: &GridField, psi: Option<&PathBuf>, nodes: bool) -> Result<Value> {
    let map = LegendreMap::new(model.require_lagrangian()?.clone());
    let (psi_field, report) = solution_transport(&map, field)?;
    if let Some(p) = psi {
        psi_field.write_csv(BufWriter::new(File::create(p)?))?;
    }
    let mut v = serde_json::to_value(report)?;
    if !nodes {
        v.as_object_mut().map(|o| o.remove("nodes"));
    }
    Ok(json!({ "model": model.name, "transport": v }))
}

/// Largest difference between `coarse` and the matching nodes of `fine`
/// on the last level of both.
fn final_slice_error(coarse: &GridField, fine: &GridField) -> Result<Norms> {
    let ratio = fine.grid.shape[1] / coarse.grid.shape[1];
    if ratio * coarse.grid.shape[1] != fine.grid.shape[1] {
        return Err(Error::Invalid(
            "spacings must divide the reference spacing".into(),
        ));
    }
    let (lc, lf) = (coarse.grid.shape[0] - 1, fine.grid.shape[0] - 1);
    let rows: Vec<Vec<f64>> = (0..coarse.grid.shape[1])
        .map(|j| {
            let a = coarse.point(&[lc, j]);
            let b = fine.point(&[lf, j * ratio]);
            a.iter().zip(b).map(|(x, y)| x - y).collect()
        })
        .collect();
    Ok(Norms::of(
        rows.iter().map(|r| r.as_slice()),
        coarse.grid.spacing[1],
    ))
}

fn march_to(evo: &Evolution, h: f64, cfl: f64, time: f64) -> Result<GridField> {
    let dt = cfl * h;
    let steps = (time / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - time).abs() > 1e-9 * time {
        return Err(Error::Invalid(format!(
            "time {time} is not a multiple of the step {dt}"
        )));
    }
    Ok(march_evolutionary(evo, &evo.sample_initial(points_for(h)?)?, dt, steps)?.0)
}

fn convergence(
    model: &Model,
    h_list: &[f64],
    method: Option<Method>,
    cfl: f64,
    time: f64,
) -> Result<Value> {
    let wave = matches!(model.evolution, Some(Evolution::Wave));
    let method = method.unwrap_or(if wave { Method::Exact } else { Method::March });
    let report = match method {
        Method::Exact => {
            if !wave {
                return Err(Error::Invalid(
                    "exact residuals are only known for the wave model".into(),
                ));
            }
            let sys = model.require_lagrangian()?;
            convergence_study(h_list, |h| {
                let field = models::wave_exact_field(points_for(h)?)?;
                Ok(euler_lagrange_report(sys, &field, Stencil::Central)?.el)
            })?
        }
        Method::March => {
            let evo = evolution(model)?;
            let h_ref = h_list.iter().copied().fold(f64::INFINITY, f64::min) / 4.0;
            let reference = march_to(evo, h_ref, cfl, time)?;
            convergence_study(h_list, |h| {
                final_slice_error(&march_to(evo, h, cfl, time)?, &reference)
            })?
        }
    };
    Ok(json!({ "model": model.name, "convergence": report }))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate {
            model,
            samples,
            tol,
            seed,
            out,
        } => {
            let m = load_model(&model)?;
            let v = validate(&m, samples, tol, seed)?;
            emit(&v, out.as_ref())?;
            if v["report"]["pass"] != json!(true) {
                return Err(Error::Invalid("structure equations violated".into()));
            }
        }
        Command::Residual {
            model,
            field,
            stencil,
            nodes,
            out,
        } => {
            let m = load_model(&model)?;
            emit(
                &residual(&m, &read_field(&field)?, stencil.into(), nodes)?,
                out.as_ref(),
            )?;
        }
        Command::Solve {
            model,
            steps,
            h,
            cfl,
            initial,
            out,
        } => {
            let m = load_model(&model)?;
            emit(&solve(&m, steps, h, cfl, initial, &out)?, None)?;
        }
        Command::Legendre {
            model,
            field,
            psi,
            nodes,
            out,
        } => {
            let m = load_model(&model)?;
            emit(
                &legendre(&m, &read_field(&field)?, psi.as_ref(), nodes)?,
                out.as_ref(),
            )?;
        }
        Command::Convergence {
            model,
            h_list,
            method,
            cfl,
            time,
            out,
        } => {
            let m = load_model(&model)?;
            emit(&convergence(&m, &h_list, method, cfl, time)?, out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
