use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use stirap_gate::circuits::{self, CompositeSystem};
use stirap_gate::config::{ExperimentConfig, RobustnessModel, SweepKind};
use stirap_gate::error::{Error, Result};
use stirap_gate::metrics::{self, FitResult};
use stirap_gate::parallel::{par_map, set_workers};
use stirap_gate::pipeline::{self, GateSpec};
use stirap_gate::pulses::{Envelope, PulseParams};
use stirap_gate::units::{to_ghz, to_mhz, TWO_PI};
use stirap_gate::{dynamics, lambda_model};

#[derive(Parser)]
#[command(name = "stirap-gate", version, about = "Adiabatic two-qubit gate synthesis and simulation for fluxonium circuits")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Coherent integrator tolerance, overrides the config.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Dressed spectrum, transition table, ZZ and T1 report.
    Spectrum(Common),
    /// Single-gate runs over the configured gate times.
    Gate {
        #[command(flatten)]
        common: Common,
        /// Ideal RWA Λ model instead of the circuit.
        #[arg(long)]
        rwa_only: bool,
    },
    /// Gate-time sweep (full model) or Λ_bad sweep (reduced model).
    Sweep(Common),
    /// Amplitude-robustness scan.
    Robustness(Common),
    /// Power-law or linear fit of a sweep.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Two-column CSV (x, error) to fit instead of running the sweep.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Pulse waveforms sampled on a uniform grid.
    Waveform(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let mut cfg = ExperimentConfig::load(&c.config)?;
        if let Some(t) = c.tol {
            if !(1e-13..=1e-6).contains(&t) {
                return Err(Error::Config(format!("--tol {t:e} outside [1e-13, 1e-6]")));
            }
            cfg.numerics.tol = t;
        }
        set_workers(c.workers);
        fs::create_dir_all(&c.out)?;
        Ok(Self { cfg, out: c.out.clone() })
    }

    fn system(&self) -> Result<CompositeSystem> {
        circuits::assemble_composite(&self.cfg.circuit_params()?, self.cfg.truncation())
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn csv(&self, name: &str) -> Result<csv::Writer<File>> {
        Ok(csv::Writer::from_path(self.out.join(name))?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Spectrum(c) => cmd_spectrum(&Ctx::new(&c)?),
        Command::Gate { common, rwa_only } => cmd_gate(&Ctx::new(&common)?, rwa_only),
        Command::Sweep(c) => cmd_sweep(&Ctx::new(&c)?).map(|_| ()),
        Command::Robustness(c) => cmd_robustness(&Ctx::new(&c)?),
        Command::Fit { common, input } => cmd_fit(&Ctx::new(&common)?, input.as_deref()),
        Command::Waveform(c) => cmd_waveform(&Ctx::new(&c)?),
    }
}

fn e12(v: f64) -> String {
    format!("{v:.12e}")
}

fn cmd_spectrum(ctx: &Ctx) -> Result<()> {
    let params = ctx.cfg.circuit_params()?;
    let sys = ctx.system()?;
    let mut w = ctx.csv("spectrum.csv")?;
    w.write_record(["index", "label", "energy_GHz", "overlap"])?;
    for k in 0..sys.dim() {
        w.write_record([k.to_string(), sys.label(k), format!("{:.9}", to_ghz(sys.energies[k])), format!("{:.6}", sys.overlaps[k])])?;
    }
    w.flush()?;

    let table = sys.transition_table()?;
    let mut w = ctx.csv("transitions.csv")?;
    w.write_record(["from", "to", "freq_GHz", "op_A", "op_B", "op_N"])?;
    for t in &table {
        w.write_record([
            t.from.clone(),
            t.to.clone(),
            format!("{:.6}", to_ghz(t.omega)),
            format!("{:.4}", t.op_a),
            format!("{:.4}", t.op_b),
            format!("{:.4}", t.op_n),
        ])?;
    }
    w.flush()?;

    let diss = ctx.cfg.dissipation_spec()?;
    let model = dynamics::t1_rates(&sys, diss.q_diel, diss.temperature)?;
    let comp = sys.computational()?;
    let mut w = ctx.csv("t1.csv")?;
    w.write_record(["from", "to", "T1_us"])?;
    let mut jumps: Vec<_> = model.jumps.iter().filter(|j| comp.as_array().contains(&j.from)).collect();
    jumps.sort_by(|a, b| b.rate.total_cmp(&a.rate).then(a.from.cmp(&b.from)).then(a.to.cmp(&b.to)));
    for j in &jumps {
        w.write_record([sys.label(j.from), sys.label(j.to), format!("{:.4}", j.t1() * 1e-3)])?;
    }
    w.flush()?;

    let wa = circuits::qubit_frequency(&params.qubit_a)?;
    let wb = circuits::qubit_frequency(&params.qubit_b)?;
    let chi = circuits::dispersive_shift(&sys)?;
    let zz = circuits::zz_strength(&sys)? + 0.0;
    let mut r = ctx.create("spectrum.txt")?;
    writeln!(r, "method        {:?}", ctx.cfg.method)?;
    writeln!(r, "omega_A/2pi   {:.6} GHz", to_ghz(wa))?;
    writeln!(r, "omega_B/2pi   {:.6} GHz", to_ghz(wb))?;
    writeln!(r, "2chi/2pi      {:.6} GHz", to_ghz(2.0 * chi))?;
    writeln!(r, "ZZ            {zz:.4} kHz")?;
    writeln!(r, "levels        {}", sys.dim())?;
    for t in &table {
        writeln!(
            r,
            "{:>6} -> {:<6} {:>10.5} GHz  A {:.4}  B {:.4}  N {:.4}",
            t.from,
            t.to,
            to_ghz(t.omega),
            t.op_a,
            t.op_b,
            t.op_n
        )?;
    }
    for d in &sys.diagnostics {
        writeln!(r, "warning: {d}")?;
    }
    r.flush()?;
    print!("{}", fs::read_to_string(ctx.out.join("spectrum.txt"))?);
    Ok(())
}

fn tag(t_g: f64) -> String {
    format!("{t_g}ns")
}

fn cmd_gate(ctx: &Ctx, rwa_only: bool) -> Result<()> {
    let tgs = ctx.cfg.gate_times()?;
    if rwa_only {
        let mut w = ctx.csv("gate_rwa.csv")?;
        w.write_record(["t_g_ns", "omega0_GHz", "error"])?;
        let amp = ctx.cfg.amplitude()?;
        let gamma0 = ctx.cfg.gate_spec(tgs[0])?.gamma0;
        for &tg in &tgs {
            let om = amp.omega0(tg)?;
            let env = Envelope::new(PulseParams::new(tg, om, gamma0)?, ctx.cfg.gate_spec(tg)?.shape);
            let u = lambda_model::lambda_gate(&env, None, ctx.cfg.numerics.tol)?;
            let rep = metrics::average_gate_fidelity(&metrics::QuantumMapSample::from_unitary_block(&u), gamma0, true)?;
            println!("t_g {tg} ns  error {:.3e}", rep.error);
            w.write_record([format!("{tg}"), format!("{:.9}", to_ghz(om)), e12(rep.error)])?;
        }
        w.flush()?;
        return Ok(());
    }
    let sys = ctx.system()?;
    let mut w = ctx.csv("gate.csv")?;
    w.write_record(["t_g_ns", "fidelity", "error", "phi_zz_raw", "pulse_gamma0", "mean_leakage"])?;
    for &tg in &tgs {
        let spec = ctx.cfg.gate_spec(tg)?;
        info!("gate t_g = {tg} ns");
        let run = pipeline::run_gate(&sys, &spec)?;
        let mut r = ctx.create(&format!("gate_{}.txt", tag(tg)))?;
        writeln!(r, "t_g           {tg} ns")?;
        writeln!(r, "dissipation   {}", spec.dissipation.is_some())?;
        writeln!(r, "raw phi_ZZ    {:.9} rad", run.raw_phizz)?;
        writeln!(r, "pulse gamma0  {:.9} rad", run.pulse_gamma0)?;
        write!(r, "{}", run.report.to_text())?;
        r.flush()?;
        run.schedule.write_csv(File::create(ctx.out.join(format!("waveform_{}.csv", tag(tg))))?, ctx.cfg.output.samples)?;
        println!("t_g {tg} ns  fidelity {:.6}  error {:.3e}", run.report.fidelity, run.report.error);
        w.write_record([
            format!("{tg}"),
            format!("{:.12}", run.report.fidelity),
            e12(run.report.error),
            format!("{:.9}", run.raw_phizz),
            format!("{:.9}", run.pulse_gamma0),
            e12(run.report.mean_leakage()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep rows as (x, error) pairs of successful points.
fn cmd_sweep(ctx: &Ctx) -> Result<Vec<(f64, f64)>> {
    let mut ok = Vec::new();
    match ctx.cfg.sweep.kind {
        SweepKind::Gate => {
            let sys = ctx.system()?;
            let specs: Vec<GateSpec> = ctx.cfg.gate_times()?.into_iter().map(|t| ctx.cfg.gate_spec(t)).collect::<Result<_>>()?;
            let runs = par_map(&specs, |s| pipeline::run_gate(&sys, s));
            let mut w = ctx.csv("sweep_gate.csv")?;
            w.write_record(["t_g_ns", "error", "phi_zz_raw", "mean_leakage", "status"])?;
            for (s, r) in specs.iter().zip(runs) {
                match r {
                    Ok(r) => {
                        ok.push((s.t_g, r.report.error));
                        w.write_record([format!("{}", s.t_g), e12(r.report.error), format!("{:.9}", r.raw_phizz), e12(r.report.mean_leakage()), "ok".into()])?;
                    }
                    Err(e) => {
                        warn!("t_g = {} ns failed: {e}", s.t_g);
                        w.write_record([format!("{}", s.t_g), String::new(), String::new(), String::new(), format!("failed: {e}")])?;
                    }
                }
            }
            w.flush()?;
        }
        SweepKind::BadLambda => {
            let chi = ctx.cfg.chi()?;
            let sw = &ctx.cfg.sweep;
            if sw.points < 2 || !(sw.lo > 0.0 && sw.hi > sw.lo) {
                return Err(Error::Config("sweep needs points >= 2 and 0 < lo < hi".into()));
            }
            let xs: Vec<f64> = (0..sw.points).map(|i| sw.lo + (sw.hi - sw.lo) * i as f64 / (sw.points - 1) as f64).collect();
            let tol = ctx.cfg.numerics.tol;
            let pts = par_map(&xs, |&x| pipeline::bad_lambda_point(chi, x * TWO_PI / (2.0 * chi), tol));
            let mut w = ctx.csv("sweep_bad_lambda.csv")?;
            w.write_record(["x_2chi_tg_over_2pi", "chi_tg", "error", "corrected_error", "phi_zz", "status"])?;
            for (&x, p) in xs.iter().zip(pts) {
                match p {
                    Ok(p) => {
                        ok.push((x, if sw.corrected { p.corrected_error } else { p.error }));
                        w.write_record([format!("{x:.6}"), format!("{:.9}", p.chi_tg), e12(p.error), e12(p.corrected_error), format!("{:.9}", p.phizz), "ok".into()])?;
                    }
                    Err(e) => {
                        warn!("x = {x} failed: {e}");
                        w.write_record([format!("{x:.6}"), String::new(), String::new(), String::new(), String::new(), format!("failed: {e}")])?;
                    }
                }
            }
            w.flush()?;
        }
    }
    println!("{} sweep points succeeded", ok.len());
    Ok(ok)
}

fn write_scan(w: &mut csv::Writer<File>, model: &str, param: f64, etas: &[f64], errs: &[Result<f64>]) -> Result<()> {
    for (eta, e) in etas.iter().zip(errs) {
        let (v, st) = match e {
            Ok(v) => (e12(*v), "ok".to_string()),
            Err(e) => (String::new(), format!("failed: {e}")),
        };
        w.write_record([model.to_string(), format!("{param}"), format!("{eta:.6}"), v, st])?;
    }
    Ok(())
}

fn cmd_robustness(ctx: &Ctx) -> Result<()> {
    let spec = ctx.cfg.robustness_spec()?;
    let etas = spec.etas();
    let tol = ctx.cfg.numerics.tol;
    let mut scan = ctx.csv("robustness_scan.csv")?;
    scan.write_record(["model", "param", "eta", "error", "status"])?;
    let mut sum = ctx.csv("robustness.csv")?;
    sum.write_record(["model", "param", "xi", "xi_half", "mean_error"])?;
    let mut summarize = |name: &str, param: f64, f: &(dyn Fn(f64) -> Result<f64> + Sync)| -> Result<()> {
        let errs = par_map(&etas, |&e| f(e));
        write_scan(&mut scan, name, param, &etas, &errs)?;
        let s = metrics::differential_sensitivity(f)?;
        let mean = metrics::averaged_error(f, &spec)?;
        println!("{name:<10} {param:<8} xi {:.6}  <eps> {:.6e}", s.xi, mean);
        sum.write_record([name.to_string(), format!("{param}"), format!("{:.9}", s.xi), format!("{:.9}", s.xi_half), e12(mean)])?;
        Ok(())
    };
    let tgs = ctx.cfg.gate_times()?;
    match ctx.cfg.robustness.model {
        RobustnessModel::Rwa => {
            let tg = tgs[0];
            for &k in &ctx.cfg.robustness.factors {
                let om = k * TWO_PI / tg;
                summarize("satd", k, &|eta| pipeline::rwa_gate_error(tg, om, eta, tol))?;
            }
            summarize("dynamical", 0.5, &|eta| pipeline::dynamical_gate_error(tg, eta))?;
        }
        RobustnessModel::Dynamical => {
            for &tg in &tgs {
                summarize("dynamical", tg, &|eta| pipeline::dynamical_gate_error(tg, eta))?;
            }
        }
        RobustnessModel::Full => {
            let sys = ctx.system()?;
            for &tg in &tgs {
                let f = pipeline::full_gate_error_factory(&sys, &ctx.cfg.gate_spec(tg)?)?;
                summarize("full", tg, &f)?;
            }
        }
    }
    scan.flush()?;
    sum.flush()?;
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut pts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: row {}: column {} is not a number", path.display(), i + 2, k + 1)))
        };
        pts.push((parse(0)?, parse(1)?));
    }
    Ok(pts)
}

fn write_fit(ctx: &Ctx, fit: &FitResult) -> Result<()> {
    let mut w = ctx.csv("fit.csv")?;
    w.write_record(["law", "exponent", "prefactor", "intercept", "residual", "x_min", "x_max", "points"])?;
    w.write_record([
        format!("{:?}", fit.law).to_lowercase(),
        format!("{:.9}", fit.exponent),
        e12(fit.prefactor),
        e12(fit.intercept),
        e12(fit.residual),
        format!("{}", fit.window.0),
        format!("{}", fit.window.1),
        fit.points.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn cmd_fit(ctx: &Ctx, input: Option<&Path>) -> Result<()> {
    let pts = match input {
        Some(p) => read_points(p)?,
        None => cmd_sweep(ctx)?,
    };
    let fit = metrics::fit_error_scaling(&pts, ctx.cfg.fit_law())?;
    write_fit(ctx, &fit)?;
    println!(
        "{:?} fit over {} points: exponent {:.4}  prefactor {:.4e}  intercept {:.3e}",
        fit.law, fit.points, fit.exponent, fit.prefactor, fit.intercept
    );
    Ok(())
}

fn cmd_waveform(ctx: &Ctx) -> Result<()> {
    let sys = ctx.system()?;
    for tg in ctx.cfg.gate_times()? {
        let spec = ctx.cfg.gate_spec(tg)?;
        let sched = pipeline::build_schedule(&sys, &spec, spec.gamma0)?;
        let name = format!("waveform_{}.csv", tag(tg));
        sched.write_csv(File::create(ctx.out.join(&name))?, ctx.cfg.output.samples)?;
        let peak = sched.sample(ctx.cfg.output.samples).iter().map(|s| s.3.abs().max(s.4.abs())).fold(0.0, f64::max);
        println!("{name}: duration {} ns, peak chirp {:.3} MHz", sched.duration(), to_mhz(peak));
    }
    Ok(())
}
