use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use mdvs_core::config::{load_config, Config};
use mdvs_core::dsp::template::PulseTemplate;
use mdvs_core::dsp::trace_io::{read_two_channel_csv, write_two_channel_csv};
use mdvs_core::dsp::{run_pipeline, synth_pulse_train, PipelineOutput};
use mdvs_core::io::write_atomic;
use mdvs_core::placement::{
    dipole_validity_sweep, export_grid, rank_placements, scan_sensitivity, sweep_to_csv, ExportFormat, Perturbations,
    SensitivityGrid,
};
use mdvs_core::units::oersted;
use mdvs_core::RotationAngles;

#[derive(Debug, Parser)]
#[command(name = "mdvs", version, about = "Field maps, perturbation studies and pulse analysis for a two-magnet pulse sensor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Geometry/run configuration (TOML, or JSON by extension).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid node counts along x and z.
    #[arg(long, value_name = "NX,NZ", value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[arg(long, value_name = "csv|json", default_value = "csv", value_parser = parse_format)]
    pub format: ExportFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static field H over the xz grid.
    Field {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Field change along the sensor axis for one perturbation of the top magnet or finger.
    #[command(group(ArgGroup::new("perturbation").required(true).args(["dz", "beta", "dchi"])))]
    Perturb {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Vertical shift of the top magnet, m.
        #[arg(long, allow_negative_numbers = true)]
        dz: Option<f64>,
        /// Pitch of the top magnet, rad.
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        /// Susceptibility change of the finger.
        #[arg(long, allow_negative_numbers = true)]
        dchi: Option<f64>,
    },
    /// Dipole closed forms against the finite-cylinder solver.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "csv|json", default_value = "csv", value_parser = parse_format)]
        format: ExportFormat,
    },
    /// Synthetic two-channel recording.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pulse templates, second derivatives and Bland-Altman agreement of a recording.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// CSV with columns t,magnetic,vibration.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(mdvs_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<mdvs_core::Error> for CliError {
    fn from(e: mdvs_core::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NZ")?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

fn parse_format(s: &str) -> std::result::Result<ExportFormat, String> {
    s.parse().map_err(|e: mdvs_core::Error| e.to_string())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: Option<&'a Path>,
    out_dir: &'a Path,
    seed: Option<u64>,
    version: &'a str,
    wall_time_s: f64,
    outputs: Vec<String>,
}

struct Run<'a> {
    name: &'static str,
    common: &'a Common,
    started: Instant,
    outputs: Vec<String>,
    seed: Option<u64>,
}

impl<'a> Run<'a> {
    fn new(name: &'static str, common: &'a Common) -> Self {
        Run {
            name,
            common,
            started: Instant::now(),
            outputs: Vec::new(),
            seed: None,
        }
    }

    fn config(&self) -> Result<Config> {
        Ok(match &self.common.config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        })
    }

    fn path(&mut self, file: &str) -> Result<PathBuf> {
        let dir = &self.common.out;
        std::fs::create_dir_all(dir).map_err(|e| mdvs_core::Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        self.outputs.push(file.to_string());
        Ok(dir.join(file))
    }

    fn write(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(file)?;
        write_atomic(&p, bytes)?;
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let m = Manifest {
            command: self.name,
            config: self.common.config.as_deref(),
            out_dir: &self.common.out,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write_atomic(&self.common.out.join("manifest.json"), text.as_bytes())?;
        Ok(())
    }
}

fn extension(format: ExportFormat) -> &'static str {
    match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    }
}

fn scan(cfg: &Config, grid: &GridArgs, p: Perturbations) -> Result<SensitivityGrid> {
    let mut spec = cfg.grid;
    if let Some((nx, nz)) = grid.grid {
        spec.nx = nx;
        spec.nz = nz;
    }
    Ok(scan_sensitivity(&cfg.assembly, &cfg.finger, &cfg.sensor, &spec, &p, &cfg.quadrature)?)
}

fn check_perturbation(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(CliError::Usage(format!("--{name} must be finite")));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Field { common, grid } => {
            let mut run = Run::new("field", &common);
            let cfg = run.config()?;
            let g = scan(&cfg, &grid, Perturbations::default())?;
            let file = format!("field.{}", extension(grid.format));
            export_grid(&g, &run.path(&file)?, grid.format)?;
            println!(
                "{file}: {}×{} nodes, {} within the ±{:.0} Oe range",
                g.grid.nx,
                g.grid.nz,
                g.feasible_count(),
                oersted(g.dynamic_range)
            );
            run.finish()
        }
        Command::Perturb {
            common,
            grid,
            dz,
            beta,
            dchi,
        } => {
            let mut run = Run::new("perturb", &common);
            let (p, tag) = match (dz, beta, dchi) {
                (Some(v), None, None) => {
                    check_perturbation("dz", v)?;
                    (Perturbations { dz: v, ..Default::default() }, "dz")
                }
                (None, Some(v), None) => {
                    check_perturbation("beta", v)?;
                    (
                        Perturbations {
                            angles: RotationAngles::pitch(v),
                            ..Default::default()
                        },
                        "beta",
                    )
                }
                (None, None, Some(v)) => {
                    check_perturbation("dchi", v)?;
                    (Perturbations { dchi: v, ..Default::default() }, "dchi")
                }
                _ => return Err(CliError::Usage("give exactly one of --dz, --beta, --dchi".into())),
            };
            let cfg = run.config()?;
            let g = scan(&cfg, &grid, p)?;
            let file = format!("perturb_{tag}.{}", extension(grid.format));
            export_grid(&g, &run.path(&file)?, grid.format)?;
            println!("{file}: {}×{} nodes", g.grid.nx, g.grid.nz);
            if tag == "dz" {
                let ranked = rank_placements(&g, 1);
                match ranked.nodes.first() {
                    Some(n) => println!(
                        "largest in-range response: {:.4} Oe at x = {:.2} mm, z = {:.2} mm",
                        oersted(n.dhx_displacement),
                        n.position.x * 1e3,
                        n.position.z * 1e3
                    ),
                    None => println!("{}", ranked.diagnostic.unwrap_or_default()),
                }
            }
            run.finish()
        }
        Command::Sweep { common, format } => {
            let mut run = Run::new("sweep", &common);
            let cfg = run.config()?;
            let s = &cfg.sweep;
            let rows = dipole_validity_sweep(&cfg.assembly, &s.x, &s.dz, &s.beta, &cfg.quadrature)?;
            let file = format!("sweep.{}", extension(format));
            let text = match format {
                ExportFormat::Csv => sweep_to_csv(&rows),
                ExportFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
            };
            run.write(&file, text.as_bytes())?;
            println!("{file}: {} rows", rows.len());
            run.finish()
        }
        Command::Synth { common, seed } => {
            let mut run = Run::new("synth", &common);
            let mut cfg = run.config()?;
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            run.seed = Some(cfg.synth.seed);
            let (m, v) = synth_pulse_train(&cfg.synth)?;
            let p = run.path("recording.csv")?;
            write_two_channel_csv(&p, &m, &v)?;
            println!(
                "recording.csv: {:.1} s at {} Hz, {} beats",
                m.duration_s(),
                m.fs,
                cfg.synth.beat_times().len()
            );
            run.finish()
        }
        Command::Analyze { common, input } => {
            let mut run = Run::new("analyze", &common);
            let cfg = run.config()?;
            let (m, v) = read_two_channel_csv(&input)?;
            let mut pcfg = cfg.pipeline.clone();
            pcfg.fs = m.fs;
            let out = run_pipeline(&m, &v, &pcfg)?;
            run.write("templates.csv", templates_csv(&out, |s| (&s.magnetic, &s.vibration)).as_bytes())?;
            run.write(
                "second_derivative.csv",
                templates_csv(&out, |s| (&s.magnetic_d2, &s.vibration_d2)).as_bytes(),
            )?;
            let report = serde_json::to_string_pretty(&out.report).expect("report serializes");
            run.write("report.json", report.as_bytes())?;
            let r = &out.report;
            println!(
                "{} segments, {} pulses: HR {:.1} bpm, r_trace {:.4}, r_template {:.4}, bias {:.2e}, {:.1}% within LoA",
                out.segments.len(),
                r.bland_altman.n_pulses,
                r.heart_rate_bpm,
                r.r_trace,
                r.r_template,
                r.bland_altman.bias,
                r.bland_altman.pct_within_loa
            );
            run.finish()
        }
    }
}

fn templates_csv(
    out: &PipelineOutput,
    pick: impl Fn(&mdvs_core::dsp::SegmentResult) -> (&PulseTemplate, &PulseTemplate),
) -> String {
    let mut s = String::from("segment,t_s,magnetic,vibration\n");
    for seg in &out.segments {
        let (a, b) = pick(seg);
        let dt = a.dt();
        let t0 = mdvs_core::dsp::template::WINDOW[0] * a.period_s;
        for (k, (x, y)) in a.samples.iter().zip(&b.samples).enumerate() {
            s.push_str(&format!("{},{},{x},{y}\n", seg.index, t0 + k as f64 * dt));
        }
    }
    s
}
