mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use efimov_fano::fanofit::{fit, FitModel, FitResult, Seed, WindowMode};
use efimov_fano::io::{format_sig, write_table};
use efimov_fano::model::{
    pole_energy_from_scattering_length, reduced_mass, scattering_length_from_pole, ChannelLabel, PoleKind,
};
use efimov_fano::pipeline::{self, crossings_json, curve_mesh, json_bytes, scan_csv, Preset};
use efimov_fano::scattering::{cross_section_curve, elastic_window_kev, CrossSectionCurve};
use efimov_fano::spectrum::{find_trimers, threshold_scan, SearchWindow};
use efimov_fano::{Error, Result};

use config::RunConfig;
use svg::{line_plot, Series};

#[derive(Parser)]
#[command(name = "efano", version, about = "Efimov trimers, n + dimer cross sections and Fano fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output_dir in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, global = true, value_enum)]
    window: Option<WindowArg>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print a, ε₂ and μ for each pair.
    Twobody,
    /// Trimer energies below the lowest two-body threshold.
    Spectrum,
    /// Bound excited-state counts over ε₂ and the threshold crossings.
    Scan,
    /// Elastic n + dimer cross section.
    Scatter,
    /// Fit a cross-section CSV (E_keV,sigma_fm2).
    Fit { input: Option<PathBuf> },
    /// Run a built-in reproduction pipeline.
    Reproduce {
        #[arg(default_value = "fig1-fig2")]
        preset: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fano,
    Bw,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Auto,
    Full,
}

/// What a successful command reports on its final line.
struct Done {
    summary: String,
    /// Computation finished but a fit did not converge.
    unconverged: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Twobody => "twobody",
        Command::Spectrum => "spectrum",
        Command::Scan => "scan",
        Command::Scatter => "scatter",
        Command::Fit { .. } => "fit",
        Command::Reproduce { .. } => "reproduce",
    };
    match run(&cli) {
        Ok(Done { summary, unconverged: false }) => {
            println!("status=ok command={name} {summary}");
            ExitCode::SUCCESS
        }
        Ok(Done { summary, unconverged: true }) => {
            eprintln!("status=numerical_failure code=3 command={name} {summary}");
            ExitCode::from(3)
        }
        Err(e) => {
            let (status, code) = if e.is_config() || matches!(e, Error::Io(_)) {
                ("config_error", 2)
            } else {
                ("numerical_failure", 3)
            };
            let msg = e.to_string().replace('\n', " ");
            eprintln!("status={status} code={code} command={name} message={}", serde_json::Value::String(msg));
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<Done> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("efano-out"));
    match &cli.command {
        Command::Twobody => twobody(&cfg),
        Command::Spectrum => spectrum(&cfg, &out),
        Command::Scan => scan(&cfg, &out),
        Command::Scatter => scatter(&cfg, &out, cli.svg),
        Command::Fit { input } => {
            let model = match cli.model {
                Some(ModelArg::Fano) => FitModel::Fano,
                Some(ModelArg::Bw) => FitModel::BreitWigner,
                None => cfg.fit.model.unwrap_or(FitModel::Fano),
            };
            let window = match cli.window {
                Some(WindowArg::Auto) => WindowMode::Auto,
                Some(WindowArg::Full) => WindowMode::Full,
                None => cfg.fit.window.unwrap_or_default(),
            };
            let input = input
                .clone()
                .or_else(|| cfg.fit_input())
                .ok_or_else(|| Error::Config("fit needs an input CSV (argument or fit.input)".into()))?;
            fit_cmd(&input, model, window, &out, cli.svg)
        }
        Command::Reproduce { preset } => reproduce(preset.parse()?, &out, cli.svg),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn twobody(cfg: &RunConfig) -> Result<Done> {
    let system = cfg.system(&cfg.grid()?)?;
    println!("channel,pole,epsilon2_keV,a_fm,mu_MeV");
    for label in [ChannelLabel::NeutronCore, ChannelLabel::NeutronNeutron] {
        let ch = system.channel(label);
        let mu = reduced_mass(&system, label);
        let pole = match ch.pole_kind {
            PoleKind::Bound => "bound",
            PoleKind::Virtual => "virtual",
        };
        let a = match scattering_length_from_pole(ch, mu, &system.constants) {
            Ok(a) => {
                let back = pole_energy_from_scattering_length(a, mu, &system.constants);
                if ((back - ch.epsilon2_mev) / ch.epsilon2_mev).abs() > 1e-12 {
                    return Err(Error::Numerical(format!("{label}: a <-> epsilon2 round trip failed")));
                }
                format_sig(a)
            }
            Err(Error::UnitaryLimit) => "unitary limit".to_string(),
            Err(e) => return Err(e),
        };
        println!("{label},{pole},{},{a},{}", format_sig(ch.epsilon2_kev()), format_sig(mu));
    }
    Ok(Done { summary: "channels=2".into(), unconverged: false })
}

fn spectrum(cfg: &RunConfig, out: &Path) -> Result<Done> {
    let grid = cfg.grid()?;
    let system = cfg.system(&grid)?;
    let mut window = SearchWindow::below_threshold(&system);
    if let Some(v) = cfg.spectrum.min_binding_kev {
        window.min_binding_kev = v;
    }
    if let Some(v) = cfg.spectrum.max_binding_kev {
        window.max_binding_kev = v;
    }
    let levels = find_trimers(&system, &grid, window, cfg.spectrum.max_states.unwrap_or(usize::MAX))?;
    let mut buf = Vec::new();
    write_table(
        &mut buf,
        &["n", "epsilon3_keV"],
        levels.levels.iter().map(|l| vec![l.index as f64, l.energy_kev]),
    )?;
    let path = out.join("spectrum.csv");
    write(&path, &buf)?;
    Ok(Done { summary: format!("states={} file={}", levels.len(), path.display()), unconverged: false })
}

fn scan(cfg: &RunConfig, out: &Path) -> Result<Done> {
    let grid = cfg.grid()?;
    let system = cfg.system(&grid)?;
    let mesh = match &cfg.scan {
        Some(m) => m.values("scan")?,
        None => pipeline::default_scan_mesh(),
    };
    let result = threshold_scan(&system, &mesh, &grid)?;
    write(&out.join("scan.csv"), &scan_csv(&result)?)?;
    write(&out.join("crossings.json"), &json_bytes(&crossings_json(&result)))?;
    let stars: Vec<String> = result.crossings.iter().map(|c| format_sig(c.epsilon2_star_kev)).collect();
    Ok(Done {
        summary: format!("points={} crossings={} epsilon2_star_keV={}", result.points.len(), stars.len(), stars.join(";")),
        unconverged: false,
    })
}

fn curve_svg(curve: &CrossSectionCurve, fits: &[&FitResult], title: &str) -> String {
    let mut series = vec![Series {
        label: "computed",
        color: "black",
        dashed: false,
        points: curve.points.iter().map(|p| (p.e_cm_kev, p.sigma)).collect(),
    }];
    for f in fits {
        let (label, color, dashed) = match f.model {
            FitModel::Fano => ("Fano fit", "#c0392b", false),
            FitModel::BreitWigner => ("Breit-Wigner fit", "#2c6fbb", true),
        };
        series.push(Series {
            label,
            color,
            dashed,
            points: curve.points.iter().map(|p| (p.e_cm_kev, f.params.evaluate(p.e_cm_kev))).collect(),
        });
    }
    line_plot(title, "E (keV)", "sigma (fm^2)", &series)
}

fn scatter(cfg: &RunConfig, out: &Path, svg: bool) -> Result<Done> {
    let grid = cfg.grid()?;
    let system = cfg.system(&grid)?;
    let energies = match &cfg.scatter {
        Some(m) => m.values("scatter")?,
        None => {
            let (_, hi) = elastic_window_kev(&system)?;
            curve_mesh().into_iter().filter(|&e| e < hi).collect()
        }
    };
    let curve = cross_section_curve(&system, &grid, &energies)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    let path = out.join("curve.csv");
    write(&path, &buf)?;
    if svg {
        write(&out.join("curve.svg"), curve_svg(&curve, &[], "elastic cross section").as_bytes())?;
    }
    Ok(Done { summary: format!("points={} file={}", curve.points.len(), path.display()), unconverged: false })
}

fn fit_cmd(input: &Path, model: FitModel, window: WindowMode, out: &Path, svg: bool) -> Result<Done> {
    let file = fs::File::open(input)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
    let curve = CrossSectionCurve::read_csv(file)?;
    let result = fit(&curve, model, Seed::Auto, window)?;
    let path = out.join("fit.json");
    write(&path, &json_bytes(&result.to_json()))?;
    if svg {
        write(&out.join("fit.svg"), curve_svg(&curve, &[&result], "fit").as_bytes())?;
    }
    let q = result.q().map(|q| format!(" q={}", format_sig(q))).unwrap_or_default();
    Ok(Done {
        summary: format!(
            "converged={}{q} residual_norm={} file={}",
            result.converged,
            format_sig(result.residual_norm),
            path.display()
        ),
        unconverged: !result.converged,
    })
}

fn reproduce(preset: Preset, out: &Path, svg: bool) -> Result<Done> {
    let rep = pipeline::reproduce(preset)?;
    rep.write_artifacts(out)?;
    if svg {
        for c in &rep.curves {
            let title = format!("epsilon2 = {} keV", format_sig(c.epsilon2_kev));
            let name = format!("overlay_eps{}keV.svg", format_sig(c.epsilon2_kev));
            write(&out.join(name), curve_svg(&c.curve, &[&c.fano, &c.breit_wigner], &title).as_bytes())?;
        }
    }
    let qs: Vec<String> = rep.q_values.iter().map(|&q| format_sig(q)).collect();
    Ok(Done {
        summary: format!(
            "preset={} q_values={} q_spread={} same_q={} report={}",
            preset.name(),
            qs.join(";"),
            format_sig(rep.q_spread),
            rep.same_q(),
            out.join("report.txt").display()
        ),
        unconverged: !rep.unconverged.is_empty(),
    })
}
