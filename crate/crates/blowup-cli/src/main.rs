//! `blowup`: certified charts, blow-up time tables, `t_max` surfaces and
//! separatrix scans from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use blowup::drivers::{self, ChartParams, Model, Outcome, ScanConfig};
use blowup::integrate::IntegratorConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "blowup", version, about = "Validated blow-up solutions of polynomial ODEs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify stable-manifold charts at the model's equilibria.
    Chart(Common),
    /// Blow-up times along the extended manifold of the first example.
    Table(Common),
    /// `t_max` over the unit square of a two-dimensional Poincaré chart.
    Surface(Common),
    /// Classify points on a segment across the blow-up separatrix.
    Scan(Common),
    /// Connecting orbits from the bounded source of the third example.
    Connect(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Builtin name (example1, example2, example3) or model file path.
    #[arg(long)]
    model: Option<String>,
    /// Taylor truncation order of the charts.
    #[arg(long = "N")]
    n_trunc: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Eigenvector scaling.
    #[arg(long = "sigma-eig", allow_hyphen_values = true)]
    sigma_eig: Option<f64>,
    /// Upper end of the radii-polynomial search.
    #[arg(long)]
    rstar: Option<f64>,
    /// Equilibrium name(s) from the model; all chartable points by default.
    #[arg(long)]
    point: Vec<String>,
    /// Plain-text `key = value` file supplying any of the options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface lattice size per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of scan points (split between the two sides).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "half-length")]
    half_length: Option<f64>,
    #[arg(long = "min-distance")]
    min_distance: Option<f64>,
    /// Taylor order of the rigorous integrator.
    #[arg(long)]
    order: Option<usize>,
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
    Certification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

/// Command-line values layered over the config file.
struct Settings {
    cli: Common,
    file: BTreeMap<String, String>,
}

impl Settings {
    fn new(cli: Common) -> Result<Settings, Failure> {
        let file = match &cli.config {
            Some(p) => parse_config(p).map_err(Failure::Usage)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { cli, file })
    }

    fn lookup<T: std::str::FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Failure::Usage(anyhow!("config: bad value {v:?} for {key}"))),
        }
    }

    fn positive(&self, v: Option<f64>, key: &str, default: f64) -> Result<f64, Failure> {
        let v = self.lookup(v, key)?.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Usage(anyhow!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, v: Option<usize>, key: &str, default: usize) -> Result<usize, Failure> {
        let v = self.lookup(v, key)?.unwrap_or(default);
        if v == 0 {
            return Err(Failure::Usage(anyhow!("{key} must be positive")));
        }
        Ok(v)
    }

    fn model(&self, default: Option<&str>) -> Result<Model, Failure> {
        let name = self
            .lookup(self.cli.model.clone(), "model")?
            .or(default.map(str::to_string))
            .ok_or_else(|| Failure::Usage(anyhow!("--model is required")))?;
        Model::load(&name).map_err(|e| Failure::Usage(anyhow!("model {name}: {e}")))
    }

    fn out(&self) -> Result<PathBuf, Failure> {
        let out = self.lookup(self.cli.out.clone(), "out")?.ok_or_else(|| Failure::Usage(anyhow!("--out is required")))?;
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(out)
    }

    fn chart(&self, n_default: usize, sigma_default: Option<f64>) -> Result<ChartParams, Failure> {
        let sigma = self.lookup(self.cli.sigma_eig, "sigma_eig")?.or(sigma_default);
        if sigma == Some(0.0) {
            return Err(Failure::Usage(anyhow!("sigma_eig must be nonzero")));
        }
        Ok(ChartParams {
            n_trunc: self.count(self.cli.n_trunc, "N", n_default)?,
            sigma,
            r_star: self.positive(self.cli.rstar, "rstar", 1e-6)?,
        })
    }

    fn points(&self) -> Vec<String> {
        if !self.cli.point.is_empty() {
            return self.cli.point.clone();
        }
        self.file.get("point").map(|v| v.split_whitespace().map(str::to_string).collect()).unwrap_or_default()
    }

    fn integrator(&self) -> Result<IntegratorConfig, Failure> {
        let mut cfg = IntegratorConfig::default();
        cfg.order = self.count(self.cli.order, "order", cfg.order)?;
        if cfg.order < 4 {
            return Err(Failure::Usage(anyhow!("order must be at least 4")));
        }
        Ok(cfg)
    }
}

fn parse_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("config {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_chart(s: &Settings) -> Result<(), Failure> {
    let model = s.model(None)?;
    let params = s.chart(100, None)?;
    let out = s.out()?;
    let mut names = s.points();
    if names.is_empty() {
        names = drivers::chartable_points(&model);
    }
    if let Some(bad) = names.iter().find(|n| model.guess(n).is_err()) {
        return Err(Failure::Usage(anyhow!("model has no point named {bad:?}")));
    }
    let mut summary = csv::Writer::from_path(out.join("charts.csv")).context("charts.csv")?;
    summary.write_record(["point", "N", "sigma", "Y0", "Z1", "Z2", "r0", "status"]).context("charts.csv")?;
    let mut failed = Vec::new();
    for name in &names {
        match drivers::chart_at(&model, name, &params) {
            Ok(chart) => {
                let c = &chart.certificate;
                println!("{name}: certified, r0 = {:.6e} (N = {})", c.r0.hi(), c.n_trunc);
                write(&out.join(format!("chart_{name}.json")), &chart.to_json())?;
                write(&out.join(format!("certificate_{name}.txt")), &c.report())?;
                summary
                    .write_record([
                        name.clone(),
                        c.n_trunc.to_string(),
                        format!("{:e}", chart.skeleton.sigma),
                        format!("{:e}", c.y0.hi()),
                        format!("{:e}", c.z1.hi()),
                        format!("{:e}", c.z2.hi()),
                        format!("{:e}", c.r0.hi()),
                        "certified".into(),
                    ])
                    .context("charts.csv")?;
            }
            Err(e) => {
                println!("{name}: FAILED: {e}");
                write(&out.join(format!("certificate_{name}.txt")), &format!("FAILED: {e}\n"))?;
                summary
                    .write_record([name.clone(), params.n_trunc.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), format!("failed: {e}")])
                    .context("charts.csv")?;
                failed.push(name.clone());
            }
        }
    }
    summary.flush().context("charts.csv")?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Certification(format!("no certificate for {}", failed.join(", "))))
    }
}

fn cmd_table(s: &Settings) -> Result<(), Failure> {
    let model = s.model(Some("example1"))?;
    let params = s.chart(drivers::TABLE_N, Some(drivers::TABLE_SIGMA))?;
    let out = s.out()?;
    let point = s.points().into_iter().next().unwrap_or_else(|| "p2".to_string());
    let chart = drivers::chart_at(&model, &point, &params).map_err(|e| Failure::Certification(e.to_string()))?;
    let rows = drivers::blowup_table(&chart, &s.integrator()?).map_err(|e| Failure::Run(e.into()))?;
    let file = fs::File::create(out.join("table1.csv")).context("table1.csv")?;
    drivers::write_table_csv(&rows, file).map_err(|e| Failure::Run(e.into()))?;
    for r in &rows {
        println!("{} t_max in [{:.15}, {:.15}] {}", r.label, r.total.lo(), r.total.hi(), if r.pass { "PASS" } else { "FAIL" });
    }
    match rows.iter().filter(|r| !r.pass).map(|r| r.label.as_str()).collect::<Vec<_>>() {
        v if v.is_empty() => Ok(()),
        v => Err(Failure::Certification(format!("rows {} miss the reference enclosures", v.join(", ")))),
    }
}

fn cmd_surface(s: &Settings) -> Result<(), Failure> {
    let model = s.model(Some("example2"))?;
    let params = s.chart(60, None)?;
    let grid = s.count(s.cli.grid, "grid", 51)?;
    let out = s.out()?;
    let point = s.points().into_iter().next().unwrap_or_else(|| "p2".to_string());
    let chart = drivers::chart_at(&model, &point, &params).map_err(|e| Failure::Certification(e.to_string()))?;
    let (series, cells) = drivers::tmax_surface(&chart, grid).map_err(|e| Failure::Run(e.into()))?;
    let file = fs::File::create(out.join("surface.csv")).context("surface.csv")?;
    drivers::write_surface_csv(&cells, file).map_err(|e| Failure::Run(e.into()))?;
    let valid = cells.iter().filter(|c| c.status == drivers::CellStatus::Valid).count();
    let failed = cells.iter().filter(|c| matches!(c.status, drivers::CellStatus::Failed(_))).count();
    println!("{valid} valid, {} invalid, {failed} failed cells; series error {:.3e}", cells.len() - valid - failed, series.error);
    if failed > 0 {
        return Err(Failure::Certification(format!("{failed} cells failed")));
    }
    Ok(())
}

fn cmd_scan(s: &Settings) -> Result<(), Failure> {
    let model = s.model(Some("example3"))?;
    let base = ScanConfig::default();
    let cfg = ScanConfig {
        points: s.count(s.cli.points, "points", base.points)?,
        half_length: s.positive(s.cli.half_length, "half_length", base.half_length)?,
        min_distance: s.positive(s.cli.min_distance, "min_distance", base.min_distance)?,
        chart: s.chart(base.chart.n_trunc, base.chart.sigma)?,
        integrator: s.integrator()?,
        ..base
    };
    let out = s.out()?;
    let report = drivers::separatrix_scan(&model, &cfg).map_err(|e| match e {
        drivers::DriverError::Config(m) => Failure::Usage(anyhow!(m)),
        e => Failure::Certification(e.to_string()),
    })?;
    let file = fs::File::create(out.join("scan.csv")).context("scan.csv")?;
    drivers::write_scan_csv(&report, file).map_err(|e| Failure::Run(e.into()))?;
    let summary = serde_json::json!({
        "p0s": report.p0s,
        "theta_end": report.theta_end,
        "tangent": report.tangent,
        "normal": report.normal,
        "t_p0s": report.t_p0s,
        "right_side_monotone": report.right_side_monotone(),
    });
    write(&out.join("scan_summary.json"), &serde_json::to_string_pretty(&summary).context("json")?)?;
    let count = |f: &dyn Fn(&Outcome) -> bool| report.points.iter().filter(|p| f(&p.outcome)).count();
    let inconclusive = count(&|o| matches!(o, Outcome::Inconclusive(_)));
    println!(
        "t_max(p0s) in [{:.12}, {:.12}]; {} blow-up, {} global, {inconclusive} inconclusive",
        report.t_p0s.lo(),
        report.t_p0s.hi(),
        count(&|o| *o == Outcome::BlowUp),
        count(&|o| *o == Outcome::Global)
    );
    if inconclusive > 0 {
        return Err(Failure::Certification(format!("{inconclusive} points inconclusive")));
    }
    Ok(())
}

fn cmd_connect(s: &Settings) -> Result<(), Failure> {
    let model = s.model(Some("example3"))?;
    let params = s.chart(100, None)?;
    let out = s.out()?;
    let results = drivers::example3_connections(&model, &params, &s.integrator()?);
    let mut json = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(c) => {
                println!("{} -> {}: certified (θ = {}, τ = {})", c.from, c.to, c.theta, c.tau.hi());
                json.push(serde_json::to_value(&c).context("json")?);
            }
            Err(e) => {
                println!("connection FAILED: {e}");
                json.push(serde_json::json!({ "error": e.to_string() }));
                failed += 1;
            }
        }
    }
    write(&out.join("connections.json"), &serde_json::to_string_pretty(&json).context("json")?)?;
    if failed > 0 {
        return Err(Failure::Certification(format!("{failed} connections not certified")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<(), Failure> {
        match cli.cmd {
            Command::Chart(c) => cmd_chart(&Settings::new(c)?),
            Command::Table(c) => cmd_table(&Settings::new(c)?),
            Command::Surface(c) => cmd_surface(&Settings::new(c)?),
            Command::Scan(c) => cmd_scan(&Settings::new(c)?),
            Command::Connect(c) => cmd_connect(&Settings::new(c)?),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Certification(m)) => {
            eprintln!("certification failed: {m}");
            ExitCode::from(1)
        }
    }
}
