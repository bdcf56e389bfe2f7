use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use roughspt::io::read_path_file;
use roughspt::market::{master_formula_check, wealth as wealth_record, MarketPath, PortfolioSpec};
use roughspt::models::{figure1 as run_figure1, DiffusionSpec, SimulationConfig};
use roughspt::path::{Partition, PartitionSequence, SampledPath};
use roughspt::rough::{rie_diagnostic, LiftKind, RoughLift, DiscreteMeasure, SHRINK_THRESHOLD};
use roughspt::universal::{cover_gap_from_wealth, member_wealths, FunctionFamily};
use roughspt::Error;

use crate::manifest::ManifestBuilder;
use crate::{Figure1Args, InputKind, LiftArgs, LiftChoice, MarketArgs, UniversalArgs, WealthArgs, OUT_DIR_ENV};

/// Random triples used for the Chen residual of each lift.
const CHEN_TRIPLES: usize = 1000;

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(Error::Io(_)) | CliError::Io(..) => 1,
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn output_path(out: &Option<PathBuf>, default_name: &str) -> CliResult<PathBuf> {
    let path = match out {
        Some(p) => p.clone(),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
            dir.join(default_name)
        }
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(parent.to_path_buf(), e))?;
    }
    Ok(path)
}

/// `dir/stem<suffix>` next to `main`.
fn sibling(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    main.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Lib(Error::input(None, format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Lib(Error::input(Some(e.line() as u64), format!("{}: {e}", path.display()))))
}

fn level_label(cells: usize, index: usize) -> u32 {
    if cells.is_power_of_two() {
        cells.ilog2()
    } else {
        index as u32
    }
}

fn max_chen_residual(lift: &RoughLift, rng: &mut ChaCha8Rng) -> f64 {
    let n = lift.len();
    if n < 3 {
        return 0.0;
    }
    (0..CHEN_TRIPLES)
        .map(|_| {
            let mut idx = sample(rng, n, 3).into_vec();
            idx.sort_unstable();
            lift.chen_residual(idx[0], idx[1], idx[2])
        })
        .fold(0.0, f64::max)
}

pub fn lift(args: &LiftArgs, seed: Option<u64>) -> CliResult<()> {
    let mut manifest = ManifestBuilder::start("lift");
    let path = read_path_file(&args.input)?;
    if args.levels < 2 {
        return Err(Error::Parameter(format!("at least two levels are needed, got {}", args.levels)).into());
    }
    let cells = path.len() - 1;
    let coarsest = 1usize
        .checked_shl(args.levels - 1)
        .filter(|s| cells % s == 0)
        .ok_or_else(|| {
            Error::Parameter(format!(
                "{cells} cells cannot be halved {} times; choose fewer levels",
                args.levels - 1
            ))
        })?;
    let strides: Vec<usize> = (0..args.levels).map(|l| coarsest >> l).collect();
    let mut grids = Vec::with_capacity(strides.len());
    let mut labels = Vec::with_capacity(strides.len());
    for (l, &stride) in strides.iter().enumerate() {
        let nodes: Vec<usize> = (0..path.len()).step_by(stride).collect();
        grids.push(path.grid().select(&nodes)?);
        labels.push(level_label(cells / stride, l));
    }
    let seq = PartitionSequence::new(grids, labels.clone())?;
    let report = rie_diagnostic(&path, &seq, args.p)?;

    let out = output_path(&args.out, "lift_report.csv")?;
    write_file(&out, |w| report.convergence.write_csv(w))?;
    manifest.record(&out);

    let d = path.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let summary = sibling(&out, "_summary.csv");
    let mut rows = Vec::with_capacity(strides.len());
    for (&stride, &label) in strides.iter().zip(&labels) {
        let level: SampledPath = path.restrict(&Partition::stride(path.len(), stride)?)?;
        let mesh = level.grid().mesh();
        let lift = RoughLift::left_point(level, args.p)?;
        let chen = max_chen_residual(&lift, &mut rng);
        let bracket = lift.bracket();
        let terminal = bracket.value(lift.len() - 1);
        let diag: Vec<f64> = (0..d).map(|i| terminal[i * d + i]).collect();
        rows.push((label, lift.len(), mesh, chen, diag));
    }
    write_file(&summary, |w| {
        write!(w, "level,nodes,mesh,chen_max_residual")?;
        for i in 1..=d {
            write!(w, ",bracket_T_{i}")?;
        }
        writeln!(w)?;
        for (label, nodes, mesh, chen, diag) in &rows {
            write!(w, "{label},{nodes},{mesh},{chen}")?;
            for v in diag {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    manifest.record(&summary);

    if let Some(warning) = report.warning() {
        eprintln!("warning: {warning}");
    }
    let config = json!({
        "input": args.input,
        "levels": args.levels,
        "p": args.p,
        "chen_triples": CHEN_TRIPLES,
    });
    let diagnostics = json!({
        "converged": report.converged,
        "shrink_threshold": SHRINK_THRESHOLD,
        "kappa": report.kappa,
        "kappa_levels": report.kappa_levels,
    });
    manifest.finish(&out, config, seed, Some(diagnostics))?;
    Ok(())
}

fn load_market(args: &MarketArgs) -> CliResult<MarketPath> {
    let path = read_path_file(&args.market)?;
    let kind = match args.lift {
        LiftChoice::LeftPoint => LiftKind::LeftPoint,
        LiftChoice::Geometric => LiftKind::Geometric,
    };
    Ok(match args.market_kind {
        InputKind::Prices => MarketPath::from_prices(path, kind)?,
        InputKind::Weights => MarketPath::from_weights(path, kind)?,
    })
}

fn market_config(args: &MarketArgs) -> serde_json::Value {
    json!({ "market": args.market, "market_kind": args.market_kind, "lift": args.lift })
}

pub fn wealth(args: &WealthArgs, seed: Option<u64>) -> CliResult<()> {
    let mut manifest = ManifestBuilder::start("wealth");
    let spec: PortfolioSpec = read_json(&args.portfolio)?;
    let mut market = load_market(&args.market)?;
    if let Some(t) = args.horizon {
        if t != market.grid().horizon() {
            market = market.up_to(t)?;
        }
    }
    let pi = spec.build(&market)?;
    let record = wealth_record(&pi, &market, None)?;
    let out = output_path(&args.out, "wealth.csv")?;
    write_file(&out, |w| record.write_csv(w))?;
    manifest.record(&out);

    let mut diagnostics = None;
    if let Some(g) = spec.generator(market.dim())? {
        let n = market.len();
        let mut parts = Vec::new();
        let mut labels = Vec::new();
        if (n - 1) % 2 == 0 && n > 2 {
            parts.push(Partition::stride(n, 2)?);
            labels.push(level_label((n - 1) / 2, 0));
        }
        parts.push(Partition::full(n));
        labels.push(level_label(n - 1, 1));
        let check = master_formula_check(g, &market, &parts, &labels)?;
        let master = sibling(&out, "_master.csv");
        let converged = check.gaps.converged() || check.gaps.gaps().iter().all(|g| *g <= 1e-10);
        write_file(&master, |w| {
            writeln!(w, "level,mesh,gap,lhs_T,rhs_T")?;
            for (k, e) in check.gaps.entries.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", e.level, e.mesh, e.gap, check.lhs_terminal[k], check.rhs_terminal[k])?;
            }
            if !converged {
                writeln!(w, "WARN,,worst shrink factor {} exceeds {SHRINK_THRESHOLD},,", check.gaps.worst_shrink())?;
            }
            Ok(())
        })?;
        manifest.record(&master);
        diagnostics = Some(json!({ "master_formula_converged": converged }));
    }
    let mut config = market_config(&args.market);
    config["portfolio"] = serde_json::to_value(&spec).expect("spec serialises");
    config["T"] = json!(market.grid().horizon());
    manifest.finish(&out, config, seed, diagnostics)?;
    Ok(())
}

pub fn universal(args: &UniversalArgs, seed: Option<u64>) -> CliResult<()> {
    let mut manifest = ManifestBuilder::start("universal");
    let text = fs::read_to_string(&args.family)
        .map_err(|e| CliError::Lib(Error::input(None, format!("{}: {e}", args.family.display()))))?;
    let family = FunctionFamily::from_json(&text)?;
    let market = load_market(&args.market)?;
    if family.dim != market.dim() {
        return Err(Error::Dimension(format!(
            "family of dimension {} on a {}-asset market",
            family.dim,
            market.dim()
        ))
        .into());
    }
    let horizons = if args.t_grid.is_empty() {
        vec![market.grid().horizon()]
    } else {
        args.t_grid.clone()
    };
    let measure = DiscreteMeasure::uniform(family.len())?;
    let wealth = member_wealths(&family, &market)?;
    let report = cover_gap_from_wealth(&wealth, &measure, &market, &horizons)?;
    let out = output_path(&args.out, "cover.csv")?;
    write_file(&out, |w| report.write_csv(w))?;
    manifest.record(&out);

    let mut config = market_config(&args.market);
    config["family"] = serde_json::from_str(&family.to_json()).expect("family round-trips");
    config["measure"] = json!(args.measure);
    config["T_grid"] = json!(horizons);
    let diagnostics = json!({ "slope": report.slope, "decreasing": report.decreasing });
    manifest.finish(&out, config, seed, Some(diagnostics))?;
    Ok(())
}

/// Model and Monte Carlo settings of the Figure-1 experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Config {
    pub model: DiffusionSpec,
    pub simulation: SimulationConfig,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config {
            model: DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, 0.0).expect("default model is valid"),
            simulation: SimulationConfig::new(1e-3, 10.0, 2000, 1),
        }
    }
}

pub fn figure1(args: &Figure1Args, seed: Option<u64>) -> CliResult<()> {
    let mut manifest = ManifestBuilder::start("figure1");
    let mut config = match &args.config {
        Some(p) => read_json::<Figure1Config>(p)?,
        None => Figure1Config::default(),
    };
    if let Some(s) = seed {
        config.simulation.seed = s;
    }
    let fig = run_figure1(&config.model, &config.simulation)?;
    let out = output_path(&args.out, "figure1.csv")?;
    write_file(&out, |w| fig.result.write_csv(w))?;
    manifest.record(&out);

    let meta = out.with_extension("meta.json");
    let mut sidecar = fig.result.metadata.clone();
    sidecar["curves"] = json!(fig.result.curves.iter().map(|c| c.name.clone()).collect::<Vec<_>>());
    let text = serde_json::to_string_pretty(&sidecar).expect("metadata serialises");
    write_file(&meta, |w| writeln!(w, "{text}"))?;
    manifest.record(&meta);

    let echo = serde_json::to_value(&config).expect("config serialises");
    manifest.finish(&out, echo, Some(config.simulation.seed), None)?;
    Ok(())
}
