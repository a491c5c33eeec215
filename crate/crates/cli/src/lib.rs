//! Command-line front end: `gen`, `solve`, `sweep`, `report`, `serve`.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csplan_core::geojson::emit_geojson;
use csplan_core::net::{load_network, load_od_csv, synthesize_network, FlowSeries};
use csplan_core::objectives::{DnSum, EvalOptions, SocMode};
use csplan_core::scenario::{
    comparison_csv, comparison_text, load_scenarios, paper_scenarios, parse_weight, run_scenario,
    sweep, ComparisonRow, RunInputs, Scenario,
};
use csplan_core::solver::{CEConfig, SolveStatus};
use csplan_core::{Error, PlanningParams, RunRecord, TrafficNetwork, Weights};
use csplan_service::ServiceConfig;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "csplan", version, about = "Plan EV charging-station placements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic network.
    Gen {
        #[arg(long, default_value_t = 183)]
        nodes: usize,
        #[arg(long, default_value_t = 26)]
        regions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also store the distance matrix.
        #[arg(long)]
        with_dist: bool,
    },
    /// Solve one weight setting.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        /// Four weights (flow, charging time, distance, DN), e.g. `0.7,0.1,0.1,0.1`
        /// or `0.5/3`-style fractions. Scaled to sum to one.
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<String>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value = "custom")]
        name: String,
        #[command(flatten)]
        ce: CeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every scenario of a file and write the comparison table.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// JSON list of scenarios; the built-in presets when omitted.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        ce: CeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a stored run and optionally export its map.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Network to recompute metrics on; defaults to the path in the record.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long)]
        geojson: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        runs: Option<PathBuf>,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    net: PathBuf,
    /// Per-node flow time series (CSV).
    #[arg(long)]
    flows: Option<PathBuf>,
    /// Horizon the flow series spans, days.
    #[arg(long, default_value_t = 7.0)]
    horizon_days: f64,
    /// OD matrix CSV replacing the one in the network file.
    #[arg(long)]
    od: Option<PathBuf>,
    /// Full planning-parameter JSON; unspecified fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Treat node coordinates as longitude/latitude.
    #[arg(long)]
    latlon: bool,
    #[arg(long, value_enum, default_value_t = DnSumArg::SelectedNodes)]
    dn_sum: DnSumArg,
    /// Monte Carlo draws of the plug-in SoC per node; 0 uses its mean.
    #[arg(long, default_value_t = 0)]
    soc_draws: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DnSumArg {
    SelectedNodes,
    AllNodes,
}

#[derive(Debug, Args)]
struct CeArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CE settings as JSON; the flags below override it.
    #[arg(long)]
    ce: Option<PathBuf>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    elite_frac: Option<f64>,
    #[arg(long)]
    stop_eps: Option<f64>,
}

struct Loaded {
    net: TrafficNetwork,
    series: Option<FlowSeries>,
    params: PlanningParams,
    options: EvalOptions,
    net_path: String,
    flows_path: Option<String>,
}

impl InputArgs {
    fn load(&self, ce_seed: u64) -> Result<Loaded, Error> {
        let mut net = load_network(&self.net, self.latlon)?;
        if let Some(od) = &self.od {
            net = net.with_od_flow(load_od_csv(od, net.len())?)?;
        }
        let series = match &self.flows {
            Some(path) => Some(FlowSeries::load_csv(path, net.len(), self.horizon_days)?),
            None => None,
        };
        let params = match &self.params {
            Some(path) => read_json(path)?,
            None => PlanningParams::default(),
        };
        let options = EvalOptions {
            dn_sum: match self.dn_sum {
                DnSumArg::SelectedNodes => DnSum::SelectedNodes,
                DnSumArg::AllNodes => DnSum::AllNodes,
            },
            soc: match self.soc_draws {
                0 => SocMode::Expected,
                draws => SocMode::MonteCarlo { draws, seed: ce_seed },
            },
        };
        Ok(Loaded {
            net,
            series,
            params,
            options,
            net_path: self.net.display().to_string(),
            flows_path: self.flows.as_ref().map(|p| p.display().to_string()),
        })
    }
}

impl Loaded {
    fn inputs(&self) -> RunInputs<'_> {
        RunInputs {
            net: &self.net,
            series: self.series.as_ref(),
            params: &self.params,
            options: self.options,
            network_path: Some(&self.net_path),
            flows_path: self.flows_path.as_deref(),
        }
    }
}

impl CeArgs {
    fn config(&self) -> Result<CEConfig, Error> {
        let mut cfg: CEConfig = match &self.ce {
            Some(path) => read_json(path)?,
            None => CEConfig::default(),
        };
        cfg.seed = self.seed;
        if let Some(v) = self.pop_size {
            cfg.pop_size = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.elite_frac {
            cfg.elite_frac = v;
        }
        if let Some(v) = self.stop_eps {
            cfg.stop_eps = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|err| Error::io(path, err))?;
    serde_json::from_str(&text).map_err(|err| Error::parse(path.display().to_string(), err))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|err| Error::io(path, err))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))
}

fn parse_weights(raw: &[String]) -> Result<Weights, Error> {
    let values: Vec<f64> = raw.iter().map(|s| parse_weight(s.trim())).collect::<Result<_, _>>()?;
    let values: [f64; 4] = values
        .try_into()
        .map_err(|v: Vec<f64>| Error::validation("weights", format!("expected 4 weights, got {}", v.len())))?;
    Weights::normalized(values)
}

fn with_budget(mut scenario: Scenario, budget: Option<usize>) -> Scenario {
    if budget.is_some() {
        scenario.overrides.budget = budget;
    }
    scenario
}

fn converged(status: &SolveStatus) -> bool {
    matches!(status, SolveStatus::Converged { .. })
}

fn print_record(record: &RunRecord, path: Option<&Path>) {
    let b = &record.breakdown;
    println!("run       {}", record.run_id);
    if let Some(path) = path {
        println!("record    {}", path.display());
    }
    println!("scenario  {}", record.scenario.name);
    let w = record.scenario.weights.as_array();
    println!("weights   {:.4} {:.4} {:.4} {:.4}", w[0], w[1], w[2], w[3]);
    match record.status {
        SolveStatus::Converged { iteration } => println!("status    converged at iteration {iteration}"),
        SolveStatus::MaxIterations => println!("status    iteration limit reached"),
    }
    println!("gamma     {:.6}", b.gamma);
    println!(
        "raw       flow {:.3}  ch {:.3} h  dis {:.3}  dn {:.3}",
        b.j_flow, b.j_ch, b.j_dis, b.j_dn
    );
    let stations: Vec<String> = record.placement.selected().map(|n| n.to_string()).collect();
    println!("stations  {}", stations.join(" "));
    print!("{}", comparison_text(&[ComparisonRow::from_record(record)]));
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Gen {
            nodes,
            regions,
            seed,
            out,
            with_dist,
        } => {
            let net = synthesize_network(nodes, regions, seed)?;
            let doc = serde_json::to_string_pretty(&net.to_document(with_dist)).expect("network serializes");
            write_text(&out, &doc)?;
            println!("wrote {} ({} nodes, {} regions, id {})", out.display(), net.len(), net.n_regions(), net.fingerprint());
            Ok(0)
        }
        Command::Solve {
            input,
            weights,
            budget,
            name,
            ce,
            out,
        } => {
            let cfg = ce.config()?;
            let weights = parse_weights(&weights)?;
            let loaded = input.load(cfg.seed)?;
            let scenario = with_budget(Scenario::new(name, weights), budget);
            let record = run_scenario(&loaded.inputs(), &scenario, &cfg)?;
            ensure_dir(&out)?;
            let path = record.save(&out)?;
            print_record(&record, Some(&path));
            Ok(if converged(&record.status) { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Sweep {
            input,
            scenarios,
            budget,
            ce,
            out,
        } => {
            let cfg = ce.config()?;
            let list = match &scenarios {
                Some(path) => load_scenarios(path)?,
                None => paper_scenarios(),
            };
            let list: Vec<Scenario> = list.into_iter().map(|s| with_budget(s, budget)).collect();
            let loaded = input.load(cfg.seed)?;
            let result = sweep(&loaded.inputs(), &list, &cfg)?;
            ensure_dir(&out)?;
            for record in &result.records {
                record.save(&out)?;
            }
            let rows = result.rows();
            write_text(&out.join("comparison.csv"), &comparison_csv(&rows))?;
            let text = comparison_text(&rows);
            write_text(&out.join("comparison.txt"), &text)?;
            print!("{text}");
            for failure in &result.failures {
                eprintln!("scenario {:?} failed: {}", failure.scenario, failure.message);
            }
            if !result.failures.is_empty() {
                Ok(EXIT_VALIDATION)
            } else if result.records.iter().any(|r| !converged(&r.status)) {
                Ok(EXIT_NOT_CONVERGED)
            } else {
                Ok(0)
            }
        }
        Command::Report { run, net, geojson } => {
            let record = RunRecord::load(&run)?;
            print_record(&record, None);
            let net_path = net.or_else(|| record.network_path.as_ref().map(PathBuf::from));
            let Some(net_path) = net_path else {
                if geojson.is_some() {
                    return Err(Error::validation("net", "the record names no network; pass --net"));
                }
                return Ok(0);
            };
            let network = load_network(&net_path, false)?;
            let series = match &record.flows_path {
                Some(path) => Some(FlowSeries::load_csv(path, network.len(), record.params.horizon_days)?),
                None => None,
            };
            let again = record.recompute_metrics(&network, series.as_ref())?;
            let drift = (again.flow_supported_pct - record.metrics.flow_supported_pct).abs()
                + (again.dn_demand_kwh - record.metrics.dn_demand_kwh).abs();
            println!("recomputed metrics on {} (drift {drift:.3e})", net_path.display());
            if let Some(path) = geojson {
                let doc = emit_geojson(&network, &record.placement)?;
                write_text(&path, &serde_json::to_string_pretty(&doc).expect("geojson serializes"))?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Serve {
            port,
            host,
            runs,
            static_dir,
            workers,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|err| Error::validation("host", format!("{err}")))?;
            if let Some(dir) = &runs {
                ensure_dir(dir)?;
            }
            let config = ServiceConfig {
                runs_dir: runs,
                workers: workers.max(1),
                static_dir,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|err| Error::io("tokio runtime", err))?;
            runtime
                .block_on(csplan_service::serve(addr, config))
                .map_err(|err| Error::io(addr.to_string(), err))?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_IO
            }
        }
    }
}
