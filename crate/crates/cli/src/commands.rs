use std::collections::BTreeMap;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hazgrid::hexgrid::{hexagons_geojson, layers_csv};
use hazgrid::ingest::{synth_region, RegionBundle, SynthSpec};
use hazgrid::optimizer::{
    marginal_sweep, solve, InstanceConfig, Mode, Objective, OptimizationResult, SolverConfig,
};
use hazgrid::region::{Region, RegionConfig};
use hazgrid::riskmodel::{compare_fields, Scenario};
use hazgrid::scaling::{optimal_distance_curve, optimal_ri_curve, phase_averaged_beta};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, CostArg, CurveArg, ModeArg, RegionArgs, ScenarioArgs, SolverArgs};

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    threads: Option<usize>,
    out: &'a Path,
    command: &'a Command,
    /// Checksums of the region and scenario actually used.
    inputs: BTreeMap<&'static str, String>,
}

struct Run<'a> {
    cli: &'a Cli,
    inputs: BTreeMap<&'static str, String>,
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut r = Run {
        cli,
        inputs: BTreeMap::new(),
    };
    match &cli.command {
        Command::Serve {
            host,
            port,
            data_dir,
        } => return serve(host, *port, data_dir.clone()),
        Command::Synth { n, m, spec } => r.synth(*n, *m, spec.as_deref())?,
        Command::Ingest { input } => r.ingest(input)?,
        Command::Tessellate { region } => r.tessellate(region)?,
        Command::Risk { region, scenario } => r.risk(region, scenario)?,
        Command::Optimize { .. } => r.optimize()?,
        Command::Sweep {
            region,
            scenario,
            objective,
            delta_max,
            eps_rel,
            solver,
        } => r.sweep(region, scenario, objective, *delta_max, *eps_rel, solver)?,
        Command::Scaling {
            region,
            scenario,
            n_list,
            curve,
            coarse_edge_m,
            solver,
        } => r.scaling(region, scenario, n_list, *curve, *coarse_edge_m, solver)?,
    }
    r.manifest()
}

fn serve(host: &str, port: u16, data_dir: Option<PathBuf>) -> Result<()> {
    let ip: IpAddr = host
        .parse()
        .with_context(|| format!("bad --host {host:?}"))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(hazgrid_service::serve(SocketAddr::new(ip, port), data_dir))?;
    Ok(())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

/// The solver result minus its timing, so reruns compare byte for byte.
fn result_json(res: &OptimizationResult) -> Result<Value> {
    let mut v = serde_json::to_value(res)?;
    if let Value::Object(map) = &mut v {
        map.remove("wall_seconds");
    }
    Ok(v)
}

fn objective(name: &str, alphas: Option<(f64, f64)>) -> Result<Objective> {
    let o = match alphas {
        Some((alpha1, alpha2)) if name == "weighted" => Objective::Weighted { alpha1, alpha2 },
        Some(_) => bail!("--alpha1/--alpha2 only apply to the weighted objective"),
        None => Objective::parse(name)?,
    };
    o.validate()?;
    Ok(o)
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.cli.out.join(name)
    }

    fn manifest(&self) -> Result<()> {
        let sub = match &self.cli.command {
            Command::Synth { .. } => "synth",
            Command::Ingest { .. } => "ingest",
            Command::Tessellate { .. } => "tessellate",
            Command::Risk { .. } => "risk",
            Command::Optimize { .. } => "optimize",
            Command::Sweep { .. } => "sweep",
            Command::Scaling { .. } => "scaling",
            Command::Serve { .. } => return Ok(()),
        };
        let m = Manifest {
            tool: "hazgrid",
            version: env!("CARGO_PKG_VERSION"),
            seed: self.cli.seed,
            threads: self.cli.threads,
            out: &self.cli.out,
            command: &self.cli.command,
            inputs: self.inputs.clone(),
        };
        write_json(&self.out(&format!("manifests/{sub}.json")), &m)
    }

    fn save_bundle(&mut self, bundle: &RegionBundle) -> Result<()> {
        let dir = self.out("bundle");
        bundle.write_dir(&dir)?;
        self.inputs.insert("bundle", bundle.checksum());
        let summary = json!({
            "name": bundle.name,
            "checksum": bundle.checksum(),
            "nodes": bundle.nodes.len(),
            "edges": bundle.edges.len(),
            "rasters": bundle.rasters.keys().collect::<Vec<_>>(),
            "points": bundle.point_sets.keys().collect::<Vec<_>>(),
            "polygons": bundle.polygon_sets.keys().collect::<Vec<_>>(),
        });
        write_json(&self.out("bundle.json"), &summary)
    }

    fn synth(&mut self, n: usize, m: usize, spec: Option<&Path>) -> Result<()> {
        let spec: SynthSpec = match spec {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => SynthSpec::default(),
        };
        let bundle = synth_region(self.cli.seed, n, m, &spec)?;
        self.save_bundle(&bundle)
    }

    fn ingest(&mut self, input: &Path) -> Result<()> {
        let bundle = RegionBundle::read_dir(input)
            .with_context(|| format!("reading region from {}", input.display()))?;
        self.inputs.insert("source", input.display().to_string());
        self.save_bundle(&bundle)
    }

    fn region(&mut self, args: &RegionArgs) -> Result<Region> {
        let dir = args.bundle.clone().unwrap_or_else(|| self.out("bundle"));
        let bundle = RegionBundle::read_dir(&dir)
            .with_context(|| format!("reading region from {}", dir.display()))?;
        self.inputs.insert("bundle", bundle.checksum());
        let mut config = RegionConfig::default();
        if let Some(e) = args.edge_m {
            config.edge_m = e;
        }
        if let Some(c) = args.cutoff_m {
            config.cutoff_m = c;
        }
        Ok(Region::build(&bundle, config)?)
    }

    fn scenario(&mut self, args: &ScenarioArgs) -> Result<Scenario> {
        let s = match (&args.scenario, &args.preset) {
            (Some(p), _) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Scenario::from_json(&text).with_context(|| format!("scenario {}", p.display()))?
            }
            (None, Some(name)) => Scenario::preset(name)?,
            (None, None) => Scenario::default(),
        };
        self.inputs.insert("scenario", serde_json::to_string(&s)?);
        Ok(s)
    }

    fn solver(&self, args: &SolverArgs) -> Result<SolverConfig> {
        if !(args.time_limit > 0.0) {
            bail!("--time-limit must be positive");
        }
        let mut cfg = SolverConfig {
            time_limit_s: args.time_limit,
            seed: self.cli.seed,
            ..SolverConfig::default()
        };
        if let Some(t) = args.exact_threshold {
            cfg.exact_threshold = t;
        }
        if let Some(s) = args.starts {
            cfg.starts = s;
        }
        Ok(cfg)
    }

    fn tessellate(&mut self, args: &RegionArgs) -> Result<()> {
        let region = self.region(args)?;
        let layers = region.layers_with_sttfs()?;
        write(&self.out("layers.csv"), layers_csv(&layers))?;
        write_json(&self.out("hexagons.geojson"), &hexagons_geojson(&layers))?;
        write_json(&self.out("region.json"), &region.summary())
    }

    fn risk(&mut self, args: &RegionArgs, sargs: &ScenarioArgs) -> Result<()> {
        let region = self.region(args)?;
        let scenario = self.scenario(sargs)?;
        let field = region.score(&scenario)?;
        write(&self.out("risk.csv"), field.to_csv())?;
        write_json(
            &self.out("risk.json"),
            &json!({ "scenario": scenario, "summary": field.summary() }),
        )
    }

    fn optimize(&mut self) -> Result<()> {
        let Command::Optimize {
            region: rargs,
            scenario: sargs,
            mode,
            objective: oname,
            alpha1,
            alpha2,
            stations,
            delta,
            serve_other,
            cost,
            solver,
        } = &self.cli.command
        else {
            unreachable!()
        };
        let region = self.region(rargs)?;
        let scenario = self.scenario(sargs)?;
        let cfg = self.solver(solver)?;
        if *stations == Some(0) {
            bail!("--stations must be positive");
        }
        let instance = InstanceConfig {
            mode: match mode {
                ModeArg::Relocate => Mode::Relocate,
                ModeArg::Add => Mode::Add,
            },
            objective: objective(oname, alpha1.zip(*alpha2))?,
            stations: *stations,
            delta: *delta,
            serve_other: *serve_other,
        };
        let baseline = region.score(&scenario)?;
        let inst = match cost {
            CostArg::Risk => region.risk_instance(&baseline, &instance)?,
            CostArg::Distance => region.distance_instance(&instance)?,
        };
        let res = solve(&inst, &cfg)?;
        let optimized = region.rescore(&baseline, &res.open_cells)?;
        let report = compare_fields(&baseline, &optimized)?;
        let summary = json!({
            "cost": cost,
            "stations_before": region.station_cells,
            "stations_after": res.open_cells,
            "baseline": baseline.summary(),
            "optimized": optimized.summary(),
            "optimization": result_json(&res)?,
        });
        write_json(&self.out("optimize.json"), &summary)?;
        write_json(&self.out("compare.json"), &report)?;
        write(&self.out("optimized_risk.csv"), optimized.to_csv())
    }

    fn sweep(
        &mut self,
        rargs: &RegionArgs,
        sargs: &ScenarioArgs,
        oname: &str,
        delta_max: usize,
        eps_rel: f64,
        solver: &SolverArgs,
    ) -> Result<()> {
        if delta_max == 0 {
            bail!("--delta-max must be at least 1");
        }
        let region = self.region(rargs)?;
        let scenario = self.scenario(sargs)?;
        let cfg = self.solver(solver)?;
        let baseline = region.score(&scenario)?;
        let instance = InstanceConfig {
            mode: Mode::Add,
            objective: objective(oname, None)?,
            ..InstanceConfig::default()
        };
        let inst = region.risk_instance(&baseline, &instance)?;
        let curve = marginal_sweep(&inst, delta_max, eps_rel, &cfg)?;
        let mut csv = String::from("delta,objective,gain\n");
        for p in &curve.points {
            csv += &format!("{},{},{}\n", p.delta, p.objective, p.gain);
        }
        write(&self.out("marginal.csv"), csv)?;
        write_json(&self.out("marginal.json"), &curve)
    }

    fn scaling(
        &mut self,
        rargs: &RegionArgs,
        sargs: &ScenarioArgs,
        n_list: &[usize],
        curve: CurveArg,
        coarse_edge_m: f64,
        solver: &SolverArgs,
    ) -> Result<()> {
        if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
            bail!("--n-list must be positive and strictly ascending");
        }
        let region = self.region(rargs)?;
        let cfg = self.solver(solver)?;
        let c = match curve {
            CurveArg::Distance => optimal_distance_curve(&region, n_list, &cfg)?,
            CurveArg::Risk => {
                let scenario = self.scenario(sargs)?;
                optimal_ri_curve(&region, &scenario, n_list, &cfg)?
            }
        };
        write(&self.out("curve.csv"), c.to_csv())?;
        let pooled = c.pooled_facilities(&region.layers);
        let fit = phase_averaged_beta(&region.layers, &pooled, coarse_edge_m);
        let out = json!({
            "curve": c,
            "fit": fit.as_ref().ok(),
            "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        });
        write_json(&self.out("scaling.json"), &out)
    }
}
