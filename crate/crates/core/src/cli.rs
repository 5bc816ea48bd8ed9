//! Command-line front end: `analyze`, `diagram` and `verify`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::compactification::ConformalKind;
use crate::error::{Error, Result};
use crate::exact_solutions::{
    make_kerr, make_reissner_nordstrom, make_roberts, make_schwarzschild, make_synthetic_collapse,
    CatalogEntry, EntryId, RadialCompactifier, ScaleFactor,
};
use crate::mass_geometry::{
    classify, closure_scan, curvature_conditions, energy_condition, horizon_profile_with,
    horizon_root, mass_catalog, mass_generic, stay_criterion, ClosureReport, CurvatureReport,
    Curve, EnergyReport, HorizonProfile, MassSource, RegionClass, ScanConfig, ScanOutcome,
    StayConfig, StayReport,
};
use crate::penrose_bound::{penrose_bound, BoundConfig, BoundReport};
use crate::verify::{self, Suite};

pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "confhor",
    version,
    about = "Horizon, naked-singularity and mass-bound analysis in compactified charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the enabled stages and write a JSON report.
    Analyze(ConfigArgs),
    /// Write horizon-curve data as CSV.
    Diagram(ConfigArgs),
    /// Run a self-check suite.
    Verify {
        /// remark33, horizons, verdicts, penrose, gradients or all
        suite: String,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// key = value file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// schwarzschild, rn, roberts, kerr or synthetic
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub mass: Option<String>,
    #[arg(long = "Q", allow_hyphen_values = true)]
    pub charge: Option<String>,
    #[arg(long = "a", allow_hyphen_values = true)]
    pub spin: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// comma-separated subset of mass,horizon,naked,conditions,stay,penrose
    #[arg(long)]
    pub stages: Option<String>,
    /// horizon grid nodes
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// quadrature convergence tolerance
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mass,
    Horizon,
    Naked,
    Conditions,
    Stay,
    Penrose,
}

impl Stage {
    const ALL: [Stage; 6] = [
        Stage::Mass,
        Stage::Horizon,
        Stage::Naked,
        Stage::Conditions,
        Stage::Stay,
        Stage::Penrose,
    ];

    fn name(self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::Horizon => "horizon",
            Self::Naked => "naked",
            Self::Conditions => "conditions",
            Self::Stay => "stay",
            Self::Penrose => "penrose",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("stages: unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Schwarzschild,
    Rn,
    Roberts,
    Kerr,
    Synthetic,
}

impl FromStr for MetricId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "schwarzschild" => Self::Schwarzschild,
            "rn" | "reissner-nordstrom" => Self::Rn,
            "roberts" => Self::Roberts,
            "kerr" => Self::Kerr,
            "synthetic" => Self::Synthetic,
            other => {
                return Err(Error::Config(format!(
                    "metric: unknown id '{other}' (schwarzschild, rn, roberts, kerr, synthetic)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub root_xtol: f64,
    pub dtol: f64,
    pub quadrature_rtol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub metric: MetricId,
    pub mass: f64,
    pub charge: f64,
    pub spin: f64,
    pub sigma: f64,
    pub compactifier: Option<String>,
    pub stages: Vec<Stage>,
    pub horizon_grid: usize,
    pub quadrature_nodes: usize,
    pub refinement_depth: usize,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            metric: MetricId::Schwarzschild,
            mass: 1.0,
            charge: 0.0,
            spin: 0.5,
            sigma: 0.1,
            compactifier: None,
            stages: vec![Stage::Mass, Stage::Horizon, Stage::Naked],
            horizon_grid: 64,
            quadrature_nodes: 32,
            refinement_depth: 40,
            tolerances: Tolerances {
                root_xtol: crate::mass_geometry::ROOT_XTOL,
                dtol: crate::mass_geometry::DTOL,
                quadrature_rtol: 1e-3,
            },
            out: None,
        }
    }
}

fn parse_num<T: FromStr>(field: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{field}: cannot parse '{}'", v.trim())))
}

impl AnalysisConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "metric" => self.metric = value.parse()?,
            "M" | "mass" => self.mass = parse_num(key, value)?,
            "Q" | "charge" => self.charge = parse_num(key, value)?,
            "a" | "spin" => self.spin = parse_num(key, value)?,
            "sigma" => self.sigma = parse_num(key, value)?,
            "compactifier" => self.compactifier = Some(value.trim().to_string()),
            "stages" => {
                let mut v: Vec<Stage> = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
                v.sort();
                v.dedup();
                self.stages = v;
            }
            "grid" => self.horizon_grid = parse_num(key, value)?,
            "quadrature_nodes" => self.quadrature_nodes = parse_num(key, value)?,
            "depth" => self.refinement_depth = parse_num(key, value)?,
            "tol" => self.tolerances.quadrature_rtol = parse_num(key, value)?,
            "root_xtol" => self.tolerances.root_xtol = parse_num(key, value)?,
            "dtol" => self.tolerances.dtol = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(Error::Config(format!("unknown field '{other}'"))),
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse_file_text(text: &str, base: &mut AnalysisConfig) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            base.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn from_args(args: &ConfigArgs) -> Result<Self> {
        let mut cfg = AnalysisConfig::default();
        if let Some(p) = &args.config {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Self::parse_file_text(&text, &mut cfg)?;
        }
        let flags: [(&str, &Option<String>); 8] = [
            ("metric", &args.metric),
            ("M", &args.mass),
            ("Q", &args.charge),
            ("a", &args.spin),
            ("sigma", &args.sigma),
            ("stages", &args.stages),
            ("grid", &args.grid),
            ("tol", &args.tol),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)
                    .map_err(|e| Error::Config(format!("--{}", strip_prefix(&e))))?;
            }
        }
        if let Some(o) = &args.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grid", self.horizon_grid),
            ("quadrature_nodes", self.quadrature_nodes),
        ] {
            if v < 4 {
                return Err(Error::Config(format!(
                    "{name}: resolution {v} must be at least 4"
                )));
            }
        }
        if self.refinement_depth < 4 || self.refinement_depth > 40 {
            return Err(Error::Config(format!(
                "depth: {} must lie in [4, 40]",
                self.refinement_depth
            )));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("root_xtol", t.root_xtol),
            ("dtol", t.dtol),
            ("tol", t.quadrature_rtol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name}: tolerance {v} must be positive"
                )));
            }
        }
        self.entry()
            .map(|_| ())
            .map_err(|e| Error::Config(strip_prefix(&e)))
    }

    fn compactifier(&self) -> Result<Option<RadialCompactifier>> {
        match self.compactifier.as_deref() {
            None => Ok(None),
            Some(s) => Ok(Some(s.parse()?)),
        }
    }

    pub fn entry(&self) -> Result<CatalogEntry> {
        let h = self.compactifier()?;
        match self.metric {
            MetricId::Schwarzschild => make_schwarzschild(self.mass),
            MetricId::Rn => make_reissner_nordstrom(self.mass, self.charge, h),
            MetricId::Roberts => make_roberts(self.sigma, h),
            MetricId::Kerr => make_kerr(self.mass, self.spin, h),
            MetricId::Synthetic => {
                let conformal = match self.compactifier.as_deref() {
                    None | Some("reciprocal-r") => ConformalKind::ReciprocalR,
                    Some("reciprocal-r2") => ConformalKind::ReciprocalR2,
                    Some(o) => {
                        return Err(Error::Config(format!(
                            "compactifier: '{o}' (synthetic takes reciprocal-r or reciprocal-r2)"
                        )))
                    }
                };
                make_synthetic_collapse(ScaleFactor::Linear { rate: 1.0 }, conformal)
            }
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Lapse used for `K = −∂₀ḡ/(2τ)`.
    pub lapse: String,
    /// `m_printed/m` for Schwarzschild, as a function of `t = tan ω¹`.
    pub positive_factor: String,
    /// How `X̃` enters the bound.
    pub deformed_boundary: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            lapse: "tau = sqrt|gbar| / Omega".into(),
            positive_factor: "(omega1)^2 e^t (1 - e^-t)^2 / (1 + t^2)".into(),
            deformed_boundary: "X~ = computed event horizon".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassPoint {
    pub omega: [f64; 4],
    pub m: f64,
    pub dm_dt: f64,
    /// Generic pipeline value, where the chart allows it.
    pub m_generic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsResult {
    pub curvature: CurvatureReport,
    pub energy: EnergyReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageState {
    Ok,
    Warning,
    Failed,
    NonConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: Stage,
    pub state: StageState,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub provenance: Provenance,
    pub entry: EntryId,
    pub stages: Vec<StageStatus>,
    pub mass: Option<Vec<MassPoint>>,
    pub horizon: Option<HorizonProfile>,
    pub naked: Option<ClosureReport>,
    pub conditions: Option<ConditionsResult>,
    pub stay: Option<StayReport>,
    pub penrose: Option<BoundReport>,
    /// Seconds per stage; the only part that varies between identical runs.
    pub wall_clock: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        if self.stages.iter().any(|s| s.state == StageState::Failed) {
            EXIT_STAGE
        } else if self
            .stages
            .iter()
            .any(|s| s.state == StageState::NonConvergent)
        {
            EXIT_CONVERGENCE
        } else {
            0
        }
    }
}

fn theta_for(entry: &CatalogEntry) -> f64 {
    if entry.id == EntryId::Kerr {
        FRAC_PI_4
    } else {
        FRAC_PI_2
    }
}

/// `ω¹` nodes strictly inside `(0, edge)`.
fn horizon_grid(entry: &CatalogEntry, n: usize) -> Vec<f64> {
    let edge = entry.omega_edge();
    (0..n).map(|i| edge * (i as f64 + 0.5) / n as f64).collect()
}

fn region_name(c: RegionClass) -> &'static str {
    match c {
        RegionClass::Exterior => "exterior",
        RegionClass::Interior => "interior",
        RegionClass::HorizonActual => "horizon-actual",
        RegionClass::HorizonApparent => "horizon-apparent",
    }
}

fn mass_stage(entry: &CatalogEntry, cfg: &AnalysisConfig) -> Result<Vec<MassPoint>> {
    let theta = theta_for(entry);
    let mut out = Vec::new();
    for w1 in horizon_grid(entry, 8) {
        for ell in [-8.0, -2.0, -0.5, -0.05] {
            let w = if entry.is_temporal_gauge() {
                [f64::exp(ell), w1, 0.0, 0.0]
            } else {
                [f64::exp(ell), w1, theta, 0.4]
            };
            let Ok(s) = mass_catalog(entry, &w) else {
                continue;
            };
            let m_generic = mass_generic(entry, &w).ok().map(|g| g.m);
            out.push(MassPoint {
                omega: w,
                m: s.m,
                dm_dt: s.dm_dt,
                m_generic,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::OutOfRange(format!(
            "no valid mass samples on a {} grid",
            cfg.horizon_grid
        )));
    }
    Ok(out)
}

fn conditions_stage(entry: &CatalogEntry, cfg: &AnalysisConfig) -> Result<ConditionsResult> {
    let n = cfg.horizon_grid.min(32);
    let samples: Vec<[f64; 4]> = horizon_grid(entry, n)
        .into_iter()
        .flat_map(|w1| [0.9, 0.5, 0.1].map(|w0| [w0, w1, 0.1, -0.1]))
        .collect();
    Ok(ConditionsResult {
        curvature: curvature_conditions(entry, &samples)?,
        energy: energy_condition(entry, &samples, None)?,
    })
}

fn stay_stage(entry: &CatalogEntry) -> Result<StayReport> {
    let w1 = 0.5 * entry.omega_edge();
    let theta = theta_for(entry);
    let x = horizon_root(entry, &entry.radial(w1)?, theta)?.exp();
    let start = if entry.is_temporal_gauge() {
        [0.5 * x, w1, 0.0, 0.0]
    } else {
        [0.5 * x, w1, theta, 0.4]
    };
    let unit = |_: &[f64; 4]| [1.0, 0.0, 0.0, 0.0];
    stay_criterion(
        entry,
        &Curve {
            start,
            tangent: &unit,
        },
        &StayConfig::default(),
    )
}

fn run_stage(
    stage: Stage,
    entry: &CatalogEntry,
    cfg: &AnalysisConfig,
    report: &mut AnalysisReport,
) -> StageStatus {
    let status = |state, message: Option<String>| StageStatus {
        stage,
        state,
        message,
    };
    let fail = |e: Error| {
        let state = if matches!(e, Error::NonConvergent(_)) {
            StageState::NonConvergent
        } else {
            StageState::Failed
        };
        StageStatus {
            stage,
            state,
            message: Some(e.to_string()),
        }
    };
    match stage {
        Stage::Mass => match mass_stage(entry, cfg) {
            Ok(v) => {
                report.mass = Some(v);
                status(StageState::Ok, None)
            }
            Err(e) => fail(e),
        },
        Stage::Horizon => match horizon_profile_with(
            entry,
            &horizon_grid(entry, cfg.horizon_grid),
            theta_for(entry),
            cfg.tolerances.root_xtol,
        ) {
            Ok(p) => {
                let msg =
                    (!p.failures.is_empty()).then(|| format!("{} nodes failed", p.failures.len()));
                let state = if msg.is_some() {
                    StageState::Warning
                } else {
                    StageState::Ok
                };
                report.horizon = Some(p);
                status(state, msg)
            }
            Err(e) => fail(e),
        },
        Stage::Naked => {
            let scan = ScanConfig {
                depth: cfg.refinement_depth,
                window: cfg.refinement_depth.min(10),
                rho_tol: cfg.tolerances.dtol,
                ..ScanConfig::default()
            };
            match closure_scan(entry, &scan) {
                Ok(r) => {
                    let st = if r.outcome == ScanOutcome::Inconclusive {
                        status(StageState::Warning, Some("refinement inconclusive".into()))
                    } else {
                        status(StageState::Ok, None)
                    };
                    report.naked = Some(r);
                    st
                }
                Err(e) => fail(e),
            }
        }
        Stage::Conditions => match conditions_stage(entry, cfg) {
            Ok(c) => {
                report.conditions = Some(c);
                status(StageState::Ok, None)
            }
            Err(e) => fail(e),
        },
        Stage::Stay => match stay_stage(entry) {
            Ok(s) => {
                report.stay = Some(s);
                status(StageState::Ok, None)
            }
            Err(e) => fail(e),
        },
        Stage::Penrose => {
            let bc = BoundConfig {
                nodes: cfg.quadrature_nodes,
                cauchy_rtol: cfg.tolerances.quadrature_rtol,
                ..BoundConfig::default()
            };
            match penrose_bound(entry, &bc) {
                Ok(b) => {
                    let st = if b.m_sq_detail.converged {
                        status(StageState::Ok, None)
                    } else {
                        status(
                            StageState::NonConvergent,
                            Some("total mass is not Cauchy under cutoff refinement".into()),
                        )
                    };
                    report.penrose = Some(b);
                    st
                }
                Err(e) => fail(e),
            }
        }
    }
}

pub fn analyze(cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let entry = cfg.entry()?;
    let mut report = AnalysisReport {
        config: cfg.clone(),
        provenance: Provenance::default(),
        entry: entry.id,
        stages: Vec::new(),
        mass: None,
        horizon: None,
        naked: None,
        conditions: None,
        stay: None,
        penrose: None,
        wall_clock: BTreeMap::new(),
    };
    for &stage in &cfg.stages {
        let t0 = Instant::now();
        let st = run_stage(stage, &entry, cfg, &mut report);
        report
            .wall_clock
            .insert(stage.name().into(), t0.elapsed().as_secs_f64());
        report.stages.push(st);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub omega1: f64,
    pub omega0_horizon: Option<f64>,
    pub dm_dt: Option<f64>,
    pub region_above: Option<String>,
    pub region_below: Option<String>,
    pub is_apparent_candidate: Option<bool>,
    pub excluded_band: bool,
}

pub fn diagram(cfg: &AnalysisConfig) -> Result<Vec<DiagramRow>> {
    let entry = cfg.entry()?;
    let theta = theta_for(&entry);
    let grid = horizon_grid(&entry, cfg.horizon_grid);
    let p = horizon_profile_with(&entry, &grid, theta, cfg.tolerances.root_xtol)?;
    let mut rows: Vec<DiagramRow> = p
        .nodes
        .iter()
        .map(|n| {
            let at = |ell: f64| {
                let w = if entry.is_temporal_gauge() {
                    [ell.exp(), n.omega1, 0.0, 0.0]
                } else {
                    [ell.exp(), n.omega1, theta, 0.4]
                };
                classify(&entry, &w, MassSource::CatalogClosedForm)
                    .ok()
                    .map(|c| region_name(c.class).to_string())
            };
            DiagramRow {
                omega1: n.omega1,
                omega0_horizon: Some(n.x),
                dm_dt: n.dm_dt,
                region_above: at((n.ln_x + 1e-3).min(0.0)),
                region_below: at(n.ln_x - 1e-3),
                is_apparent_candidate: Some(n.apparent_candidate),
                excluded_band: false,
            }
        })
        .collect();
    if entry.id == EntryId::Kerr {
        rows.extend(p.failures.iter().map(|f| DiagramRow {
            omega1: f.omega1,
            omega0_horizon: None,
            dm_dt: None,
            region_above: None,
            region_below: None,
            is_apparent_candidate: None,
            excluded_band: true,
        }));
        rows.sort_by(|a, b| a.omega1.total_cmp(&b.omega1));
    }
    if rows.is_empty() {
        return Err(Error::NoSignChange("no horizon nodes on the grid".into()));
    }
    Ok(rows)
}

pub fn write_diagram<W: std::io::Write>(rows: &[DiagramRow], kerr: bool, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "omega1",
        "omega0_horizon",
        "dm_dt",
        "region_above",
        "region_below",
        "is_apparent_candidate",
    ];
    if kerr {
        header.push("excluded_band");
    }
    w.write_record(&header).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in rows {
        let mut rec = vec![
            format!("{:e}", r.omega1),
            opt(r.omega0_horizon),
            opt(r.dm_dt),
            r.region_above.clone().unwrap_or_default(),
            r.region_below.clone().unwrap_or_default(),
            r.is_apparent_candidate
                .map(|b| b.to_string())
                .unwrap_or_default(),
        ];
        if kerr {
            rec.push(r.excluded_band.to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Analyze(args) => {
            let cfg = match AnalysisConfig::from_args(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {}", strip_prefix(&e));
                    return EXIT_CONFIG;
                }
            };
            let report = match analyze(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STAGE;
                }
            };
            for s in &report.stages {
                if let Some(m) = &s.message {
                    eprintln!("{}: {:?}: {m}", s.stage, s.state);
                }
            }
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Err(e) = write_or_print(cfg.out.as_deref(), &text) {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
            report.exit_code()
        }
        Command::Diagram(args) => {
            let cfg = match AnalysisConfig::from_args(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {}", strip_prefix(&e));
                    return EXIT_CONFIG;
                }
            };
            let rows = match diagram(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STAGE;
                }
            };
            let kerr = cfg.metric == MetricId::Kerr;
            let res = match &cfg.out {
                Some(p) => std::fs::File::create(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
                    .and_then(|f| write_diagram(&rows, kerr, f)),
                None => write_diagram(&rows, kerr, std::io::stdout().lock()),
            };
            match res {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Command::Verify { suite } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("config error: {}", strip_prefix(&e));
                    return EXIT_CONFIG;
                }
            };
            let checks = verify::run(suite);
            for c in &checks {
                println!("{c}");
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            println!("{passed}/{} passed", checks.len());
            if passed == checks.len() {
                0
            } else {
                EXIT_VERIFY_FAILED
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_and_flags() {
        let mut cfg = AnalysisConfig::default();
        AnalysisConfig::parse_file_text(
            "metric = rn # comment\nM = 1\nQ = 2\n\nstages = naked,horizon\n",
            &mut cfg,
        )
        .unwrap();
        assert_eq!(cfg.metric, MetricId::Rn);
        assert_eq!(cfg.stages, vec![Stage::Horizon, Stage::Naked]);
        let err = AnalysisConfig::parse_file_text("M = 1\nfoo = 2\n", &mut cfg).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = AnalysisConfig::parse_file_text("M 1\n", &mut cfg).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        let args = ConfigArgs {
            metric: Some("schwarzschild".into()),
            mass: Some("-1".into()),
            ..Default::default()
        };
        let err = AnalysisConfig::from_args(&args).unwrap_err();
        assert!(err.to_string().contains("M = -1"), "{err}");
        let args = ConfigArgs {
            grid: Some("0".into()),
            ..Default::default()
        };
        assert!(AnalysisConfig::from_args(&args).is_err());
    }

    #[test]
    fn report_round_trips() {
        let cfg = AnalysisConfig {
            stages: vec![Stage::Mass, Stage::Horizon],
            horizon_grid: 8,
            ..Default::default()
        };
        let rep = analyze(&cfg).unwrap();
        assert_eq!(rep.exit_code(), 0);
        let text = serde_json::to_string(&rep).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
