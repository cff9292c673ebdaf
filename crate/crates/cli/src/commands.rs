use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lrbose::astlo::{monitor_bad_time, CutoffFunction, MultiscaleSchedule};
use lrbose::dynamics::{fmt_f64, record, uniform_grid, Method};
use lrbose::fock::basis::sector_dimension;
use lrbose::fock::{bond_hop, number_operator, site_number};
use lrbose::probes::{
    annulus_mvb, check_moment_bounds, check_operator_holder, density_window, lrb_scan, truncation_consistency,
    AnnulusParams, BoundReport, LrbPoint, MomentParams, Verdict,
};
use lrbose::{canonical_json, Sector, System};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{power, ExperimentConfig, InitialConfig, ObservableConfig, ProbeConfig, Resolved, SpeedConfig};
use crate::error::{CliError, CliResult, Context};
use crate::svg::{Plot, Series};

const TRAJECTORY_TITLE: &str = "observables";
const LRB_TITLE: &str = "|<[A(t), B]>| against separation";
const ASTLO_TITLE: &str = "ASTLO expectations";

/// Output directory that stamps every file with the config hash.
pub struct Output {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, hash: &str) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            hash: hash.to_string(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with a leading `# config_hash=` line.
    pub fn csv(&mut self, name: &str, body: &str) -> CliResult<()> {
        self.write(name, &format!("# config_hash={}\n{body}", self.hash))
    }

    /// Pretty JSON with a top-level `config_hash` key.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::new("serialization", "", e.to_string()))?;
        match &mut v {
            Value::Object(map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            other => {
                v = json!({"config_hash": self.hash, "data": other.take()});
            }
        }
        let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::new("serialization", "", e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    pub fn svg(&mut self, name: &str, body: &str) -> CliResult<()> {
        self.write(name, body)
    }

    pub fn summary(&self, command: &str, extra: Value) -> Value {
        let mut v = json!({
            "command": command,
            "config_hash": self.hash,
            "out_dir": self.dir.display().to_string(),
            "files": self.files,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        v
    }
}

pub fn out_dir(cli_out: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn system(res: &Resolved) -> CliResult<System> {
    let basis = res.basis()?;
    let psi = res.initial_state(&basis)?;
    System::new(&basis, res.spec.clone(), psi, res.options())
        .at("propagator")
        .map(|s| s.with_hash(res.hash.clone()))
}

/// Re-evaluates a verdict under an overridden tolerance.
fn retolerate(r: &mut BoundReport, tol: f64) {
    if r.verdict == Verdict::Inapplicable {
        return;
    }
    r.tolerance = tol;
    r.verdict = match r.validation_margin {
        Some(vm) if vm >= -tol => Verdict::FittedHolds,
        Some(_) => Verdict::Violated,
        None if r.margin >= -tol => Verdict::Holds,
        None => Verdict::Violated,
    };
    let flag = |k: &str, bad: &dyn Fn(f64) -> bool| r.diagnostics.get(k).is_some_and(|&v| bad(v));
    if flag("cross_term", &|v| v > tol) || flag("decomposition_error", &|v| v > tol) || flag("monotone", &|v| v == 0.0) {
        r.verdict = Verdict::Violated;
    }
}

fn finish(res: &Resolved, mut r: BoundReport, exact: bool) -> BoundReport {
    let key = if exact { "exact" } else { "fit" };
    if let Some(t) = res.config.tolerance(key) {
        retolerate(&mut r, t);
    }
    r.config_hash = Some(res.hash.clone());
    r
}

enum ProbeOutput {
    Report(BoundReport),
    Other(String, Value),
}

fn run_probe(res: &Resolved, sys: &System, i: usize, probe: &ProbeConfig) -> CliResult<Vec<(String, ProbeOutput)>> {
    let path = format!("probes[{i}]");
    let kind = probe.kind();
    let name = |suffix: &str| format!("probe_{i:02}_{kind}{suffix}.json");
    Ok(match probe {
        ProbeConfig::MomentBounds {
            outer,
            inner,
            speed,
            speed_factor,
            p,
            center,
            steps,
        } => {
            let v = res.speed(
                SpeedConfig {
                    speed: *speed,
                    speed_factor: *speed_factor,
                },
                &path,
            )?;
            let times = uniform_grid((outer - inner) / v, *steps).at(&path)?;
            let mut out = Vec::new();
            for &pp in p {
                let params = MomentParams {
                    outer: *outer,
                    inner: *inner,
                    speed: v,
                    p: pp,
                    center: center.clone(),
                };
                let rep = check_moment_bounds(sys, &params, &times).at(&path)?;
                out.push((name(&format!("_p{pp}_upper")), ProbeOutput::Report(finish(res, rep.upper, false))));
                out.push((name(&format!("_p{pp}_lower")), ProbeOutput::Report(finish(res, rep.lower, false))));
            }
            out
        }
        ProbeConfig::DensityWindow { p, lambda1, lambda2 } => {
            let w = density_window(&sys.initial, *p, &[]).at(&path)?;
            let admits = match (lambda1, lambda2) {
                (Some(l1), Some(l2)) => Some(w.admits(*l1, *l2)),
                (None, None) => None,
                _ => return Err(CliError::new("schema", path, "give both `lambda1` and `lambda2` or neither")),
            };
            vec![(
                name(""),
                ProbeOutput::Other(
                    "density_window".into(),
                    json!({"window": w, "feasible": w.feasible(), "admits": admits}),
                ),
            )]
        }
        ProbeConfig::Annulus {
            region,
            xi,
            gamma1,
            gamma2,
            p,
            speed,
            speed_factor,
            alpha,
            steps,
        } => {
            let v = res.speed(
                SpeedConfig {
                    speed: *speed,
                    speed_factor: *speed_factor,
                },
                &path,
            )?;
            let alpha = alpha
                .or(res.spec.hopping.alpha_hint())
                .ok_or_else(|| CliError::new("schema", format!("{path}.alpha"), "no decay exponent available"))?;
            let x = res.region(region, &format!("{path}.region"))?;
            // the grid stops just short of (gamma2 - gamma1) xi / v
            let t_max = (1.0 - 1e-9) * (gamma2 - gamma1) * xi / v;
            let times = uniform_grid(t_max, *steps).at(&path)?;
            let params = AnnulusParams {
                xi: *xi,
                gamma1: *gamma1,
                gamma2: *gamma2,
                p: *p,
                speed: v,
                alpha,
            };
            let r = annulus_mvb(sys, &x, &params, &times).at(&path)?;
            vec![(name(""), ProbeOutput::Report(finish(res, r, false)))]
        }
        ProbeConfig::Truncation { ladder, region, p, t } => {
            let x = res.region(region, &format!("{path}.region"))?;
            let r = truncation_consistency(sys, ladder, &x, *p, *t).at(&path)?;
            vec![(name(""), ProbeOutput::Report(finish(res, r, true)))]
        }
        ProbeConfig::Holder { a, b, pa, pb, p, t } => {
            let basis = &sys.basis;
            let ra = res.region(a, &format!("{path}.a"))?;
            let rb = res.region(b, &format!("{path}.b"))?;
            let oa = power(&number_operator(basis, &ra).at(&path)?, *pa).at(&path)?;
            let ob = power(&number_operator(basis, &rb).at(&path)?, *pb).at(&path)?;
            let psi = sys.propagator.evolve(&sys.initial, *t).at(&path)?;
            let r = check_operator_holder(&oa, &ob, *p, &psi).at(&path)?;
            vec![(name(""), ProbeOutput::Report(finish(res, r, true)))]
        }
    })
}

fn write_probes(res: &Resolved, sys: &System, out: &mut Output) -> CliResult<Vec<Value>> {
    let results: Vec<Vec<(String, ProbeOutput)>> = res
        .config
        .probes
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_probe(res, sys, i, p))
        .collect::<CliResult<_>>()?;
    let mut table = String::from("file,name,verdict,margin,validation_margin,C\n");
    let mut verdicts = Vec::new();
    for (file, o) in results.into_iter().flatten() {
        match o {
            ProbeOutput::Report(r) => {
                let verdict = serde_json::to_value(r.verdict).unwrap_or(Value::Null);
                let _ = writeln!(
                    table,
                    "{file},{},{},{},{},{}",
                    r.name,
                    verdict.as_str().unwrap_or(""),
                    fmt_f64(r.margin),
                    r.validation_margin.map(fmt_f64).unwrap_or_default(),
                    r.fitted_constants.get("C").copied().map(fmt_f64).unwrap_or_default()
                );
                verdicts.push(json!({"file": file, "name": r.name, "verdict": verdict}));
                out.json(&file, &r)?;
            }
            ProbeOutput::Other(kind, v) => {
                verdicts.push(json!({"file": file, "name": kind}));
                out.json(&file, &v)?;
            }
        }
    }
    if !verdicts.is_empty() {
        out.csv("probe_summary.csv", &table)?;
    }
    Ok(verdicts)
}

pub fn simulate(res: &Resolved, out: &mut Output) -> CliResult<Value> {
    out.write("config.json", &(canonical_json(&res.config).at("")? + "\n"))?;
    let sys = system(res)?;
    let obs = res.observables(&sys.basis, sys.hamiltonian())?;
    let refs: Vec<(String, &lrbose::SparseOperator)> = obs.iter().map(|(l, o)| (l.clone(), o)).collect();
    let mut traj = record(&sys.propagator, &refs, &sys.initial, &res.times).at("time")?;
    traj.config_hash = Some(res.hash.clone());
    out.csv("trajectory.csv", &traj.to_csv())?;
    out.json("trajectory.json", &traj)?;
    let series = traj
        .observables
        .iter()
        .map(|id| Series {
            label: id.clone(),
            points: traj.times.iter().copied().zip(traj.real_series(id).unwrap_or_default()).collect(),
        })
        .collect();
    let data = traj.to_csv();
    out.svg(
        "trajectory.svg",
        &Plot {
            title: TRAJECTORY_TITLE,
            x_label: "t",
            y_label: "expectation",
            log_log: false,
            series,
            data: &data,
            config_hash: &res.hash,
        }
        .render(),
    )?;
    let verdicts = write_probes(res, &sys, out)?;
    Ok(out.summary(
        "simulate",
        json!({"dimension": sys.basis.dim(), "method": method_name(sys.propagator.resolved_method()), "probes": verdicts}),
    ))
}

pub fn probe(res: &Resolved, out: &mut Output) -> CliResult<Value> {
    if res.config.probes.is_empty() {
        return Err(CliError::new("schema", "probes", "no probes configured"));
    }
    let sys = system(res)?;
    let verdicts = write_probes(res, &sys, out)?;
    Ok(out.summary("probe", json!({"probes": verdicts})))
}

pub fn lrb(res: &Resolved, out: &mut Output) -> CliResult<Value> {
    let cfg = res
        .config
        .lrb
        .as_ref()
        .ok_or_else(|| CliError::new("schema", "lrb", "lrb-scan needs an [lrb] section"))?;
    let basis = res.basis()?;
    let x = res.region(&cfg.region, "lrb.region")?;
    let a = site_number(&basis, cfg.a_site).at("lrb.a_site")?;
    let points = cfg
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let path = format!("lrb.points[{i}]");
            let [bx, by] = p.bond;
            Ok(LrbPoint {
                xi: p.xi,
                y: res.lattice.region([bx, by]).at(&format!("{path}.bond"))?,
                b: bond_hop(&basis, bx, by).at(&format!("{path}.bond"))?,
                psi0: lrbose::fock::shell_state(&basis, &x, p.xi, &p.occupations).at(&path)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let alpha = cfg
        .alpha
        .or(res.spec.hopping.alpha_hint())
        .ok_or_else(|| CliError::new("schema", "lrb.alpha", "no decay exponent available"))?;
    let mut scan = lrb_scan(&res.spec, &basis, res.options(), &x, &a, &points, &cfg.times, alpha, cfg.speed).at("lrb")?;
    scan.envelope = finish(res, scan.envelope, false);
    let mut table = String::from("xi,t,commutator_abs,b_rem_abs,rem_b_abs,identity_residual\n");
    for s in &scan.samples {
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            fmt_f64(s.xi),
            fmt_f64(s.t),
            fmt_f64(s.commutator.norm()),
            fmt_f64(s.b_rem.norm()),
            fmt_f64(s.rem_b.norm()),
            fmt_f64(s.identity_residual)
        );
    }
    out.csv("lrb_scan.csv", &table)?;
    out.json("lrb_scan.json", &scan)?;
    let series = cfg
        .times
        .iter()
        .filter(|&&t| t != 0.0)
        .map(|&t| Series {
            label: format!("t = {t}"),
            points: scan.magnitudes_at(t),
        })
        .collect();
    out.svg(
        "lrb_scan.svg",
        &Plot {
            title: LRB_TITLE,
            x_label: "xi",
            y_label: "|commutator|",
            log_log: true,
            series,
            data: &table,
            config_hash: &res.hash,
        }
        .render(),
    )?;
    let verdict = serde_json::to_value(scan.envelope.verdict).unwrap_or(Value::Null);
    Ok(out.summary(
        "lrb-scan",
        json!({"beta": scan.beta, "in_regime": scan.in_regime, "envelope_verdict": verdict}),
    ))
}

pub fn astlo(res: &Resolved, out: &mut Output) -> CliResult<Value> {
    let cfg = res
        .config
        .astlo
        .as_ref()
        .ok_or_else(|| CliError::new("schema", "astlo", "astlo needs an [astlo] section"))?;
    let sys = system(res)?;
    let kap = lrbose::couplings::kappa(&res.spec.hopping).at("hopping")?;
    let v = res.speed(
        SpeedConfig {
            speed: cfg.speed,
            speed_factor: cfg.speed_factor,
        },
        "astlo",
    )?;
    let l_max = cfg
        .levels
        .unwrap_or_else(|| MultiscaleSchedule::levels_up_to(cfg.outer, cfg.inner, res.lattice.diameter()));
    let sched = MultiscaleSchedule::new(cfg.outer, cfg.inner, v, kap, l_max).at("astlo")?;
    let cutoff = CutoffFunction::new(sched.omega, cfg.resolution).at("astlo.resolution")?;
    let lambda1 = match cfg.lambda1 {
        Some(l) => l,
        None => {
            let radii: Vec<f64> = sched.levels.iter().map(|l| l.inner).collect();
            density_window(&sys.initial, 1, &radii).at("astlo")?.lambda1
        }
    };
    let t_max = cfg.t_max.unwrap_or((cfg.outer - cfg.inner) / v);
    let times = uniform_grid(t_max, cfg.steps).at("astlo")?;
    let (bt, series) =
        monitor_bad_time(&sys.propagator, &sys.initial, &sched, &cutoff, &cfg.center, lambda1, &times).at("astlo")?;
    let sched = sched.with_bad_time(bt.t1);
    let mut table = String::from("time,level,sign,value\n");
    for s in &series {
        for (t, val) in times.iter().zip(&s.values) {
            let _ = writeln!(table, "{},{},{},{}", fmt_f64(*t), s.level, s.sign.label(), fmt_f64(*val));
        }
    }
    out.json("schedule.json", &sched)?;
    out.csv("cutoff.csv", &cutoff.to_csv())?;
    out.csv("astlo_series.csv", &table)?;
    out.json(
        "bad_time.json",
        &json!({"bad_time": bt, "lambda1": lambda1, "respects_floor": bt.respects_floor()}),
    )?;
    let plot_series = series
        .iter()
        .map(|s| Series {
            label: format!("l={} {}", s.level, s.sign.label()),
            points: times.iter().copied().zip(s.values.iter().copied()).collect(),
        })
        .collect();
    out.svg(
        "astlo.svg",
        &Plot {
            title: ASTLO_TITLE,
            x_label: "t",
            y_label: "<N_f>",
            log_log: false,
            series: plot_series,
            data: &table,
            config_hash: &res.hash,
        }
        .render(),
    )?;
    Ok(out.summary(
        "astlo",
        json!({"t1": bt.t1, "floor": bt.floor, "respects_floor": bt.respects_floor(), "levels": l_max + 1}),
    ))
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::DenseEigen => "dense_eigen",
        Method::Krylov => "krylov",
        Method::Auto => "auto",
    }
}

/// Parses and resolves without building the basis or propagating.
pub fn validate(res: &Resolved) -> CliResult<Value> {
    let cfg = &res.config;
    let n = res.lattice.n_sites();
    let dim = sector_dimension(n, cfg.sector);
    let cap = cfg.cap();
    let mut warnings = Vec::new();
    if dim > cap as u128 {
        warnings.push(format!("Fock dimension {dim} exceeds the cap of {cap}; runs will be refused"));
    }
    check_initial(res)?;
    for (i, o) in cfg.observables.iter().enumerate() {
        let path = format!("observables[{i}]");
        match o {
            ObservableConfig::Site { site, .. } if *site >= n => {
                return Err(CliError::new("geometry", format!("{path}.site"), format!("site {site} outside {n} sites")));
            }
            ObservableConfig::Bond { x, y, .. } if *x >= n || *y >= n => {
                return Err(CliError::new("geometry", path, format!("bond ({x}, {y}) outside {n} sites")));
            }
            ObservableConfig::Region { region, .. } => {
                res.region(region, &format!("{path}.region"))?;
            }
            _ => {}
        }
    }
    for (i, p) in cfg.probes.iter().enumerate() {
        let path = format!("probes[{i}]");
        match p {
            ProbeConfig::Annulus { region, .. } | ProbeConfig::Truncation { region, .. } => {
                res.region(region, &format!("{path}.region"))?;
            }
            ProbeConfig::Holder { a, b, .. } => {
                res.region(a, &format!("{path}.a"))?;
                res.region(b, &format!("{path}.b"))?;
            }
            ProbeConfig::MomentBounds { speed, speed_factor, .. } => {
                res.speed(
                    SpeedConfig {
                        speed: *speed,
                        speed_factor: *speed_factor,
                    },
                    &path,
                )?;
            }
            ProbeConfig::DensityWindow { .. } => {}
        }
    }
    if let Some(l) = &cfg.lrb {
        res.region(&l.region, "lrb.region")?;
    }
    let dim_f = dim as f64;
    let hops = res.spec.hopping.entries().iter().filter(|z| z.norm() > 0.0).count() as f64;
    let nnz = dim_f * (1.0 + hops);
    let method = match cfg.propagator.method {
        Method::Auto if dim <= cfg.propagator.dense_threshold as u128 => Method::DenseEigen,
        Method::Auto => Method::Krylov,
        m => m,
    };
    let dense = if method == Method::DenseEigen { 2.0 * 16.0 * dim_f * dim_f } else { 0.0 };
    let krylov = if method == Method::Krylov {
        16.0 * dim_f * (cfg.propagator.krylov_dim as f64 + 1.0)
    } else {
        0.0
    };
    let state = 16.0 * dim_f;
    let hamiltonian = 24.0 * nnz + 8.0 * (dim_f + 1.0);
    let basis = dim_f * n as f64;
    Ok(json!({
        "command": "validate",
        "config_hash": res.hash,
        "n_sites": n,
        "sector": cfg.sector,
        "dimension": u64::try_from(dim).map_or_else(|_| json!(dim.to_string()), |d| json!(d)),
        "dimension_cap": cap,
        "within_cap": dim <= cap as u128,
        "method": method_name(method),
        "memory_bytes": {
            "basis": basis,
            "state": state,
            "hamiltonian_estimate": hamiltonian,
            "propagator": dense + krylov,
            "total_estimate": basis + state + hamiltonian + dense + krylov,
        },
        "time_points": res.times.len(),
        "warnings": warnings,
    }))
}

fn check_initial(res: &Resolved) -> CliResult<()> {
    let n = res.lattice.n_sites();
    let (lo, hi) = match res.config.sector {
        Sector::FixedN(k) => (k, k),
        Sector::Truncated(k) => (0, k),
    };
    let occ_ok = |occ: &[u8], path: &str| {
        if occ.len() != n {
            return Err(CliError::new("initial_state", path, format!("expected {n} occupations, got {}", occ.len())));
        }
        let total: usize = occ.iter().map(|&o| usize::from(o)).sum();
        if total < lo || total > hi {
            return Err(CliError::new(
                "initial_state",
                path,
                format!("{total} particles do not fit the sector {:?}", res.config.sector),
            ));
        }
        Ok(())
    };
    match &res.config.initial {
        InitialConfig::Product { occupations } => occ_ok(occupations, "initial.occupations"),
        InitialConfig::Shell { region, occupations, .. } => {
            res.region(region, "initial.region")?;
            occ_ok(occupations, "initial.occupations")
        }
        InitialConfig::Mott { filling } => occ_ok(&vec![*filling; n], "initial.filling"),
        InitialConfig::Random => Ok(()),
    }
}

/// Re-renders SVGs from CSV artifacts; every input must carry the same hash.
pub fn plot(inputs: &[PathBuf], out_dir: Option<&Path>) -> CliResult<Value> {
    let mut parsed = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text.lines();
        let hash = lines
            .next()
            .and_then(|l| l.strip_prefix("# config_hash="))
            .ok_or_else(|| CliError::new("schema", path.display().to_string(), "missing `# config_hash=` line"))?
            .to_string();
        let body: String = lines.map(|l| format!("{l}\n")).collect();
        parsed.push((path.clone(), hash, body));
    }
    let first = parsed
        .first()
        .map(|p| p.1.clone())
        .ok_or_else(|| CliError::new("usage", "input", "no input files"))?;
    if let Some(p) = parsed.iter().find(|p| p.1 != first) {
        return Err(CliError::new(
            "hash_mismatch",
            p.0.display().to_string(),
            format!("config hash {} differs from {first}", p.1),
        ));
    }
    let mut written = Vec::new();
    for (path, hash, body) in &parsed {
        let (title, x_label, y_label, log_log, series) = csv_series(path, body)?;
        let svg = Plot {
            title: &title,
            x_label,
            y_label,
            log_log,
            series,
            data: body,
            config_hash: hash,
        }
        .render();
        let dir = out_dir
            .map(Path::to_path_buf)
            .or_else(|| path.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
        let target = dir.join(format!("{stem}.svg"));
        std::fs::write(&target, svg).map_err(|e| CliError::io(&target, e))?;
        written.push(target.display().to_string());
    }
    Ok(json!({"command": "plot", "config_hash": first, "files": written}))
}

type Parsed = (String, &'static str, &'static str, bool, Vec<Series>);

fn csv_series(path: &Path, body: &str) -> CliResult<Parsed> {
    let bad = |m: &str| CliError::new("schema", path.display().to_string(), m.to_string());
    let mut lines = body.lines();
    let header = lines.next().ok_or_else(|| bad("empty CSV"))?;
    let rows: Vec<Vec<&str>> = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    let float = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("not a number: {s}")));
    let mut groups: Vec<Series> = Vec::new();
    let mut push = |label: String, x: f64, y: f64| match groups.iter_mut().find(|s| s.label == label) {
        Some(s) => s.points.push((x, y)),
        None => groups.push(Series {
            label,
            points: vec![(x, y)],
        }),
    };
    match header {
        "time,observable_id,re,im" => {
            for r in &rows {
                push(r[1].to_string(), float(r[0])?, float(r[2])?);
            }
            Ok((TRAJECTORY_TITLE.into(), "t", "expectation", false, groups))
        }
        "xi,t,commutator_abs,b_rem_abs,rem_b_abs,identity_residual" => {
            for r in &rows {
                let t = float(r[1])?;
                if t != 0.0 {
                    push(format!("t = {t}"), float(r[0])?, float(r[2])?);
                }
            }
            Ok((LRB_TITLE.into(), "xi", "|commutator|", true, groups))
        }
        "time,level,sign,value" => {
            for r in &rows {
                push(format!("l={} {}", r[1], r[2]), float(r[0])?, float(r[3])?);
            }
            Ok((ASTLO_TITLE.into(), "t", "<N_f>", false, groups))
        }
        _ => Err(bad(&format!("unrecognized CSV header `{header}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retolerate_moves_verdicts() {
        let mut r = BoundReport::new("x", vec![0.0], vec![1.0], vec![1.0 - 1e-9], 1e-12);
        assert_eq!(r.verdict, Verdict::Violated);
        retolerate(&mut r, 1e-8);
        assert_eq!(r.verdict, Verdict::Holds);
        let mut f = r.clone();
        f.validation_margin = Some(-1e-6);
        retolerate(&mut f, 1e-8);
        assert_eq!(f.verdict, Verdict::Violated);
    }
}
