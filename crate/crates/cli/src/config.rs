//! Experiment configuration: schema, loading and resolution into library
//! objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lrbose::couplings::{generate, kappa, CouplingKind, CouplingMatrix, GeneratorOptions, Profile};
use lrbose::dynamics::{uniform_grid, validate_time_grid, PropagatorOptions};
use lrbose::fock::{mott_state, number_operator, site_number, bond_hop, HamiltonianSpec, DEFAULT_DIMENSION_CAP};
use lrbose::lattice::RegionSpec;
use lrbose::{config_hash, Complex64, FockBasis, Lattice, QuantumState, Region, Sector, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub hopping: CouplingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_interactions: Vec<QCouplingConfig>,
    pub sector: Sector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_cap: Option<usize>,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub probes: Vec<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lrb: Option<LrbConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub astlo: Option<AstloConfig>,
    #[serde(default)]
    pub propagator: PropagatorOptions,
    /// Tolerance overrides: `fit`, `exact`, `krylov`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a box `shape` or explicit integer `sites`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Optional; must match the length of `shape` or of each site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default = "power_law")]
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Range cap; required for the flat profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_cap: Option<f64>,
    /// On-site value (interaction matrices only).
    #[serde(default)]
    pub onsite: f64,
    /// Explicit real matrix, overrides the generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QCouplingConfig {
    pub q: u32,
    #[serde(default = "power_law")]
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_cap: Option<f64>,
    #[serde(default)]
    pub onsite: f64,
}

fn power_law() -> Profile {
    Profile::PowerLaw
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn default_steps() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// A single occupation vector.
    Product { occupations: Vec<u8> },
    /// `filling` bosons on every site.
    Mott { filling: u8 },
    /// Seeded random normalized vector.
    Random,
    /// Product state with an empty shell `X_{2 xi} \ X`.
    Shell {
        region: RegionSpec,
        xi: f64,
        occupations: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    Site {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        site: usize,
    },
    /// `N_region^p`.
    Region {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        region: RegionSpec,
        #[serde(default = "one_u32")]
        p: u32,
    },
    Total {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default = "one_u32")]
        p: u32,
    },
    Energy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
    },
    /// `a_x^dag a_y + h.c.`
    Bond {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        x: usize,
        y: usize,
    },
}

impl ObservableConfig {
    pub fn label(&self) -> String {
        match self {
            ObservableConfig::Site { id, site } => id.clone().unwrap_or_else(|| format!("n{site}")),
            ObservableConfig::Region { id, p, .. } => id.clone().unwrap_or_else(|| format!("N_region^{p}")),
            ObservableConfig::Total { id, p } => id.clone().unwrap_or_else(|| format!("N^{p}")),
            ObservableConfig::Energy { id } => id.clone().unwrap_or_else(|| "H".into()),
            ObservableConfig::Bond { id, x, y } => id.clone().unwrap_or_else(|| format!("hop{x}_{y}")),
        }
    }
}

/// Bound speed: either absolute or a multiple of the hopping's kappa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeConfig {
    MomentBounds {
        outer: f64,
        inner: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speed: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speed_factor: Option<f64>,
        p: Vec<u32>,
        center: Vec<f64>,
        #[serde(default = "default_steps")]
        steps: usize,
    },
    DensityWindow {
        p: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda2: Option<f64>,
    },
    Annulus {
        region: RegionSpec,
        xi: f64,
        gamma1: f64,
        gamma2: f64,
        p: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speed: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speed_factor: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default = "default_steps")]
        steps: usize,
    },
    Truncation {
        ladder: Vec<usize>,
        region: RegionSpec,
        p: u32,
        t: f64,
    },
    /// `<N_a^pa N_b^pb> <= <N_a^{pa p}>^{1/p} <N_b^{pb q}>^{1/q}` on the state at `t`.
    Holder {
        a: RegionSpec,
        b: RegionSpec,
        #[serde(default = "one_u32")]
        pa: u32,
        #[serde(default = "one_u32")]
        pb: u32,
        p: f64,
        #[serde(default)]
        t: f64,
    },
}

impl ProbeConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProbeConfig::MomentBounds { .. } => "moment_bounds",
            ProbeConfig::DensityWindow { .. } => "density_window",
            ProbeConfig::Annulus { .. } => "annulus",
            ProbeConfig::Truncation { .. } => "truncation",
            ProbeConfig::Holder { .. } => "holder",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrbConfig {
    /// Support of `A`.
    pub region: RegionSpec,
    /// `A = n_site`.
    pub a_site: usize,
    pub points: Vec<LrbPointConfig>,
    pub times: Vec<f64>,
    pub speed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrbPointConfig {
    pub xi: f64,
    /// `B = a_x^dag a_y + h.c.` on the bond `[x, y]`.
    pub bond: [usize; 2],
    pub occupations: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AstloConfig {
    pub outer: f64,
    pub inner: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_factor: Option<f64>,
    pub center: Vec<f64>,
    /// Highest level; defaults to the largest one fitting the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Density floor; measured from the initial state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

fn default_resolution() -> usize {
    lrbose::astlo::DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Parses TOML (or JSON for `.json` files) with path-to-field errors.
pub fn parse(text: &str, json: bool) -> CliResult<ExperimentConfig> {
    let result = if json {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema_error(path, e.into_inner().to_string())
        })
    } else {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema_error(path, e.into_inner().message().to_string())
        })
    };
    result
}

fn schema_error(path: String, message: String) -> CliError {
    let mut path = if path == "." { String::new() } else { path };
    // name the missing field itself
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            path = if path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
        }
    }
    CliError::new("schema", path, message)
}

pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json = path.extension().is_some_and(|e| e == "json");
    parse(&text, json)
}

/// A config resolved into library objects (basis not yet built).
pub struct Resolved {
    pub config: ExperimentConfig,
    pub hash: String,
    pub lattice: Lattice,
    pub spec: HamiltonianSpec,
    pub times: Vec<f64>,
}

impl ExperimentConfig {
    pub fn hash(&self) -> CliResult<String> {
        config_hash(self).at("")
    }

    pub fn cap(&self) -> usize {
        self.dimension_cap.unwrap_or(DEFAULT_DIMENSION_CAP)
    }

    pub fn tolerance(&self, key: &str) -> Option<f64> {
        self.tolerances.get(key).copied()
    }

    pub fn resolve(self) -> CliResult<Resolved> {
        for (k, v) in &self.tolerances {
            if !["fit", "exact", "krylov"].contains(&k.as_str()) {
                return Err(CliError::new("schema", format!("tolerances.{k}"), "unknown tolerance key; expected fit, exact or krylov"));
            }
            if !(*v > 0.0) {
                return Err(CliError::new("invalid_parameter", format!("tolerances.{k}"), format!("must be positive, got {v}")));
            }
        }
        let lattice = self.lattice.build()?;
        let hopping = self.hopping.build(&lattice, CouplingKind::Hopping).map_err(|e| prefix(e, "hopping"))?;
        let interaction = match &self.interaction {
            Some(c) => Some(c.build(&lattice, CouplingKind::Interaction).map_err(|e| prefix(e, "interaction"))?),
            None => None,
        };
        let mut spec = HamiltonianSpec::new(hopping, interaction);
        for (i, q) in self.q_interactions.iter().enumerate() {
            let path = format!("q_interactions[{i}]");
            if q.q < 2 || q.q % 2 != 0 {
                return Err(CliError::new("invalid_parameter", format!("{path}.q"), format!("must be an even integer >= 2, got {}", q.q)));
            }
            let m = q.coupling().build(&lattice, CouplingKind::Interaction).map_err(|e| prefix(e, &path))?;
            spec = spec.with_q_term(q.q, m);
        }
        let times = self.time.grid()?;
        let hash = self.hash()?;
        Ok(Resolved {
            config: self,
            hash,
            lattice,
            spec,
            times,
        })
    }
}

fn prefix(mut e: CliError, path: &str) -> CliError {
    e.field_path = if e.field_path.is_empty() { path.to_string() } else { format!("{path}.{}", e.field_path) };
    e
}

impl LatticeConfig {
    pub fn build(&self) -> CliResult<Lattice> {
        let lattice = match (&self.shape, &self.sites) {
            (Some(shape), None) => Lattice::grid(shape).at("lattice.shape")?,
            (None, Some(sites)) => {
                let dim = sites.first().map_or(0, Vec::len);
                Lattice::from_sites(dim, sites.clone()).at("lattice.sites")?
            }
            _ => return Err(CliError::new("schema", "lattice", "give exactly one of `shape` or `sites`")),
        };
        match self.dim {
            Some(d) if d != lattice.dim() => Err(CliError::new(
                "geometry",
                "lattice.dim",
                format!("dim = {d} but the lattice is {}-dimensional", lattice.dim()),
            )),
            _ => Ok(lattice),
        }
    }
}

impl QCouplingConfig {
    fn coupling(&self) -> CouplingConfig {
        CouplingConfig {
            profile: self.profile,
            alpha: self.alpha,
            amplitude: self.amplitude,
            range_cap: self.range_cap,
            onsite: self.onsite,
            matrix: None,
        }
    }
}

impl CouplingConfig {
    pub fn build(&self, lattice: &Lattice, kind: CouplingKind) -> CliResult<CouplingMatrix> {
        if let Some(rows) = &self.matrix {
            let n = lattice.n_sites();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::new("schema", "matrix", format!("expected a {n} x {n} matrix")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            return CouplingMatrix::from_real(lattice, kind, &flat).at("matrix");
        }
        let alpha = match (self.profile, self.alpha) {
            (Profile::PowerLaw, None) => {
                return Err(CliError::new("schema", "alpha", "power-law couplings need `alpha`"));
            }
            (Profile::Flat, None) => 1.0,
            (_, Some(a)) => a,
        };
        if self.profile == Profile::Flat && self.range_cap.is_none() {
            return Err(CliError::new("schema", "range_cap", "flat couplings need `range_cap`"));
        }
        let opts = GeneratorOptions {
            profile: self.profile,
            range_cap: self.range_cap,
            onsite: self.onsite,
        };
        generate(lattice, kind, alpha, self.amplitude, opts).at("")
    }
}

impl TimeConfig {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let times = match (&self.times, self.t_max, self.steps) {
            (Some(t), None, None) => t.clone(),
            (None, Some(t_max), Some(steps)) => uniform_grid(t_max, steps).at("time")?,
            _ => {
                return Err(CliError::new("schema", "time", "give either `times` or both `t_max` and `steps`"));
            }
        };
        validate_time_grid(&times).at("time")?;
        Ok(times)
    }
}

impl Resolved {
    pub fn basis(&self) -> CliResult<FockBasis> {
        FockBasis::with_cap(&self.lattice, self.config.sector, self.config.cap()).at("sector")
    }

    pub fn options(&self) -> PropagatorOptions {
        let mut o = self.config.propagator;
        if let Some(t) = self.config.tolerance("krylov") {
            o.substep_tolerance = t;
        }
        o
    }

    pub fn region(&self, spec: &RegionSpec, path: &str) -> CliResult<Region> {
        spec.resolve(&self.lattice).at(path)
    }

    pub fn speed(&self, s: SpeedConfig, path: &str) -> CliResult<f64> {
        match (s.speed, s.speed_factor) {
            (Some(v), None) => Ok(v),
            (None, Some(f)) => Ok(f * kappa(&self.spec.hopping).at(path)?),
            _ => Err(CliError::new("schema", path, "give exactly one of `speed` or `speed_factor`")),
        }
    }

    pub fn initial_state(&self, basis: &FockBasis) -> CliResult<QuantumState> {
        match &self.config.initial {
            InitialConfig::Product { occupations } => {
                QuantumState::product_state(basis, occupations).at("initial.occupations")
            }
            InitialConfig::Mott { filling } => mott_state(basis, *filling).at("initial.filling"),
            InitialConfig::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                let amps = (0..basis.dim())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                QuantumState::new(basis, amps)
                    .and_then(|s| s.normalized())
                    .at("initial")
            }
            InitialConfig::Shell { region, xi, occupations } => {
                let x = self.region(region, "initial.region")?;
                lrbose::fock::shell_state(basis, &x, *xi, occupations).at("initial")
            }
        }
    }

    /// Labelled observables; the default set is every site density.
    pub fn observables(&self, basis: &FockBasis, h: &SparseOperator) -> CliResult<Vec<(String, SparseOperator)>> {
        if self.config.observables.is_empty() {
            return (0..self.lattice.n_sites())
                .map(|x| Ok((format!("n{x}"), site_number(basis, x).at("observables")?)))
                .collect();
        }
        let mut out: Vec<(String, SparseOperator)> = Vec::new();
        for (i, o) in self.config.observables.iter().enumerate() {
            let path = format!("observables[{i}]");
            let op = match o {
                ObservableConfig::Site { site, .. } => site_number(basis, *site).at(&path)?,
                ObservableConfig::Region { region, p, .. } => {
                    let r = self.region(region, &format!("{path}.region"))?;
                    power(&number_operator(basis, &r).at(&path)?, *p).at(&path)?
                }
                ObservableConfig::Total { p, .. } => {
                    power(&number_operator(basis, &self.lattice.full()).at(&path)?, *p).at(&path)?
                }
                ObservableConfig::Energy { .. } => h.clone(),
                ObservableConfig::Bond { x, y, .. } => bond_hop(basis, *x, *y).at(&path)?,
            };
            let label = o.label();
            if out.iter().any(|(l, _)| *l == label) {
                return Err(CliError::new("schema", format!("{path}.id"), format!("duplicate observable id `{label}`")));
            }
            if label.contains(',') || label.contains('\n') {
                return Err(CliError::new("schema", format!("{path}.id"), "ids may not contain commas or newlines"));
            }
            out.push((label, op));
        }
        Ok(out)
    }
}

/// `A^p` for a diagonal or general operator.
pub fn power(a: &SparseOperator, p: u32) -> lrbose::Result<SparseOperator> {
    if p == 0 {
        return Err(lrbose::Error::InvalidParameter {
            name: "p",
            reason: "must be a positive integer".into(),
        });
    }
    if let Some(d) = a.real_diagonal() {
        return SparseOperator::diagonal(a.basis(), d.iter().map(|v| v.powi(p as i32)).collect());
    }
    let mut out = a.clone();
    for _ in 1..p {
        out = out.matmul(a)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [lattice]
        shape = [3]
        [hopping]
        alpha = 2.0
        [sector]
        fixed_n = 1
        [initial]
        kind = "product"
        occupations = [1, 0, 0]
        [time]
        t_max = 1.0
        steps = 4
    "#;

    #[test]
    fn canonical_round_trip() {
        let c = parse(MINIMAL, false).unwrap();
        let text = lrbose::canonical_json(&c).unwrap();
        let again = parse(&text, true).unwrap();
        assert_eq!(c, again);
        assert_eq!(text, lrbose::canonical_json(&again).unwrap());
        assert_eq!(c.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn missing_and_unknown_fields_name_the_path() {
        let e = parse("[hopping]\nalpha = 2.0\n", false).unwrap_err();
        assert_eq!(e.code, "schema");
        assert_eq!(e.field_path, "lattice");
        let e = parse(&MINIMAL.replace("alpha = 2.0", "alpha = 2.0\nalhpa = 1.0"), false).unwrap_err();
        assert_eq!(e.field_path, "hopping.alhpa");
    }

    #[test]
    fn resolution_errors_carry_field_paths() {
        let c = parse(&MINIMAL.replace("alpha = 2.0", "alpha = -1.0"), false).unwrap();
        let e = c.resolve().err().unwrap();
        assert_eq!(e.field_path, "hopping.alpha");
        let c = parse(&MINIMAL.replace("steps = 4", "steps = 0"), false).unwrap();
        assert!(c.resolve().is_err());
    }

    #[test]
    fn diagonal_power() {
        let l = Lattice::chain(2).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(2)).unwrap();
        let n = number_operator(&b, &l.full()).unwrap();
        let n3 = power(&n, 3).unwrap();
        assert_eq!(n3.real_diagonal().unwrap(), vec![0.0, 1.0, 1.0, 8.0, 8.0, 8.0]);
    }
}
