//! Experiment configuration: one TOML file with fixed key names, CLI-flag
//! overrides on top (flag > file > default), strict validation per
//! subcommand. A report is itself loadable as a config — the loader descends
//! into an embedded `[config]` table — so every run reproduces from its own
//! output.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use wdro::error::{Error, Result};
use wdro::{Order, UnivariateLoss};

/// Exponent as written in a config: a number, or the string "inf".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExpVal {
    Num(f64),
    Word(String),
}

impl ExpVal {
    /// Flag-side parser for `--p` / `--q`.
    pub fn parse_flag(s: &str) -> Result<ExpVal> {
        if s == "inf" {
            return Ok(ExpVal::Word(s.into()));
        }
        s.parse::<f64>()
            .map(ExpVal::Num)
            .map_err(|_| Error::Config(format!("expected a number or \"inf\", got {s:?}")))
    }

    fn to_order(&self, key: &str) -> Result<Order> {
        match self {
            ExpVal::Num(x) if x.is_finite() && *x >= 1.0 => Order::finite(*x),
            ExpVal::Num(x) => Err(Error::Config(format!("{key} must be >= 1, got {x}"))),
            ExpVal::Word(w) if w == "inf" => Ok(Order::infinity()),
            ExpVal::Word(w) => {
                Err(Error::Config(format!("{key} must be a number >= 1 or \"inf\", got {w:?}")))
            }
        }
    }
}

// ---------------------------------------------------------------- raw file

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    instance: Option<InstanceSection>,
    data: Option<DataSection>,
    oracle: Option<OracleSection>,
    asymptotics: Option<AsymptoticsSection>,
    choice: Option<ChoiceSection>,
    fit: Option<FitSection>,
    output: Option<OutputSection>,
    tolerances: Option<ToleranceSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceSection {
    family: Option<String>,
    uni: Option<String>,
    slope: Option<f64>,
    intercept: Option<f64>,
    beta: Option<Vec<f64>>,
    q: Option<ExpVal>,
    p: Option<ExpVal>,
    alpha: Option<f64>,
    pieces: Option<Vec<PieceSection>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSection {
    uni: Option<String>,
    slope: Option<f64>,
    intercept: Option<f64>,
    beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    path: Option<PathBuf>,
    labeled: Option<bool>,
    synthetic: Option<SyntheticSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticSection {
    sampler: Option<String>,
    dim: Option<usize>,
    n: Option<usize>,
    seed: Option<u64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    sign_labels: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    levels: Option<usize>,
    mode: Option<String>,
    resolution: Option<f64>,
    halfwidth: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AsymptoticsSection {
    alphas: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceSection {
    family: Option<String>,
    zbar: Option<Vec<f64>>,
    eta: Option<f64>,
    nests: Option<Vec<Vec<usize>>>,
    taus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSection {
    max_iters: Option<usize>,
    step: Option<String>,
    initial: Option<f64>,
    rate: Option<f64>,
    scale: Option<f64>,
    domain: Option<String>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    seed: Option<u64>,
    init: Option<Vec<f64>>,
    tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    report: Option<PathBuf>,
    curve_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    gap: Option<f64>,
}

// ------------------------------------------------------------- resolved

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    WorstCase,
    Oracle,
    EquivalenceCheck,
    Bounds,
    Asymptotics,
    Choice,
    Fit,
}

impl Sub {
    pub fn name(self) -> &'static str {
        match self {
            Sub::WorstCase => "worst-case",
            Sub::Oracle => "oracle",
            Sub::EquivalenceCheck => "equivalence-check",
            Sub::Bounds => "bounds",
            Sub::Asymptotics => "asymptotics",
            Sub::Choice => "choice",
            Sub::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Linear,
    Unsupervised,
    Regression,
    Classification,
    Quadratic,
    Piecewise,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Linear => "linear",
            FamilyKind::Unsupervised => "unsupervised",
            FamilyKind::Regression => "regression",
            FamilyKind::Classification => "classification",
            FamilyKind::Quadratic => "quadratic",
            FamilyKind::Piecewise => "piecewise",
        }
    }

    fn parse(s: &str) -> Result<FamilyKind> {
        Ok(match s {
            "linear" => FamilyKind::Linear,
            "unsupervised" => FamilyKind::Unsupervised,
            "regression" => FamilyKind::Regression,
            "classification" => FamilyKind::Classification,
            "quadratic" => FamilyKind::Quadratic,
            "piecewise" => FamilyKind::Piecewise,
            other => {
                return Err(Error::Config(format!(
                    "unknown instance.family {other:?}; expected linear, unsupervised, \
                     regression, classification, quadratic, or piecewise"
                )))
            }
        })
    }
}

/// Validated instance: `p` is absent where a subcommand fixes or ignores it,
/// `alpha` is absent for the radius-rule subcommand.
#[derive(Debug, Clone)]
pub struct Inst {
    pub family: FamilyKind,
    pub uni: Option<UnivariateLoss<f64>>,
    pub beta: Option<Vec<f64>>,
    pub pieces: Vec<(UnivariateLoss<f64>, Vec<f64>)>,
    pub q: Order,
    pub p: Option<Order>,
    pub alpha: Option<f64>,
}

impl Inst {
    pub fn build_loss(&self) -> Result<wdro::Loss> {
        match self.family {
            FamilyKind::Linear => wdro::Loss::linear(self.beta.clone().unwrap()),
            FamilyKind::Unsupervised => {
                wdro::Loss::unsupervised(self.uni.unwrap(), self.beta.clone().unwrap())
            }
            FamilyKind::Regression => {
                wdro::Loss::regression(self.uni.unwrap(), self.beta.clone().unwrap())
            }
            FamilyKind::Classification => {
                wdro::Loss::classification(self.uni.unwrap(), self.beta.clone().unwrap())
            }
            FamilyKind::Quadratic => wdro::Loss::smooth_quadratic(self.beta.clone().unwrap()),
            FamilyKind::Piecewise => wdro::Loss::piecewise_max(
                self.pieces
                    .iter()
                    .map(|(uni, beta)| wdro::Piece { uni: *uni, beta: beta.clone() })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Gaussian,
    Uniform,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Gaussian => "gaussian",
            SamplerKind::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        labeled: bool,
    },
    Synthetic {
        sampler: SamplerKind,
        dim: usize,
        n: usize,
        seed: u64,
        lo: Vec<f64>,
        hi: Vec<f64>,
        sign_labels: bool,
    },
}

#[derive(Debug, Clone)]
pub enum OracleMode {
    Directional,
    Grid { resolution: f64, halfwidth: f64 },
}

#[derive(Debug, Clone)]
pub struct OracleCfg {
    pub levels: usize,
    pub mode: OracleMode,
}

#[derive(Debug, Clone)]
pub struct AsymCfg {
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoiceKind {
    Mnl,
    NestedLogit,
}

impl ChoiceKind {
    pub fn name(self) -> &'static str {
        match self {
            ChoiceKind::Mnl => "mnl",
            ChoiceKind::NestedLogit => "nested-logit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChoiceCfg {
    pub family: ChoiceKind,
    pub zbar: Vec<f64>,
    pub eta: f64,
    pub nests: Vec<Vec<usize>>,
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum StepKind {
    Geometric { initial: f64, rate: f64 },
    InvSqrt { scale: f64 },
}

#[derive(Debug, Clone)]
pub enum DomainKind {
    Unconstrained,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex,
}

#[derive(Debug, Clone)]
pub struct FitCfg {
    pub max_iters: usize,
    pub step: StepKind,
    pub domain: DomainKind,
    pub seed: u64,
    pub init: Option<Vec<f64>>,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub sub: Sub,
    pub inst: Option<Inst>,
    pub data: Option<DataSource>,
    pub oracle: Option<OracleCfg>,
    pub asym: Option<AsymCfg>,
    pub choice: Option<ChoiceCfg>,
    pub fit: Option<FitCfg>,
    pub report_path: Option<PathBuf>,
    pub curve_dir: Option<PathBuf>,
    pub gap_tol: f64,
}

/// Flag values carried from the command line; every one overrides the
/// matching file key, and each applies only where its subcommand uses it.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub p: Option<ExpVal>,
    pub q: Option<ExpVal>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub data: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub curve_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------- loading

pub fn load(path: Option<&Path>, sub: Sub, ov: &Overrides) -> Result<Resolved> {
    let mut raw = match path {
        Some(p) => parse_file(p)?,
        None => FileConfig::default(),
    };
    apply_overrides(&mut raw, sub, ov)?;
    resolve(raw, sub)
}

fn parse_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: toml::Value = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    // A report embeds its resolved config under [config]; accept either shape.
    let value = match value {
        toml::Value::Table(mut t) if t.contains_key("config") => t.remove("config").unwrap(),
        v => v,
    };
    value
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn apply_overrides(raw: &mut FileConfig, sub: Sub, ov: &Overrides) -> Result<()> {
    if let Some(p) = &ov.report {
        raw.output.get_or_insert_with(Default::default).report = Some(p.clone());
    }
    if let Some(d) = &ov.curve_dir {
        if sub != Sub::Asymptotics {
            return Err(Error::Config("--curve-dir applies to asymptotics only".into()));
        }
        raw.output.get_or_insert_with(Default::default).curve_dir = Some(d.clone());
    }
    if sub == Sub::Choice {
        for (flag, set) in [
            ("--alpha", ov.alpha.is_some()),
            ("--p", ov.p.is_some()),
            ("--q", ov.q.is_some()),
            ("--seed", ov.seed.is_some()),
            ("--n", ov.n.is_some()),
            ("--data", ov.data.is_some()),
        ] {
            if set {
                return Err(Error::Config(format!(
                    "{flag} does not apply to the choice subcommand"
                )));
            }
        }
        return Ok(());
    }
    let inst = raw.instance.get_or_insert_with(Default::default);
    if let Some(a) = ov.alpha {
        inst.alpha = Some(a);
    }
    if let Some(p) = &ov.p {
        inst.p = Some(p.clone());
    }
    if let Some(q) = &ov.q {
        inst.q = Some(q.clone());
    }
    let data = raw.data.get_or_insert_with(Default::default);
    if let Some(path) = &ov.data {
        data.path = Some(path.clone());
        data.synthetic = None;
    }
    if let Some(n) = ov.n {
        match data.synthetic.as_mut() {
            Some(sy) => sy.n = Some(n),
            None => return Err(Error::Config("--n applies to synthetic data only".into())),
        }
    }
    if let Some(s) = ov.seed {
        let mut used = false;
        if let Some(sy) = data.synthetic.as_mut() {
            sy.seed = Some(s);
            used = true;
        }
        if sub == Sub::Fit {
            raw.fit.get_or_insert_with(Default::default).seed = Some(s);
            used = true;
        }
        if !used {
            return Err(Error::Config(
                "--seed needs synthetic data or the fit subcommand".into(),
            ));
        }
    }
    Ok(())
}

// -------------------------------------------------------------- resolving

fn parse_uni(
    name: &str,
    slope: Option<f64>,
    intercept: Option<f64>,
    at: &str,
) -> Result<UnivariateLoss<f64>> {
    let uni = match name {
        "identity" => UnivariateLoss::Identity,
        "abs" => UnivariateLoss::Abs,
        "hinge" => UnivariateLoss::Hinge,
        "logistic" => UnivariateLoss::Logistic,
        "square" => UnivariateLoss::Square,
        "affine" => {
            let (Some(s), Some(b)) = (slope, intercept) else {
                return Err(Error::Config(format!(
                    "{at}: the affine loss needs slope and intercept"
                )));
            };
            if !s.is_finite() || !b.is_finite() {
                return Err(Error::Config(format!(
                    "{at}: affine slope and intercept must be finite"
                )));
            }
            return Ok(UnivariateLoss::Affine { slope: s, intercept: b });
        }
        other => {
            return Err(Error::Config(format!(
                "{at}: unknown loss {other:?}; expected identity, abs, hinge, logistic, \
                 square, or affine"
            )))
        }
    };
    if slope.is_some() || intercept.is_some() {
        return Err(Error::Config(format!(
            "{at}: slope/intercept apply to the affine loss only"
        )));
    }
    Ok(uni)
}

fn resolve_instance(sec: InstanceSection, sub: Sub) -> Result<Inst> {
    let family = match &sec.family {
        Some(f) => FamilyKind::parse(f)?,
        None => return Err(Error::Config("missing instance.family".into())),
    };
    let uni = match family {
        FamilyKind::Unsupervised | FamilyKind::Regression | FamilyKind::Classification => {
            let Some(name) = &sec.uni else {
                return Err(Error::Config(format!(
                    "family {} needs instance.uni",
                    family.name()
                )));
            };
            Some(parse_uni(name, sec.slope, sec.intercept, "instance.uni")?)
        }
        _ => {
            if sec.uni.is_some() || sec.slope.is_some() || sec.intercept.is_some() {
                return Err(Error::Config(format!(
                    "family {} takes no instance.uni",
                    family.name()
                )));
            }
            None
        }
    };
    let (beta, pieces) = if family == FamilyKind::Piecewise {
        if sec.beta.is_some() {
            return Err(Error::Config(
                "piecewise defines its vectors per piece; remove instance.beta".into(),
            ));
        }
        let list = sec.pieces.unwrap_or_default();
        if list.is_empty() {
            return Err(Error::Config(
                "family piecewise needs at least one [[instance.pieces]] entry".into(),
            ));
        }
        let mut pieces = Vec::with_capacity(list.len());
        for (m, p) in list.into_iter().enumerate() {
            let at = format!("instance.pieces[{m}]");
            let Some(name) = &p.uni else {
                return Err(Error::Config(format!("{at}: missing uni")));
            };
            let uni = parse_uni(name, p.slope, p.intercept, &at)?;
            let Some(beta) = p.beta else {
                return Err(Error::Config(format!("{at}: missing beta")));
            };
            pieces.push((uni, beta));
        }
        (None, pieces)
    } else {
        if sec.pieces.is_some() {
            return Err(Error::Config(format!(
                "family {} takes no pieces",
                family.name()
            )));
        }
        let Some(beta) = sec.beta else {
            return Err(Error::Config(format!(
                "family {} needs instance.beta",
                family.name()
            )));
        };
        (Some(beta), Vec::new())
    };
    let q = match &sec.q {
        Some(e) => e.to_order("instance.q")?,
        None => Order::finite(2.0)?,
    };
    let p = match sub {
        Sub::EquivalenceCheck => {
            if let Some(e) = &sec.p {
                let order = e.to_order("instance.p")?;
                if order != Order::Finite(1.0) {
                    return Err(Error::Config(format!(
                        "equivalence-check runs at transport order 1, got {order}"
                    )));
                }
            }
            Some(Order::finite(1.0)?)
        }
        Sub::Fit => None,
        _ => match &sec.p {
            Some(e) => Some(e.to_order("instance.p")?),
            None => {
                return Err(Error::Config(
                    "missing instance.p (a number >= 1 or \"inf\")".into(),
                ))
            }
        },
    };
    let alpha = match sub {
        Sub::Asymptotics => None,
        _ => match sec.alpha {
            Some(a) if a.is_finite() && a >= 0.0 => Some(a),
            Some(a) => {
                return Err(Error::Config(format!(
                    "instance.alpha must be finite and >= 0, got {a}"
                )))
            }
            None => return Err(Error::Config("missing instance.alpha".into())),
        },
    };
    Ok(Inst { family, uni, beta, pieces, q, p, alpha })
}

fn resolve_data(sec: DataSection, family: FamilyKind, sub: Sub) -> Result<DataSource> {
    let supervised = matches!(family, FamilyKind::Regression | FamilyKind::Classification);
    match (sec.path, sec.synthetic) {
        (Some(_), Some(_)) => Err(Error::Config(
            "choose one of data.path and [data.synthetic]".into(),
        )),
        (None, None) => Err(Error::Config(
            "missing data source: set data.path or [data.synthetic]".into(),
        )),
        (Some(path), None) => {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "dataset {} does not exist",
                    path.display()
                )));
            }
            let labeled = sec.labeled.unwrap_or(false);
            if supervised && !labeled {
                return Err(Error::Config(format!(
                    "family {} reads the response from the last column; set data.labeled = true",
                    family.name()
                )));
            }
            if !supervised && labeled {
                return Err(Error::Config(format!(
                    "family {} takes unlabeled points; drop data.labeled",
                    family.name()
                )));
            }
            Ok(DataSource::Csv { path, labeled })
        }
        (None, Some(sy)) => {
            if sec.labeled.is_some() {
                return Err(Error::Config(
                    "data.labeled applies to CSV input; synthetic layouts follow the family".into(),
                ));
            }
            let sampler = match sy.sampler.as_deref() {
                Some("gaussian") => SamplerKind::Gaussian,
                Some("uniform") => SamplerKind::Uniform,
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown sampler {other:?}; expected gaussian or uniform"
                    )))
                }
                None => return Err(Error::Config("missing data.synthetic.sampler".into())),
            };
            let dim = sy
                .dim
                .ok_or_else(|| Error::Config("missing data.synthetic.dim".into()))?;
            let n = sy
                .n
                .ok_or_else(|| Error::Config("missing data.synthetic.n".into()))?;
            if dim == 0 || n == 0 {
                return Err(Error::Config(
                    "data.synthetic.dim and data.synthetic.n must be positive".into(),
                ));
            }
            let (lo, hi) = match sampler {
                SamplerKind::Gaussian => {
                    if sy.lo.is_some() || sy.hi.is_some() {
                        return Err(Error::Config(
                            "lo/hi apply to the uniform sampler only".into(),
                        ));
                    }
                    (Vec::new(), Vec::new())
                }
                SamplerKind::Uniform => {
                    let (Some(lo), Some(hi)) = (sy.lo, sy.hi) else {
                        return Err(Error::Config("the uniform sampler needs lo and hi".into()));
                    };
                    if lo.len() != dim || hi.len() != dim {
                        return Err(Error::Config(format!(
                            "lo/hi must have dimension {dim}, got {} and {}",
                            lo.len(),
                            hi.len()
                        )));
                    }
                    (lo, hi)
                }
            };
            let sign_labels = sy.sign_labels.unwrap_or(false);
            if sign_labels && family != FamilyKind::Classification {
                return Err(Error::Config(
                    "sign_labels applies to classification instances".into(),
                ));
            }
            if family == FamilyKind::Classification {
                if sub == Sub::Asymptotics {
                    return Err(Error::Config(
                        "classification asymptotics needs a CSV dataset; its rows resample \
                         with their labels"
                            .into(),
                    ));
                }
                if !sign_labels {
                    return Err(Error::Config(
                        "continuous samplers do not produce ±1 labels; set \
                         data.synthetic.sign_labels = true"
                            .into(),
                    ));
                }
            }
            Ok(DataSource::Synthetic {
                sampler,
                dim,
                n,
                seed: sy.seed.unwrap_or(0),
                lo,
                hi,
                sign_labels,
            })
        }
    }
}

fn resolve_oracle(sec: Option<OracleSection>) -> Result<OracleCfg> {
    let sec = sec.unwrap_or_default();
    let levels = sec.levels.unwrap_or(64);
    if levels == 0 {
        return Err(Error::Config("oracle.levels must be positive".into()));
    }
    let mode_name = sec.mode.clone().unwrap_or_else(|| "directional".into());
    let mode = match mode_name.as_str() {
        "directional" => {
            if sec.resolution.is_some() || sec.halfwidth.is_some() {
                return Err(Error::Config(
                    "resolution/halfwidth apply to the grid mode only".into(),
                ));
            }
            OracleMode::Directional
        }
        "grid" => {
            let (Some(resolution), Some(halfwidth)) = (sec.resolution, sec.halfwidth) else {
                return Err(Error::Config(
                    "oracle.mode = \"grid\" needs resolution and halfwidth".into(),
                ));
            };
            OracleMode::Grid { resolution, halfwidth }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown oracle.mode {other:?}; expected directional or grid"
            )))
        }
    };
    Ok(OracleCfg { levels, mode })
}

fn resolve_asym(sec: Option<AsymptoticsSection>) -> Result<AsymCfg> {
    let Some(sec) = sec else {
        return Err(Error::Config("missing [asymptotics] section".into()));
    };
    let alphas = sec
        .alphas
        .ok_or_else(|| Error::Config("missing asymptotics.alphas".into()))?;
    let seeds = sec
        .seeds
        .ok_or_else(|| Error::Config("missing asymptotics.seeds".into()))?;
    Ok(AsymCfg { alphas, seeds })
}

fn resolve_choice(sec: Option<ChoiceSection>) -> Result<ChoiceCfg> {
    let Some(sec) = sec else {
        return Err(Error::Config("missing [choice] section".into()));
    };
    let family = match sec.family.as_deref() {
        Some("mnl") => ChoiceKind::Mnl,
        Some("nested-logit") => ChoiceKind::NestedLogit,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown choice.family {other:?}; expected mnl or nested-logit"
            )))
        }
        None => return Err(Error::Config("missing choice.family".into())),
    };
    let zbar = sec
        .zbar
        .ok_or_else(|| Error::Config("missing choice.zbar".into()))?;
    if zbar.is_empty() {
        return Err(Error::Config("choice.zbar must be nonempty".into()));
    }
    let (nests, taus) = match family {
        ChoiceKind::Mnl => {
            if sec.nests.is_some() || sec.taus.is_some() {
                return Err(Error::Config("nests/taus apply to nested-logit only".into()));
            }
            (Vec::new(), Vec::new())
        }
        ChoiceKind::NestedLogit => {
            let (Some(nests), Some(taus)) = (sec.nests, sec.taus) else {
                return Err(Error::Config(
                    "nested-logit needs choice.nests and choice.taus".into(),
                ));
            };
            (nests, taus)
        }
    };
    Ok(ChoiceCfg { family, zbar, eta: sec.eta.unwrap_or(1.0), nests, taus })
}

fn resolve_fit(sec: Option<FitSection>) -> Result<FitCfg> {
    let sec = sec.unwrap_or_default();
    let step_name = sec.step.clone().unwrap_or_else(|| "geometric".into());
    let step = match step_name.as_str() {
        "geometric" => {
            if sec.scale.is_some() {
                return Err(Error::Config("scale applies to the inv-sqrt step only".into()));
            }
            StepKind::Geometric {
                initial: sec.initial.unwrap_or(0.5),
                rate: sec.rate.unwrap_or(0.998),
            }
        }
        "inv-sqrt" => {
            if sec.initial.is_some() || sec.rate.is_some() {
                return Err(Error::Config(
                    "initial/rate apply to the geometric step only".into(),
                ));
            }
            StepKind::InvSqrt { scale: sec.scale.unwrap_or(0.5) }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown fit.step {other:?}; expected geometric or inv-sqrt"
            )))
        }
    };
    let domain_name = sec.domain.clone().unwrap_or_else(|| "unconstrained".into());
    let domain = match domain_name.as_str() {
        "unconstrained" | "simplex" => {
            if sec.lo.is_some() || sec.hi.is_some() {
                return Err(Error::Config("lo/hi apply to the box domain only".into()));
            }
            if domain_name == "simplex" {
                DomainKind::Simplex
            } else {
                DomainKind::Unconstrained
            }
        }
        "box" => {
            let (Some(lo), Some(hi)) = (sec.lo, sec.hi) else {
                return Err(Error::Config("the box domain needs fit.lo and fit.hi".into()));
            };
            DomainKind::Box { lo, hi }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown fit.domain {other:?}; expected unconstrained, box, or simplex"
            )))
        }
    };
    Ok(FitCfg {
        max_iters: sec.max_iters.unwrap_or(5000),
        step,
        domain,
        seed: sec.seed.unwrap_or(0),
        init: sec.init,
        tol: sec.tol.unwrap_or(1e-9),
    })
}

fn resolve(raw: FileConfig, sub: Sub) -> Result<Resolved> {
    let (inst, data) = if sub == Sub::Choice {
        (None, None)
    } else {
        let inst_sec = raw
            .instance
            .ok_or_else(|| Error::Config("missing [instance] section".into()))?;
        let inst = resolve_instance(inst_sec, sub)?;
        if sub == Sub::Fit
            && !matches!(inst.family, FamilyKind::Regression | FamilyKind::Classification)
        {
            return Err(Error::Config(
                "fit needs a regression or classification family".into(),
            ));
        }
        let data_sec = raw
            .data
            .ok_or_else(|| Error::Config("missing [data] section".into()))?;
        let data = resolve_data(data_sec, inst.family, sub)?;
        (Some(inst), Some(data))
    };
    let oracle = if sub == Sub::Oracle { Some(resolve_oracle(raw.oracle)?) } else { None };
    let asym = if sub == Sub::Asymptotics { Some(resolve_asym(raw.asymptotics)?) } else { None };
    let choice = if sub == Sub::Choice { Some(resolve_choice(raw.choice)?) } else { None };
    let fit = if sub == Sub::Fit { Some(resolve_fit(raw.fit)?) } else { None };
    let out = raw.output.unwrap_or_default();
    let gap_tol = match raw.tolerances.and_then(|t| t.gap) {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => {
            return Err(Error::Config(format!(
                "tolerances.gap must be positive, got {g}"
            )))
        }
        None => 1e-6,
    };
    Ok(Resolved {
        sub,
        inst,
        data,
        oracle,
        asym,
        choice,
        fit,
        report_path: out.report,
        curve_dir: if sub == Sub::Asymptotics { out.curve_dir } else { None },
        gap_tol,
    })
}
