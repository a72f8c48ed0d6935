use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sectoria::error::{Error, ErrorKind};
use sectoria::geometry::{Band, Chart, Sector};
use sectoria::solver::{Tolerances, SCHEMA};
use sectoria::turrittin::OperatorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Cover,
    Solve,
    CheckPullback,
    Experiment,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// A job failure and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input.
    Input(String),
    Core(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Input => 1,
                ErrorKind::Hypothesis => 3,
                ErrorKind::Numeric => 4,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

pub fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

/// Either a path to a JSON file (relative to the job file) or the value inline.
#[derive(Debug, Clone)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<'de, T: DeserializeOwned> Deserialize<'de> for Source<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(Source::Path(p.into())),
            v => serde_json::from_value(v).map(Source::Inline).map_err(serde::de::Error::custom),
        }
    }
}

/// Region documents: a list of bands, or a sector with a chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Bands { bands: Vec<Band> },
    List(Vec<Band>),
    One(Band),
    ChartImage { chart: Chart, sector: Sector },
}

impl RegionSpec {
    pub fn bands(&self) -> Outcome<Vec<Band>> {
        match self {
            RegionSpec::Bands { bands } | RegionSpec::List(bands) if !bands.is_empty() => Ok(bands.clone()),
            RegionSpec::One(b) => Ok(vec![b.clone()]),
            RegionSpec::ChartImage { .. } => Err(input("region: expected bands, found a chart image")),
            _ => Err(input("region: empty band list")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobDoc {
    schema: Option<String>,
    command: Option<Command>,
    operator: Option<Source<OperatorSpec>>,
    region: Option<Source<RegionSpec>>,
    #[serde(default)]
    rhs: Vec<String>,
    #[serde(default)]
    trials: Vec<Vec<String>>,
    function: Option<String>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    tolerances: Option<Tolerances>,
    order: Option<usize>,
    max_amplitude: Option<f64>,
    per_stratum: Option<usize>,
}

/// A job with every referenced file loaded.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: Command,
    pub operator: Option<OperatorSpec>,
    pub region: Option<RegionSpec>,
    pub rhs: Vec<String>,
    pub trials: Vec<Vec<String>>,
    /// Function examined by `check-pullback`.
    pub function: Option<String>,
    pub output: PathBuf,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub order: Option<usize>,
    pub max_amplitude: Option<f64>,
    pub per_stratum: Option<usize>,
}

fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Outcome<T> {
    serde_json::from_str(text).map_err(|e| {
        input(format!("{}: line {}, column {}: {e}", origin.display(), e.line(), e.column()))
    })
}

fn load<T: DeserializeOwned>(src: Source<T>, base: &Path, what: &str) -> Outcome<T> {
    match src {
        Source::Inline(v) => Ok(v),
        Source::Path(p) => {
            let p = if p.is_absolute() { p } else { base.join(p) };
            let text = fs::read_to_string(&p).map_err(|e| input(format!("{what} file {}: {e}", p.display())))?;
            parse_json(&text, &p)
        }
    }
}

impl JobSpec {
    /// Reads `path`; `command`, `out` and `seed` from the command line take
    /// precedence over the file.
    pub fn load(path: &Path, command: Command, out: Option<PathBuf>, seed: Option<u64>) -> Outcome<JobSpec> {
        let text = fs::read_to_string(path).map_err(|e| input(format!("job file {}: {e}", path.display())))?;
        let doc: JobDoc = parse_json(&text, path)?;
        if let Some(s) = &doc.schema {
            if s != SCHEMA {
                return Err(input(format!("unsupported schema {s:?}, expected {SCHEMA:?}")));
            }
        }
        if let Some(c) = doc.command {
            if c != command {
                return Err(input(format!("job file is for `{c}`, invoked as `{command}`")));
            }
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let job = JobSpec {
            command,
            operator: doc.operator.map(|s| load(s, base, "operator")).transpose()?,
            region: doc.region.map(|s| load(s, base, "region")).transpose()?,
            rhs: doc.rhs,
            trials: doc.trials,
            function: doc.function,
            output: out.or(doc.output).unwrap_or_else(|| PathBuf::from(".")),
            seed: seed.or(doc.seed).unwrap_or(0),
            tolerances: doc.tolerances.unwrap_or_default(),
            order: doc.order,
            max_amplitude: doc.max_amplitude,
            per_stratum: doc.per_stratum,
        };
        job.validate()?;
        Ok(job)
    }

    fn validate(&self) -> Outcome<()> {
        let need = |ok: bool, field: &str| if ok { Ok(()) } else { Err(input(format!("`{}` needs `{field}`", self.command))) };
        match self.command {
            Command::Analyze => need(self.operator.is_some(), "operator"),
            Command::Cover => need(self.region.is_some(), "region"),
            Command::Solve => {
                need(self.operator.is_some(), "operator")?;
                need(self.region.is_some(), "region")?;
                need(!self.rhs.is_empty(), "rhs")
            }
            Command::CheckPullback => {
                need(self.function.is_some(), "function")?;
                need(matches!(self.region, Some(RegionSpec::ChartImage { .. })), "region with chart and sector")
            }
            Command::Experiment => {
                need(self.operator.is_some(), "operator")?;
                need(self.region.is_some(), "region")
            }
        }
    }
}
