use std::path::{Path, PathBuf};

use billiard_core::geometry::BilliardTable;
use clap::Args;
use serde::{Deserialize, Serialize};

/// Only radius rule understood by `--r-rule`.
pub const QUARTER_RULE: &str = "1/(4n)";

/// Parameters shared by every experiment. Each one may come from the JSON
/// config file or a flag; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON config file with any of these fields.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of scatterers per unit cell.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Scatterer radius.
    #[arg(long, global = true, conflicts_with = "r_rule")]
    pub r: Option<f64>,
    /// Radius rule instead of an explicit radius; only "1/(4n)".
    #[arg(long, global = true)]
    pub r_rule: Option<String>,
    /// Segment duration.
    #[arg(long = "T", global = true, allow_hyphen_values = true)]
    #[serde(rename = "T")]
    pub time: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Width of the partition strips (default r/10).
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "BILLIARD_THREADS")]
    pub threads: Option<usize>,
    /// Target word, e.g. "a b2 B1".
    #[arg(long, global = true)]
    pub word: Option<String>,
    /// Length of a random target word when no word is given.
    #[arg(long, global = true)]
    pub length: Option<usize>,
    /// Collisions per sample for the collision-map estimate.
    #[arg(long, global = true)]
    pub collisions: Option<usize>,
    /// Target escape speed for `orbit`.
    #[arg(long, global = true)]
    pub speed: Option<f64>,
    #[arg(long, global = true)]
    pub max_extension: Option<usize>,
    /// Letters kept for rotation directions.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Start point and angle for `simulate`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub angle: Option<f64>,
    /// Comma-separated n values for `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_values: Option<Vec<u32>>,
    /// Comma-separated radii for `sweep` (default: the 1/(4n) rule).
    #[arg(long, global = true, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        Params { config: None, $($f: $top.$f.or($base.$f)),* }
    };
}

impl Params {
    pub fn overlay(self, flags: Params) -> Params {
        let base = self;
        // An explicit radius on the command line replaces a rule from the file
        // and vice versa.
        let (r, r_rule) = if flags.r.is_some() || flags.r_rule.is_some() {
            (flags.r, flags.r_rule.clone())
        } else {
            (base.r, base.r_rule.clone())
        };
        let mut merged = overlay!(
            base,
            flags,
            n,
            r,
            r_rule,
            time,
            samples,
            seed,
            epsilon,
            out,
            threads,
            word,
            length,
            collisions,
            speed,
            max_extension,
            depth,
            x,
            y,
            angle,
            n_values,
            r_values
        );
        merged.r = r;
        merged.r_rule = r_rule;
        merged
    }

    pub fn load(path: &Path) -> Result<Params, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub experiment: String,
    pub n: u32,
    pub r: f64,
    pub r_rule: Option<String>,
    #[serde(rename = "T")]
    pub time: f64,
    pub samples: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub out: PathBuf,
    pub threads: usize,
    pub word: Option<String>,
    pub length: usize,
    pub collisions: usize,
    pub speed: Option<f64>,
    pub max_extension: usize,
    pub depth: usize,
    pub start: Option<(f64, f64, f64)>,
    pub n_values: Vec<u32>,
    pub r_values: Option<Vec<f64>>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn radius_for(n: u32, r: Option<f64>, rule: Option<&str>) -> Result<f64, ConfigError> {
    match (r, rule) {
        (Some(_), Some(_)) => bad("r and r_rule are mutually exclusive"),
        (Some(r), None) => Ok(r),
        (None, Some(QUARTER_RULE) | None) => Ok(1.0 / (4.0 * f64::from(n.max(1)))),
        (None, Some(other)) => bad(format!(
            "unknown r_rule {other:?}; only \"{QUARTER_RULE}\" is supported"
        )),
    }
}

impl Config {
    pub fn resolve(experiment: &str, p: Params) -> Result<Config, ConfigError> {
        let n = p.n.unwrap_or(5);
        let r = radius_for(n, p.r, p.r_rule.as_deref())?;
        if let Err(e) = BilliardTable::new(n, r) {
            return bad(format!("precondition violated: {e}"));
        }
        let time = p.time.unwrap_or(100.0);
        if !(time > 0.0 && time.is_finite()) {
            return bad(format!(
                "precondition violated: T = {time} must be positive"
            ));
        }
        let epsilon = p.epsilon.unwrap_or(r / 10.0);
        if !(epsilon > 0.0 && epsilon < r) {
            return bad(format!(
                "precondition violated: epsilon = {epsilon} must lie in (0, r = {r})"
            ));
        }
        let threads = match p.threads {
            Some(0) => return bad("precondition violated: threads must be at least 1"),
            Some(t) => t,
            None => std::thread::available_parallelism().map_or(1, |t| t.get()),
        };
        if let Some(s) = p.speed {
            if !(s >= 0.0) {
                return bad(format!(
                    "precondition violated: speed = {s} must be nonnegative"
                ));
            }
            let bound = billiard_core::rotation::admissible_speed_bound(n);
            if s > bound {
                return bad(format!(
                    "precondition violated: speed = {s} exceeds the admissible bound {bound}"
                ));
            }
        }
        if let Some(w) = &p.word {
            match w.parse::<billiard_core::symbolic::ReducedWord>() {
                Err(e) => return bad(format!("invalid word {w:?}: {e}")),
                Ok(parsed) if parsed.max_index() > n => {
                    return bad(format!("invalid word {w:?}: letter index exceeds n = {n}"));
                }
                Ok(_) => {}
            }
        }
        let n_values = p.n_values.unwrap_or_else(|| vec![n]);
        if n_values.is_empty() || n_values.contains(&0) {
            return bad("precondition violated: n_values must be nonempty and positive");
        }
        if let Some(rs) = &p.r_values {
            for &rv in rs {
                for &nv in &n_values {
                    if let Err(e) = BilliardTable::new(nv, rv) {
                        return bad(format!("precondition violated in sweep: {e}"));
                    }
                }
            }
        }
        if matches!(experiment, "passages" | "entropy" | "sweep")
            && n_values.iter().chain([&n]).any(|&v| v < 2)
        {
            return bad(format!("precondition violated: {experiment} needs n >= 2"));
        }
        let start = match (p.x, p.y, p.angle) {
            (Some(x), Some(y), Some(a)) => Some((x, y, a)),
            (None, None, None) => None,
            _ => return bad("x, y and angle must be given together"),
        };
        Ok(Config {
            experiment: experiment.to_string(),
            n,
            r,
            r_rule: if p.r.is_some() {
                None
            } else {
                Some(QUARTER_RULE.to_string())
            },
            time,
            samples: p.samples.unwrap_or(1000),
            seed: p.seed.unwrap_or(1),
            epsilon,
            out: p.out.unwrap_or_else(|| PathBuf::from("out")),
            threads,
            word: p.word,
            length: p.length.unwrap_or(50),
            collisions: p.collisions.unwrap_or(1000),
            speed: p.speed,
            max_extension: p
                .max_extension
                .unwrap_or(billiard_core::variational::DEFAULT_MAX_EXTENSION),
            depth: p.depth.unwrap_or(billiard_core::rotation::DEFAULT_DEPTH),
            start,
            n_values,
            r_values: p.r_values,
        })
    }

    pub fn table(&self) -> BilliardTable {
        BilliardTable::new(self.n, self.r).expect("validated on resolve")
    }
}
