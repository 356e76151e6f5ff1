use std::path::Path;

use billiard_core::entropy::{self, ItineraryCount};
use billiard_core::flow::{simulate, PhasePoint, Stop};
use billiard_core::geometry::{BilliardTable, PlanarPoint, UnitVector};
use billiard_core::rotation::{self, AdmissibleOptions};
use billiard_core::sampling::{liouville_point, sample_rng};
use billiard_core::symbolic::{random_reduced_word, ReducedWord};
use billiard_core::variational::{self, PathMode, PeriodicOrbit};
use billiard_core::Error as CoreError;
use serde::Serialize;
use serde_json::json;

use crate::config::{radius_for, Config};
use crate::output::{self, num, Series};

#[derive(Debug)]
pub enum Failure {
    Numerical(CoreError),
    Io(std::io::Error),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Degenerate draws: redrawn until valid, or dropped after the retry budget.
#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct Degenerate {
    pub resampled: u64,
    pub dropped: u64,
}

pub fn run(cfg: &Config) -> Result<Degenerate, Failure> {
    std::fs::create_dir_all(&cfg.out)?;
    match cfg.experiment.as_str() {
        "simulate" => simulate_one(cfg),
        "rotation-set" => rotation_set(cfg),
        "realize" => realize(cfg),
        "orbit" => orbit(cfg),
        "passages" => passages(cfg),
        "entropy" => entropy_point(cfg),
        "lyapunov" => lyapunov(cfg),
        "sweep" => sweep(cfg),
        other => unreachable!("unknown experiment {other}"),
    }
}

fn target_word(cfg: &Config) -> ReducedWord {
    match &cfg.word {
        Some(w) => w.parse().expect("validated on resolve"),
        None => random_reduced_word(cfg.n, cfg.length, &mut sample_rng(cfg.seed, 0)),
    }
}

fn simulate_one(cfg: &Config) -> Result<Degenerate, Failure> {
    let table = cfg.table();
    let start = match cfg.start {
        Some((x, y, angle)) => {
            PhasePoint::new(PlanarPoint::new(x, y), UnitVector::from_angle(angle))
        }
        None => {
            let (p, v) = liouville_point(&table, &mut sample_rng(cfg.seed, 0));
            PhasePoint::new(p, v)
        }
    };
    let seg = simulate(&table, start, Stop::Time(cfg.time))?;
    let rows: Vec<Vec<String>> = seg
        .events
        .iter()
        .map(|e| {
            vec![
                num(e.time),
                e.disk.disk_id.to_string(),
                e.disk.cell.0.to_string(),
                e.disk.cell.1.to_string(),
                num(e.point.x),
                num(e.point.y),
                num(e.cos_phi),
            ]
        })
        .collect();
    output::write_csv(
        &cfg.out.join("collisions.csv"),
        &["time", "disk", "p", "q", "x", "y", "cos_phi"],
        &rows,
    )?;
    let crossings: Vec<Vec<String>> = seg
        .crossings
        .iter()
        .map(|c| vec![num(c.time), c.letter.to_string()])
        .collect();
    output::write_csv(
        &cfg.out.join("crossings.csv"),
        &["time", "letter"],
        &crossings,
    )?;
    let word = seg.word();
    output::write_json(
        &cfg.out.join("segment.json"),
        &json!({
            "initial": seg.initial,
            "final": seg.final_state,
            "duration": seg.duration,
            "collisions": seg.events.len(),
            "word": word.to_string(),
            "word_len": word.len(),
            "abs_dx": seg.abs_dx,
            "abs_dy": seg.abs_dy,
            "corridor_trapped": seg.corridor_trapped,
        }),
    )?;
    Ok(Degenerate::default())
}

fn rotation_set(cfg: &Config) -> Result<Degenerate, Failure> {
    let table = cfg.table();
    let samples = rotation::sample_rotation_set(&table, cfg.samples, cfg.time, cfg.seed, cfg.depth);
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                cfg.seed.to_string(),
                cfg.n.to_string(),
                num(cfg.r),
                num(cfg.time),
                s.collisions.to_string(),
                s.word_len.to_string(),
                s.truncated_letters.to_string(),
                num(s.rotation.speed),
                s.rotation.direction.to_string(),
            ]
        })
        .collect();
    output::write_csv(
        &cfg.out.join("rotation_set.csv"),
        &[
            "seed",
            "n",
            "r",
            "T",
            "collisions",
            "word_len",
            "truncated_letters",
            "speed",
            "prefix",
        ],
        &rows,
    )?;
    let speeds: Vec<f64> = samples.iter().map(|s| s.rotation.speed).collect();
    let svg = output::histogram(
        &format!("escape speed, n = {}, T = {}", cfg.n, cfg.time),
        "speed",
        &speeds,
        40,
        &[(2.0 * 2f64.sqrt(), "2√2"), (1.0 / 5f64.sqrt(), "1/√5")],
    );
    std::fs::write(cfg.out.join("speed_histogram.svg"), svg)?;
    Ok(Degenerate {
        resampled: samples.iter().map(|s| s.resampled as u64).sum(),
        dropped: cfg.samples - samples.len() as u64,
    })
}

fn realize(cfg: &Config) -> Result<Degenerate, Failure> {
    let table = cfg.table();
    let w = target_word(cfg);
    let realized = variational::realize_orbit(&table, &w)?;
    let times = realized.passage_times();
    let rows: Vec<Vec<String>> = realized
        .crossings
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let passage = if k == 0 {
                String::new()
            } else {
                num(times[k - 1])
            };
            vec![k.to_string(), num(c.time), c.letter.to_string(), passage]
        })
        .collect();
    output::write_csv(
        &cfg.out.join("crossings.csv"),
        &["index", "time", "letter", "passage"],
        &rows,
    )?;
    std::fs::write(
        cfg.out.join("sequence.json"),
        realized.sequence.to_json() + "\n",
    )?;
    std::fs::write(cfg.out.join("path.json"), realized.path.to_json() + "\n")?;
    Ok(Degenerate::default())
}

fn orbit(cfg: &Config) -> Result<Degenerate, Failure> {
    let table = cfg.table();
    let w = target_word(cfg);
    let orbit: PeriodicOrbit = match cfg.speed {
        Some(speed) => {
            let opts = AdmissibleOptions {
                depth: cfg.depth,
                max_extension: cfg.max_extension,
                ..AdmissibleOptions::default()
            };
            rotation::admissible_vector(&table, &w, speed, w.len(), opts)?.orbit
        }
        None => {
            let realized = variational::realize_orbit(&table, &w)?;
            let path = variational::minimize_path(&table, &realized.sequence, PathMode::Free)?;
            PeriodicOrbit::from_doubling(&table, path, cfg.depth)?
        }
    };
    std::fs::write(cfg.out.join("orbit.json"), orbit.to_json() + "\n")?;
    output::write_json(
        &cfg.out.join("rotation.json"),
        &json!({
            "target": w.to_string(),
            "speed": orbit.rotation.speed,
            "direction": orbit.rotation.direction.to_string(),
            "period": orbit.period,
            "word_len": orbit.word.len(),
        }),
    )?;
    Ok(Degenerate::default())
}

fn passages(cfg: &Config) -> Result<Degenerate, Failure> {
    let table = cfg.table();
    let rows = variational::passage_time_table(&table)?;
    let n = f64::from(cfg.n);
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|m| {
            vec![
                m.case.number().to_string(),
                m.n.to_string(),
                m.instances.to_string(),
                num(m.max_time),
                num(m.mean_time),
                num(m.case.leading_bound()),
                num(n * (m.max_time - m.case.leading_bound())),
                m.worst_word.to_string(),
            ]
        })
        .collect();
    output::write_csv(
        &cfg.out.join("passages.csv"),
        &[
            "case",
            "n",
            "instances",
            "max_time",
            "mean_time",
            "leading_bound",
            "fitted_c",
            "worst_word",
        ],
        &csv,
    )?;
    let bars: Vec<(String, f64, f64)> = rows
        .iter()
        .map(|m| {
            (
                format!("case {}", m.case.number()),
                m.max_time,
                m.case.leading_bound(),
            )
        })
        .collect();
    std::fs::write(
        cfg.out.join("passages.svg"),
        output::bar_table(&format!("worst passage time, n = {}", cfg.n), &bars),
    )?;
    Ok(Degenerate::default())
}

struct EntropyRow {
    n: u32,
    r: f64,
    epsilon: f64,
    count: ItineraryCount,
    upper: f64,
    metric: entropy::EntropyEstimate,
}

impl EntropyRow {
    const HEADER: [&'static str; 11] = [
        "n",
        "r",
        "epsilon0",
        "T",
        "samples",
        "distinct",
        "htop_lower_est",
        "htop_upper_formula",
        "lambda_flow",
        "mean_free_time",
        "h_map_est",
    ];

    fn compute(n: u32, r: f64, epsilon: f64, cfg: &Config) -> Result<EntropyRow, Failure> {
        let table = BilliardTable::new(n, r)?;
        let count = entropy::count_itineraries(&table, epsilon, cfg.samples, cfg.time, cfg.seed);
        let metric = entropy::metric_entropy_flow(&table, cfg.time, cfg.samples, cfg.seed)?;
        Ok(EntropyRow {
            n,
            r,
            epsilon,
            count,
            upper: entropy::htop_bounds(n, 0.0)?.upper,
            metric,
        })
    }

    fn record(&self, time: f64) -> Vec<String> {
        vec![
            self.n.to_string(),
            num(self.r),
            num(self.epsilon),
            num(time),
            self.count.samples.to_string(),
            self.count.distinct.to_string(),
            num(self.count.estimate),
            num(self.upper),
            num(self.metric.lambda_flow),
            num(self.metric.mean_free_time),
            num(self.metric.h_map),
        ]
    }

    fn degenerate(&self, samples: u64) -> Degenerate {
        Degenerate {
            resampled: self.count.resampled + self.metric.resampled,
            dropped: samples - self.metric.samples,
        }
    }
}

fn entropy_point(cfg: &Config) -> Result<Degenerate, Failure> {
    let row = EntropyRow::compute(cfg.n, cfg.r, cfg.epsilon, cfg)?;
    output::write_csv(
        &cfg.out.join("entropy.csv"),
        &EntropyRow::HEADER,
        &[row.record(cfg.time)],
    )?;
    Ok(row.degenerate(cfg.samples))
}

fn lyapunov(cfg: &Config) -> Result<Degenerate, Failure> {
    let radii = cfg.r_values.clone().unwrap_or_else(|| vec![cfg.r]);
    let mut rows = Vec::new();
    let mut deg = Degenerate::default();
    for r in radii {
        let table = BilliardTable::new(cfg.n, r)?;
        let est = entropy::metric_entropy_flow(&table, cfg.time, cfg.samples, cfg.seed)?;
        deg.resampled += est.resampled;
        deg.dropped += cfg.samples - est.samples;
        rows.push(vec![
            cfg.n.to_string(),
            num(r),
            num(cfg.time),
            est.samples.to_string(),
            est.collisions.to_string(),
            num(est.lambda_flow),
            num(est.lambda_std_err),
            num(est.lambda_flow / (-r * r.ln())),
            num(est.mean_free_time),
            num(est.h_map),
        ]);
    }
    output::write_csv(
        &cfg.out.join("lyapunov.csv"),
        &[
            "n",
            "r",
            "T",
            "samples",
            "collisions",
            "lambda_flow",
            "lambda_std_err",
            "lambda_over_r_log_r",
            "mean_free_time",
            "h_map_est",
        ],
        &rows,
    )?;
    Ok(deg)
}

fn sweep(cfg: &Config) -> Result<Degenerate, Failure> {
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        match &cfg.r_values {
            Some(rs) => {
                for &r in rs {
                    rows.push(EntropyRow::compute(n, r, r / 10.0, cfg)?);
                }
            }
            None => {
                let r = radius_for(n, None, None).map_err(|e| CoreError::InvalidArgument(e.0))?;
                rows.push(EntropyRow::compute(n, r, r / 10.0, cfg)?);
            }
        }
    }
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.record(cfg.time)).collect();
    output::write_csv(&cfg.out.join("sweep.csv"), &EntropyRow::HEADER, &records)?;
    write_scaling_figure(&cfg.out.join("entropy_scaling.svg"), &rows)?;
    Ok(rows.iter().fold(Degenerate::default(), |acc, r| {
        let d = r.degenerate(cfg.samples);
        Degenerate {
            resampled: acc.resampled + d.resampled,
            dropped: acc.dropped + d.dropped,
        }
    }))
}

fn write_scaling_figure(path: &Path, rows: &[EntropyRow]) -> std::io::Result<()> {
    let per_log = |f: &dyn Fn(&EntropyRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter()
            .map(|r| (f64::from(r.n), f(r) / f64::from(r.n).ln()))
            .collect()
    };
    let series = [
        Series {
            label: "h_map / log n",
            color: "#4a7ab5",
            points: per_log(&|r| r.metric.h_map),
        },
        Series {
            label: "itinerary est / log n",
            color: "#3a9a5a",
            points: per_log(&|r| r.count.estimate),
        },
        Series {
            label: "upper formula / log n",
            color: "crimson",
            points: per_log(&|r| r.upper),
        },
    ];
    let svg = output::line_chart(
        "entropy scaling",
        "n",
        "h / log n",
        &series,
        Some((1.0 / 5f64.sqrt(), 2.0 * 2f64.sqrt())),
    );
    std::fs::write(path, svg)
}
