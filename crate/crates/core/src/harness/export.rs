//! CSV and SVG views of a run log: coverage against step, and the
//! distribution of training goals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::log::{read_log, LogEvent};
use super::train::LOG_FILE;
use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "svg" => Ok(ExportFormat::Svg),
            other => Err(Error::Config(format!("unknown export format `{other}`"))),
        }
    }
}

/// Data extracted from one run log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSeries {
    pub goal_low: Vec<f64>,
    pub goal_high: Vec<f64>,
    /// `(step, coverage, successes, attempts)`.
    pub coverage: Vec<(usize, f64, usize, usize)>,
    /// `(episode, step, goal, density, outcome)`.
    pub goals: Vec<(usize, usize, Vec<f64>, Option<f64>, Option<bool>)>,
}

impl RunSeries {
    pub fn from_events(events: &[LogEvent]) -> Self {
        let mut s = RunSeries::default();
        for e in events {
            match e {
                LogEvent::Start {
                    goal_low,
                    goal_high,
                    ..
                } => {
                    s.goal_low = goal_low.clone();
                    s.goal_high = goal_high.clone();
                }
                LogEvent::Evaluation(r) => {
                    let attempts = r.goals.iter().map(|g| g.attempts).sum();
                    s.coverage
                        .push((r.step, r.coverage, r.successes(), attempts));
                }
                LogEvent::Episode {
                    step, curriculum, ..
                } => s.goals.push((
                    curriculum.episode,
                    *step,
                    curriculum.goal.clone(),
                    curriculum.density,
                    curriculum.outcome,
                )),
                _ => {}
            }
        }
        s
    }

    /// Per-dimension counts over `HISTOGRAM_BINS` equal bins of the goal box.
    pub fn histogram(&self) -> Vec<Vec<usize>> {
        (0..self.goal_low.len())
            .map(|d| {
                let (lo, hi) = (self.goal_low[d], self.goal_high[d]);
                let width = (hi - lo) / HISTOGRAM_BINS as f64;
                let mut counts = vec![0usize; HISTOGRAM_BINS];
                for (_, _, g, _, _) in &self.goals {
                    let b = ((g[d] - lo) / width).floor();
                    counts[(b.max(0.0) as usize).min(HISTOGRAM_BINS - 1)] += 1;
                }
                counts
            })
            .collect()
    }

    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("step,coverage,successes,attempts\n");
        for (step, c, s, a) in &self.coverage {
            let _ = writeln!(out, "{step},{c},{s},{a}");
        }
        out
    }

    pub fn goals_csv(&self) -> String {
        let dims = self.goal_low.len();
        let mut out = String::from("episode,step");
        for d in 0..dims {
            let _ = write!(out, ",goal_{d}");
        }
        out.push_str(",density,outcome\n");
        for (ep, step, g, density, outcome) in &self.goals {
            let _ = write!(out, "{ep},{step}");
            for x in g {
                let _ = write!(out, ",{x}");
            }
            let density = density.map_or(String::new(), |d| d.to_string());
            let outcome = outcome.map_or(String::new(), |o| u8::from(o).to_string());
            let _ = writeln!(out, ",{density},{outcome}");
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("dim,bin_low,bin_high,count\n");
        for (d, counts) in self.histogram().iter().enumerate() {
            let (lo, hi) = (self.goal_low[d], self.goal_high[d]);
            let width = (hi - lo) / HISTOGRAM_BINS as f64;
            for (b, c) in counts.iter().enumerate() {
                let a = lo + b as f64 * width;
                let _ = writeln!(out, "{d},{a},{},{c}", a + width);
            }
        }
        out
    }

    pub fn coverage_svg(&self) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let max_step = self.coverage.iter().map(|c| c.0).max().unwrap_or(1).max(1) as f64;
        let points: Vec<String> = self
            .coverage
            .iter()
            .map(|(s, c, _, _)| {
                let x = pad + (w - 2.0 * pad) * (*s as f64 / max_step);
                let y = h - pad - (h - 2.0 * pad) * c;
                format!("{x:.2},{y:.2}")
            })
            .collect();
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n",
                "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
                "<line x1=\"{p}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
                "<line x1=\"{p}\" y1=\"{p}\" x2=\"{p}\" y2=\"{b}\" stroke=\"black\"/>\n",
                "<text x=\"{p}\" y=\"{t}\" font-size=\"12\">coverage (0 to 1) vs step (0 to {m})</text>\n",
                "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{pts}\"/>\n",
                "</svg>\n"
            ),
            w = w,
            h = h,
            p = pad,
            b = h - pad,
            r = w - pad,
            t = pad - 10.0,
            m = max_step,
            pts = points.join(" "),
        )
    }

    /// Bars of the first goal coordinate for 1-D goals, a scatter of the
    /// first two coordinates otherwise.
    pub fn goals_svg(&self) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let mut body = String::new();
        if self.goal_low.len() == 1 {
            let counts = &self.histogram()[0];
            let max = *counts.iter().max().unwrap_or(&1).max(&1) as f64;
            let bw = (w - 2.0 * pad) / HISTOGRAM_BINS as f64;
            for (b, c) in counts.iter().enumerate() {
                let bh = (h - 2.0 * pad) * (*c as f64 / max);
                let _ = writeln!(
                    body,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"steelblue\"/>",
                    pad + b as f64 * bw,
                    h - pad - bh,
                    bw - 1.0
                );
            }
        } else if self.goal_low.len() >= 2 {
            let sx = |v: f64| {
                pad + (w - 2.0 * pad) * (v - self.goal_low[0])
                    / (self.goal_high[0] - self.goal_low[0])
            };
            let sy = |v: f64| {
                h - pad
                    - (h - 2.0 * pad) * (v - self.goal_low[1])
                        / (self.goal_high[1] - self.goal_low[1])
            };
            for (_, _, g, _, outcome) in &self.goals {
                let colour = if *outcome == Some(true) {
                    "seagreen"
                } else {
                    "indianred"
                };
                let _ = writeln!(
                    body,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{colour}\" fill-opacity=\"0.6\"/>",
                    sx(g[0]),
                    sy(g[1])
                );
            }
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{pad}\" y=\"{}\" font-size=\"12\">training goals</text>\n{body}</svg>\n",
            pad - 10.0
        )
    }
}

/// Writes the exports next to the run log and returns their paths.
pub fn export_run(run_dir: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let dir = run_dir.as_ref();
    let series = RunSeries::from_events(&read_log(dir.join(LOG_FILE))?);
    let files: Vec<(&str, String)> = match format {
        ExportFormat::Csv => vec![
            ("coverage.csv", series.coverage_csv()),
            ("goals.csv", series.goals_csv()),
            ("goal_histogram.csv", series.histogram_csv()),
        ],
        ExportFormat::Svg => vec![
            ("coverage.svg", series.coverage_svg()),
            ("goals.svg", series.goals_svg()),
        ],
    };
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
