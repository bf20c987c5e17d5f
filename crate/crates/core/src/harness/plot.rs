use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::Category;
use crate::sentiment::SentimentSeries;
use crate::textmine::TopicTrend;

use super::models::ModelRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotTarget {
    ForecastVsActual,
    TopicTrend,
    SiSeries,
    Convergence,
}

impl PlotTarget {
    pub const ALL: [PlotTarget; 4] = [
        PlotTarget::ForecastVsActual,
        PlotTarget::TopicTrend,
        PlotTarget::SiSeries,
        PlotTarget::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotTarget::ForecastVsActual => "forecast_vs_actual",
            PlotTarget::TopicTrend => "topic_trend",
            PlotTarget::SiSeries => "si_series",
            PlotTarget::Convergence => "convergence",
        }
    }
}

impl fmt::Display for PlotTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotTarget::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| {
            let valid: Vec<&str> = PlotTarget::ALL.iter().map(|t| t.as_str()).collect();
            Error::invalid(format!("unknown plot target {s:?}; valid: {}", valid.join(", ")))
        })
    }
}

/// Whatever a plot may draw from.
#[derive(Debug, Clone, Default)]
pub struct PlotSources<'a> {
    pub runs: &'a [ModelRun],
    pub sentiment: Option<&'a SentimentSeries>,
    pub trend: Option<&'a TopicTrend>,
}

fn long_csv(rows: &[(String, String, String)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "index", "value"])?;
    for (s, i, v) in rows {
        w.write_record([s, i, v])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn pick_run<'a>(runs: &'a [ModelRun], model: Option<&str>, need_history: bool) -> Result<&'a ModelRun> {
    let usable = |r: &&ModelRun| r.is_ok() && (!need_history || !r.convergence.is_empty());
    match model {
        Some(m) => runs
            .iter()
            .filter(usable)
            .find(|r| r.model == m)
            .ok_or_else(|| Error::invalid(format!("report has no usable run for model {m}"))),
        None => runs
            .iter()
            .find(usable)
            .ok_or_else(|| Error::invalid("report has no usable model run")),
    }
}

/// Long-format `series,index,value` rows for one plot. `model` picks the run
/// for forecast and convergence plots; the first usable run otherwise.
pub fn emit_plot_data(sources: &PlotSources, what: PlotTarget, model: Option<&str>) -> Result<String> {
    let mut rows = Vec::new();
    match what {
        PlotTarget::ForecastVsActual => {
            let r = pick_run(sources.runs, model, false)?;
            for (d, a) in r.dates.iter().zip(&r.actual) {
                rows.push(("actual".into(), d.to_string(), format!("{a}")));
            }
            for (d, p) in r.dates.iter().zip(&r.predicted) {
                rows.push((r.model.clone(), d.to_string(), format!("{p}")));
            }
        }
        PlotTarget::Convergence => {
            let r = pick_run(sources.runs, model, true)?;
            for h in &r.convergence {
                rows.push(("best_fitness".into(), h.iteration.to_string(), format!("{}", h.best_fitness)));
            }
        }
        PlotTarget::TopicTrend => {
            let t = sources.trend.ok_or_else(|| Error::invalid("no topic trend available"))?;
            for k in 0..t.k {
                for s in &t.slices {
                    let v = s.prevalence.as_ref().map_or_else(String::new, |p| format!("{}", p[k]));
                    rows.push((format!("topic{}", k + 1), s.start.to_string(), v));
                }
            }
        }
        PlotTarget::SiSeries => {
            let s = sources.sentiment.ok_or_else(|| Error::invalid("no sentiment series available"))?;
            for cat in Category::ALL {
                for (d, v) in s.dates.iter().zip(&s.si[&cat]) {
                    rows.push((format!("si_{}", cat.as_str()), d.to_string(), format!("{v}")));
                }
            }
        }
    }
    long_csv(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_target_lists_valid_values() {
        let e = "heatmap".parse::<PlotTarget>().unwrap_err().to_string();
        for t in PlotTarget::ALL {
            assert!(e.contains(t.as_str()), "{e}");
        }
        assert_eq!("si_series".parse::<PlotTarget>().unwrap(), PlotTarget::SiSeries);
    }

    #[test]
    fn missing_sources_error() {
        let src = PlotSources::default();
        for t in PlotTarget::ALL {
            assert!(emit_plot_data(&src, t, None).is_err());
        }
    }
}
