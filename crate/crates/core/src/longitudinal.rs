//! Trend regressions over a series of measurements.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::graph::MeasurementStats;
use crate::{Error, Result};

/// Residual variance below which a fit is treated as exact.
const EXACT_FIT_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub ordinal: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calendar_week: Option<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_name: String,
    pub points: Vec<SeriesPoint>,
    pub pre_gdpr_ordinals: BTreeSet<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    #[default]
    Ordinal,
    CalendarWeek,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided p-value of the slope's t statistic with n − 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub included_pre_gdpr: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPair {
    pub metric_name: String,
    pub with_pre_gdpr: RegressionResult,
    pub without_pre_gdpr: RegressionResult,
    /// Slope including the pre-GDPR points minus slope excluding them.
    pub slope_difference: f64,
}

/// Ordinary least squares of y on x.
///
/// Needs at least three points with distinct x. An exact fit (residual
/// variance below 1e-12) gets p = 1 when the slope is zero and p = 0
/// otherwise.
pub fn ols_fit(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Regression(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Regression("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let df = nf - 2.0;
    let variance = sse / df;
    let p_value = if variance < EXACT_FIT_VARIANCE {
        if slope.abs() <= EXACT_FIT_VARIANCE {
            1.0
        } else {
            0.0
        }
    } else {
        let t = slope / (variance / sxx).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Regression(e.to_string()))?;
        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
    };
    Ok(RegressionResult {
        slope,
        intercept,
        p_value,
        n,
        included_pre_gdpr: false,
    })
}

impl MetricSeries {
    /// Ordinals must be strictly increasing.
    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if w[1].ordinal <= w[0].ordinal {
                return Err(Error::Regression(format!(
                    "{}: ordinals not strictly increasing at {}",
                    self.metric_name, w[1].ordinal
                )));
            }
        }
        Ok(())
    }

    fn xy(&self, axis: XAxis, include_pre: bool) -> Result<Vec<(f64, f64)>> {
        self.points
            .iter()
            .filter(|p| include_pre || !self.pre_gdpr_ordinals.contains(&p.ordinal))
            .map(|p| {
                let x = match axis {
                    XAxis::Ordinal => p.ordinal,
                    XAxis::CalendarWeek => p.calendar_week.ok_or_else(|| {
                        Error::Regression(format!(
                            "{}: point {} has no calendar week",
                            self.metric_name, p.ordinal
                        ))
                    })?,
                };
                Ok((f64::from(x), p.value))
            })
            .collect()
    }

    pub fn fit(&self, axis: XAxis, include_pre: bool) -> Result<RegressionResult> {
        self.validate()?;
        let mut r = ols_fit(&self.xy(axis, include_pre)?)?;
        r.included_pre_gdpr = include_pre;
        Ok(r)
    }
}

/// Fits the series with and without its pre-GDPR points.
pub fn trend_pair(series: &MetricSeries, axis: XAxis) -> Result<TrendPair> {
    let with_pre_gdpr = series.fit(axis, true)?;
    let without_pre_gdpr = series.fit(axis, false)?;
    Ok(TrendPair {
        metric_name: series.metric_name.clone(),
        slope_difference: with_pre_gdpr.slope - without_pre_gdpr.slope,
        with_pre_gdpr,
        without_pre_gdpr,
    })
}

/// One CSV row of a metric series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub metric: String,
    pub ordinal: u32,
    pub value: f64,
    #[serde(default)]
    pub pre_gdpr: bool,
    #[serde(default)]
    pub calendar_week: Option<u32>,
}

/// Groups rows by metric (in name order), sorting each series by ordinal.
pub fn series_from_rows(rows: &[SeriesRow]) -> Result<Vec<MetricSeries>> {
    let mut grouped: BTreeMap<&str, MetricSeries> = BTreeMap::new();
    for r in rows {
        let s = grouped.entry(&r.metric).or_insert_with(|| MetricSeries {
            metric_name: r.metric.clone(),
            points: Vec::new(),
            pre_gdpr_ordinals: BTreeSet::new(),
        });
        s.points.push(SeriesPoint {
            ordinal: r.ordinal,
            calendar_week: r.calendar_week,
            value: r.value,
        });
        if r.pre_gdpr {
            s.pre_gdpr_ordinals.insert(r.ordinal);
        }
    }
    let mut out: Vec<MetricSeries> = grouped.into_values().collect();
    for s in &mut out {
        s.points.sort_by_key(|p| p.ordinal);
        s.validate()?;
    }
    Ok(out)
}

type Metric = (&'static str, fn(&MeasurementStats) -> f64);

/// Node, edge and component counts per measurement as series.
pub fn series_from_stats(rows: &[MeasurementStats]) -> Vec<MetricSeries> {
    let metrics: [Metric; 5] = [
        ("nodes", |r| (r.stats.node_count - r.stats.isolated_count) as f64),
        ("sync_edges", |r| r.stats.sync_edge_count as f64),
        ("components", |r| r.stats.component_count as f64),
        ("largest_component", |r| r.stats.largest_component_size as f64),
        ("algebraic_connectivity", |r| r.stats.algebraic_connectivity),
    ];
    let mut ordered: Vec<&MeasurementStats> = rows.iter().collect();
    ordered.sort_by_key(|r| r.measurement.ordinal);
    metrics
        .iter()
        .map(|(name, get)| MetricSeries {
            metric_name: name.to_string(),
            points: ordered
                .iter()
                .map(|r| SeriesPoint {
                    ordinal: r.measurement.ordinal,
                    calendar_week: r.measurement.calendar_week(),
                    value: get(r),
                })
                .collect(),
            pre_gdpr_ordinals: ordered
                .iter()
                .filter(|r| r.measurement.pre_gdpr)
                .map(|r| r.measurement.ordinal)
                .collect(),
        })
        .collect()
}
