//! Tidy long-format CSV series extracted from a report.

use levy_core::verify::BoundCheck;

use crate::io::csv_bytes;
use crate::report::Report;

/// Series names understood by [`series`].
pub const SERIES: &[&str] = &["profile", "h-vs-Vsq", "renewal", "ratio", "halfline", "estimates"];

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("unknown series `{name}`; available: {}", SERIES.join(", "))]
    UnknownSeries { name: String },
    #[error("the report has no {0}")]
    Missing(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

type Rows = Vec<(f64, String, f64)>;

/// CSV with columns `(x, series, value)`; the first header names the
/// abscissa. `check` selects a check by name for `ratio`, defaulting to the
/// first one.
pub fn series(report: &Report, which: &str, check: Option<&str>) -> Result<Vec<u8>, PlotError> {
    let (label, rows): (String, Rows) = match which {
        "profile" => {
            let p = report
                .characteristics
                .as_ref()
                .ok_or_else(|| PlotError::Missing("profile".into()))?;
            let cols: [(&str, &Vec<f64>); 10] = [
                ("K", &p.k),
                ("L", &p.l),
                ("h", &p.h),
                ("h1", &p.h1),
                ("psi_inv", &p.psi_inv),
                ("psi_star_inv", &p.psi_star_inv),
                ("V", &p.v),
                ("I", &p.script_i),
                ("J", &p.script_j),
                ("h_V2", &p.h_v_squared()),
            ];
            let mut rows = Rows::new();
            for (name, col) in cols {
                rows.extend(p.grid.iter().zip(col.iter()).map(|(x, v)| (*x, name.to_string(), *v)));
            }
            ("r".into(), rows)
        }
        "h-vs-Vsq" => {
            let p = report
                .characteristics
                .as_ref()
                .ok_or_else(|| PlotError::Missing("profile".into()))?;
            let rows = p
                .grid
                .iter()
                .zip(p.h_v_squared())
                .map(|(x, v)| (*x, "h_V2".to_string(), v))
                .collect();
            ("r".into(), rows)
        }
        "renewal" => {
            let r = report
                .renewal
                .as_ref()
                .ok_or_else(|| PlotError::Missing("renewal section".into()))?;
            let mut rows = Rows::new();
            rows.extend(r.grid.iter().zip(&r.v).map(|(x, v)| (*x, "V".to_string(), *v)));
            rows.extend(
                r.grid
                    .iter()
                    .zip(&r.vprime)
                    .map(|(x, v)| (*x, "V_prime".to_string(), *v)),
            );
            ("x".into(), rows)
        }
        "ratio" => {
            let c = find_check(report, |c| check.map_or(true, |n| c.name == n))
                .ok_or_else(|| PlotError::Missing(format!("check {}", check.unwrap_or("results"))))?;
            (
                c.grid_label.clone(),
                check_rows(c, &["observed", "lower", "upper", "ratio"]),
            )
        }
        "halfline" => {
            let c = find_check(report, |c| c.name == "survival" && c.domain == "half-line")
                .ok_or_else(|| PlotError::Missing("half-line survival check".into()))?;
            (c.grid_label.clone(), check_rows(c, &["observed", "shape", "oracle"]))
        }
        "estimates" => {
            let mut rows = Rows::new();
            for (i, s) in report.simulations.iter().enumerate() {
                for (k, e) in s.estimates.iter().enumerate() {
                    let x = k as f64;
                    rows.push((x, format!("job{i}:mean"), e.mean));
                    rows.push((x, format!("job{i}:std_error"), e.std_error));
                }
            }
            ("index".into(), rows)
        }
        other => {
            return Err(PlotError::UnknownSeries {
                name: other.to_string(),
            })
        }
    };
    let rows = rows.into_iter().map(|(x, s, v)| [x.to_string(), s, v.to_string()]);
    Ok(csv_bytes(&[label.as_str(), "series", "value"], rows)?)
}

fn find_check(report: &Report, pred: impl Fn(&BoundCheck) -> bool) -> Option<&BoundCheck> {
    report.checks.iter().filter_map(|c| c.check.as_ref()).find(|c| pred(c))
}

fn check_rows(c: &BoundCheck, which: &[&str]) -> Rows {
    let mut rows = Rows::new();
    for (i, &x) in c.grid.iter().enumerate() {
        for &w in which {
            let v = match w {
                "observed" => Some(c.observed[i].mean),
                "lower" | "shape" => Some(c.lhs[i]),
                "upper" => Some(c.rhs[i]),
                "ratio" => Some(c.ratio[i]),
                "oracle" => c.oracle.as_ref().map(|o| o[i]),
                _ => None,
            };
            if let Some(v) = v {
                rows.push((x, w.to_string(), v));
            }
        }
    }
    rows
}
