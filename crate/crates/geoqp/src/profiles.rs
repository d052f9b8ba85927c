//! Data, performance and scalability profiles over run records.
//!
//! A [`RunRecord`] is one `(solver setting, problem, seed)` outcome. Failed
//! runs carry an infinite cost by construction, so every profile treats
//! failures uniformly: they never enter a distribution's reachable fraction
//! and they push medians toward infinity.

use crate::alm::AlmStatus;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("profile requires a nonempty record set")]
    EmptyRecordSet,
    #[error("performance profile requires at least two solver settings")]
    NeedTwoSolvers,
}

/// Outcome of one solver run. `runtime` is the profile metric: wall-clock
/// seconds when solved, infinity otherwise (the raw wall clock stays in
/// `elapsed_s` for diagnostics).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub setting: String,
    pub problem: String,
    pub size: usize,
    pub seed: u64,
    #[serde(with = "inf_as_null")]
    pub runtime: f64,
    pub elapsed_s: f64,
    pub status: AlmStatus,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

impl RunRecord {
    pub fn new(
        setting: impl Into<String>,
        problem: impl Into<String>,
        size: usize,
        seed: u64,
        status: AlmStatus,
        elapsed_s: f64,
        inner_iterations: usize,
        outer_iterations: usize,
    ) -> Self {
        let runtime = if status == AlmStatus::Solved {
            elapsed_s
        } else {
            f64::INFINITY
        };
        RunRecord {
            setting: setting.into(),
            problem: problem.into(),
            size,
            seed,
            runtime,
            elapsed_s,
            status,
            inner_iterations,
            outer_iterations,
        }
    }

    fn key(&self) -> (String, usize, u64) {
        (self.problem.clone(), self.size, self.seed)
    }

    /// Inner-iteration cost with the same failure convention as `runtime`.
    pub fn iteration_cost(&self) -> f64 {
        if self.status == AlmStatus::Solved {
            self.inner_iterations as f64
        } else {
            f64::INFINITY
        }
    }
}

/// JSON cannot hold IEEE infinities; they round-trip as `null`.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Right-continuous nondecreasing step function on `[0, ∞)` with range
/// `[0, 1]`, stored as sorted breakpoints `(t, fraction at t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<(f64, f64)>,
}

impl StepFunction {
    /// Empirical distribution of the finite entries of `costs`, with the
    /// fraction denominator counting every entry (failures included).
    pub fn from_costs(costs: &[f64]) -> Result<Self, ProfileError> {
        if costs.is_empty() {
            return Err(ProfileError::EmptyRecordSet);
        }
        let total = costs.len() as f64;
        let mut finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        for (i, t) in finite.iter().enumerate() {
            let fraction = (i + 1) as f64 / total;
            match breakpoints.last_mut() {
                Some(last) if last.0 == *t => last.1 = fraction,
                _ => breakpoints.push((*t, fraction)),
            }
        }
        Ok(StepFunction { breakpoints })
    }

    pub fn from_breakpoints(breakpoints: Vec<(f64, f64)>) -> Self {
        StepFunction { breakpoints }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Fraction of runs with cost at most `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut out = 0.0;
        for &(bt, fraction) in &self.breakpoints {
            if bt <= t {
                out = fraction;
            } else {
                break;
            }
        }
        out
    }

    /// Limit at `+∞`: the solved fraction.
    pub fn terminal_fraction(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.1)
    }
}

/// Data profile of one solver setting over its record set: the empirical
/// distribution of runtimes.
pub fn data_profile(records: &[RunRecord]) -> Result<StepFunction, ProfileError> {
    let costs: Vec<f64> = records.iter().map(|r| r.runtime).collect();
    StepFunction::from_costs(&costs)
}

/// Data profile over a caller-chosen cost (e.g. inner iterations).
pub fn data_profile_by(
    records: &[RunRecord],
    cost: impl Fn(&RunRecord) -> f64,
) -> Result<StepFunction, ProfileError> {
    let costs: Vec<f64> = records.iter().map(cost).collect();
    StepFunction::from_costs(&costs)
}

/// Ratio of a runtime against the best runtime among the *other* solvers;
/// can drop below one. Conventions: both infinite → ∞ (failure); only the
/// competition infinite → 0 (best possible); a zero best time counts as a
/// tie at 0 and dominates anything positive.
pub fn extended_ratio(t: f64, best_other: f64) -> f64 {
    if t.is_infinite() && best_other.is_infinite() {
        f64::INFINITY
    } else if best_other.is_infinite() {
        0.0
    } else if best_other == 0.0 {
        if t == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        t / best_other
    }
}

/// Extended performance profiles for every solver setting present in
/// `records`. Problems are matched across settings by `(problem, size,
/// seed)`; a setting missing a problem counts as a failure there.
pub fn performance_profile(
    records: &[RunRecord],
) -> Result<Vec<(String, StepFunction)>, ProfileError> {
    let mut settings: Vec<String> = Vec::new();
    for r in records {
        if !settings.contains(&r.setting) {
            settings.push(r.setting.clone());
        }
    }
    if settings.len() < 2 {
        return Err(ProfileError::NeedTwoSolvers);
    }
    let mut problems: Vec<(String, usize, u64)> = Vec::new();
    let mut table: BTreeMap<((String, usize, u64), String), f64> = BTreeMap::new();
    for r in records {
        let key = r.key();
        if !problems.contains(&key) {
            problems.push(key.clone());
        }
        table.insert((key, r.setting.clone()), r.runtime);
    }

    let lookup = |p: &(String, usize, u64), s: &String| -> f64 {
        table
            .get(&(p.clone(), s.clone()))
            .copied()
            .unwrap_or(f64::INFINITY)
    };

    let mut out = Vec::with_capacity(settings.len());
    for s in &settings {
        let ratios: Vec<f64> = problems
            .iter()
            .map(|p| {
                let t = lookup(p, s);
                let best_other = settings
                    .iter()
                    .filter(|other| *other != s)
                    .map(|other| lookup(p, other))
                    .fold(f64::INFINITY, f64::min);
                extended_ratio(t, best_other)
            })
            .collect();
        out.push((s.clone(), StepFunction::from_costs(&ratios)?));
    }
    Ok(out)
}

/// Linear-interpolation quantile on a sorted slice, infinities ordered
/// last; any interpolation that touches an infinite order statistic is
/// infinite.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        return sorted[lo];
    }
    if sorted[hi].is_infinite() {
        return f64::INFINITY;
    }
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalabilityRow {
    pub setting: String,
    pub size: usize,
    #[serde(with = "inf_as_null")]
    pub median: f64,
    #[serde(with = "inf_as_null")]
    pub q25: f64,
    #[serde(with = "inf_as_null")]
    pub q75: f64,
    pub count: usize,
}

/// Median and interquartile range of runtime per `(setting, size)` group.
/// A group with more than half failures has an infinite median; exactly
/// half puts the median halfway to infinity, which is infinite as well.
pub fn scalability_profile(records: &[RunRecord]) -> Vec<ScalabilityRow> {
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.setting.clone(), r.size))
            .or_default()
            .push(r.runtime);
    }
    groups
        .into_iter()
        .map(|((setting, size), mut times)| {
            times.sort_by(f64::total_cmp);
            ScalabilityRow {
                setting,
                size,
                median: quantile_type7(&times, 0.5),
                q25: quantile_type7(&times, 0.25),
                q75: quantile_type7(&times, 0.75),
                count: times.len(),
            }
        })
        .collect()
}

fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_float(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        other => other.parse().expect("malformed float field"),
    }
}

/// Writes profile breakpoints as `t,fraction` rows.
pub fn write_profile_csv<W: std::io::Write>(
    profile: &StepFunction,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "t,fraction")?;
    for &(t, fraction) in profile.breakpoints() {
        writeln!(w, "{},{}", fmt_float(t), fmt_float(fraction))?;
    }
    Ok(())
}

/// Parses a profile CSV back into breakpoints (round-trip support).
pub fn read_profile_csv(text: &str) -> StepFunction {
    let breakpoints = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut parts = line.split(',');
            let t = parse_float(parts.next().expect("t column"));
            let f = parse_float(parts.next().expect("fraction column"));
            (t, f)
        })
        .collect();
    StepFunction::from_breakpoints(breakpoints)
}

/// Writes one setting's scalability rows as `N,median,q25,q75`.
pub fn write_scalability_csv<W: std::io::Write>(
    rows: &[ScalabilityRow],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "N,median,q25,q75")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.size,
            fmt_float(r.median),
            fmt_float(r.q25),
            fmt_float(r.q75)
        )?;
    }
    Ok(())
}

/// Minimal SVG line plot of step functions, one polyline per curve.
pub fn write_profile_svg<W: std::io::Write>(
    curves: &[(String, &StepFunction)],
    title: &str,
    x_label: &str,
    mut w: W,
) -> std::io::Result<()> {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 420.0;
    const MARGIN: f64 = 50.0;
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let t_max = curves
        .iter()
        .flat_map(|(_, sf)| sf.breakpoints().iter().map(|b| b.0))
        .filter(|t| t.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let sx = |t: f64| MARGIN + (t / t_max).min(1.0) * (WIDTH - 2.0 * MARGIN);
    let sy = |f: f64| HEIGHT - MARGIN - f * (HEIGHT - 2.0 * MARGIN);

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(
        w,
        r#"<rect width="100%" height="100%" fill="white"/><text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{title}</text>"#,
        WIDTH / 2.0
    )?;
    // axes
    writeln!(
        w,
        r#"<line x1="{m}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{y0}" stroke="black"/>"#,
        m = MARGIN,
        y0 = HEIGHT - MARGIN,
        x1 = WIDTH - MARGIN
    )?;
    writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )?;
    for (i, (name, sf)) in curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        let mut d = format!("M {} {}", sx(0.0), sy(0.0));
        let mut prev_f = 0.0;
        for &(t, f) in sf.breakpoints() {
            if !t.is_finite() {
                continue;
            }
            d.push_str(&format!(" L {} {}", sx(t), sy(prev_f)));
            d.push_str(&format!(" L {} {}", sx(t), sy(f)));
            prev_f = f;
        }
        d.push_str(&format!(" L {} {}", sx(t_max), sy(prev_f)));
        writeln!(w, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#)?;
        writeln!(
            w,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 180.0,
            MARGIN + 16.0 * (i as f64 + 1.0)
        )?;
    }
    writeln!(w, "</svg>")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(setting: &str, problem: &str, seed: u64, runtime: f64) -> RunRecord {
        let status = if runtime.is_finite() {
            AlmStatus::Solved
        } else {
            AlmStatus::TimeLimit
        };
        RunRecord::new(
            setting,
            problem,
            8,
            seed,
            status,
            if runtime.is_finite() { runtime } else { 99.0 },
            10,
            3,
        )
    }

    #[test]
    fn run_record_failure_has_infinite_runtime() {
        let ok = rec("a", "p", 1, 2.0);
        assert_eq!(ok.runtime, 2.0);
        let fail = rec("a", "p", 2, f64::INFINITY);
        assert!(fail.runtime.is_infinite());
        assert_eq!(fail.elapsed_s, 99.0);
    }

    #[test]
    fn data_profile_hand_count() {
        let records = vec![
            rec("s", "p", 1, 1.0),
            rec("s", "p", 2, 3.0),
            rec("s", "p", 3, f64::INFINITY),
        ];
        let sf = data_profile(&records).unwrap();
        assert_eq!(sf.evaluate(2.0), 1.0 / 3.0);
        assert_eq!(sf.evaluate(3.0), 2.0 / 3.0);
        assert_eq!(sf.evaluate(1e6), 2.0 / 3.0);
        assert_eq!(sf.evaluate(0.5), 0.0);
        assert_eq!(sf.terminal_fraction(), 2.0 / 3.0);
    }

    #[test]
    fn data_profile_degenerate_cases() {
        let all_fail = vec![rec("s", "p", 1, f64::INFINITY), rec("s", "p", 2, f64::INFINITY)];
        let sf = data_profile(&all_fail).unwrap();
        assert_eq!(sf.evaluate(1e12), 0.0);
        assert!(sf.breakpoints().is_empty());

        let instant = vec![rec("s", "p", 1, 0.0), rec("s", "p", 2, 0.0)];
        let sf = data_profile(&instant).unwrap();
        assert_eq!(sf.evaluate(0.0), 1.0);

        assert_eq!(data_profile(&[]).err(), Some(ProfileError::EmptyRecordSet));
    }

    #[test]
    fn data_profile_is_nondecreasing_and_permutation_invariant() {
        let mut records = vec![
            rec("s", "p", 1, 4.0),
            rec("s", "p", 2, 1.0),
            rec("s", "p", 3, 2.5),
            rec("s", "p", 4, f64::INFINITY),
            rec("s", "p", 5, 2.5),
        ];
        let sf = data_profile(&records).unwrap();
        let mut prev = 0.0;
        for &(_, f) in sf.breakpoints() {
            assert!(f >= prev);
            prev = f;
        }
        records.reverse();
        assert_eq!(data_profile(&records).unwrap(), sf);
    }

    #[test]
    fn extended_ratio_examples() {
        // three solvers on one problem, t = (1, 2, 4)
        assert_eq!(extended_ratio(1.0, 2.0), 0.5);
        assert_eq!(extended_ratio(2.0, 1.0), 2.0);
        assert_eq!(extended_ratio(4.0, 1.0), 4.0);
        // two solvers, t = (5, ∞)
        assert_eq!(extended_ratio(5.0, f64::INFINITY), 0.0);
        assert_eq!(extended_ratio(f64::INFINITY, 5.0), f64::INFINITY);
        assert_eq!(extended_ratio(f64::INFINITY, f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn performance_profile_identical_times_are_all_ones() {
        let records = vec![
            rec("a", "p1", 1, 2.0),
            rec("b", "p1", 1, 2.0),
            rec("a", "p2", 1, 0.5),
            rec("b", "p2", 1, 0.5),
        ];
        for (_, sf) in performance_profile(&records).unwrap() {
            assert_eq!(sf.breakpoints(), &[(1.0, 1.0)]);
        }
    }

    #[test]
    fn two_solver_ratios_are_reciprocal() {
        // power-of-two times make the identity exact in floating point
        let times = [(1.0, 4.0), (8.0, 2.0), (0.5, 0.5)];
        for (ta, tb) in times {
            let ra = extended_ratio(ta, tb);
            let rb = extended_ratio(tb, ta);
            assert_eq!(ra * rb, 1.0);
        }
    }

    #[test]
    fn performance_profile_needs_two_settings() {
        let records = vec![rec("a", "p1", 1, 2.0)];
        assert_eq!(
            performance_profile(&records).err(),
            Some(ProfileError::NeedTwoSolvers)
        );
    }

    #[test]
    fn scalability_order_statistics() {
        let group: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_type7(&group, 0.5), 3.0);
        assert_eq!(quantile_type7(&group, 0.25), 2.0);
        assert_eq!(quantile_type7(&group, 0.75), 4.0);

        // exactly half failures: median interpolates toward infinity
        let half = vec![1.0, f64::INFINITY];
        assert_eq!(quantile_type7(&half, 0.5), f64::INFINITY);

        let single = vec![7.0];
        assert_eq!(quantile_type7(&single, 0.5), 7.0);
        assert_eq!(quantile_type7(&single, 0.25), 7.0);

        let mostly_failed = vec![1.0, f64::INFINITY, f64::INFINITY];
        assert_eq!(quantile_type7(&mostly_failed, 0.5), f64::INFINITY);
    }

    #[test]
    fn scalability_groups_by_setting_and_size() {
        let mut records = Vec::new();
        for seed in 0..4 {
            records.push(RunRecord::new(
                "a",
                "p",
                8,
                seed,
                AlmStatus::Solved,
                (seed + 1) as f64,
                1,
                1,
            ));
        }
        records.push(RunRecord::new("a", "p", 16, 0, AlmStatus::TimeLimit, 9.0, 1, 1));
        let rows = scalability_profile(&records);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].size, 8);
        assert_eq!(rows[0].median, 2.5);
        assert_eq!(rows[0].q25, 1.75);
        assert_eq!(rows[0].q75, 3.25);
        assert!(rows[1].median.is_infinite());
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            rec("s", "p", 1, 1.0),
            rec("s", "p", 2, 3.0),
            rec("s", "p", 3, f64::INFINITY),
        ];
        let sf = data_profile(&records).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&sf, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,fraction");
        assert_eq!(lines[1], format!("1,{}", 1.0 / 3.0));
        assert_eq!(lines[2], format!("3,{}", 2.0 / 3.0));
        assert_eq!(read_profile_csv(&text), sf);

        // header-only file for an empty profile
        let empty = StepFunction::from_breakpoints(vec![]);
        let mut buf = Vec::new();
        write_profile_csv(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,fraction\n");
    }

    #[test]
    fn scalability_csv_serializes_infinities() {
        let rows = vec![ScalabilityRow {
            setting: "s".into(),
            size: 8,
            median: f64::INFINITY,
            q25: 1.0,
            q75: f64::INFINITY,
            count: 2,
        }];
        let mut buf = Vec::new();
        write_scalability_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "N,median,q25,q75\n8,inf,1,inf\n");
    }

    #[test]
    fn run_record_json_round_trips_infinity() {
        let fail = rec("a", "p", 2, f64::INFINITY);
        let text = serde_json::to_string(&fail).unwrap();
        assert!(text.contains("\"runtime\":null"));
        let back: RunRecord = serde_json::from_str(&text).unwrap();
        assert!(back.runtime.is_infinite());
    }

    #[test]
    fn svg_emitter_produces_wellformed_document() {
        let sf = data_profile(&[rec("s", "p", 1, 1.0), rec("s", "p", 2, 2.0)]).unwrap();
        let mut buf = Vec::new();
        write_profile_svg(&[("s".into(), &sf)], "profile", "t [s]", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("<path"));
    }
}
