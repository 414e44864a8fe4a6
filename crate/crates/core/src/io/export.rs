use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mcmc::{AcceptanceStats, Trace};
use crate::summary::CurveEstimate;
use crate::survival::KaplanMeier;

fn writer_with_seed<W: Write>(mut out: W, seed: u64) -> Result<csv::Writer<W>> {
    writeln!(out, "# seed={seed}")?;
    Ok(csv::Writer::from_writer(out))
}

fn num(x: f64) -> String {
    x.to_string()
}

/// One row per retained draw: iteration, parameters, sigma when sampled,
/// log-likelihood.
pub fn write_trace<W: Write>(out: W, trace: &Trace) -> Result<()> {
    let mut w = writer_with_seed(out, trace.seed)?;
    let mut header = vec!["iteration".to_string()];
    header.extend(trace.parameter_names.iter().cloned());
    if trace.sigma.is_some() {
        header.push("sigma".into());
    }
    header.push("loglik".into());
    w.write_record(&header)?;
    for (r, theta) in trace.theta.iter().enumerate() {
        let mut rec = vec![trace.iterations[r].to_string()];
        rec.extend(theta.iter().copied().map(num));
        if let Some(s) = &trace.sigma {
            rec.push(num(s[r]));
        }
        rec.push(num(trace.loglik[r]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_acceptance<W: Write>(out: W, stats: &AcceptanceStats, seed: u64) -> Result<()> {
    let mut w = writer_with_seed(out, seed)?;
    w.write_record(["update", "proposed", "accepted", "rate"])?;
    for name in stats.names() {
        let (n, a) = stats.counts(name).expect("listed");
        let rate = stats.rate(name).map(num).unwrap_or_default();
        w.write_record([name.to_string(), n.to_string(), a.to_string(), rate])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve<W: Write>(out: W, est: &CurveEstimate, seed: u64) -> Result<()> {
    let mut w = writer_with_seed(out, seed)?;
    w.write_record(["time", "mean", "lo", "hi"])?;
    for j in 0..est.times.len() {
        w.write_record([num(est.times[j]), num(est.mean[j]), num(est.band_lo[j]), num(est.band_hi[j])])?;
    }
    w.flush()?;
    Ok(())
}

/// Step points of Kaplan–Meier curves, starting at `(0, 1)` per group.
pub fn write_km<W: Write>(out: W, curves: &[(String, KaplanMeier)], seed: u64) -> Result<()> {
    let mut w = writer_with_seed(out, seed)?;
    w.write_record(["group", "time", "survival", "at_risk", "events"])?;
    for (label, km) in curves {
        w.write_record([label.clone(), "0".into(), "1".into(), String::new(), String::new()])?;
        for i in 0..km.times.len() {
            w.write_record([
                label.clone(),
                num(km.times[i]),
                num(km.survival[i]),
                km.at_risk[i].to_string(),
                km.events[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parameter columns of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub seed: Option<u64>,
    /// Column names after `iteration`.
    pub names: Vec<String>,
    pub iterations: Vec<usize>,
    /// `columns[j]` holds every draw of `names[j]`.
    pub columns: Vec<Vec<f64>>,
}

pub fn read_trace(text: &str) -> Result<TraceTable> {
    let seed = text
        .lines()
        .find_map(|l| l.strip_prefix("# seed="))
        .and_then(|s| s.trim().parse().ok());
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.first().map(String::as_str) != Some("iteration") {
        return Err(Error::Dataset {
            row: 0,
            column: "iteration".into(),
            message: "trace files start with an iteration column".into(),
        });
    }
    let names = headers[1..].to_vec();
    let mut table = TraceTable {
        seed,
        columns: vec![Vec::new(); names.len()],
        names,
        iterations: Vec::new(),
    };
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |c: &str, v: &str| Error::Dataset {
            row: r + 1,
            column: c.to_string(),
            message: format!("cannot parse '{v}'"),
        };
        let it = rec.get(0).unwrap_or("");
        table.iterations.push(it.parse().map_err(|_| bad("iteration", it))?);
        for (j, name) in table.names.iter().enumerate() {
            let v = rec.get(j + 1).unwrap_or("");
            table.columns[j].push(v.parse().map_err(|_| bad(name, v))?);
        }
    }
    Ok(table)
}

/// File-name-safe form of a group or cell label.
pub fn file_label(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "all".into()
    } else {
        s
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// SVG figure of mean curves with their bands and optional Kaplan–Meier
/// step curves. All plotted numbers come from the given estimates.
pub fn render_plot(title: &str, curves: &[(String, CurveEstimate)], km: &[(String, KaplanMeier)]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let (w, h, m) = (640.0, 420.0, 50.0);
    let mut t_max = f64::MIN;
    let mut t_min = f64::MAX;
    let mut y_max = f64::MIN;
    let mut y_min = f64::MAX;
    for (_, c) in curves {
        for j in 0..c.times.len() {
            t_min = t_min.min(c.times[j]);
            t_max = t_max.max(c.times[j]);
            y_min = y_min.min(c.band_lo[j]).min(c.mean[j]);
            y_max = y_max.max(c.band_hi[j]).max(c.mean[j]);
        }
    }
    for (_, k) in km {
        for (&t, &s) in k.times.iter().zip(&k.survival) {
            t_max = t_max.max(t);
            y_min = y_min.min(s);
        }
        y_max = y_max.max(1.0);
    }
    if !(t_max > t_min) {
        t_max = t_min + 1.0;
    }
    if !(y_max > y_min) {
        y_max = y_min + 1.0;
    }
    let sx = |t: f64| m + (t - t_min) / (t_max - t_min) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y_min) / (y_max - y_min) * (h - 2.0 * m);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {m} L{m} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    for (x, anchor, label) in [(m, "start", t_min), (w - m, "end", t_max)] {
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{label}</text>"#, h - m + 16.0);
    }
    for (y, label) in [(h - m, y_min), (m, y_max)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>"#, m - 4.0, y + 4.0);
    }
    for (i, (label, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for j in 0..c.times.len() {
            let _ = write!(band, "{}{:.3} {:.3} ", if j == 0 { "M" } else { "L" }, sx(c.times[j]), sy(c.band_hi[j]));
        }
        for j in (0..c.times.len()).rev() {
            let _ = write!(band, "L{:.3} {:.3} ", sx(c.times[j]), sy(c.band_lo[j]));
        }
        let _ = writeln!(svg, r#"<path d="{band}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#);
        let mean: Vec<String> = (0..c.times.len())
            .map(|j| format!("{:.3},{:.3}", sx(c.times[j]), sy(c.mean[j])))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, mean.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            w - m - 140.0,
            m + 16.0 * i as f64,
            escape(label)
        );
    }
    for (i, (_, k)) in km.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = format!("M{:.3} {:.3} ", sx(0.0_f64.max(t_min)), sy(1.0));
        let mut s = 1.0;
        for (&t, &v) in k.times.iter().zip(&k.survival) {
            let _ = write!(d, "L{:.3} {:.3} L{:.3} {:.3} ", sx(t), sy(s), sx(t), sy(v));
            s = v;
        }
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-dasharray="4 3"/>"#);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes [`render_plot`] output; nothing is written on error.
pub fn export_plot(path: &Path, title: &str, curves: &[(String, CurveEstimate)], km: &[(String, KaplanMeier)]) -> Result<()> {
    let svg = render_plot(title, curves, km)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{run_chain, Parametrization, SamplerConfig};
    use crate::model::toy_model;
    use crate::survival::{kaplan_meier, Observation, SurvivalDataset};

    fn estimate() -> CurveEstimate {
        CurveEstimate {
            times: vec![0.0, 0.5, 1.0],
            mean: vec![1.0, 0.75, 0.5],
            band_lo: vec![1.0, 0.75, 0.5],
            band_hi: vec![1.0, 0.75, 0.5],
            level: 0.9,
        }
    }

    #[test]
    fn trace_round_trip() {
        let data = SurvivalDataset::new(vec![Observation::event(0.4), Observation::censored(0.6)], "").unwrap();
        let cfg = SamplerConfig {
            iterations: 20,
            burn_in: 5,
            parametrization: Parametrization::Pnc,
            seed: 42,
            ..SamplerConfig::default()
        };
        let trace = run_chain(&toy_model(), &data, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=42\niteration,theta1,theta2,loglik\n"));
        let t = read_trace(&text).unwrap();
        assert_eq!(t.seed, Some(42));
        assert_eq!(t.columns[0], trace.column(0));
        assert_eq!(t.columns[2], trace.loglik);
        assert_eq!(t.iterations, trace.iterations);
    }

    #[test]
    fn curve_and_km_files() {
        let mut buf = Vec::new();
        write_curve(&mut buf, &estimate(), 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("time,mean,lo,hi"));
        assert_eq!(text.lines().count(), 5);
        let data = SurvivalDataset::new(vec![Observation::event(1.0), Observation::event(2.0)], "").unwrap();
        let mut buf = Vec::new();
        write_km(&mut buf, &[("a".into(), kaplan_meier(&data))], 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("a,1,0.5,2,1"));
        assert!(text.contains("a,2,0,1,1"));
    }

    #[test]
    fn plot_needs_curves() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plot.svg");
        assert!(export_plot(&p, "x", &[], &[]).is_err());
        assert!(!p.exists());
        export_plot(&p, "survival", &[("a".into(), estimate())], &[]).unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn labels_are_file_safe() {
        assert_eq!(file_label("smoker=1,age=2.5"), "smoker_1_age_2.5");
        assert_eq!(file_label(""), "all");
    }
}
