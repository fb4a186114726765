//! CSV outputs: comma separator, header row, LF line endings, floats with
//! nine significant digits in `%g` style.

use std::io::Write;

use crate::error::Result;
use crate::mc::McResult;
use crate::sample_size::SampleStats;
use crate::spsc::{SpscResult, StageRecord};
use crate::stats::{detection, ComparisonReport, PolicyOutcome};

pub const HISTOGRAM_BINS: usize = 20;

/// `%.9g`: nine significant digits, trailing zeros dropped, scientific
/// notation outside `1e-4 <= |x| < 1e9`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // rounding first so that e.g. 9.9999999999 picks the exponent of 10
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// `solution,estimate`
pub fn write_estimates<W: Write>(out: W, names: &[String], estimates: &[f64]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["solution", "estimate"])?;
    for (n, e) in names.iter().zip(estimates) {
        w.write_record([n.as_str(), &fmt_float(*e)])?;
    }
    w.flush()?;
    Ok(())
}

/// `lineage_id,weight,<observables...>` for an MC run; every weight is 1/N.
pub fn write_mc_finals<W: Write>(out: W, observable_names: &[String], result: &McResult) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["lineage_id".to_string(), "weight".to_string()];
    header.extend(observable_names.iter().cloned());
    w.write_record(&header)?;
    let weight = fmt_float(1.0 / result.n as f64);
    for (i, obs) in result.finals.iter().enumerate() {
        let mut row = vec![i.to_string(), weight.clone()];
        row.extend(obs.values().iter().map(|v| fmt_float(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `lineage_id,weight,source_cluster,<observables...>` for an SPSC run.
pub fn write_spsc_finals<W: Write>(out: W, observable_names: &[String], result: &SpscResult) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["lineage_id".to_string(), "weight".to_string(), "source_cluster".to_string()];
    header.extend(observable_names.iter().cloned());
    w.write_record(&header)?;
    for f in &result.finals {
        let mut row = vec![f.lineage_id.to_string(), fmt_float(f.weight.to_f64()), f.source_cluster.to_string()];
        row.extend(f.observables.values().iter().map(|v| fmt_float(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Transition counts and conditional probabilities of one stage:
/// `source,target,count,probability`, zero-count pairs included.
pub fn write_stage_transitions<W: Write>(out: W, record: &StageRecord) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["source", "target", "count", "probability"])?;
    let probs = record.transition_matrix();
    for (src, row) in record.transitions.iter().enumerate() {
        for (tgt, count) in row.iter().enumerate() {
            w.write_record([src.to_string(), tgt.to_string(), count.to_string(), fmt_float(probs[src][tgt])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cluster membership at every interior boundary `t(i)`, `i = 1..m-1`:
/// `boundary,time,lineage_id,cluster,delegate,cluster_weight,clones,<observables...>`.
pub fn write_clusters<W: Write>(out: W, observable_names: &[String], result: &SpscResult) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = ["boundary", "time", "lineage_id", "cluster", "delegate", "cluster_weight", "clones"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(observable_names.iter().cloned());
    w.write_record(&header)?;
    for st in &result.stages {
        let (Some(part), Some(alloc)) = (&st.partition, &st.allocation) else {
            continue;
        };
        for (i, (&lineage, obs)) in st.lineages.iter().zip(&st.observables).enumerate() {
            let c = part.assignments[i];
            let mut row = vec![
                (st.stage + 1).to_string(),
                st.end.to_string(),
                lineage.to_string(),
                c.to_string(),
                u8::from(st.delegates[c] == lineage).to_string(),
                fmt_float(st.cluster_weights[c].to_f64()),
                alloc.counts[c].to_string(),
            ];
            row.extend(obs.values().iter().map(|v| fmt_float(*v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One pilot row per observable plus a final `max` row holding the
/// vector requirement: `observable,s,mean,n_required`. Observables with a
/// zero mean have no relative error and print `undefined`.
pub fn write_pilot<W: Write>(out: W, rows: &[(String, SampleStats, Option<u64>)]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["observable", "s", "mean", "n_required"])?;
    let show = |n: Option<u64>| n.map_or_else(|| "undefined".to_string(), |n| n.to_string());
    for (name, stats, n) in rows {
        w.write_record([name.clone(), fmt_float(stats.sample_std), fmt_float(stats.mean), show(*n)])?;
    }
    let max = rows.iter().filter_map(|r| r.2).max();
    w.write_record(["max", "", "", &show(max)])?;
    w.flush()?;
    Ok(())
}

/// `repeat_id,policy,solution,estimate,detected,abs_error`
pub fn write_comparison_rows<W: Write>(out: W, report: &ComparisonReport) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["repeat_id", "policy", "solution", "estimate", "detected", "abs_error"])?;
    for r in 0..report.repeats() {
        for outcome in [&report.mc, &report.spsc] {
            for (s, name) in report.solutions.iter().enumerate() {
                let e = outcome.estimates[r][s];
                w.write_record([
                    r.to_string(),
                    outcome.name.clone(),
                    name.clone(),
                    fmt_float(e),
                    u8::from(detection(e)).to_string(),
                    fmt_float((e - report.references[s]).abs()),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Detection rates per solution and jointly, the WMW error tests, and the
/// mean unclassified mass: `kind,target,mc,spsc,p_value`.
///
/// `joint_p` is the one-sided two-proportion p-value for the joint rate.
pub fn write_summary<W: Write>(out: W, report: &ComparisonReport, joint_p: f64) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["kind", "target", "mc", "spsc", "p_value"])?;
    let (mc, sp) = (&report.mc, &report.spsc);
    for (s, name) in report.solutions.iter().enumerate() {
        w.write_record(["detection", name, &fmt_float(mc.detection_rate(s)), &fmt_float(sp.detection_rate(s)), ""])?;
    }
    w.write_record([
        "detection",
        "joint",
        &fmt_float(mc.joint_detection_rate()),
        &fmt_float(sp.joint_detection_rate()),
        &fmt_float(joint_p),
    ])?;
    for t in &report.tests {
        let (m, s) = if t.target == "aggregate" {
            (mean(&mc.aggregate_errors(&report.references)?), mean(&sp.aggregate_errors(&report.references)?))
        } else {
            let i = report.solutions.iter().position(|n| *n == t.target).expect("test targets name solutions");
            (mean(&mc.abs_errors(i, report.references[i])), mean(&sp.abs_errors(i, report.references[i])))
        };
        w.write_record(["mean_error", &t.target, &fmt_float(m), &fmt_float(s), &fmt_float(t.outcome.p_value)])?;
    }
    w.write_record([
        "unclassified",
        "mean_mass",
        &fmt_float(mean(&mc.unclassified())),
        &fmt_float(mean(&sp.unclassified())),
        "",
    ])?;
    w.flush()?;
    Ok(())
}

fn errors_for(outcome: &PolicyOutcome, report: &ComparisonReport, target: usize) -> Result<Vec<f64>> {
    if target == report.solutions.len() {
        outcome.aggregate_errors(&report.references)
    } else {
        Ok(outcome.abs_errors(target, report.references[target]))
    }
}

/// Binned error distributions of both policies on a shared grid per target:
/// `target,bin_lo,bin_hi,count_mc,count_spsc`. The last bin is closed.
pub fn write_histograms<W: Write>(out: W, report: &ComparisonReport, bins: usize) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["target", "bin_lo", "bin_hi", "count_mc", "count_spsc"])?;
    let bins = bins.max(1);
    let mut targets = report.solutions.clone();
    targets.push("aggregate".into());
    for (t, name) in targets.iter().enumerate() {
        let mc = errors_for(&report.mc, report, t)?;
        let sp = errors_for(&report.spsc, report, t)?;
        let hi = mc.iter().chain(&sp).cloned().fold(0.0, f64::max);
        let width = if hi > 0.0 { hi / bins as f64 } else { 0.0 };
        let bin_of = |e: f64| if width == 0.0 { 0 } else { ((e / width) as usize).min(bins - 1) };
        let mut counts = vec![[0usize; 2]; bins];
        for e in &mc {
            counts[bin_of(*e)][0] += 1;
        }
        for e in &sp {
            counts[bin_of(*e)][1] += 1;
        }
        for (b, [cm, cs]) in counts.iter().enumerate() {
            let lo = width * b as f64;
            let hi_edge = if b + 1 == bins { hi } else { width * (b + 1) as f64 };
            w.write_record([name.clone(), fmt_float(lo), fmt_float(hi_edge), cm.to_string(), cs.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_matches_printf_g9() {
        // expected strings are what C's printf("%.9g") prints
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9.9999999999, "10"),
            (999999999.7, "1e+09"),
            (3600.0, "3600"),
            (0.0126, "0.0126"),
            (1e-300, "1e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_float(x), want, "{x}");
        }
    }

    #[test]
    fn estimates_csv_is_lf_terminated() {
        let mut buf = Vec::new();
        write_estimates(&mut buf, &["S1".into(), "S2".into()], &[0.02, 0.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "solution,estimate\nS1,0.02\nS2,0\n");
    }

    #[test]
    fn pilot_rows_and_max() {
        let rows = vec![
            ("prey".to_string(), SampleStats { mean: 783.77, sample_std: 697.83, count: 150 }, Some(1219)),
            ("predators".to_string(), SampleStats { mean: 128.67, sample_std: 196.95, count: 150 }, Some(3601)),
            ("grass".to_string(), SampleStats { mean: 0.0, sample_std: 0.0, count: 150 }, None),
        ];
        let mut buf = Vec::new();
        write_pilot(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "observable,s,mean,n_required\nprey,697.83,783.77,1219\npredators,196.95,128.67,3601\ngrass,0,0,undefined\nmax,,,3601\n"
        );
    }
}
