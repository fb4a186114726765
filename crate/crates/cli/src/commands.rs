use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use spsc_core::mc::{mc_estimate, mc_run};
use spsc_core::prey_predator::PreyPredator;
use spsc_core::report;
use spsc_core::rng::derive_seed;
use spsc_core::sample_size::{required_replications_from_stats, SampleStats};
use spsc_core::spsc::{spsc_estimate, spsc_run};
use spsc_core::stats::{
    baseline_references, builtin_solutions, compare_policies, two_proportion_greater, McPolicy, SpscPolicy,
};
use spsc_core::{Error, Result, SimulationModel};

use crate::config::RunConfig;
use crate::Flags;

/// Stream index of the reference baseline under the campaign seed; far
/// above the `2r`, `2r + 1` indices used by the repeats.
const BASELINE_SEED_INDEX: u64 = u64::MAX;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Creates the output directory and echoes the effective configuration.
fn prepare(cfg: &RunConfig) -> Result<(PreyPredator, PathBuf)> {
    let model = PreyPredator::new(cfg.model.clone())?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let echo = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(dir.join("config.json"), echo + "\n")?;
    Ok((model, dir))
}

fn solution_names() -> Vec<String> {
    builtin_solutions().iter().map(|s| s.name.clone()).collect()
}

fn print_estimates(names: &[String], estimates: &[f64]) {
    for (n, e) in names.iter().zip(estimates) {
        println!("{n}: {}", report::fmt_float(*e));
    }
}

pub fn mc(cfg: &RunConfig, _: &Flags) -> Result<()> {
    let (model, dir) = prepare(cfg)?;
    let p = &cfg.policy;
    let run = mc_run(&model, p.n, p.horizon, p.seed)?;
    let names = solution_names();
    let estimates: Vec<f64> = builtin_solutions().iter().map(|s| mc_estimate(&run, s)).collect();
    report::write_estimates(create(&dir, "estimates.csv")?, &names, &estimates)?;
    report::write_mc_finals(create(&dir, "finals.csv")?, &model.observable_names(), &run)?;
    print_estimates(&names, &estimates);
    Ok(())
}

pub fn spsc(cfg: &RunConfig, _: &Flags) -> Result<()> {
    let (model, dir) = prepare(cfg)?;
    let result = spsc_run(&model, &cfg.policy.spsc())?;
    let names = solution_names();
    let estimates: Vec<f64> = builtin_solutions().iter().map(|s| spsc_estimate(&result, s)).collect();
    report::write_estimates(create(&dir, "estimates.csv")?, &names, &estimates)?;
    report::write_spsc_finals(create(&dir, "finals.csv")?, &model.observable_names(), &result)?;
    report::write_clusters(create(&dir, "clusters.csv")?, &model.observable_names(), &result)?;
    // stage i's record ends at interior boundary t(i+1)
    for st in result.stages.iter().filter(|s| !s.is_final()) {
        report::write_stage_transitions(create(&dir, &format!("stage_{}.csv", st.stage + 1))?, st)?;
    }
    print_estimates(&names, &estimates);
    Ok(())
}

pub fn parse_pilot_stats(raw: &[String]) -> std::result::Result<Vec<(String, SampleStats)>, String> {
    raw.iter()
        .map(|item| {
            let bad = || format!("--pilot-stat expects NAME=S,MEAN, got {item:?}");
            let (name, rest) = item.split_once('=').ok_or_else(bad)?;
            let (s, mean) = rest.split_once(',').ok_or_else(bad)?;
            let s: f64 = s.trim().parse().map_err(|_| bad())?;
            let mean: f64 = mean.trim().parse().map_err(|_| bad())?;
            if !(s >= 0.0 && s.is_finite() && mean.is_finite()) {
                return Err(bad());
            }
            Ok((name.to_string(), SampleStats { mean, sample_std: s, count: 0 }))
        })
        .collect()
}

pub fn nreps(cfg: &RunConfig, flags: &Flags) -> Result<()> {
    let (model, dir) = prepare(cfg)?;
    let p = &cfg.policy;
    let injected = parse_pilot_stats(&flags.pilot_stats).map_err(Error::Config)?;
    let stats: Vec<(String, SampleStats)> = if injected.is_empty() {
        let pilot = mc_run(&model, p.n0, p.horizon, p.seed)?;
        model
            .observable_names()
            .into_iter()
            .enumerate()
            .map(|(d, name)| {
                let xs: Vec<f64> = pilot.finals.iter().map(|o| o[d]).collect();
                SampleStats::from_samples(&xs).map(|s| (name, s))
            })
            .collect::<Result<_>>()?
    } else {
        injected.into_iter().map(|(n, s)| (n, SampleStats { count: p.n0, ..s })).collect()
    };
    let rows = stats
        .into_iter()
        .map(|(name, s)| match required_replications_from_stats(&s, p.epsilon, p.alpha) {
            Ok(n) => Ok((name, s, Some(n))),
            Err(Error::RelativeErrorUndefined { .. }) => Ok((name, s, None)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    report::write_pilot(create(&dir, "nreps.csv")?, &rows)?;
    let mut stdout = Vec::new();
    report::write_pilot(&mut stdout, &rows)?;
    print!("{}", String::from_utf8_lossy(&stdout));
    Ok(())
}

pub fn read_references(path: &Path) -> std::result::Result<Vec<f64>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("cannot read references {}: {e}", path.display()))?;
    let names = solution_names();
    let mut refs = vec![None; names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format!("bad references file: {e}"))?;
        let (Some(name), Some(value)) = (rec.get(0), rec.get(1)) else {
            return Err("references rows need solution,reference".into());
        };
        let i = names.iter().position(|n| n == name).ok_or_else(|| format!("unknown solution {name:?}"))?;
        refs[i] = Some(value.trim().parse::<f64>().map_err(|_| format!("bad reference {value:?}"))?);
    }
    refs.into_iter()
        .zip(&names)
        .map(|(r, n)| r.ok_or_else(|| format!("missing reference for {n}")))
        .collect()
}

pub fn compare(cfg: &RunConfig, _: &Flags) -> Result<()> {
    let (model, dir) = prepare(cfg)?;
    let p = &cfg.policy;
    let solutions = builtin_solutions();
    let names = solution_names();
    let references = match &p.references {
        Some(r) => r.clone(),
        None => {
            let seed = derive_seed(p.seed, BASELINE_SEED_INDEX);
            baseline_references(&model, p.baseline_reps(), p.horizon, seed, &solutions)?
        }
    };
    report::write_estimates(create(&dir, "references.csv")?, &names, &references)?;
    if let Some(i) = references.iter().position(|r| *r <= 0.0) {
        return Err(Error::Precondition(format!(
            "reference probability of {} is zero; relative errors are undefined (raise --baseline-reps)",
            names[i]
        )));
    }
    let mc = McPolicy { model: &model, n: p.n, horizon: p.horizon };
    let sp = SpscPolicy { model: &model, config: p.spsc() };
    let rep = compare_policies(&mc, &sp, &solutions, &references, p.repeats(), p.seed)?;
    let r = rep.repeats();
    let joint_p = two_proportion_greater(rep.mc.joint_detections(), r, rep.spsc.joint_detections(), r)?;

    report::write_comparison_rows(create(&dir, "comparison.csv")?, &rep)?;
    report::write_summary(create(&dir, "summary.csv")?, &rep, joint_p)?;
    report::write_histograms(create(&dir, "histogram.csv")?, &rep, report::HISTOGRAM_BINS)?;

    let f = report::fmt_float;
    println!("references: {}", references.iter().map(|v| f(*v)).collect::<Vec<_>>().join(", "));
    println!("{:<8} {:>10} {:>10} {:>10} {:>10}", "policy", names[0], names[1], names[2], "joint");
    for out in [&rep.mc, &rep.spsc] {
        println!(
            "{:<8} {:>10} {:>10} {:>10} {:>10}",
            out.name,
            f(out.detection_rate(0)),
            f(out.detection_rate(1)),
            f(out.detection_rate(2)),
            f(out.joint_detection_rate())
        );
    }
    println!("joint detection, one-sided two-proportion p = {}", f(joint_p));
    for t in &rep.tests {
        println!("WMW {}: {} p = {}", t.target, t.alternative, f(t.outcome.p_value));
    }
    Ok(())
}
