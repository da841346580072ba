//! CSV and manifest writers. Numbers are rendered with Rust's shortest
//! round-trip float formatting, files are UTF-8 with LF line endings, and
//! nothing time- or host-dependent goes into a manifest, so identical runs
//! produce byte-identical outputs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use unravel_core::analysis::DifferenceSeries;
use unravel_core::beable::PreferredMeasure;
use unravel_core::unravel::Trajectory;

pub fn ensure_dir(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)
}

fn open(path: &Path) -> std::io::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn trajectory_csv(
    dir: &Path,
    traj: &Trajectory,
    measure: &PreferredMeasure,
) -> std::io::Result<PathBuf> {
    let path = dir.join("trajectory.csv");
    let mut w = open(&path)?;
    let k = measure.spec().num_modes();
    let mut header = String::from("t");
    for mode in 1..=k {
        header.push_str(&format!(",config_{mode}"));
    }
    header.push_str(",x,y,z,norm,jump_flag");
    writeln!(w, "{header}")?;
    let mut jump_steps: Vec<usize> = traj.jumps.iter().map(|j| j.step).collect();
    jump_steps.sort_unstable();
    for j in 0..traj.configs.len() {
        let occ = measure.spec().bath_occupations(traj.configs[j]);
        let b = traj.bloch[j];
        let flag = if jump_steps.binary_search(&j).is_ok() { 1 } else { 0 };
        let occ_cols = occ
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            traj.grid.time(j),
            occ_cols,
            b[0],
            b[1],
            b[2],
            traj.norms[j],
            flag
        )?;
    }
    w.flush()?;
    Ok(path)
}

pub fn jumps_csv(
    dir: &Path,
    traj: &Trajectory,
    measure: &PreferredMeasure,
) -> std::io::Result<PathBuf> {
    let path = dir.join("jumps.csv");
    let mut w = open(&path)?;
    writeln!(w, "t,from,to")?;
    for ev in &traj.jumps {
        let from = measure.config(ev.from).label();
        let to = measure.config(ev.to).label();
        writeln!(w, "{},{},{}", ev.time, from, to)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn ensemble_csv(dir: &Path, series: &DifferenceSeries) -> std::io::Result<PathBuf> {
    let path = dir.join("ensemble.csv");
    let mut w = open(&path)?;
    writeln!(
        w,
        "t,x_mean,y_mean,z_mean,x_exact,y_exact,z_exact,x_se,y_se,z_se,trace_distance"
    )?;
    for j in 0..series.times.len() {
        let m = series.mean[j];
        let e = series.exact[j];
        let s = series.se[j];
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            series.times[j],
            m[0],
            m[1],
            m[2],
            e[0],
            e[1],
            e[2],
            s[0],
            s[1],
            s[2],
            series.trace_distance[j]
        )?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_manifest(dir: &Path, text: &str) -> std::io::Result<PathBuf> {
    let path = dir.join("run_manifest.txt");
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}
