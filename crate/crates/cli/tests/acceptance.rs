//! Acceptance suite. One test per criterion; each prints a single
//! `criterion N [PASS|FAIL]` line (visible with `--nocapture`, or on
//! failure) and asserts the criterion at its stated tolerance.
//!
//! Heavy guiding integrations are shared between criteria through lazy
//! fixtures. Statistical thresholds were pinned from seeded calibration
//! runs; the `#[ignore]` calibration tests at the bottom re-derive them.

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use std::fs;
use std::process::Command;
use std::sync::OnceLock;

use unravel_core::analysis::{ensemble_vs_exact, markovian_limit_profile};
use unravel_core::beable::{born_probability, current, JumpPolicy, PreferredMeasure};
use unravel_core::guiding::{evolve, EvolveOptions, GuidingTrajectory, TimeGrid};
use unravel_core::hilbert::{AtomLevel, HilbertSpec, StateVector};
use unravel_core::models::{temporal_coefficient, BasisKind, HamiltonianModel, ModelParams};
use unravel_core::unravel::{
    run_ensemble, run_trajectories, spectral_measure, temporal_measure, Trajectory,
};

const MASTER_SEED: u64 = 20260809;

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

struct Fixture {
    model: HamiltonianModel,
    measure: PreferredMeasure,
    guiding: GuidingTrajectory,
}

fn fixture_options() -> EvolveOptions {
    EvolveOptions {
        snapshot_limit: 1 << 23,
        ..EvolveOptions::default()
    }
}

/// Single resonant mode, g = 1, rabi 5, ground start, t in [0, 10].
fn single_mode() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = HilbertSpec::new(1, 30).unwrap();
        let model =
            HamiltonianModel::new(spec.clone(), ModelParams::single_mode(5.0), BasisKind::Spectral)
                .unwrap();
        let measure = spectral_measure(&spec);
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 10.0).unwrap();
        let guiding = evolve(&model, &psi0, &grid, &fixture_options()).unwrap();
        Fixture {
            model,
            measure,
            guiding,
        }
    })
}

/// Three flat modes, rabi 20, sigma_x = +1 start, spectral basis, t in [0, 10].
fn three_mode_spectral() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = HilbertSpec::new(3, 16).unwrap();
        let model =
            HamiltonianModel::new(spec.clone(), ModelParams::three_mode(20.0), BasisKind::Spectral)
                .unwrap();
        let measure = spectral_measure(&spec);
        let inv = 1.0 / 2.0f64.sqrt();
        let psi0 = StateVector::system_state(&spec, C64::new(inv, 0.0), C64::new(inv, 0.0));
        let grid = TimeGrid::span(0.0, 1e-3, 10.0).unwrap();
        let guiding = evolve(&model, &psi0, &grid, &fixture_options()).unwrap();
        Fixture {
            model,
            measure,
            guiding,
        }
    })
}

/// Three flat modes, rabi 20, ground start, temporal basis, t in [0, 5].
fn three_mode_temporal() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = HilbertSpec::new(3, 12).unwrap();
        let model =
            HamiltonianModel::new(spec.clone(), ModelParams::three_mode(20.0), BasisKind::Temporal)
                .unwrap();
        let measure = temporal_measure(&spec);
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0, 0, 0]);
        let grid = TimeGrid::span(0.0, 1e-3, 5.0).unwrap();
        let guiding = evolve(&model, &psi0, &grid, &fixture_options()).unwrap();
        Fixture {
            model,
            measure,
            guiding,
        }
    })
}

fn spectral_trajectories() -> &'static Vec<Trajectory> {
    static T: OnceLock<Vec<Trajectory>> = OnceLock::new();
    T.get_or_init(|| {
        let f = three_mode_spectral();
        run_trajectories(&f.model, &f.measure, &f.guiding, 7, 0..10, &JumpPolicy::default())
            .unwrap()
    })
}

fn temporal_trajectories() -> &'static Vec<Trajectory> {
    static T: OnceLock<Vec<Trajectory>> = OnceLock::new();
    T.get_or_init(|| {
        let f = three_mode_temporal();
        run_trajectories(&f.model, &f.measure, &f.guiding, 99, 0..80, &JumpPolicy::default())
            .unwrap()
    })
}

fn single_mode_trajectories() -> &'static Vec<Trajectory> {
    static T: OnceLock<Vec<Trajectory>> = OnceLock::new();
    T.get_or_init(|| {
        let f = single_mode();
        run_trajectories(
            &f.model,
            &f.measure,
            &f.guiding,
            MASTER_SEED,
            0..200,
            &JumpPolicy::default(),
        )
        .unwrap()
    })
}

#[test]
fn criterion_1_ensemble_reproduces_reduced_state() {
    let f = single_mode();
    let n = 1000usize;
    let ensemble = run_ensemble(
        &f.model,
        &f.measure,
        &f.guiding,
        n,
        MASTER_SEED,
        0,
        &JumpPolicy::default(),
    )
    .unwrap();
    let series = ensemble_vs_exact(&ensemble, &f.model, &f.guiding).unwrap();
    // 3-sigma band, floored by the one-trajectory quantization 2/N
    let fr = series.within_band_fraction(3.0, 2.0 / n as f64);
    let pass = fr.iter().all(|&x| x >= 0.99);
    report(
        1,
        "ensemble mean matches exact reduced state",
        pass,
        &format!(
            "within-3se fractions x {:.4}, y {:.4}, z {:.4} (needed >= 0.99 each, N = {n})",
            fr[0], fr[1], fr[2]
        ),
    );
}

#[test]
fn criterion_2_current_routes_agree() {
    let spec = HilbertSpec::new(1, 3).unwrap();
    let params = ModelParams::single_mode(5.0);
    let g = params.couplings[0];
    let model = HamiltonianModel::new(spec.clone(), params, BasisKind::Spectral).unwrap();
    let measure = spectral_measure(&spec);
    let dim = spec.dim();

    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_dense = 0.0f64;
    let mut worst_formula = 0.0f64;
    for _ in 0..100 {
        let mut v = StateVector::zero(dim);
        for a in v.as_mut_slice() {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            let u3: f64 = rng.random::<f64>().max(1e-12);
            let u4: f64 = rng.random();
            *a = C64::new(
                (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos(),
                (-2.0 * u3.ln()).sqrt() * (TAU * u4).cos(),
            );
        }
        let state = v.normalized();
        let t = rng.random::<f64>() * 10.0;
        let h = model.hamiltonian(t).to_dense();
        for n in 0..measure.num_configs() {
            for m in 0..measure.num_configs() {
                if n == m {
                    continue;
                }
                let sliced = current(&state, &model, &measure, n, m, t);

                // dense route: 2 Im <Psi| pi_n (H_int + V_int) pi_m |Psi>
                let (gn, en) = measure.support(n);
                let (gm, em) = measure.support(m);
                let mut sandwich = C64::new(0.0, 0.0);
                for &r in &[gn, en] {
                    for &c in &[gm, em] {
                        sandwich += state[r].conj() * h[r * dim + c] * state[c];
                    }
                }
                worst_dense = worst_dense.max((2.0 * sandwich.im - sliced).abs());

                // explicit ladder formula with sqrt(n), sqrt(n+1) factors
                let sl = |rank: usize| (state[spec.flat_of_rank(AtomLevel::Excited, rank)],
                                        state[spec.flat_of_rank(AtomLevel::Ground, rank)]);
                let i = C64::new(0.0, 1.0);
                let explicit = if n == m + 1 {
                    let (e_m, _) = sl(m);
                    let (_, b_n) = sl(n);
                    let amp = b_n.conj() * e_m; // <psi_n| sigma |psi_m>
                    2.0 * (i * g.conj() * amp * (n as f64).sqrt()).im
                } else if n + 1 == m {
                    let (_, b_m) = sl(m);
                    let (e_n, _) = sl(n);
                    let amp = e_n.conj() * b_m; // <psi_n| sigma^dag |psi_m>
                    -2.0 * (i * g * amp * ((n + 1) as f64).sqrt()).im
                } else {
                    0.0
                };
                worst_formula = worst_formula.max((explicit - sliced).abs());
            }
        }
    }
    let pass = worst_dense < 1e-12 && worst_formula < 1e-12;
    report(
        2,
        "current computation matches dense projector sandwich and ladder formulas",
        pass,
        &format!("max |dense - sliced| {worst_dense:.2e}, max |formula - sliced| {worst_formula:.2e} (tol 1e-12)"),
    );
}

fn conservation_checks(f: &Fixture, label: &str, skip_below_t: f64) -> (f64, f64, f64, f64) {
    let grid = f.guiding.grid();
    let norm_drift = f
        .guiding
        .norms()
        .iter()
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);

    let mut walker = f.guiding.walker(&f.model);
    let mut worst_born = 0.0f64;
    let mut worst_antisym = 0.0f64;
    let mut worst_master = 0.0f64;
    let start = ((skip_below_t - grid.t0) / grid.dt).ceil() as usize;
    let mut sample_points: Vec<usize> = (start.max(1)..grid.steps).step_by(487).collect();
    if sample_points.is_empty() {
        sample_points.push(grid.steps / 2);
    }
    for &j in &sample_points {
        let prev: Vec<f64> = {
            let s = walker.get(j - 1).unwrap();
            (0..f.measure.num_configs())
                .map(|r| born_probability(s, &f.measure, r))
                .collect()
        };
        let (sums, total_born, antisym) = {
            let s = walker.get(j).unwrap();
            let t = grid.time(j);
            let mut total = 0.0f64;
            let mut anti = 0.0f64;
            let mut sums = Vec::with_capacity(f.measure.num_configs());
            for n in 0..f.measure.num_configs() {
                total += born_probability(s, &f.measure, n);
                let mut acc = 0.0;
                for nb in f.measure.neighbors(n) {
                    let fwd = current(s, &f.model, &f.measure, n, nb.rank, t);
                    let bwd = current(s, &f.model, &f.measure, nb.rank, n, t);
                    anti = anti.max((fwd + bwd).abs());
                    acc += fwd;
                }
                sums.push(acc);
            }
            (sums, total, anti)
        };
        let next: Vec<f64> = {
            let s = walker.get(j + 1).unwrap();
            (0..f.measure.num_configs())
                .map(|r| born_probability(s, &f.measure, r))
                .collect()
        };
        worst_born = worst_born.max((total_born - 1.0).abs());
        worst_antisym = worst_antisym.max(antisym);
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for n in 0..f.measure.num_configs() {
            let fd = (next[n] - prev[n]) / (2.0 * grid.dt);
            defect = defect.max((fd - sums[n]).abs());
            scale = scale.max(fd.abs()).max(sums[n].abs());
        }
        worst_master = worst_master.max(defect / scale.max(1e-12));
    }
    println!(
        "  [{label}] norm drift {norm_drift:.2e}, born defect {worst_born:.2e}, \
         antisymmetry {worst_antisym:.2e}, master-eq rel {worst_master:.2e}"
    );
    (norm_drift, worst_born, worst_antisym, worst_master)
}

#[test]
fn criterion_3_conservation_suite() {
    let mut pass = true;
    let mut details = Vec::new();
    for (f, label) in [
        (single_mode(), "single-mode"),
        (three_mode_spectral(), "three-mode spectral"),
        (three_mode_temporal(), "three-mode temporal"),
    ] {
        let (norm, born, anti, master) = conservation_checks(f, label, 0.1);
        let ok = norm < 1e-6 && born < 1e-8 && anti == 0.0 && master < 1e-3;
        pass &= ok;
        details.push(format!(
            "{label}: norm {norm:.1e}, born {born:.1e}, antisym {anti:.1e}, master {master:.1e}"
        ));
    }
    report(
        3,
        "norm, Born completeness, exact antisymmetry, master-equation consistency",
        pass,
        &details.join("; "),
    );
}

#[test]
fn criterion_4_selection_rules() {
    // every logged jump in every run moves exactly one photon in one mode
    let mut total_jumps = 0usize;
    let mut bad = 0usize;
    for (trajs, measure) in [
        (single_mode_trajectories(), &single_mode().measure),
        (spectral_trajectories(), &three_mode_spectral().measure),
        (temporal_trajectories(), &three_mode_temporal().measure),
    ] {
        for t in trajs.iter() {
            for ev in &t.jumps {
                total_jumps += 1;
                match measure.one_quantum_step(ev.to, ev.from) {
                    Some((mode, delta)) if mode == ev.mode && delta == ev.delta => {}
                    _ => bad += 1,
                }
            }
        }
    }

    // full pairwise current table of a three-mode spectral snapshot: at most
    // six nonzero entries per source configuration
    let spec = HilbertSpec::new(3, 3).unwrap();
    let model =
        HamiltonianModel::new(spec.clone(), ModelParams::three_mode(20.0), BasisKind::Spectral)
            .unwrap();
    let measure = spectral_measure(&spec);
    let inv = 1.0 / 2.0f64.sqrt();
    let psi0 = StateVector::system_state(&spec, C64::new(inv, 0.0), C64::new(inv, 0.0));
    let grid = TimeGrid::span(0.0, 1e-3, 0.8).unwrap();
    let guiding = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
    let state = guiding.frame(grid.steps).unwrap();
    let t = grid.time(grid.steps);
    let mut max_nonzero = 0usize;
    for m in 0..measure.num_configs() {
        let nonzero = (0..measure.num_configs())
            .filter(|&n| n != m && current(state, &model, &measure, n, m, t) != 0.0)
            .count();
        max_nonzero = max_nonzero.max(nonzero);
    }

    let pass = bad == 0 && max_nonzero <= 6 && total_jumps > 0;
    report(
        4,
        "jumps move one quantum; at most six currents leave any config",
        pass,
        &format!("{total_jumps} jumps checked, {bad} violations; max nonzero currents {max_nonzero}"),
    );
}

#[test]
fn criterion_5_single_mode_jump_statistics() {
    let trajs = single_mode_trajectories();
    let (mut up, mut down, mut up_zdrop) = (0usize, 0usize, 0usize);
    for t in trajs.iter() {
        for ev in &t.jumps {
            if ev.delta == 1 {
                up += 1;
                if t.bloch[ev.step][2] < t.bloch[ev.step - 1][2] {
                    up_zdrop += 1;
                }
            } else {
                down += 1;
            }
        }
    }
    let up_frac = up as f64 / (up + down) as f64;
    let zdrop_frac = up_zdrop as f64 / up as f64;
    // seeded calibration run (200 streams): up_frac 0.9344, zdrop 0.6810;
    // regression bands +-0.02 around those values
    let pass = up > down
        && zdrop_frac > 0.5
        && (0.914..=0.954).contains(&up_frac)
        && (0.661..=0.701).contains(&zdrop_frac);
    report(
        5,
        "upward jumps dominate and mostly lower the atomic energy",
        pass,
        &format!(
            "{up} up vs {down} down (up fraction {up_frac:.4}), z drops on {zdrop_frac:.4} of up jumps"
        ),
    );
}

#[test]
fn criterion_6_strong_driving_x_structure() {
    let trajs = spectral_trajectories();
    let (mut outer, mut outer_flip, mut central, mut central_flip) = (0usize, 0usize, 0usize, 0usize);
    let mut abs_x_sum = 0.0f64;
    let mut abs_x_count = 0usize;
    for t in trajs.iter() {
        for b in &t.bloch {
            abs_x_sum += b[0].abs();
            abs_x_count += 1;
        }
        for ev in &t.jumps {
            let flip = t.bloch[ev.step][0] * t.bloch[ev.step - 1][0] < 0.0;
            if ev.mode == 2 {
                central += 1;
                if flip {
                    central_flip += 1;
                }
            } else {
                outer += 1;
                if flip {
                    outer_flip += 1;
                }
            }
        }
    }
    let flip_frac = outer_flip as f64 / outer as f64;
    let central_frac = central_flip as f64 / central.max(1) as f64;
    let mean_abs_x = abs_x_sum / abs_x_count as f64;
    // calibration (10 streams, cutoff sweep 12..40): flip fraction 0.941-0.943,
    // zero central flips, mean |x| 0.97
    let pass = outer >= 50 && flip_frac >= 0.90 && central_frac <= 0.05 && mean_abs_x > 0.9;
    report(
        6,
        "x sign flips coincide with outer-mode jumps under strong driving",
        pass,
        &format!(
            "{outer_flip}/{outer} outer jumps flip x ({flip_frac:.4}); \
             {central_flip}/{central} central jumps flip; mean |x| {mean_abs_x:.4}"
        ),
    );
}

#[test]
fn criterion_7_temporal_peaks_and_ground_state_jumps() {
    let f = three_mode_temporal();
    let omega = f.model.params().rabi;
    let grid = f.guiding.grid();

    // part 1: grid maxima of |c_tau(t)|^2 sit within one grid step of
    // t = 2 pi (tau/3 + n) / omega
    let mut worst_offset = 0.0f64;
    for slot in 1..=3usize {
        let tau = slot as f64 - 2.0;
        let series: Vec<f64> = (0..grid.num_points())
            .map(|j| temporal_coefficient(f.model.params(), slot, grid.time(j)).norm_sqr())
            .collect();
        for j in 1..grid.num_points() - 1 {
            if series[j] >= series[j - 1] && series[j] >= series[j + 1] && series[j] > 1.0 {
                let t = grid.time(j);
                let period = TAU / omega;
                let base = TAU * tau / (3.0 * omega);
                let k = ((t - base) / period).round();
                worst_offset = worst_offset.max((t - (base + k * period)).abs());
            }
        }
    }
    let peaks_ok = worst_offset <= grid.dt;

    // part 2: upward jumps within the peak window move z down in >= 90% of
    // cases; window = quarter of the peak stagger (pi / 6 omega), pinned by
    // the calibration run (240/259 = 0.927)
    let window = TAU / (3.0 * omega) / 4.0;
    let dist_to_peak = |slot: usize, t: f64| -> f64 {
        let tau = slot as f64 - 2.0;
        let period = TAU / omega;
        let base = TAU * tau / (3.0 * omega);
        let k = ((t - base) / period).round();
        (t - (base + k * period)).abs()
    };
    let (mut near, mut near_drop) = (0usize, 0usize);
    for t in temporal_trajectories().iter() {
        for ev in &t.jumps {
            if ev.delta != 1 {
                continue;
            }
            if dist_to_peak(ev.mode, ev.time) <= window {
                near += 1;
                if t.bloch[ev.step][2] < t.bloch[ev.step - 1][2] {
                    near_drop += 1;
                }
            }
        }
    }
    let drop_frac = near_drop as f64 / near.max(1) as f64;
    let pass = peaks_ok && near >= 100 && drop_frac >= 0.90;
    report(
        7,
        "coupling peaks sit on the predicted comb; near-peak up-jumps lower z",
        pass,
        &format!(
            "max peak offset {worst_offset:.2e} (dt {:.0e}); {near_drop}/{near} near-peak up-jumps drop z ({drop_frac:.4})",
            grid.dt
        ),
    );
}

#[test]
fn criterion_8_markovian_limit_concentration() {
    let omega = 7.0;
    let g = 1.0;
    let mut worst = 0.0f64;
    for kappa in (3usize..=41).step_by(2) {
        let period = TAU / omega;
        let n = 64 * kappa;
        let times: Vec<f64> = (0..n).map(|i| period * i as f64 / n as f64).collect();
        let series = markovian_limit_profile(kappa, g, omega, 0, &times).unwrap();
        let mean = series.iter().map(|c| c * c).sum::<f64>() / n as f64;
        let peak = markovian_limit_profile(kappa, g, omega, 0, &[0.0]).unwrap()[0];
        let ratio = peak * peak / mean;
        worst = worst.max((ratio - kappa as f64).abs());
    }
    let pass = worst < 1e-10;
    report(
        8,
        "peak-to-mean ratio of the squared temporal coupling equals the mode count",
        pass,
        &format!("max |ratio - kappa| = {worst:.2e} over kappa in 3..=41 (tol 1e-10)"),
    );
}

#[test]
fn criterion_9_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.ini");
    fs::write(
        &cfg_path,
        "[model]\npreset = single-mode\n\n[grid]\nt_final = 2\n\n[run]\ncutoff = 12\nseed = 31\ntrajectories = 40\n",
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();

    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_unravel"))
            .args(args)
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "command {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };

    let mut all_equal = true;
    let mut checked = Vec::new();
    for (label, args, files) in [
        (
            "trajectory",
            vec!["trajectory", "--config", cfg, "--out", "t"],
            vec!["t/trajectory.csv", "t/jumps.csv", "t/run_manifest.txt"],
        ),
        (
            "ensemble",
            vec!["ensemble", "--config", cfg, "--out", "e"],
            vec!["e/ensemble.csv", "e/run_manifest.txt"],
        ),
        (
            "probe",
            vec!["probe", "ctau", "--config", cfg, "--out", "p"],
            vec!["p/ctau.csv"],
        ),
    ] {
        run(&args);
        let first: Vec<Vec<u8>> = files
            .iter()
            .map(|f| fs::read(tmp.path().join(f)).unwrap())
            .collect();
        run(&args);
        for (f, before) in files.iter().zip(first.iter()) {
            let after = fs::read(tmp.path().join(f)).unwrap();
            if *before != after {
                all_equal = false;
            }
            checked.push(format!("{label}:{f}"));
        }
    }
    report(
        9,
        "identical config and seed reproduce byte-identical outputs",
        all_equal,
        &format!("{} files compared across reruns", checked.len()),
    );
}

// ---------------------------------------------------------------------------
// calibration helpers: print the statistics the pinned thresholds came from
// ---------------------------------------------------------------------------

#[test]
#[ignore]
fn calibrate_jump_statistics() {
    let trajs = single_mode_trajectories();
    let (mut up, mut down, mut up_zdrop) = (0usize, 0usize, 0usize);
    for t in trajs.iter() {
        for ev in &t.jumps {
            if ev.delta == 1 {
                up += 1;
                if t.bloch[ev.step][2] < t.bloch[ev.step - 1][2] {
                    up_zdrop += 1;
                }
            } else {
                down += 1;
            }
        }
    }
    println!(
        "single-mode 200 streams: up {up} down {down} up_frac {:.4} zdrop {:.4}",
        up as f64 / (up + down) as f64,
        up_zdrop as f64 / up as f64
    );
}

#[test]
#[ignore]
fn calibrate_peak_window() {
    let f = three_mode_temporal();
    let omega = f.model.params().rabi;
    let dist_to_peak = |slot: usize, t: f64| -> f64 {
        let tau = slot as f64 - 2.0;
        let period = TAU / omega;
        let base = TAU * tau / (3.0 * omega);
        let k = ((t - base) / period).round();
        (t - (base + k * period)).abs()
    };
    for frac in [6.0, 4.0, 3.0] {
        let window = TAU / (3.0 * omega) / frac;
        let (mut near, mut drop) = (0usize, 0usize);
        for t in temporal_trajectories().iter() {
            for ev in &t.jumps {
                if ev.delta == 1 && dist_to_peak(ev.mode, ev.time) <= window {
                    near += 1;
                    if t.bloch[ev.step][2] < t.bloch[ev.step - 1][2] {
                        drop += 1;
                    }
                }
            }
        }
        println!(
            "window stagger/{frac}: {drop}/{near} near-peak up-jumps drop z ({:.4})",
            drop as f64 / near.max(1) as f64
        );
    }
}
