//! End-to-end pipeline orchestration: assembly, offline basis construction,
//! online reduced marches, the high-fidelity reference, error tables, and
//! report files, with wall-clock phase accounting.

use crate::assembly::{
    assemble_gram, assemble_mass, assemble_stiffness, build_source_vector, SpatialSource,
};
use crate::config::ExperimentConfig;
use crate::io::{
    field_from_interior, read_basis, write_basis, write_field_file, write_rel_error,
    write_singular_values, write_timings, ErrorRow,
};
use crate::linalg::{RealCholesky, SparseSymMatrix};
use crate::mesh::{build_unit_square_mesh, Mesh};
use crate::metrics::{
    consistency_floor, curve_is_nonincreasing, ConsistencyFloor, ErrorAccumulator,
    ErrorReport, TimingReport,
};
use crate::newmark::{
    newmark_march, newmark_solve, reduced_operators, DenseWaveSystem, SparseWaveSystem,
    Trajectory,
};
use crate::pod::{build_reduced_basis, ReducedBasis};
use crate::snapshots::{compute_snapshot_set, coercivity_floor_estimate, ShiftedOperator, SnapshotSet};
use crate::wavelet::RickerParams;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use std::path::PathBuf;
use std::time::Instant;

/// Everything the pipeline derives from the configuration before any solve.
pub struct Prepared {
    pub cfg: ExperimentConfig,
    pub mesh: Mesh,
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    pub gram: SparseSymMatrix,
    pub load: Vec<f64>,
    pub wavelet: RickerParams,
    pub assemble_seconds: f64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let clock = Instant::now();
    let mesh = build_unit_square_mesh(cfg.mesh.n)?;
    let field = cfg.coefficient.to_field();
    let stiffness = assemble_stiffness(&mesh, &field)?;
    let mass = assemble_mass(&mesh);
    let gram = assemble_gram(&stiffness, &mass, cfg.rom.gram.kind());
    let source = SpatialSource::new(cfg.source.center, cfg.source.width)?;
    let load = build_source_vector(&mass, &source.interior_values(&mesh));
    let wavelet = RickerParams::new(cfg.wavelet.alpha, cfg.wavelet.t0)?;
    Ok(Prepared {
        cfg: cfg.clone(),
        mesh,
        stiffness,
        mass,
        gram,
        load,
        wavelet,
        assemble_seconds: clock.elapsed().as_secs_f64(),
    })
}

pub struct OfflineArtifacts {
    pub m: usize,
    pub snapshots: SnapshotSet,
    pub basis: ReducedBasis,
    pub laplace_seconds: f64,
    pub build_seconds: f64,
}

/// Snapshot solves plus basis construction for one sampling size.
pub fn run_offline(p: &Prepared, m: usize, max_r: usize) -> Result<OfflineArtifacts> {
    let plan = p.cfg.plan_for(m)?;
    let clock = Instant::now();
    let op = ShiftedOperator::new(&p.stiffness, &p.mass);
    let snapshots = compute_snapshot_set(&op, &p.wavelet, &p.load, &plan)?;
    let laplace_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let chol = RealCholesky::new(&p.gram)?;
    let basis = build_reduced_basis(&chol, &snapshots.real_matrix(), &snapshots.weights(), max_r)?;
    let build_seconds = clock.elapsed().as_secs_f64();
    Ok(OfflineArtifacts { m, snapshots, basis, laplace_seconds, build_seconds })
}

pub struct OnlineArtifacts {
    pub r_list: Vec<usize>,
    /// reduced-coordinate trajectories per basis size, every step kept
    pub reduced: Vec<Trajectory>,
    /// (step, nodal state) frames lifted from the largest basis
    pub lifted: Vec<(usize, Vec<f64>)>,
    pub solve_seconds: f64,
    pub reconstruct_seconds: f64,
}

/// Reduced marches for every requested basis size. Only the largest size is
/// timed: it is the configuration the timing table reports. Nothing in here
/// touches a system bigger than R×R until the final lifting products.
pub fn run_online(
    p: &Prepared,
    phi: &DMatrix<f64>,
    r_list: &[usize],
    output_frames: &[usize],
) -> Result<OnlineArtifacts> {
    let ncfg = p.cfg.newmark()?;
    let max_r = *r_list.iter().max().expect("validated nonempty");
    assert!(max_r <= phi.ncols());
    let q = |t: f64| p.wavelet.eval(t);

    let mut reduced = Vec::with_capacity(r_list.len());
    let mut solve_seconds = 0.0;
    for &r in r_list {
        let clock = Instant::now();
        let phir = phi.columns(0, r).into_owned();
        let (m_r, k_r, b_r) = reduced_operators(&phir, &p.mass, &p.stiffness, &p.load);
        let sys = DenseWaveSystem::new(m_r, k_r, &ncfg)?;
        let traj = newmark_solve(&sys, &ncfg, &b_r, &q, 1, false)?;
        if r == max_r {
            solve_seconds = clock.elapsed().as_secs_f64();
        }
        reduced.push(traj);
    }

    let clock = Instant::now();
    let max_idx = r_list.iter().position(|&r| r == max_r).unwrap();
    let phi_max = phi.columns(0, max_r);
    let mut lifted = Vec::with_capacity(output_frames.len());
    for &step in output_frames {
        let pos = reduced[max_idx]
            .find_step(step)
            .expect("reduced trajectory keeps every step");
        let coeffs = DVector::from_column_slice(&reduced[max_idx].states[pos]);
        let state: Vec<f64> = (&phi_max * coeffs).data.into();
        lifted.push((step, state));
    }
    let reconstruct_seconds = clock.elapsed().as_secs_f64();
    Ok(OnlineArtifacts {
        r_list: r_list.to_vec(),
        reduced,
        lifted,
        solve_seconds,
        reconstruct_seconds,
    })
}

pub struct ReferenceArtifacts {
    /// states at the error-evaluation steps, in step order
    pub error_steps: Vec<usize>,
    pub error_frames: Vec<Vec<f64>>,
    /// states at the field-dump steps
    pub field_steps: Vec<usize>,
    pub field_frames: Vec<Vec<f64>>,
    pub hf_seconds: f64,
}

/// High-fidelity march, streaming: only the requested frames are kept.
pub fn run_reference(
    p: &Prepared,
    error_steps: &[usize],
    field_steps: &[usize],
) -> Result<ReferenceArtifacts> {
    let ncfg = p.cfg.newmark()?;
    let q = |t: f64| p.wavelet.eval(t);
    let clock = Instant::now();
    let sys = SparseWaveSystem::new(&p.mass, &p.stiffness, &ncfg)?;
    let mut error_frames: Vec<Vec<f64>> = Vec::with_capacity(error_steps.len());
    let mut field_frames: Vec<Vec<f64>> = Vec::with_capacity(field_steps.len());
    let mut err_cursor = 0usize;
    let mut field_cursor = 0usize;
    newmark_march(&sys, &ncfg, &p.load, &q, |step, _t, u, _v, _a| {
        while err_cursor < error_steps.len() && error_steps[err_cursor] == step {
            error_frames.push(u.to_vec());
            err_cursor += 1;
        }
        while field_cursor < field_steps.len() && field_steps[field_cursor] == step {
            field_frames.push(u.to_vec());
            field_cursor += 1;
        }
    })?;
    let hf_seconds = clock.elapsed().as_secs_f64();
    Ok(ReferenceArtifacts {
        error_steps: error_steps.to_vec(),
        error_frames,
        field_steps: field_steps.to_vec(),
        field_frames,
        hf_seconds,
    })
}

/// Steps on which the error sums run: the uniform subgrid plus the final step.
pub fn error_steps(cfg: &ExperimentConfig) -> Vec<usize> {
    let stride = cfg.error_stride();
    let mut steps: Vec<usize> = (0..=cfg.time.steps).filter(|s| s % stride == 0).collect();
    if *steps.last().unwrap() != cfg.time.steps {
        steps.push(cfg.time.steps);
    }
    steps
}

/// Steps at which nodal fields are dumped, from the configured times.
pub fn field_steps(cfg: &ExperimentConfig) -> Vec<usize> {
    let dt = cfg.time.t_final / cfg.time.steps as f64;
    let mut steps: Vec<usize> = cfg
        .output
        .field_times
        .iter()
        .map(|t| ((t / dt).round() as usize).min(cfg.time.steps))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Frames kept for reconstruction: the output stride plus the field steps.
pub fn output_frames(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut frames: Vec<usize> = (0..=cfg.time.steps)
        .filter(|s| s % cfg.output.stride == 0)
        .collect();
    frames.extend(field_steps(cfg));
    frames.push(cfg.time.steps);
    frames.sort_unstable();
    frames.dedup();
    frames
}

/// Error table for one sampling size against a shared reference.
pub fn evaluate_errors(
    p: &Prepared,
    phi: &DMatrix<f64>,
    online: &OnlineArtifacts,
    reference: &ReferenceArtifacts,
    m: usize,
) -> Result<ErrorReport> {
    let mut rel_l2 = Vec::with_capacity(online.r_list.len());
    let mut rel_h1 = Vec::with_capacity(online.r_list.len());
    for (idx, &r) in online.r_list.iter().enumerate() {
        let phir = phi.columns(0, r);
        let traj = &online.reduced[idx];
        let mut acc_l2 = ErrorAccumulator::default();
        let mut acc_h1 = ErrorAccumulator::default();
        for (frame, &step) in reference.error_frames.iter().zip(&reference.error_steps) {
            let pos = traj.find_step(step).expect("reduced trajectory keeps every step");
            let coeffs = DVector::from_column_slice(&traj.states[pos]);
            let lifted: Vec<f64> = (&phir * coeffs).data.into();
            acc_l2.push(&p.mass, frame, &lifted);
            acc_h1.push(&p.stiffness, frame, &lifted);
        }
        rel_l2.push(acc_l2.finish()?);
        rel_h1.push(acc_h1.finish()?);
    }
    Ok(ErrorReport {
        m,
        r_values: online.r_list.clone(),
        rel_l2,
        rel_h1,
        floor: consistency_floor(&p.wavelet, p.cfg.resolved_mu()),
    })
}

pub fn report_rows(report: &ErrorReport) -> Vec<ErrorRow> {
    report
        .r_values
        .iter()
        .zip(report.rel_l2.iter().zip(&report.rel_h1))
        .map(|(&r, (&l2, &h1))| ErrorRow { r, m: report.m, l2, h1 })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Mode {
    Run,
    Offline { basis_out: Option<PathBuf> },
    Online { basis_in: Option<PathBuf> },
    Reference,
    Study,
}

#[derive(Debug)]
pub struct Summary {
    pub out_dir: PathBuf,
    pub timing: TimingReport,
    pub reports: Vec<ErrorReport>,
    pub rows: Vec<ErrorRow>,
    pub floor: Option<ConsistencyFloor>,
    pub speed_up: Option<f64>,
    pub messages: Vec<String>,
}

/// Runs one subcommand end to end, writing the report files into the
/// configured output directory.
pub fn execute(cfg: &ExperimentConfig, mode: &Mode) -> Result<Summary> {
    let out = cfg.output.directory.clone();
    std::fs::create_dir_all(&out)?;
    let p = prepare(cfg)?;
    let mut timing = TimingReport { assemble_fem: p.assemble_seconds, ..Default::default() };
    let mut summary = Summary {
        out_dir: out.clone(),
        timing,
        reports: Vec::new(),
        rows: Vec::new(),
        floor: None,
        speed_up: None,
        messages: Vec::new(),
    };
    let default_basis_path = out.join("basis.bin");

    match mode {
        Mode::Offline { basis_out } => {
            let art = run_offline(&p, cfg.sampling.m, cfg.max_r())?;
            timing.laplace_hf_solves = art.laplace_seconds;
            timing.build_rb = art.build_seconds;
            write_singular_values(&out.join("singular_values.csv"), &art.basis.singular_values)?;
            let path = basis_out.clone().unwrap_or(default_basis_path);
            write_basis(
                &path,
                cfg.mesh.n,
                cfg.rom.gram.kind(),
                &art.basis.phi,
                &art.basis.singular_values,
            )?;
            summary
                .messages
                .push(format!("basis written to {}", path.display()));
            write_metadata(&p, &summary.messages)?;
        }
        Mode::Reference => {
            let fsteps = field_steps(cfg);
            let reference = run_reference(&p, &[], &fsteps)?;
            timing.hf_total = reference.hf_seconds;
            dump_fields(&p, &fsteps, &reference.field_frames, "field_hf")?;
            write_timings(&out.join("timings.csv"), &timing)?;
            write_metadata(&p, &summary.messages)?;
        }
        Mode::Run | Mode::Online { .. } | Mode::Study => {
            // basis for Run and Online; Study builds one per sampling size below
            let fixed: Option<(DMatrix<f64>, Vec<f64>)> = match mode {
                Mode::Online { basis_in } => {
                    let path = basis_in.clone().unwrap_or(default_basis_path.clone());
                    let stored = read_basis(&path)?;
                    if stored.mesh_n != cfg.mesh.n {
                        return Err(Error::Config(format!(
                            "basis in {} was built for mesh.n = {}, config says {}",
                            path.display(),
                            stored.mesh_n,
                            cfg.mesh.n
                        )));
                    }
                    if stored.gram != cfg.rom.gram.kind() {
                        return Err(Error::Config(format!(
                            "basis in {} uses a different inner product",
                            path.display()
                        )));
                    }
                    if stored.phi.ncols() < cfg.max_r() {
                        return Err(Error::Config(format!(
                            "basis holds {} modes, config asks for {}",
                            stored.phi.ncols(),
                            cfg.max_r()
                        )));
                    }
                    Some((stored.phi, stored.singular_values))
                }
                Mode::Run => {
                    let art = run_offline(&p, cfg.sampling.m, cfg.max_r())?;
                    timing.laplace_hf_solves = art.laplace_seconds;
                    timing.build_rb = art.build_seconds;
                    write_basis(
                        &default_basis_path,
                        cfg.mesh.n,
                        cfg.rom.gram.kind(),
                        &art.basis.phi,
                        &art.basis.singular_values,
                    )?;
                    Some((art.basis.phi, art.basis.singular_values))
                }
                _ => None,
            };

            let esteps = error_steps(cfg);
            let fsteps = field_steps(cfg);
            let oframes = output_frames(cfg);
            let reference = run_reference(&p, &esteps, &fsteps)?;
            timing.hf_total = reference.hf_seconds;

            let grid = match mode {
                Mode::Study => cfg.study_grid(),
                _ => vec![cfg.sampling.m],
            };
            let mut last: Option<(DMatrix<f64>, Vec<f64>)> = None;
            for (gi, &m) in grid.iter().enumerate() {
                let (phi_m, sigma_m) = match &fixed {
                    Some((phi, sigma)) => (phi.clone(), sigma.clone()),
                    None => {
                        let art = run_offline(&p, m, cfg.max_r())?;
                        timing.laplace_hf_solves = art.laplace_seconds;
                        timing.build_rb = art.build_seconds;
                        (art.basis.phi, art.basis.singular_values)
                    }
                };
                let online = run_online(&p, &phi_m, &cfg.rom.r_values, &oframes)?;
                timing.solve_td_rb = online.solve_seconds;
                timing.reconstruct_hf = online.reconstruct_seconds;

                let report = evaluate_errors(&p, &phi_m, &online, &reference, m)?;
                if !curve_is_nonincreasing(&report.rel_h1) {
                    summary.messages.push(format!(
                        "warning: error-vs-R curve for M = {m} rises by more than 10% somewhere"
                    ));
                }
                summary.rows.extend(report_rows(&report));
                summary.reports.push(report);

                if gi + 1 == grid.len() {
                    dump_fields(&p, &fsteps, &reference.field_frames, "field_hf")?;
                    let rb_fields: Vec<Vec<f64>> = fsteps
                        .iter()
                        .map(|s| {
                            online
                                .lifted
                                .iter()
                                .find(|(step, _)| step == s)
                                .expect("field steps are part of the output frames")
                                .1
                                .clone()
                        })
                        .collect();
                    dump_fields(&p, &fsteps, &rb_fields, "field_rb")?;
                }
                last = Some((phi_m, sigma_m));
            }

            let (last_phi, last_sigma) = last.expect("grid is nonempty");
            if matches!(mode, Mode::Study) {
                write_basis(
                    &default_basis_path,
                    cfg.mesh.n,
                    cfg.rom.gram.kind(),
                    &last_phi,
                    &last_sigma,
                )?;
            }
            write_singular_values(&out.join("singular_values.csv"), &last_sigma)?;
            write_rel_error(&out.join("rel_error.csv"), &summary.rows)?;
            write_timings(&out.join("timings.csv"), &timing)?;
            summary.floor = summary.reports.last().map(|r| r.floor);
            summary.speed_up = match mode {
                Mode::Online { .. } => None, // offline cost not measured here
                _ => Some(timing.speed_up()),
            };
            write_metadata(&p, &summary.messages)?;
        }
    }
    summary.timing = timing;
    Ok(summary)
}

fn dump_fields(
    p: &Prepared,
    steps: &[usize],
    frames: &[Vec<f64>],
    prefix: &str,
) -> Result<()> {
    for (step, frame) in steps.iter().zip(frames) {
        let full = field_from_interior(&p.mesh, frame);
        let path = p
            .cfg
            .output
            .directory
            .join(format!("{prefix}_{step:06}.txt"));
        write_field_file(&path, &p.mesh, &full)?;
    }
    Ok(())
}

fn write_metadata(p: &Prepared, messages: &[String]) -> Result<()> {
    use std::io::Write;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p.cfg.seed);
    let coercivity = coercivity_floor_estimate(&p.stiffness, &p.gram, &mut rng, 20);
    let plan = p.cfg.plan_for(p.cfg.sampling.m)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(
        p.cfg.output.directory.join("metadata.txt"),
    )?);
    writeln!(w, "seed = {}", p.cfg.seed)?;
    writeln!(w, "mesh_n = {}", p.cfg.mesh.n)?;
    writeln!(w, "interior_dofs = {}", p.mesh.n_interior())?;
    writeln!(w, "sampling_m = {}", p.cfg.sampling.m)?;
    writeln!(w, "mu = {:e}", plan.mu)?;
    writeln!(w, "eta = {:e}", plan.eta)?;
    writeln!(w, "theta = {:e}", plan.theta)?;
    writeln!(w, "gram = {}", p.cfg.rom.gram.kind().label())?;
    writeln!(w, "coercivity_probe_min_rayleigh = {coercivity:e} (20 seeded samples)")?;
    for msg in messages {
        writeln!(w, "note: {msg}")?;
    }
    Ok(())
}
