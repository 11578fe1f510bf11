//! Implicit Newmark time stepping for M·ü + K·u = q(t)·b from rest.
//!
//! One trait covers both operand kinds: the full system steps sparse
//! envelope factorizations, the reduced system steps dense Cholesky factors.
//! The effective matrix M + β·dt²·K is factored once and reused for every
//! step, which is where the runtime advantage of the reduced model lives.

use crate::linalg::{RealCholesky, SparseSymMatrix};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Per-step relative residual the effective solve must satisfy.
pub const STEP_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct NewmarkConfig {
    pub beta: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub steps: usize,
}

impl NewmarkConfig {
    /// Average-acceleration scheme: unconditionally stable, second order.
    pub fn standard(t_final: f64, steps: usize) -> Result<NewmarkConfig> {
        NewmarkConfig::new(0.25, 0.5, t_final, steps)
    }

    pub fn new(beta: f64, gamma: f64, t_final: f64, steps: usize) -> Result<NewmarkConfig> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive and finite, got {t_final}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in (0, 1/2], got {beta}"
            )));
        }
        // gamma >= 1/2 with 2*beta >= gamma keeps the scheme unconditionally stable
        if !(gamma >= 0.5 && gamma <= 2.0 * beta) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in [1/2, 2*beta], got {gamma} with beta {beta}"
            )));
        }
        Ok(NewmarkConfig { beta, gamma, t_final, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }
}

/// What the integrator needs from the operands; factorizations are baked in
/// at construction for one (β, dt) pair.
pub trait SecondOrderSystem {
    fn dim(&self) -> usize;
    fn apply_mass(&self, x: &[f64]) -> Vec<f64>;
    fn apply_stiffness(&self, x: &[f64]) -> Vec<f64>;
    fn solve_mass(&self, rhs: &[f64]) -> Vec<f64>;
    fn solve_effective(&self, rhs: &[f64]) -> Vec<f64>;
    /// β·dt² the effective factorization was built with
    fn effective_shift(&self) -> f64;
}

pub struct SparseWaveSystem<'a> {
    k: &'a SparseSymMatrix,
    m: &'a SparseSymMatrix,
    mass_fact: RealCholesky,
    eff_fact: RealCholesky,
    beta_dt2: f64,
}

impl<'a> SparseWaveSystem<'a> {
    pub fn new(
        m: &'a SparseSymMatrix,
        k: &'a SparseSymMatrix,
        cfg: &NewmarkConfig,
    ) -> Result<SparseWaveSystem<'a>> {
        let beta_dt2 = cfg.beta * cfg.dt() * cfg.dt();
        let eff = m.add_scaled(k, beta_dt2);
        Ok(SparseWaveSystem {
            k,
            m,
            mass_fact: RealCholesky::new(m)?,
            eff_fact: RealCholesky::new(&eff)?,
            beta_dt2,
        })
    }
}

impl SecondOrderSystem for SparseWaveSystem<'_> {
    fn dim(&self) -> usize {
        self.k.dim()
    }
    fn apply_mass(&self, x: &[f64]) -> Vec<f64> {
        self.m.apply(x)
    }
    fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        self.k.apply(x)
    }
    fn solve_mass(&self, rhs: &[f64]) -> Vec<f64> {
        self.mass_fact.solve(rhs)
    }
    fn solve_effective(&self, rhs: &[f64]) -> Vec<f64> {
        self.eff_fact.solve(rhs)
    }
    fn effective_shift(&self) -> f64 {
        self.beta_dt2
    }
}

pub struct DenseWaveSystem {
    k: DMatrix<f64>,
    m: DMatrix<f64>,
    mass_fact: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    eff_fact: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    beta_dt2: f64,
}

impl DenseWaveSystem {
    pub fn new(m: DMatrix<f64>, k: DMatrix<f64>, cfg: &NewmarkConfig) -> Result<DenseWaveSystem> {
        if m.nrows() != k.nrows() || !m.is_square() || !k.is_square() {
            return Err(Error::InvalidArgument(
                "mass and stiffness must be square with matching sizes".into(),
            ));
        }
        let beta_dt2 = cfg.beta * cfg.dt() * cfg.dt();
        let eff = &m + &k * beta_dt2;
        let mass_fact = nalgebra::Cholesky::new(m.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("reduced mass matrix".into()))?;
        let eff_fact = nalgebra::Cholesky::new(eff)
            .ok_or_else(|| Error::NotPositiveDefinite("reduced effective matrix".into()))?;
        Ok(DenseWaveSystem { k, m, mass_fact, eff_fact, beta_dt2 })
    }
}

impl SecondOrderSystem for DenseWaveSystem {
    fn dim(&self) -> usize {
        self.k.nrows()
    }
    fn apply_mass(&self, x: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(x)).data.into()
    }
    fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        (&self.k * DVector::from_column_slice(x)).data.into()
    }
    fn solve_mass(&self, rhs: &[f64]) -> Vec<f64> {
        self.mass_fact.solve(&DVector::from_column_slice(rhs)).data.into()
    }
    fn solve_effective(&self, rhs: &[f64]) -> Vec<f64> {
        self.eff_fact.solve(&DVector::from_column_slice(rhs)).data.into()
    }
    fn effective_shift(&self) -> f64 {
        self.beta_dt2
    }
}

/// Runs the march, handing every state (including the initial one) to the
/// observer. State starts from rest; the initial acceleration comes from the
/// t = 0 equilibrium solve so second-order accuracy survives q(0) ≠ 0.
pub fn newmark_march<S, F>(
    sys: &S,
    cfg: &NewmarkConfig,
    load: &[f64],
    amplitude: &dyn Fn(f64) -> f64,
    mut observe: F,
) -> Result<()>
where
    S: SecondOrderSystem,
    F: FnMut(usize, f64, &[f64], &[f64], &[f64]),
{
    let n = sys.dim();
    assert_eq!(load.len(), n);
    let shift = cfg.beta * cfg.dt() * cfg.dt();
    assert!(
        (sys.effective_shift() - shift).abs() <= 1e-15 * shift.max(1e-300),
        "system factored for a different (beta, dt)"
    );
    let dt = cfg.dt();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let q0 = amplitude(0.0);
    let mut a = sys.solve_mass(&load.iter().map(|b| q0 * b).collect::<Vec<_>>());
    observe(0, 0.0, &u, &v, &a);

    let mut u_star = vec![0.0; n];
    let mut v_star = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for step in 0..cfg.steps {
        let t1 = (step + 1) as f64 * dt;
        let q1 = amplitude(t1);
        for i in 0..n {
            u_star[i] = u[i] + dt * v[i] + dt * dt * (0.5 - cfg.beta) * a[i];
            v_star[i] = v[i] + dt * (1.0 - cfg.gamma) * a[i];
        }
        let ku_star = sys.apply_stiffness(&u_star);
        let mut rhs_norm_sq = 0.0;
        for i in 0..n {
            rhs[i] = q1 * load[i] - ku_star[i];
            rhs_norm_sq += rhs[i] * rhs[i];
        }
        let a1 = sys.solve_effective(&rhs);

        let ma1 = sys.apply_mass(&a1);
        let ka1 = sys.apply_stiffness(&a1);
        let mut res_sq = 0.0;
        for i in 0..n {
            let r = ma1[i] + shift * ka1[i] - rhs[i];
            res_sq += r * r;
        }
        if !(res_sq.sqrt() <= STEP_RESIDUAL_TOL * rhs_norm_sq.sqrt()) {
            return Err(Error::Numerical(format!(
                "effective solve at step {} left relative residual {:e}",
                step + 1,
                res_sq.sqrt() / rhs_norm_sq.sqrt()
            )));
        }

        for i in 0..n {
            u[i] = u_star[i] + cfg.beta * dt * dt * a1[i];
            v[i] = v_star[i] + cfg.gamma * dt * a1[i];
        }
        a = a1;
        observe(step + 1, t1, &u, &v, &a);
    }
    Ok(())
}

/// Strided state history; step 0 and the final step are always kept.
pub struct Trajectory {
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// populated only when requested at solve time
    pub accelerations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Position of a step index inside the kept samples, if present.
    pub fn find_step(&self, step: usize) -> Option<usize> {
        self.indices.binary_search(&step).ok()
    }
}

pub fn newmark_solve<S: SecondOrderSystem>(
    sys: &S,
    cfg: &NewmarkConfig,
    load: &[f64],
    amplitude: &dyn Fn(f64) -> f64,
    stride: usize,
    keep_accelerations: bool,
) -> Result<Trajectory> {
    assert!(stride >= 1);
    let mut traj = Trajectory {
        indices: Vec::new(),
        times: Vec::new(),
        states: Vec::new(),
        velocities: Vec::new(),
        accelerations: Vec::new(),
    };
    newmark_march(sys, cfg, load, amplitude, |step, t, u, v, a| {
        if step % stride == 0 || step == cfg.steps {
            traj.indices.push(step);
            traj.times.push(t);
            traj.states.push(u.to_vec());
            traj.velocities.push(v.to_vec());
            if keep_accelerations {
                traj.accelerations.push(a.to_vec());
            }
        }
    })?;
    Ok(traj)
}

/// Galerkin projection of the operators and the load onto the basis columns.
pub fn reduced_operators(
    phi: &DMatrix<f64>,
    m: &SparseSymMatrix,
    k: &SparseSymMatrix,
    load: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let (n, r) = phi.shape();
    assert_eq!(m.dim(), n);
    let mut m_r = DMatrix::zeros(r, r);
    let mut k_r = DMatrix::zeros(r, r);
    let mut b_r = vec![0.0; r];
    for j in 0..r {
        let col = phi.column(j);
        let mcol = m.apply(col.as_slice());
        let kcol = k.apply(col.as_slice());
        for i in 0..r {
            let pi = phi.column(i);
            m_r[(i, j)] = pi.iter().zip(&mcol).map(|(a, b)| a * b).sum();
            k_r[(i, j)] = pi.iter().zip(&kcol).map(|(a, b)| a * b).sum();
        }
        b_r[j] = col.iter().zip(load).map(|(a, b)| a * b).sum();
    }
    // enforce exact symmetry so dense Cholesky sees one consistent triangle
    for i in 0..r {
        for j in 0..i {
            let ms = 0.5 * (m_r[(i, j)] + m_r[(j, i)]);
            m_r[(i, j)] = ms;
            m_r[(j, i)] = ms;
            let ks = 0.5 * (k_r[(i, j)] + k_r[(j, i)]);
            k_r[(i, j)] = ks;
            k_r[(j, i)] = ks;
        }
    }
    (m_r, k_r, b_r)
}

/// Lifts a reduced trajectory back to nodal coordinates: u = Φ·u_r per frame.
pub fn reconstruct(phi: &DMatrix<f64>, reduced: &Trajectory) -> Trajectory {
    let lift = |frames: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        frames
            .iter()
            .map(|c| (phi * DVector::from_column_slice(c)).data.into())
            .collect()
    };
    Trajectory {
        indices: reduced.indices.clone(),
        times: reduced.times.clone(),
        states: lift(&reduced.states),
        velocities: lift(&reduced.velocities),
        accelerations: lift(&reduced.accelerations),
    }
}
