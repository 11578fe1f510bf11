//! Error and performance metrics: discrete relative errors between
//! trajectories, the irreducible source-truncation floor, and the phase
//! timing breakdown.

use crate::linalg::SparseSymMatrix;
use crate::newmark::Trajectory;
use crate::wavelet::RickerParams;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Discrete relative error between two trajectories in the norm induced by x:
/// sqrt(Σ_j ‖u_j − w_j‖²_x) / sqrt(Σ_j ‖u_j‖²_x), plain sums over the shared
/// sample set, no quadrature weights.
pub fn relative_error(
    full: &Trajectory,
    approx: &Trajectory,
    x: &SparseSymMatrix,
) -> Result<f64> {
    if full.indices != approx.indices {
        return Err(Error::InvalidArgument(
            "trajectories sample different steps".into(),
        ));
    }
    let mut acc = ErrorAccumulator::default();
    for (u, w) in full.states.iter().zip(&approx.states) {
        acc.push(x, u, w);
    }
    acc.finish()
}

/// Streaming form of `relative_error` for marches too large to store.
#[derive(Debug, Default, Clone)]
pub struct ErrorAccumulator {
    num: f64,
    den: f64,
}

impl ErrorAccumulator {
    pub fn push(&mut self, x: &SparseSymMatrix, reference: &[f64], approx: &[f64]) {
        let diff: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| a - b).collect();
        self.num += x.bilinear(&diff, &diff).max(0.0);
        self.den += x.bilinear(reference, reference).max(0.0);
    }

    pub fn finish(&self) -> Result<f64> {
        if self.den < 1e-300 {
            return Err(Error::Numerical(
                "relative error undefined: reference trajectory has zero norm".into(),
            ));
        }
        Ok((self.num / self.den).sqrt())
    }
}

/// Error table for one sampling size over a list of basis sizes.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub m: usize,
    pub r_values: Vec<usize>,
    pub rel_l2: Vec<f64>,
    pub rel_h1: Vec<f64>,
    pub floor: ConsistencyFloor,
}

/// Soft monotonicity of an error-vs-R curve: each value may exceed its
/// predecessor by at most 10%. Violations are reported, not fatal.
pub fn curve_is_nonincreasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= 1.1 * w[0])
}

/// Irreducible error level caused by cutting off the source history at t = 0.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyFloor {
    /// closed-form bound α·e^{−(αt₀/2 − 1)²}; absent when its validity
    /// precondition t₀ ≥ 2(α + μ)/α² fails
    pub analytic: Option<f64>,
    /// quadrature of ∫_{−∞}^0 |q''(t)|·e^{−μt} dt
    pub quadrature: f64,
}

pub fn consistency_floor(w: &RickerParams, mu: f64) -> ConsistencyFloor {
    let alpha = w.alpha;
    let t0 = w.t0;
    let analytic = if t0 >= 2.0 * (alpha + mu) / (alpha * alpha) {
        Some(alpha * (-(alpha * t0 / 2.0 - 1.0).powi(2)).exp())
    } else {
        None
    };

    // walk the lower limit out until the log-integrand is hopeless
    let mut t_lo = t0.min(0.0);
    for _ in 0..200_000 {
        let tau = t_lo - t0;
        if -alpha * alpha * tau * tau / 4.0 - mu * t_lo < -760.0 {
            break;
        }
        t_lo -= 1.0 / alpha;
    }

    let integrand = |t: f64| w.deriv2(t).abs() * (-mu * t).exp();
    let panels = 1usize << 16;
    let h = (0.0 - t_lo) / panels as f64;
    let mut sum = integrand(t_lo) + integrand(0.0);
    for i in 1..panels {
        let t = t_lo + i as f64 * h;
        sum += integrand(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    ConsistencyFloor { analytic, quadrature: sum * h / 3.0 }
}

/// Wall-clock seconds per pipeline phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimingReport {
    pub assemble_fem: f64,
    pub laplace_hf_solves: f64,
    pub build_rb: f64,
    pub solve_td_rb: f64,
    pub reconstruct_hf: f64,
    pub hf_total: f64,
}

impl TimingReport {
    /// Total cost attributable to the reduced pipeline.
    pub fn rb_total(&self) -> f64 {
        self.laplace_hf_solves + self.build_rb + self.solve_td_rb + self.reconstruct_hf
    }

    pub fn speed_up(&self) -> f64 {
        self.hf_total / self.rb_total()
    }

    /// Stable row order for the timing CSV.
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("assemble_fem", self.assemble_fem),
            ("laplace_hf_solves", self.laplace_hf_solves),
            ("build_rb", self.build_rb),
            ("solve_td_rb", self.solve_td_rb),
            ("reconstruct_hf", self.reconstruct_hf),
            ("hf_total", self.hf_total),
        ]
    }
}

/// ‖(I−P)ü‖²_{L²_μ} by trapezoidal quadrature over a stride-1 trajectory
/// that carries accelerations; P is the B-orthogonal projector onto the
/// basis columns.
pub fn time_domain_residual_sq(
    traj: &Trajectory,
    phi: &DMatrix<f64>,
    b: &SparseSymMatrix,
    mu: f64,
) -> f64 {
    assert!(traj.len() >= 2);
    assert_eq!(
        traj.accelerations.len(),
        traj.len(),
        "need accelerations at every step"
    );
    let dt = traj.times[1] - traj.times[0];
    for w in traj.indices.windows(2) {
        assert_eq!(w[1] - w[0], 1, "need an unstrided trajectory");
    }
    let mut total = 0.0;
    for (j, a) in traj.accelerations.iter().enumerate() {
        let r = deflate(phi, b, a);
        let weight = if j == 0 || j + 1 == traj.len() { 0.5 } else { 1.0 };
        total += weight * (-2.0 * mu * traj.times[j]).exp() * b.bilinear(&r, &r).max(0.0);
    }
    total * dt
}

/// Σ_k ω_k ‖(I−P)û(s_k)‖²_B over the full symmetric point set, using the
/// conjugate economy: the k and −k terms contribute equal norms.
pub fn laplace_domain_residual_sq(
    set: &crate::snapshots::SnapshotSet,
    phi: &DMatrix<f64>,
    b: &SparseSymMatrix,
) -> f64 {
    let omega = set.plan.weight();
    let mut total = 0.0;
    for (k, col) in set.upper.iter().enumerate() {
        let re: Vec<f64> = col.iter().map(|z| z.re).collect();
        let im: Vec<f64> = col.iter().map(|z| z.im).collect();
        let rr = deflate(phi, b, &re);
        let ri = deflate(phi, b, &im);
        let norm_sq = b.bilinear(&rr, &rr).max(0.0) + b.bilinear(&ri, &ri).max(0.0);
        total += omega * if k == 0 { norm_sq } else { 2.0 * norm_sq };
    }
    total
}

fn deflate(phi: &DMatrix<f64>, b: &SparseSymMatrix, v: &[f64]) -> Vec<f64> {
    let bv = b.apply(v);
    let coeffs = phi.transpose() * DVector::from_column_slice(&bv);
    let proj = phi * coeffs;
    v.iter().zip(proj.iter()).map(|(a, p)| a - p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CooBuilder;

    fn diag(values: &[f64]) -> SparseSymMatrix {
        let mut coo = CooBuilder::new(values.len());
        for (i, v) in values.iter().enumerate() {
            coo.push(i, i, *v);
        }
        coo.build()
    }

    fn single_frame(states: Vec<Vec<f64>>) -> Trajectory {
        let n = states.len();
        Trajectory {
            indices: (0..n).collect(),
            times: (0..n).map(|i| i as f64).collect(),
            velocities: vec![vec![0.0; states[0].len()]; n],
            accelerations: Vec::new(),
            states,
        }
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let x = diag(&[4.0, 1.0]);
        let t = single_frame(vec![vec![1.0, 2.0], vec![0.5, -1.0]]);
        let s = single_frame(vec![vec![1.0, 2.0], vec![0.5, -1.0]]);
        assert_eq!(relative_error(&t, &s, &x).unwrap(), 0.0);
    }

    #[test]
    fn zero_approximation_gives_unit_error() {
        let x = diag(&[4.0, 1.0]);
        let t = single_frame(vec![vec![1.0, 2.0]]);
        let z = single_frame(vec![vec![0.0, 0.0]]);
        assert_eq!(relative_error(&t, &z, &x).unwrap(), 1.0);
    }

    /// Oracle by hand: X = diag(4,1), reference (1,0).
    /// Approx (0,0) → 1; approx (1,1) → ‖(0,−1)‖_X/‖(1,0)‖_X = 1/2.
    #[test]
    fn weighted_two_dof_hand_case() {
        let x = diag(&[4.0, 1.0]);
        let reference = single_frame(vec![vec![1.0, 0.0]]);
        let zero = single_frame(vec![vec![0.0, 0.0]]);
        assert!((relative_error(&reference, &zero, &x).unwrap() - 1.0).abs() <= 1e-15);
        let ones = single_frame(vec![vec![1.0, 1.0]]);
        assert!((relative_error(&reference, &ones, &x).unwrap() - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn error_is_scale_invariant() {
        let x = diag(&[2.0, 3.0, 1.0]);
        let a = single_frame(vec![vec![1.0, -0.4, 0.2], vec![0.3, 0.9, -2.0]]);
        let b = single_frame(vec![vec![0.9, -0.2, 0.25], vec![0.4, 1.0, -1.7]]);
        let base = relative_error(&a, &b, &x).unwrap();
        for c in [3.7e-5, -2.0, 1e8] {
            let scale = |t: &Trajectory| {
                single_frame(
                    t.states
                        .iter()
                        .map(|f| f.iter().map(|v| c * v).collect())
                        .collect(),
                )
            };
            let scaled = relative_error(&scale(&a), &scale(&b), &x).unwrap();
            assert!((scaled - base).abs() <= 1e-14 * base);
        }
    }

    #[test]
    fn mismatched_sampling_is_rejected() {
        let x = diag(&[1.0]);
        let a = single_frame(vec![vec![1.0], vec![2.0]]);
        let mut b = single_frame(vec![vec![1.0], vec![2.0]]);
        b.indices[1] = 7;
        assert!(relative_error(&a, &b, &x).is_err());
    }

    #[test]
    fn zero_reference_is_rejected() {
        let x = diag(&[1.0, 1.0]);
        let z = single_frame(vec![vec![0.0, 0.0]]);
        assert!(relative_error(&z, &z, &x).is_err());
    }

    #[test]
    fn accumulator_matches_batch_evaluation() {
        let x = diag(&[2.0, 5.0]);
        let a = single_frame(vec![vec![1.0, 2.0], vec![-0.5, 0.1], vec![3.0, -1.0]]);
        let b = single_frame(vec![vec![0.9, 2.2], vec![-0.4, 0.0], vec![2.8, -1.3]]);
        let batch = relative_error(&a, &b, &x).unwrap();
        let mut acc = ErrorAccumulator::default();
        for (u, w) in a.states.iter().zip(&b.states) {
            acc.push(&x, u, w);
        }
        assert_eq!(acc.finish().unwrap(), batch);
    }

    #[test]
    fn curve_band_check() {
        assert!(curve_is_nonincreasing(&[1.0, 0.5, 0.52, 0.1]));
        assert!(!curve_is_nonincreasing(&[1.0, 0.5, 0.6]));
    }

    /// Oracle values from 40-digit adaptive quadrature of
    /// ∫_{−∞}^0 |q''| e^{−μt} dt, frozen here.
    #[test]
    fn floor_quadrature_matches_reference_values() {
        let cases = [
            (std::f64::consts::PI, std::f64::consts::PI, 9.4396252092083615e-5),
            (
                2.0 * std::f64::consts::PI,
                std::f64::consts::FRAC_PI_4,
                9.8040269596774856e-24,
            ),
            (
                4.0 * std::f64::consts::PI,
                std::f64::consts::FRAC_PI_2,
                6.7852674130198320e-103,
            ),
        ];
        for (alpha, mu, expected) in cases {
            let w = RickerParams::new(alpha, 2.5).unwrap();
            let floor = consistency_floor(&w, mu);
            assert!(
                (floor.quadrature - expected).abs() <= 1e-7 * expected,
                "alpha={alpha}: {:e} vs {expected:e}",
                floor.quadrature
            );
        }
    }

    #[test]
    fn floor_quadrature_below_analytic_bound() {
        let w = RickerParams::new(2.0 * std::f64::consts::PI, 2.5).unwrap();
        let floor = consistency_floor(&w, std::f64::consts::FRAC_PI_4);
        let bound = floor.analytic.expect("precondition holds here");
        assert!(floor.quadrature <= bound);
        assert!(floor.quadrature.is_finite() && bound.is_finite());
    }

    #[test]
    fn floor_decreases_with_sharper_wavelets() {
        let mut last = f64::INFINITY;
        for alpha in [
            std::f64::consts::PI,
            2.0 * std::f64::consts::PI,
            4.0 * std::f64::consts::PI,
        ] {
            let w = RickerParams::new(alpha, 2.5).unwrap();
            let floor = consistency_floor(&w, alpha / 8.0);
            assert!(floor.quadrature < last);
            last = floor.quadrature;
        }
    }

    #[test]
    fn floor_precondition_guard() {
        let w = RickerParams::new(std::f64::consts::PI, 0.01).unwrap();
        let floor = consistency_floor(&w, std::f64::consts::PI / 8.0);
        assert!(floor.analytic.is_none());
        assert!(floor.quadrature.is_finite());
    }

    #[test]
    fn timing_report_accounting() {
        let t = TimingReport {
            assemble_fem: 0.5,
            laplace_hf_solves: 2.0,
            build_rb: 1.0,
            solve_td_rb: 0.25,
            reconstruct_hf: 0.75,
            hf_total: 16.0,
        };
        assert_eq!(t.rb_total(), 4.0);
        assert_eq!(t.speed_up(), 4.0);
        let rows = t.rows();
        assert_eq!(rows[0].0, "assemble_fem");
        assert_eq!(rows[5], ("hf_total", 16.0));
    }
}
