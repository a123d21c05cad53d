//! Variational ground and excited states: VQE and VQD with a two-phase
//! Adam then gradient-descent schedule, run on the sector simulator.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{random_params, Circuit, Compiled};
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::pauli::PauliSum;
use crate::sector::SectorBasis;
use crate::{CMat, C64};

const IMAG_TOL: f64 = 1e-10;
/// Margin by which a deflated run may undercut an earlier level.
pub const CROSSING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub step: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam for `phase1`, plain gradient descent for `phase2`.
///
/// The optimiser steps in `u = angle_scale · θ`. With the default of 2 the
/// step sizes refer to excitation-gate angles `exp(-i u/2 ·…)`, the
/// parametrisation the literature step sizes were tuned for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub phase1: Phase,
    pub phase2: Phase,
    pub adam: AdamParams,
    pub angle_scale: f64,
    pub grad_norm_tol: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn vqe(seed: u64) -> Self {
        OptimizerConfig {
            phase1: Phase { step: 0.1, max_iters: 500 },
            phase2: Phase { step: 0.02, max_iters: 200_000 },
            adam: AdamParams::default(),
            angle_scale: 2.0,
            grad_norm_tol: 1e-9,
            seed,
        }
    }

    pub fn vqd(seed: u64) -> Self {
        OptimizerConfig {
            phase1: Phase { step: 0.1, max_iters: 1000 },
            phase2: Phase { step: 0.01, max_iters: 200_000 },
            ..Self::vqe(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.phase1, self.phase2] {
            if !(p.step > 0.0) {
                return Err(Error::Invalid(format!("step size must be positive, got {}", p.step)));
            }
        }
        if !(self.angle_scale > 0.0) {
            return Err(Error::Invalid(format!("angle scale must be positive, got {}", self.angle_scale)));
        }
        if self.phase1.max_iters == 0 && self.phase2.max_iters == 0 {
            return Err(Error::Invalid("both phases have zero iterations".into()));
        }
        Ok(())
    }
}

/// Previously found states and their penalty strengths.
#[derive(Debug, Clone, Default)]
pub struct DeflationSet {
    /// Parameters when the state came from the circuit, `None` for external vectors.
    pub states: Vec<(Option<Vec<f64>>, Vec<C64>)>,
    pub betas: Vec<f64>,
}

impl DeflationSet {
    pub fn push(&mut self, params: Option<Vec<f64>>, state: Vec<C64>, beta: f64) -> Result<()> {
        if !(beta > 0.0) {
            return Err(Error::Invalid(format!("penalty strength must be positive, got {beta}")));
        }
        let n = crate::linalg::norm(&state);
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::Invalid(format!("deflation state has norm {n}")));
        }
        self.states.push((params, state));
        self.betas.push(beta);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `Σ β_j |<ψ|ψ_j>|²`.
    pub fn penalty(&self, psi: &[C64]) -> f64 {
        self.states
            .iter()
            .zip(&self.betas)
            .map(|((_, s), b)| b * inner(s, psi).norm_sqr())
            .sum()
    }

    /// `Σ β_j |ψ_j><ψ_j| v`.
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for ((_, s), b) in self.states.iter().zip(&self.betas) {
            let a = inner(s, v) * b;
            for (o, x) in out.iter_mut().zip(s) {
                *o += x * a;
            }
        }
        out
    }
}

/// Hermitian sector matrix of `h`.
pub fn sector_hamiltonian(h: &PauliSum, sector: &SectorBasis) -> Result<CMat> {
    if !h.is_hermitian() {
        return Err(Error::Invalid("Hamiltonian is not Hermitian".into()));
    }
    Ok(h.project(sector.states()))
}

fn matvec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)] * v[c]).sum()).collect()
}

fn real_expectation(m: &CMat, psi: &[C64]) -> Result<f64> {
    let e = inner(psi, &matvec(m, psi));
    if e.im.abs() > IMAG_TOL * (1.0 + e.re.abs()) {
        return Err(Error::Numerical(format!("expectation has imaginary part {:.3e}", e.im)));
    }
    Ok(e.re)
}

/// Circuit, sector Hamiltonian and penalties bundled into one cost.
pub struct Objective {
    pub compiled: Compiled,
    pub h: CMat,
    pub deflation: DeflationSet,
}

impl Objective {
    pub fn new(c: &Circuit, sector: &SectorBasis, h: &PauliSum, deflation: DeflationSet) -> Result<Self> {
        Ok(Objective {
            compiled: Compiled::on_sector(c, sector)?,
            h: sector_hamiltonian(h, sector)?,
            deflation,
        })
    }

    pub fn n_params(&self) -> usize {
        self.compiled.n_params()
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        real_expectation(&self.h, &self.compiled.state(params)?)
    }

    pub fn value(&self, params: &[f64]) -> Result<f64> {
        let psi = self.compiled.state(params)?;
        Ok(real_expectation(&self.h, &psi)? + self.deflation.penalty(&psi))
    }

    /// Cost and its exact gradient from one reverse sweep.
    pub fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.compiled.expectation_gradient(params, |v| {
            let mut out = matvec(&self.h, v);
            for (o, d) in out.iter_mut().zip(self.deflation.apply(v)) {
                *o += d;
            }
            out
        })
    }
}

/// `<ψ(θ)|H|ψ(θ)>` on the sector.
pub fn energy_cost(c: &Circuit, sector: &SectorBasis, params: &[f64], h: &PauliSum) -> Result<f64> {
    Objective::new(c, sector, h, DeflationSet::default())?.energy(params)
}

/// Energy plus `Σ β_j |<ψ|ψ_j>|²`.
pub fn vqd_cost(c: &Circuit, sector: &SectorBasis, params: &[f64], h: &PauliSum, d: &DeflationSet) -> Result<f64> {
    Objective::new(c, sector, h, d.clone())?.value(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// `(iteration, cost)` before each update, then the final cost.
    pub costs: Vec<(usize, f64)>,
    /// First gradient-descent iteration, if that phase ran.
    pub phase2_start: Option<usize>,
    pub params: Vec<f64>,
    pub cost: f64,
    /// Energy without penalty terms.
    pub energy: f64,
    pub grad_norm: f64,
    pub state: Vec<C64>,
}

impl RunTrace {
    /// Two columns `iteration cost` with `# phase2 <iter>` at the boundary.
    pub fn write_dat(&self, mut w: impl Write) -> std::io::Result<()> {
        for &(i, c) in &self.costs {
            if Some(i) == self.phase2_start {
                writeln!(w, "# phase2 {i}")?;
            }
            writeln!(w, "{i} {c:.17e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for RunTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "energy {:.10} cost {:.10} after {} iterations (|grad| {:.2e})",
            self.energy,
            self.cost,
            self.costs.last().map_or(0, |c| c.0),
            self.grad_norm
        )
    }
}

/// Bias-corrected Adam state.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamParams,
    step: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, step: f64, cfg: AdamParams) -> Self {
        Adam {
            cfg,
            step,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        let AdamParams { beta1, beta2, eps } = self.cfg;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * grad[k];
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * grad[k] * grad[k];
            params[k] -= self.step * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + eps);
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs both phases from `start`.
pub fn optimize(obj: &Objective, start: Vec<f64>, cfg: &OptimizerConfig) -> Result<RunTrace> {
    cfg.validate()?;
    if start.len() != obj.n_params() {
        return Err(Error::Invalid(format!("{} parameters for a {}-parameter circuit", start.len(), obj.n_params())));
    }
    let a = cfg.angle_scale;
    // Optimiser coordinates u = a θ, so ∂/∂u = ∂/∂θ / a.
    let eval = |params: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (c, g) = obj.value_and_gradient(params)?;
        Ok((c, g.into_iter().map(|x| x / a).collect()))
    };
    let mut u: Vec<f64> = start.iter().map(|t| t * a).collect();
    let mut params = start;
    let mut costs = Vec::new();
    let mut phase2_start = None;
    let mut adam = Adam::new(params.len(), cfg.phase1.step, cfg.adam);
    let mut it = 0;
    let (mut cost, mut grad) = eval(&params)?;
    let total = cfg.phase1.max_iters + cfg.phase2.max_iters;
    while it < total {
        if !cost.is_finite() {
            return Err(Error::Numerical(format!("cost diverged at iteration {it}")));
        }
        if l2(&grad) < cfg.grad_norm_tol {
            break;
        }
        costs.push((it, cost));
        if it < cfg.phase1.max_iters {
            adam.update(&mut u, &grad);
        } else {
            phase2_start.get_or_insert(it);
            for (x, g) in u.iter_mut().zip(&grad) {
                *x -= cfg.phase2.step * g;
            }
        }
        for (p, x) in params.iter_mut().zip(&u) {
            *p = x / a;
        }
        it += 1;
        (cost, grad) = eval(&params)?;
    }
    if !cost.is_finite() {
        return Err(Error::Numerical(format!("cost diverged at iteration {it}")));
    }
    costs.push((it, cost));
    let state = obj.compiled.state(&params)?;
    Ok(RunTrace {
        costs,
        phase2_start,
        energy: real_expectation(&obj.h, &state)?,
        grad_norm: l2(&grad) * a,
        params,
        cost,
        state,
    })
}

fn seeded_start(n: usize, seed: u64) -> Vec<f64> {
    random_params(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Ground state from a seeded random start.
pub fn run_vqe(c: &Circuit, sector: &SectorBasis, h: &PauliSum, cfg: &OptimizerConfig) -> Result<RunTrace> {
    let obj = Objective::new(c, sector, h, DeflationSet::default())?;
    optimize(&obj, seeded_start(obj.n_params(), cfg.seed), cfg)
}

/// Penalty strengths per level as given in the literature runs: `[[10], [30, 20]]`.
pub fn default_betas() -> Vec<Vec<f64>> {
    vec![vec![10.0], vec![30.0, 20.0]]
}

/// Ground state followed by `k` deflated levels. `betas[i]` holds the
/// strengths for level `i + 1` against levels `0..=i`.
pub fn run_vqd(
    c: &Circuit,
    sector: &SectorBasis,
    h: &PauliSum,
    k: usize,
    vqe_cfg: &OptimizerConfig,
    vqd_cfg: &OptimizerConfig,
    betas: &[Vec<f64>],
) -> Result<Vec<RunTrace>> {
    if k == 0 {
        return Err(Error::Invalid("at least one excited level is required".into()));
    }
    if betas.len() < k || betas.iter().take(k).enumerate().any(|(i, b)| b.len() != i + 1) {
        return Err(Error::Invalid(format!("level i needs i penalty strengths; got {betas:?} for {k} levels")));
    }
    let mut traces = vec![run_vqe(c, sector, h, vqe_cfg)?];
    for level in 1..=k {
        let mut d = DeflationSet::default();
        for (t, &b) in traces.iter().zip(&betas[level - 1]) {
            d.push(Some(t.params.clone()), t.state.clone(), b)?;
        }
        let obj = Objective::new(c, sector, h, d)?;
        let cfg = OptimizerConfig {
            seed: vqd_cfg.seed.wrapping_add(level as u64),
            ..*vqd_cfg
        };
        let t = optimize(&obj, seeded_start(obj.n_params(), cfg.seed), &cfg)?;
        check_crossing(level, t.energy, &traces)?;
        traces.push(t);
    }
    Ok(traces)
}

/// A deflated run landing below an earlier level means its β was too weak.
pub fn check_crossing(level: usize, energy: f64, earlier: &[RunTrace]) -> Result<()> {
    for (j, t) in earlier.iter().enumerate() {
        if energy < t.energy - CROSSING_TOL {
            return Err(Error::Numerical(format!(
                "level {level} converged to {energy:.8}, below level {j} at {:.8}: penalty strength insufficient",
                t.energy
            )));
        }
    }
    Ok(())
}

/// `|<prepared_k|exact_j>|²`.
pub fn overlap_matrix(prepared: &[Vec<C64>], exact: &[Vec<C64>]) -> Result<DMatrix<f64>> {
    if prepared.len() != exact.len() {
        return Err(Error::Invalid(format!("{} prepared vs {} exact states", prepared.len(), exact.len())));
    }
    Ok(DMatrix::from_fn(prepared.len(), exact.len(), |r, c| inner(&prepared[r], &exact[c]).norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fig1_circuit;
    use crate::fuzzy::{solve_model, ModelParams, REFERENCE_ED_N4};
    use crate::gates::GateKind;
    use crate::pauli::{Pauli, PauliString};
    use crate::sector::{enumerate_sector, SectorSpec};
    use proptest::prelude::*;

    fn fuzzy_setup() -> (Circuit, SectorBasis, PauliSum) {
        let sol = solve_model(&ModelParams::critical_n4()).unwrap();
        (fig1_circuit(), sol.sector, sol.hamiltonian)
    }

    #[test]
    fn adam_three_steps_by_hand() {
        // f(x) = x², x0 = 1, step 0.1.
        let mut x = [1.0];
        let mut adam = Adam::new(1, 0.1, AdamParams::default());
        let mut want = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=3 {
            let g = 2.0 * x[0];
            adam.update(&mut x, &[g]);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            want -= 0.1 * mh / (vh.sqrt() + 1e-8);
            assert!((x[0] - want).abs() < 1e-15);
        }
        // Evaluated independently: 0.9000000005, 0.80041222869, 0.70158627295.
        assert!((x[0] - 0.70158627294603).abs() < 1e-13);
        let mut y = [1.0];
        Adam::new(1, 0.1, AdamParams::default()).update(&mut y, &[2.0]);
        assert!((y[0] - 0.9000000005).abs() < 1e-15);
    }

    #[test]
    fn energy_matches_dense_oracle() {
        let (c, s, h) = fuzzy_setup();
        let full = h.to_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let p = random_params(&mut rng, c.n_params);
            let psi = crate::circuit::apply_circuit(&c, &p).unwrap();
            let want = inner(&psi, &matvec(&full, &psi)).re;
            assert!((energy_cost(&c, &s, &p, &h).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_hamiltonian_gives_one() {
        let (c, s, _) = fuzzy_setup();
        let id = PauliSum::identity(8);
        let p = seeded_start(c.n_params, 1);
        assert!((energy_cost(&c, &s, &p, &id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let (c, s, _) = fuzzy_setup();
        let bad = PauliSum::identity(8).scale(C64::new(0.0, 1.0));
        assert!(energy_cost(&c, &s, &vec![0.0; c.n_params], &bad).is_err());
    }

    #[test]
    fn penalty_terms() {
        let (c, s, h) = fuzzy_setup();
        let p = seeded_start(c.n_params, 9);
        let e = energy_cost(&c, &s, &p, &h).unwrap();
        assert_eq!(vqd_cost(&c, &s, &p, &h, &DeflationSet::default()).unwrap(), e);
        let psi = apply(&c, &s, &p);
        let mut d = DeflationSet::default();
        d.push(Some(p.clone()), psi, 10.0).unwrap();
        assert!((vqd_cost(&c, &s, &p, &h, &d).unwrap() - (e + 10.0)).abs() < 1e-10);
        assert!(d.push(None, vec![C64::new(2.0, 0.0)], 1.0).is_err());
        assert!(DeflationSet::default().push(None, vec![C64::new(1.0, 0.0)], 0.0).is_err());
    }

    fn apply(c: &Circuit, s: &SectorBasis, p: &[f64]) -> Vec<C64> {
        Compiled::on_sector(c, s).unwrap().state(p).unwrap()
    }

    #[test]
    fn single_gate_closed_form() {
        // G2 on |01>: amplitudes ±cos θ, ±sin θ on |01>, |10>; with qubit 0
        // the high bit, <Z_0> = cos²θ − sin²θ = cos 2θ.
        let mut c = Circuit::new(2, 0b01);
        c.push_new(GateKind::G2, &[0, 1]).unwrap();
        let s = enumerate_sector(&SectorSpec::hamming(2, 1)).unwrap();
        let h = PauliSum::from_string(PauliString::single(2, 0, Pauli::Z));
        let obj = Objective::new(&c, &s, &h, DeflationSet::default()).unwrap();
        for &t in &[0.0, 0.3, 1.1, -2.0] {
            let (v, g) = obj.value_and_gradient(&[t]).unwrap();
            assert!((v - (2.0 * t).cos()).abs() < 1e-12);
            assert!((g[0] + 2.0 * (2.0 * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_vqe_matches_scan() {
        // H = −Z0 Z1 on the weight-1 sector is +1 everywhere: trivially flat.
        // Use −X0X1 − Y0Y1 instead, whose sector minimum is −2.
        let mut c = Circuit::new(2, 0b01);
        c.push_new(GateKind::G2, &[0, 1]).unwrap();
        let s = enumerate_sector(&SectorSpec::hamming(2, 1)).unwrap();
        let h = PauliSum::from_words(2, &[(C64::new(-1.0, 0.0), "XX"), (C64::new(-1.0, 0.0), "YY")]).unwrap();
        let obj = Objective::new(&c, &s, &h, DeflationSet::default()).unwrap();
        let scan = (0..=20000)
            .map(|i| obj.value(&[-std::f64::consts::PI + i as f64 * std::f64::consts::TAU / 20000.0]).unwrap())
            .fold(f64::INFINITY, f64::min);
        let t = run_vqe(&c, &s, &h, &OptimizerConfig::vqe(2)).unwrap();
        assert!((t.cost - scan).abs() < 1e-7);
        assert!((t.cost + 2.0).abs() < 1e-9);

        let zz = PauliSum::from_string(PauliString::from_letters(2, &[(0, Pauli::Z), (1, Pauli::Z)])).scale_re(-1.0);
        let t = run_vqe(&c, &s, &zz, &OptimizerConfig::vqe(2)).unwrap();
        assert!((t.cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_stops_at_once() {
        let (c, s, _) = fuzzy_setup();
        let t = run_vqe(&c, &s, &PauliSum::zero(8), &OptimizerConfig::vqe(0)).unwrap();
        assert_eq!(t.costs, vec![(0, 0.0)]);
    }

    #[test]
    fn trace_format() {
        let t = RunTrace {
            costs: vec![(0, 1.0), (1, 0.5), (2, 0.25)],
            phase2_start: Some(2),
            params: vec![],
            cost: 0.25,
            energy: 0.25,
            grad_norm: 0.0,
            state: vec![],
        };
        let mut out = Vec::new();
        t.write_dat(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(2), Some("# phase2 2"));
        assert!(text.starts_with("0 1.00000000000000000e0\n"));
    }

    #[test]
    fn vqe_reaches_ground_energy() {
        let (c, s, h) = fuzzy_setup();
        let t = run_vqe(&c, &s, &h, &OptimizerConfig::vqe(3)).unwrap();
        assert!((t.energy - REFERENCE_ED_N4[0]).abs() < 1e-5, "{t}");
        let e0 = solve_model(&ModelParams::critical_n4()).unwrap().spectrum.energies[0];
        assert!(t.costs.iter().all(|&(_, e)| e >= e0 - 1e-9));
        assert!(t.costs.windows(2).all(|w| w[0].0 < w[1].0));
        let tail = &t.costs[t.costs.len().saturating_sub(51)..];
        assert!(tail.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        let again = run_vqe(&c, &s, &h, &OptimizerConfig::vqe(3)).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn gradient_vanishes_at_eigenstate() {
        let (c, s, h) = fuzzy_setup();
        let t = run_vqe(&c, &s, &h, &OptimizerConfig::vqe(5)).unwrap();
        let obj = Objective::new(&c, &s, &h, DeflationSet::default()).unwrap();
        let (_, g) = obj.value_and_gradient(&t.params).unwrap();
        assert!(l2(&g) < 1e-7, "{}", l2(&g));
    }

    #[test]
    fn overlap_matrix_cases() {
        let e = |i: usize| (0..3).map(|k| C64::new((k == i) as u8 as f64, 0.0)).collect::<Vec<_>>();
        let exact = vec![e(0), e(1), e(2)];
        assert_eq!(overlap_matrix(&exact, &exact).unwrap(), DMatrix::identity(3, 3));
        let wrong = vec![e(1), e(1), e(2)];
        assert_eq!(overlap_matrix(&wrong, &exact).unwrap()[(0, 0)], 0.0);
        assert!(overlap_matrix(&exact[..2], &exact).is_err());
    }

    #[test]
    fn crossing_detection() {
        let t = RunTrace {
            costs: vec![],
            phase2_start: None,
            params: vec![],
            cost: -1.0,
            energy: -1.0,
            grad_norm: 0.0,
            state: vec![],
        };
        assert!(check_crossing(1, -2.0, &[t.clone()]).is_err());
        assert!(check_crossing(1, -1.0 - 1e-7, &[t]).is_ok());
    }

    #[test]
    fn vqd_argument_checks() {
        let (c, s, h) = fuzzy_setup();
        let cfg = OptimizerConfig::vqe(0);
        assert!(run_vqd(&c, &s, &h, 0, &cfg, &cfg, &default_betas()).is_err());
        assert!(run_vqd(&c, &s, &h, 2, &cfg, &cfg, &[vec![10.0]]).is_err());
        assert!(run_vqd(&c, &s, &h, 1, &cfg, &cfg, &[vec![10.0, 1.0]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn gradient_matches_finite_differences(seed in 0u64..1000) {
            let (c, s, h) = fuzzy_setup();
            let mut d = DeflationSet::default();
            let q = seeded_start(c.n_params, seed + 7);
            d.push(Some(q.clone()), apply(&c, &s, &q), 10.0).unwrap();
            let obj = Objective::new(&c, &s, &h, d).unwrap();
            let p = seeded_start(c.n_params, seed);
            let (_, g) = obj.value_and_gradient(&p).unwrap();
            for k in 0..p.len() {
                let mut a = p.clone();
                let mut b = p.clone();
                a[k] += 1e-5;
                b[k] -= 1e-5;
                let fd = (obj.value(&a).unwrap() - obj.value(&b).unwrap()) / 2e-5;
                prop_assert!((fd - g[k]).abs() < 1e-6, "param {}: {} vs {}", k, fd, g[k]);
            }
        }
    }
}
