//! Functional square roots of circle diffeomorphisms, solved on lifts.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{orientation_class, Diffeo, OrientationClass};
use crate::error::{Error, Result};
use crate::lift::CircleLift;
use crate::manifold::{circle_grid, distance, unit_diff, ManifoldId, Point};
use crate::report::VerificationReport;

use super::verify::{verify_all, VerifySettings};
use super::{Provenance, RootSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtSettings {
    /// Lift nodes.
    pub nodes: usize,
    /// Bound on `sup |g(g(p)) - f(p)|` over the verification grid, radians.
    pub tol: f64,
    /// Newton stops once the nodal residual (turns) is below this.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Size of the shifted verification grid.
    pub verify_points: usize,
}

impl Default for SqrtSettings {
    fn default() -> Self {
        SqrtSettings {
            nodes: 1024,
            tol: 1e-8,
            newton_tol: 1e-14,
            max_iters: 40,
            verify_points: 997,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SqrtSolution {
    pub root: Diffeo,
    /// `sup |g(g(p)) - f(p)|` on the verification grid, radians.
    pub residual: f64,
    /// Largest nodal residual per Newton iterate, radians.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolvedChain {
    pub system: RootSystem,
    /// Verification residual of each level, as `(b, residual)`.
    pub levels: Vec<(u64, f64)>,
    pub report: VerificationReport,
}

/// Verification grid for the solver: `n` angles offset by half a cell.
pub fn verification_grid(n: usize) -> Vec<Point> {
    circle_grid(n, 0.5)
}

/// Lift values of `f` at `k/n`, normalized so `F(0) ∈ [0, 1)`.
fn sample_lift(f: &Diffeo, n: usize) -> Result<Vec<f64>> {
    let turns: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let p = Point::Circle(TAU * k as f64 / n as f64);
            Ok(f.apply(&p)?.as_angle().unwrap_or(f64::NAN) / TAU)
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    out.push(turns[0]);
    for k in 1..n {
        let prev = out[k - 1];
        out.push(prev + unit_diff(turns[k - 1], turns[k]));
    }
    Ok(out)
}

fn nodal_residual(y: &[f64], target: &[f64]) -> Result<(CircleLift, Vec<f64>)> {
    let lift = CircleLift::from_samples(y.to_vec())?;
    let r = y
        .iter()
        .zip(target)
        .map(|(yk, fk)| Ok(lift.eval(*yk)? - fk))
        .collect::<Result<Vec<f64>>>()?;
    Ok((lift, r))
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Keeps node values strictly increasing with `y[N-1] < y[0] + 1`.
fn project_monotone(y: &mut [f64]) {
    let n = y.len();
    let gap = 1e-6 / n as f64;
    for k in 1..n {
        if y[k] < y[k - 1] + gap {
            y[k] = y[k - 1] + gap;
        }
    }
    let last = y[0] + 1.0 - gap;
    for k in (1..n).rev() {
        let cap = if k + 1 < n { y[k + 1] - gap } else { last };
        if y[k] > cap {
            y[k] = cap;
        }
    }
}

/// Newton state for the nodal equations `G(G(x_k)) = F(x_k)`.
struct Newton<'a> {
    target: &'a [f64],
    y: Vec<f64>,
    lift: CircleLift,
    r: Vec<f64>,
    err: f64,
}

impl<'a> Newton<'a> {
    fn start(target: &'a [f64], mut y: Vec<f64>) -> Result<Self> {
        project_monotone(&mut y);
        let (lift, r) = nodal_residual(&y, target)?;
        let err = sup_abs(&r);
        Ok(Newton { target, y, lift, r, err })
    }

    /// Runs damped Newton, appending the nodal residual (radians) of every
    /// iterate to `history`.
    fn run(&mut self, settings: &SqrtSettings, history: &mut Vec<f64>) -> Result<()> {
        let n = self.y.len();
        history.push(self.err * TAU);
        for _ in 0..settings.max_iters {
            if self.err <= settings.newton_tol {
                break;
            }
            let mut jac = DMatrix::<f64>::zeros(n, n);
            for k in 0..n {
                let st = CircleLift::stencil(n, self.y[k]);
                for (j, w) in st.idx.iter().zip(st.w) {
                    jac[(k, *j)] += w;
                }
                jac[(k, k)] += self.lift.derivative(self.y[k])?;
            }
            let rhs = DVector::from_iterator(n, self.r.iter().map(|x| -x));
            let Some(step) = jac.lu().solve(&rhs) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-4 {
                let mut trial: Vec<f64> = self.y.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
                project_monotone(&mut trial);
                if let Ok((l2, r2)) = nodal_residual(&trial, self.target) {
                    let e2 = sup_abs(&r2);
                    if e2 < self.err {
                        self.y = trial;
                        self.lift = l2;
                        self.r = r2;
                        self.err = e2;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
            history.push(self.err * TAU);
        }
        Ok(())
    }
}

/// Root guess from the Abel equation `h(F(x)) = h(x) + ρ`, solved as a
/// linear system for the periodic part of `h = x + φ` and `ρ`, with
/// `Σ φ_k = 0`. Then `G = h⁻¹(h + ρ/2)`. `None` when the solution is not
/// an increasing lift.
fn abel_guess(target: &[f64]) -> Option<Vec<f64>> {
    let n = target.len();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut b = DVector::<f64>::zeros(n + 1);
    for k in 0..n {
        let st = CircleLift::stencil(n, target[k]);
        for (j, w) in st.idx.iter().zip(st.w) {
            a[(k, *j)] += w;
        }
        a[(k, k)] -= 1.0;
        a[(k, n)] = -1.0;
        b[k] = k as f64 / n as f64 - target[k];
    }
    for j in 0..n {
        a[(n, j)] = 1.0;
    }
    let sol = a.lu().solve(&b)?;
    let rho = sol[n];
    let h: Vec<f64> = (0..n).map(|k| k as f64 / n as f64 + sol[k]).collect();
    let hl = CircleLift::from_samples(h.clone()).ok()?;
    h.iter().map(|v| hl.inverse_eval(v + 0.5 * rho).ok()).collect()
}

/// Damped Newton for `G(G(x_k)) = F(x_k)` on the lift nodes `x_k = k/N`;
/// the unknowns are the node values of `G`, kept increasing after every
/// step. Starts from `G₀ = (x + F)/2`. If Newton stalls there (typical when
/// the rotation number of `f` is close to a rational with small
/// denominator), it restarts from the Abel-equation guess. The residual
/// reported is recomputed on a shifted grid that the solver never sees.
pub fn solve_functional_sqrt(f: &Diffeo, settings: &SqrtSettings) -> Result<SqrtSolution> {
    f.manifold().ensure_same(ManifoldId::Circle)?;
    let n = settings.nodes;
    if n < 8 {
        return Err(Error::InvalidArgument("the solver needs at least 8 lift nodes".into()));
    }
    let check_grid = circle_grid(n.min(512), 0.25);
    match orientation_class(f, &check_grid)? {
        OrientationClass::PreservingDegree1 => {}
        other => return Err(Error::NotDegreeOne(other.to_string())),
    }
    let target = sample_lift(f, n)?;
    let midpoint: Vec<f64> = target
        .iter()
        .enumerate()
        .map(|(k, fk)| 0.5 * (k as f64 / n as f64 + fk))
        .collect();
    let mut history = Vec::new();
    let mut newton = Newton::start(&target, midpoint)?;
    newton.run(settings, &mut history)?;
    if newton.err > settings.newton_tol.max(1e-12) {
        if let Some(guess) = abel_guess(&target) {
            let mut second = Newton::start(&target, guess)?;
            second.run(settings, &mut history)?;
            if second.err < newton.err {
                newton = second;
            }
        }
    }

    let root = Diffeo::circle_lifted(newton.lift);
    let grid = verification_grid(settings.verify_points);
    let residual = grid
        .par_iter()
        .map(|p| Ok(distance(&root.apply(&root.apply(p)?)?, &f.apply(p)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if !(residual <= settings.tol) {
        return Err(Error::SolverFailure {
            residual,
            tolerance: settings.tol,
            history,
        });
    }
    Ok(SqrtSolution {
        root,
        residual,
        history,
    })
}

/// `g_2 = √f`, `g_{2^{c+1}} = √g_{2^c}` for `c < depth`, verified with
/// `verify` on the solver's shifted verification grid.
pub fn solve_sqrt_chain(
    f: &Diffeo,
    depth: u32,
    settings: &SqrtSettings,
    verify: &VerifySettings,
) -> Result<SolvedChain> {
    if depth < 1 {
        return Err(Error::InvalidArgument("chain depth must be at least 1".into()));
    }
    let mut roots: Vec<(u64, Diffeo)> = Vec::new();
    let mut levels = Vec::new();
    let mut current = f.clone();
    for c in 1..=depth {
        match solve_functional_sqrt(&current, settings) {
            Ok(sol) => {
                let b = 1u64 << c;
                levels.push((b, sol.residual));
                roots.push((b, sol.root.clone()));
                current = sol.root;
            }
            Err(e) => {
                return Err(Error::ChainAborted {
                    level: c,
                    partial: roots,
                    source: Box::new(e),
                })
            }
        }
    }
    let system = RootSystem::new(f.clone(), roots, Provenance::SolvedSqrtChain)?;
    let report = verify_all(&system, &verification_grid(settings.verify_points), verify);
    Ok(SolvedChain {
        system,
        levels,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::sup_distance;
    use crate::field::{AnalyticField, IntegratorSettings, VectorField};
    use std::sync::Arc;

    fn perturbed() -> Arc<VectorField> {
        Arc::new(
            AnalyticField::CircleFourier {
                mean: std::f64::consts::PI,
                cos: vec![],
                sin: vec![0.3],
            }
            .into(),
        )
    }

    #[test]
    fn rotation_halves() {
        let sol = solve_functional_sqrt(&Diffeo::CircleRotation(1.0), &SqrtSettings::default()).unwrap();
        let grid = verification_grid(997);
        let d = sup_distance(&sol.root, &Diffeo::CircleRotation(0.5), &grid).unwrap();
        assert!(d <= 1e-8, "{d}");
        assert!(sol.residual <= 1e-8);
    }

    #[test]
    fn identity_root_is_identity() {
        let sol = solve_functional_sqrt(&Diffeo::identity(ManifoldId::Circle), &SqrtSettings::default()).unwrap();
        let grid = verification_grid(997);
        let d = sup_distance(&sol.root, &Diffeo::identity(ManifoldId::Circle), &grid).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn half_time_flow_is_recovered() {
        let field = perturbed();
        let f = Diffeo::flow_time(field.clone(), 1.0, IntegratorSettings::default());
        let sol = solve_functional_sqrt(&f, &SqrtSettings::default()).unwrap();
        let half = Diffeo::flow_time(field, 0.5, IntegratorSettings::with_step(1e-4));
        let d = sup_distance(&sol.root, &half, &verification_grid(997)).unwrap();
        assert!(d <= 1e-6, "{d}");
        assert!(sol.history.len() >= 2);
    }

    #[test]
    fn reflection_is_rejected_up_front() {
        let err = solve_functional_sqrt(&Diffeo::CircleReflection, &SqrtSettings::default()).unwrap_err();
        assert!(matches!(err, Error::NotDegreeOne(ref s) if s == "degree -1"), "{err}");
        let err = solve_sqrt_chain(&Diffeo::CircleReflection, 2, &SqrtSettings::default(), &VerifySettings::default())
            .unwrap_err();
        assert!(matches!(err, Error::ChainAborted { level: 1, .. }));
    }

    #[test]
    fn rotation_chain_passes_all_conditions() {
        let chain = solve_sqrt_chain(
            &Diffeo::CircleRotation(1.0),
            4,
            &SqrtSettings::default(),
            &VerifySettings::with_tol(1e-8),
        )
        .unwrap();
        let grid = verification_grid(997);
        for (c, (b, _)) in chain.levels.iter().enumerate() {
            let expect = Diffeo::CircleRotation(1.0 / 2f64.powi(c as i32 + 1));
            let d = sup_distance(chain.system.root(*b).unwrap(), &expect, &grid).unwrap();
            assert!(d <= 1e-8, "{b}: {d}");
        }
        for e in &chain.report.entries {
            assert!(e.passed, "{e:?}");
        }
    }
}
