//! Intertwining checks `k·DP∘ξ₁ = ξ₂∘P` between embeddings of one map,
//! their integrated form on flows, and closure of candidate symmetry sets.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::diffeo::{argmax, compose, sup_distance, Isometry, IsometrySpec};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::FlowApprox;
use crate::manifold::{distance, Point, Tangent};
use crate::quat::Quat;
use crate::report::{CheckEntry, Witness};

/// Largest integer scale tried by [`fit_scale`].
pub const K_MAX: u32 = 8;

#[derive(Debug, Clone)]
pub struct IntertwineCase {
    pub p: Isometry,
    pub xi1: Arc<VectorField>,
    pub xi2: Arc<VectorField>,
    pub k: f64,
}

impl IntertwineCase {
    pub fn new(p: Isometry, xi1: Arc<VectorField>, xi2: Arc<VectorField>, k: f64) -> Result<Self> {
        let m = p.manifold();
        m.ensure_same(xi1.manifold())?;
        m.ensure_same(xi2.manifold())?;
        if !(k > 0.0) {
            return Err(Error::InvalidArgument("scale k must be positive".into()));
        }
        Ok(IntertwineCase { p, xi1, xi2, k })
    }
}

/// `(DP·ξ₁(p), ξ₂(P(p)))` at one point, both based at `P(p)`.
fn pushed_pair(p_map: &Isometry, xi1: &VectorField, xi2: &VectorField, p: &Point) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = Tangent::projected(p.clone(), xi1.eval(p)?)?;
    let pushed = p_map.differential(&v)?;
    let target = xi2.tangent_at(&pushed.base)?;
    Ok((pushed.vec.components(), target.vec.components()))
}

fn pointwise_residuals(case: &IntertwineCase, k: f64, grid: &[Point]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|p| {
            let (a, b) = pushed_pair(&case.p, &case.xi1, &case.xi2, p)?;
            Ok(a.iter().zip(&b).map(|(x, y)| (k * x - y).powi(2)).sum::<f64>().sqrt())
        })
        .collect()
}

/// `sup_p ‖k·DP(ξ₁(p)) − ξ₂(P(p))‖`.
pub fn check_intertwine(case: &IntertwineCase, grid: &[Point], tol: f64) -> Result<CheckEntry> {
    let r = pointwise_residuals(case, case.k, grid)?;
    let (m, i) = argmax(&r);
    let mut e = CheckEntry::new("intertwine", m, tol, grid.len());
    if let Some(p) = grid.get(i) {
        e = e.with_witness(Witness::at(p, vec![]));
    }
    Ok(e)
}

/// Scale found by [`fit_scale`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFit {
    pub k: f64,
    /// Whether `k` is one of `1..=K_MAX`.
    pub integer: bool,
    pub residual: f64,
}

/// Tries `k = 1..=K_MAX`; if none reaches `tol`, falls back to the
/// least-squares `k` over the grid.
pub fn fit_scale(case: &IntertwineCase, grid: &[Point], tol: f64) -> Result<ScaleFit> {
    let mut best = ScaleFit {
        k: 1.0,
        integer: true,
        residual: f64::INFINITY,
    };
    for k in 1..=K_MAX {
        let r = argmax(&pointwise_residuals(case, k as f64, grid)?).0;
        if r < best.residual {
            best = ScaleFit {
                k: k as f64,
                integer: true,
                residual: r,
            };
        }
    }
    if best.residual <= tol {
        return Ok(best);
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = grid
        .par_iter()
        .map(|p| pushed_pair(&case.p, &case.xi1, &case.xi2, p))
        .collect::<Result<_>>()?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in &pairs {
        num += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        den += a.iter().map(|x| x * x).sum::<f64>();
    }
    if den > 0.0 {
        let k = num / den;
        let r = argmax(&pointwise_residuals(case, k, grid)?).0;
        if r < best.residual {
            best = ScaleFit {
                k,
                integer: false,
                residual: r,
            };
        }
    }
    Ok(best)
}

/// Unit quaternion `r` with `r q₁ r⁻¹ = q₂` for imaginary unit `q₁, q₂`:
/// `r = normalize(1 − q₂q₁)`, the rotation in the plane of `q₁, q₂`.
pub fn conjugating_rotor(q1: Quat, q2: Quat) -> Result<Quat> {
    for q in [q1, q2] {
        if !q.is_finite() || q.w.abs() > 1e-12 || (q.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidQuaternion(format!(
                "{q:?} is not a purely imaginary unit quaternion"
            )));
        }
    }
    let s = Quat::ONE - q2 * q1;
    if s.norm() < 1e-8 {
        return Err(Error::AntipodalAxis);
    }
    let r = s.normalize();
    let err = (r * q1 * r.conj() - q2).norm();
    if err > 1e-12 {
        return Err(Error::InvalidQuaternion(format!(
            "rotor check failed with error {err:e}"
        )));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureEntry {
    pub a: usize,
    pub b: usize,
    /// Index of the element nearest to `P_a ∘ P_b`.
    pub nearest: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupProbeResult {
    pub elements: Vec<IsometrySpec>,
    /// Intertwining residual of each candidate against the base field.
    pub intertwine_residuals: Vec<f64>,
    /// `|elements|²` entries, row-major in `(a, b)`.
    pub closure_table: Vec<ClosureEntry>,
    pub max_residual: f64,
    pub closed: bool,
}

impl GroupProbeResult {
    pub fn entry(&self, tol: f64) -> CheckEntry {
        let worst_intertwine = self.intertwine_residuals.iter().copied().fold(0.0, f64::max);
        let mut e = CheckEntry::new("group-probe", self.max_residual, tol, self.closure_table.len())
            .with_gate("candidate-intertwine-residual", worst_intertwine, tol);
        if let Some(w) = self.closure_table.iter().max_by(|x, y| x.residual.total_cmp(&y.residual)) {
            e = e.with_witness(Witness::note(format!(
                "P{} ∘ P{} nearest to P{}",
                w.a, w.b, w.nearest
            )));
        }
        e
    }
}

/// Composes every ordered pair of candidate symmetries and matches the
/// result to the nearest candidate in sup distance over `grid`.
pub fn probe_group(candidates: &[IntertwineCase], grid: &[Point], tol: f64) -> Result<GroupProbeResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("group probe needs at least one candidate".into()));
    }
    let intertwine_residuals = candidates
        .iter()
        .map(|c| Ok(check_intertwine(c, grid, tol)?.residual))
        .collect::<Result<Vec<f64>>>()?;
    let maps: Vec<_> = candidates.iter().map(|c| c.p.to_diffeo()).collect();
    let mut table = Vec::with_capacity(maps.len() * maps.len());
    for (a, pa) in maps.iter().enumerate() {
        for (b, pb) in maps.iter().enumerate() {
            let prod = compose(pa, pb)?;
            let mut best = (f64::INFINITY, 0);
            for (c, pc) in maps.iter().enumerate() {
                let d = sup_distance(&prod, pc, grid)?;
                if d < best.0 {
                    best = (d, c);
                }
            }
            table.push(ClosureEntry {
                a,
                b,
                nearest: best.1,
                residual: best.0,
            });
        }
    }
    let max_residual = table.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(GroupProbeResult {
        elements: candidates.iter().map(|c| c.p.descriptor()).collect(),
        intertwine_residuals,
        closure_table: table,
        max_residual,
        closed: max_residual <= tol,
    })
}

/// `sup d(P(Ψ¹_{kt}(p)), Ψ²_t(P(p)))` over `times` and `grid`.
pub fn flow_conjugacy_check(
    p_map: &Isometry,
    fa1: &FlowApprox,
    fa2: &FlowApprox,
    k: f64,
    times: &[f64],
    grid: &[Point],
    tol: f64,
    eval_tol: f64,
) -> Result<CheckEntry> {
    let mut worst = 0.0;
    let mut witness = None;
    for (ti, t) in times.iter().enumerate() {
        let d: Vec<f64> = grid
            .par_iter()
            .map(|p| {
                let lhs = p_map.apply(&fa1.eval(k * t, p, eval_tol)?.point)?;
                let rhs = fa2.eval(*t, &p_map.apply(p)?, eval_tol)?.point;
                Ok(distance(&lhs, &rhs))
            })
            .collect::<Result<_>>()?;
        let (m, i) = argmax(&d);
        if m >= worst || witness.is_none() {
            worst = m;
            witness = grid
                .get(i)
                .map(|p| Witness::at(p, vec![ti as i64]).with_note(format!("t = {t}")));
        }
    }
    let mut e = CheckEntry::new("flow-conjugacy", worst, tol, times.len() * grid.len());
    if let Some(w) = witness {
        e = e.with_witness(w);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use crate::manifold::{sample_grid, ManifoldId};
    use crate::rootsystem::{quat_sqrt_chain, RootSystem};
    use std::f64::consts::PI;

    fn constant(k: f64) -> Arc<VectorField> {
        Arc::new(AnalyticField::ConstantCircle { k }.into())
    }

    fn left_inv(q: Quat) -> Arc<VectorField> {
        Arc::new(AnalyticField::LeftInvariantS3 { omega: q.scale(PI) }.into())
    }

    #[test]
    fn reflection_intertwines_opposite_rotations() {
        let grid = sample_grid(ManifoldId::Circle, 256, 0).unwrap();
        let case = IntertwineCase::new(Isometry::CircleReflection, constant(PI), constant(-PI), 1.0).unwrap();
        let e = check_intertwine(&case, &grid, 1e-12).unwrap();
        assert_eq!(e.residual, 0.0);
        let same = IntertwineCase::new(Isometry::Identity(ManifoldId::Circle), constant(PI), constant(PI), 1.0).unwrap();
        assert_eq!(check_intertwine(&same, &grid, 0.0).unwrap().residual, 0.0);
    }

    #[test]
    fn rotor_examples() {
        assert_eq!(conjugating_rotor(Quat::I, Quat::I).unwrap(), Quat::ONE);
        let r = conjugating_rotor(Quat::I, Quat::J).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-15);
        assert!((r * Quat::I * r.conj() - Quat::J).norm() < 1e-15);
        assert!(matches!(conjugating_rotor(Quat::I, -Quat::I), Err(Error::AntipodalAxis)));
        let a = Quat::new(0.0, 0.36, 0.48, 0.8);
        let b = Quat::new(0.0, -0.6, 0.0, 0.8);
        let r = conjugating_rotor(a, b).unwrap();
        assert!((r * a * r.conj() - b).norm() < 1e-12);
    }

    #[test]
    fn conjugation_intertwines_left_invariant_fields() {
        let grid = sample_grid(ManifoldId::Sphere3, 64, 0).unwrap();
        let r = conjugating_rotor(Quat::I, Quat::J).unwrap();
        let case = IntertwineCase::new(Isometry::QuatConjugation(r), left_inv(Quat::I), left_inv(Quat::J), 1.0).unwrap();
        assert!(check_intertwine(&case, &grid, 1e-12).unwrap().passed);
        // left multiplication by q₂q₁⁻¹ does not
        let lm = IntertwineCase::new(
            Isometry::QuatLeftMult(Quat::J * Quat::I.conj()),
            left_inv(Quat::I),
            left_inv(Quat::J),
            1.0,
        )
        .unwrap();
        assert!(check_intertwine(&lm, &grid, 1e-12).unwrap().residual > 1.0);
    }

    #[test]
    fn scale_search() {
        let grid = sample_grid(ManifoldId::Circle, 32, 0).unwrap();
        let case = IntertwineCase::new(Isometry::CircleReflection, constant(1.0), constant(-3.0), 1.0).unwrap();
        let fit = fit_scale(&case, &grid, 1e-12).unwrap();
        assert_eq!((fit.k, fit.integer), (3.0, true));
        let case = IntertwineCase::new(Isometry::CircleReflection, constant(1.0), constant(-2.5), 1.0).unwrap();
        let fit = fit_scale(&case, &grid, 1e-12).unwrap();
        assert!(!fit.integer && (fit.k - 2.5).abs() < 1e-14 && fit.residual < 1e-14);
    }

    #[test]
    fn group_probes_close() {
        let grid = sample_grid(ManifoldId::Circle, 64, 0).unwrap();
        let id = Isometry::Identity(ManifoldId::Circle);
        let cands = vec![
            IntertwineCase::new(id.clone(), constant(PI), constant(PI), 1.0).unwrap(),
            IntertwineCase::new(Isometry::CircleReflection, constant(PI), constant(-PI), 1.0).unwrap(),
        ];
        let res = probe_group(&cands, &grid, 1e-12).unwrap();
        assert!(res.closed && res.max_residual == 0.0);
        assert_eq!(res.closure_table.len(), 4);
        assert_eq!(res.closure_table[3].nearest, 0);
        let single = probe_group(&cands[..1], &grid, 1e-12).unwrap();
        assert!(single.closed);

        let sg = sample_grid(ManifoldId::Sphere3, 64, 0).unwrap();
        let r = conjugating_rotor(Quat::I, Quat::J).unwrap();
        let rots = [Quat::ONE, r, r.conj(), (r * r).normalize()];
        let cands: Vec<_> = rots
            .iter()
            .map(|s| {
                let q2 = (*s * Quat::I * s.conj()).imag().normalize();
                IntertwineCase::new(Isometry::QuatConjugation(*s), left_inv(Quat::I), left_inv(q2), 1.0).unwrap()
            })
            .collect();
        let res = probe_group(&cands, &sg, 1e-12).unwrap();
        assert!(res.closed, "{}", res.max_residual);
        assert_eq!(res.closure_table.len(), 16);
        let mut rev = cands.clone();
        rev.reverse();
        let res2 = probe_group(&rev, &sg, 1e-12).unwrap();
        assert!((res2.max_residual - res.max_residual).abs() < 1e-15);
        assert!(res.entry(1e-12).passed);
    }

    #[test]
    fn flows_are_conjugated() {
        let grid = sample_grid(ManifoldId::Circle, 64, 0).unwrap();
        let fa1 = FlowApprox::new(Arc::new(RootSystem::rotation_family(PI, 20)));
        let fa2 = FlowApprox::new(Arc::new(RootSystem::rotation_family(-PI, 20)));
        let e = flow_conjugacy_check(&Isometry::CircleReflection, &fa1, &fa2, 1.0, &[0.25, 0.5, 1.0], &grid, 1e-10, 1e-12)
            .unwrap();
        assert!(e.passed, "{e:?}");

        let sg = sample_grid(ManifoldId::Sphere3, 64, 0).unwrap();
        let ci = FlowApprox::new(Arc::new(quat_sqrt_chain(Quat::I, 20).unwrap()));
        let cj = FlowApprox::new(Arc::new(quat_sqrt_chain(Quat::J, 20).unwrap()));
        let r = conjugating_rotor(Quat::I, Quat::J).unwrap();
        let e = flow_conjugacy_check(&Isometry::QuatConjugation(r), &ci, &cj, 1.0, &[0.25, 0.5, 1.0], &sg, 1e-8, 1e-12)
            .unwrap();
        assert!(e.passed, "{e:?}");
        let same = flow_conjugacy_check(&Isometry::Identity(ManifoldId::Sphere3), &ci, &ci, 1.0, &[0.5], &sg, 1e-14, 1e-12)
            .unwrap();
        assert!(same.passed);
    }
}
