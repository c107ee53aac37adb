//! Checks of the five root-system conditions and the commute-power lemma.

use serde::{Deserialize, Serialize};

use crate::diffeo::{compose, orientation_class, power, sup_distance_witness, Diffeo, OrientationClass};
use crate::error::Result;
use crate::manifold::Point;
use crate::report::{CheckEntry, TableRow, VerificationReport, Witness};
use crate::richardson::neville_at_zero;

use super::RootSystem;

/// One case `(a₁, b₁, a₂, b₂)` of the lemma
/// `g_{b₂}^{a₂} ∘ g_{b₁}^{a₁} = g_{b₁b₂}^{a₂b₁ + a₁b₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCase {
    pub a1: i64,
    pub b1: u64,
    pub a2: i64,
    pub b2: u64,
}

impl LemmaCase {
    pub const fn new(a1: i64, b1: u64, a2: i64, b2: u64) -> Self {
        LemmaCase { a1, b1, a2, b2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSettings {
    /// Bound on the extrapolated limit `lim δ_b`.
    pub limit_tol: f64,
    /// Bound on the relative error of the `δ_b ≈ K/b` fit.
    pub slope_tol: f64,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        ConvergenceSettings {
            limit_tol: 1e-12,
            slope_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    /// Per-composition tolerance for conditions 2 to 4.
    pub tol: f64,
    pub lemma_tol: f64,
    pub convergence: ConvergenceSettings,
    /// Exponents `a` tried against every index `b` for coherency.
    pub coherency_exponents: Vec<i64>,
    pub lemma_cases: Vec<LemmaCase>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            tol: 1e-12,
            lemma_tol: 1e-11,
            convergence: ConvergenceSettings::default(),
            coherency_exponents: vec![2, 3, 6, -2],
            lemma_cases: vec![
                LemmaCase::new(1, 2, 1, 4),
                LemmaCase::new(3, 4, 1, 2),
                LemmaCase::new(0, 2, 5, 4),
            ],
        }
    }
}

impl VerifySettings {
    pub fn with_tol(tol: f64) -> Self {
        VerifySettings {
            tol,
            lemma_tol: tol * 10.0,
            convergence: ConvergenceSettings {
                limit_tol: tol,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Running worst case over a sweep of comparisons. Residuals are divided by
/// the composition count of the comparison.
struct Worst {
    scaled: f64,
    raw: f64,
    witness: Option<Witness>,
    cases: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            scaled: 0.0,
            raw: 0.0,
            witness: None,
            cases: 0,
        }
    }

    fn compare(&mut self, lhs: &Diffeo, rhs: &Diffeo, count: u64, grid: &[Point], idx: Vec<i64>) -> Result<()> {
        let (d, at) = sup_distance_witness(lhs, rhs, grid)?;
        let s = d / count.max(1) as f64;
        self.cases += 1;
        self.raw = self.raw.max(d);
        if s > self.scaled || (self.witness.is_none() && !grid.is_empty()) || s.is_nan() {
            self.scaled = s;
            self.witness = grid.get(at).map(|p| Witness::at(p, idx));
        }
        Ok(())
    }

    fn entry(self, check: &str, tol: f64) -> CheckEntry {
        let mut e = CheckEntry::new(check, self.scaled, tol, self.cases);
        e.raw_residual = Some(self.raw);
        if let Some(w) = self.witness {
            e = e.with_witness(w);
        }
        e
    }
}

/// Condition 2: `g_b^b = f` for every index.
pub fn verify_root_property(rs: &RootSystem, grid: &[Point], tol: f64) -> Result<CheckEntry> {
    let f = rs.target();
    let mut w = Worst::new();
    for (b, g) in rs.roots() {
        let a = b as i64;
        w.compare(&power(g, a), f, g.power_composition_count(a), grid, vec![b as i64])?;
    }
    Ok(w.entry("condition-2", tol))
}

/// Condition 3: `g_{b₁} ∘ g_{b₂} = g_{b₂} ∘ g_{b₁}` for all index pairs.
pub fn verify_commutativity(rs: &RootSystem, grid: &[Point], tol: f64) -> Result<CheckEntry> {
    let idx = rs.index_set();
    let mut w = Worst::new();
    for (i, b1) in idx.iter().enumerate() {
        for b2 in &idx[i + 1..] {
            let (g1, g2) = (rs.try_root(*b1)?, rs.try_root(*b2)?);
            w.compare(&compose(g1, g2)?, &compose(g2, g1)?, 1, grid, vec![*b1 as i64, *b2 as i64])?;
        }
    }
    Ok(w.entry("condition-3", tol))
}

/// Condition 4: `g_b^a = g_{b/d}^{a/d}` with `d = gcd(a, b)`, for every
/// index `b` and every exponent in `exponents`. Pairs whose reduced index
/// is missing are listed as untestable.
pub fn verify_coherency(rs: &RootSystem, exponents: &[i64], grid: &[Point], tol: f64) -> Result<CheckEntry> {
    let mut w = Worst::new();
    let mut untestable = Vec::new();
    for (b, g) in rs.roots() {
        for &a in exponents {
            let d = gcd(a.unsigned_abs(), b);
            let (ra, rb) = (a / d as i64, b / d);
            let Some(h) = rs.root(rb) else {
                untestable.push(format!("(a={a}, b={b}) reduces to missing index {rb}"));
                continue;
            };
            let count = g.power_composition_count(a).max(h.power_composition_count(ra));
            w.compare(&power(g, a), &power(h, ra), count, grid, vec![a, b as i64])?;
        }
    }
    let mut e = w.entry("condition-4", tol);
    e.untestable = untestable;
    Ok(e)
}

/// Condition 5: `g_b → id`. Reports the table `(b, δ_b)` with
/// `δ_b = sup_p d(g_b(p), p)`. The residual is the limit of `δ_b` as
/// `1/b → 0`, extrapolated from the top half of the table; the check also
/// requires `δ_b` to decrease strictly there and to follow `K/b` within
/// `slope_tol` relative error.
pub fn verify_convergence_to_identity(
    rs: &RootSystem,
    grid: &[Point],
    settings: &ConvergenceSettings,
) -> Result<CheckEntry> {
    let id = Diffeo::identity(rs.manifold());
    let mut rows = Vec::new();
    for (b, g) in rs.roots() {
        let (d, _) = sup_distance_witness(g, &id, grid)?;
        rows.push((b, d));
    }
    let n = rows.len();
    if n < 3 {
        let mut e = CheckEntry::new("condition-5", f64::INFINITY, settings.limit_tol, n);
        e.passed = false;
        return Ok(e.with_note("at least 3 indices are needed"));
    }
    let top = &rows[n - (n / 2).max(3)..];
    // extrapolate with at most a cubic in 1/b
    let fit_pts = &top[top.len().saturating_sub(4)..];
    let xs: Vec<f64> = fit_pts.iter().map(|(b, _)| 1.0 / *b as f64).collect();
    let ys: Vec<f64> = fit_pts.iter().map(|(_, d)| *d).collect();
    let limit = neville_at_zero(&xs, &ys).abs();

    let increases = top.windows(2).filter(|w| !(w[1].1 < w[0].1)).count();
    // least squares for δ_b ≈ K/b, relative weighting
    let k = top.iter().map(|(b, d)| d * *b as f64).sum::<f64>() / top.len() as f64;
    let fit_err = top
        .iter()
        .map(|(b, d)| {
            let model = k / *b as f64;
            if *d == 0.0 && model == 0.0 {
                0.0
            } else {
                (d - model).abs() / d.abs().max(model.abs())
            }
        })
        .fold(0.0, f64::max);

    let mut e = CheckEntry::new("condition-5", limit, settings.limit_tol, n)
        .with_gate("increasing-steps-in-top-half", increases as f64, 0.0)
        .with_gate("relative-error-of-k-over-b-fit", fit_err, settings.slope_tol)
        .with_note(format!("fitted K = {k:.15e}"));
    e.table = rows
        .iter()
        .map(|(b, d)| TableRow {
            index: *b as i64,
            value: *d,
        })
        .collect();
    Ok(e)
}

/// Condition 1 surrogate: the target and every root must be orientation
/// preserving of degree one.
pub fn verify_isotopy_surrogate(rs: &RootSystem, grid: &[Point]) -> Result<CheckEntry> {
    let mut bad: Vec<(u64, OrientationClass)> = Vec::new();
    let mut cases = 0;
    let maps = std::iter::once((1u64, rs.target())).chain(rs.roots());
    for (b, g) in maps {
        cases += 1;
        let c = orientation_class(g, grid)?;
        if c != OrientationClass::PreservingDegree1 {
            bad.push((b, c));
        }
    }
    let mut e = CheckEntry::new("condition-1", bad.len() as f64, 0.0, cases);
    e.surrogate = true;
    if let Some((b, c)) = bad.first() {
        let mut w = Witness::note(c.to_string());
        w.indices = vec![*b as i64];
        e = e.with_witness(w);
        for (b, c) in &bad {
            e.notes.push(format!("index {b}: {c}"));
        }
    }
    Ok(e)
}

/// `g_{b₂}^{a₂} ∘ g_{b₁}^{a₁}` against `g_{b₁b₂}^{a₂b₁ + a₁b₂}`.
pub fn verify_lemma_commute_power(
    rs: &RootSystem,
    cases: &[LemmaCase],
    grid: &[Point],
    tol: f64,
) -> Result<CheckEntry> {
    let mut w = Worst::new();
    let mut untestable = Vec::new();
    for c in cases {
        let prod = c.b1 * c.b2;
        let (Some(g1), Some(g2), Some(g12)) = (rs.root(c.b1), rs.root(c.b2), rs.root(prod)) else {
            untestable.push(format!(
                "({}, {}, {}, {}) needs indices {}, {} and {}",
                c.a1, c.b1, c.a2, c.b2, c.b1, c.b2, prod
            ));
            continue;
        };
        let e = c.a2 * c.b1 as i64 + c.a1 * c.b2 as i64;
        let lhs = compose(&power(g2, c.a2), &power(g1, c.a1))?;
        let count = g2.power_composition_count(c.a2) + g1.power_composition_count(c.a1) + g12.power_composition_count(e);
        w.compare(&lhs, &power(g12, e), count, grid, vec![c.a1, c.b1 as i64, c.a2, c.b2 as i64])?;
    }
    let mut e = w.entry("lemma", tol);
    e.untestable = untestable;
    Ok(e)
}

/// Conditions 1 to 5 and the lemma, in that order. A check that cannot run
/// is reported as a failed entry carrying the error.
pub fn verify_all(rs: &RootSystem, grid: &[Point], settings: &VerifySettings) -> VerificationReport {
    let mut r = VerificationReport::default();
    let push = |r: &mut VerificationReport, name: &str, res: Result<CheckEntry>| {
        r.push(res.unwrap_or_else(|err| CheckEntry::errored(name, &err)));
    };
    push(&mut r, "condition-1", verify_isotopy_surrogate(rs, grid));
    push(&mut r, "condition-2", verify_root_property(rs, grid, settings.tol));
    push(&mut r, "condition-3", verify_commutativity(rs, grid, settings.tol));
    push(
        &mut r,
        "condition-4",
        verify_coherency(rs, &settings.coherency_exponents, grid, settings.tol),
    );
    push(
        &mut r,
        "condition-5",
        verify_convergence_to_identity(rs, grid, &settings.convergence),
    );
    push(
        &mut r,
        "lemma",
        verify_lemma_commute_power(rs, &settings.lemma_cases, grid, settings.lemma_tol),
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{sample_grid, ManifoldId};
    use crate::quat::Quat;
    use crate::rootsystem::{quat_sqrt_chain, Provenance};
    use std::f64::consts::PI;

    fn circle256() -> Vec<Point> {
        sample_grid(ManifoldId::Circle, 256, 0).unwrap()
    }

    #[test]
    fn rotation_family_passes_everything() {
        let rs = RootSystem::rotation_family(PI, 20);
        let r = verify_all(&rs, &circle256(), &VerifySettings::default());
        for e in &r.entries {
            assert!(e.passed, "{e:?}");
        }
        let c5 = r.get("condition-5").unwrap();
        assert_eq!(c5.table.len(), 20);
        assert!((c5.table[0].value - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_system_has_zero_residual() {
        let id = Diffeo::identity(ManifoldId::Circle);
        let rs = RootSystem::new(id.clone(), vec![(2, id.clone()), (4, id)], Provenance::Analytic).unwrap();
        let e = verify_root_property(&rs, &circle256(), 1e-12).unwrap();
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn perturbed_square_root_fails() {
        let rs = RootSystem::rotation_family(PI, 4)
            .with_root(2, Diffeo::CircleRotation(PI / 2.0 + 0.01))
            .unwrap();
        let e = verify_root_property(&rs, &circle256(), 1e-12).unwrap();
        assert!(!e.passed);
        assert!((e.raw_residual.unwrap() - 0.02).abs() < 1e-12);
        assert_eq!(e.witness.unwrap().indices, vec![2]);
    }

    #[test]
    fn mixed_axes_do_not_commute() {
        let gi = Diffeo::QuatLeftMult(Quat::I);
        let uj = Quat::J.principal_sqrt().unwrap();
        let rs = RootSystem::new(
            Diffeo::QuatLeftMult(-Quat::ONE),
            vec![(2, gi), (4, Diffeo::QuatLeftMult(uj))],
            Provenance::Analytic,
        )
        .unwrap();
        let grid = sample_grid(ManifoldId::Sphere3, 64, 1).unwrap();
        let e = verify_commutativity(&rs, &grid, 1e-12).unwrap();
        assert!(e.residual > 0.1 && !e.passed);
        let chain = quat_sqrt_chain(Quat::I, 8).unwrap();
        assert!(verify_commutativity(&chain, &grid, 1e-12).unwrap().passed);
    }

    #[test]
    fn broken_coherency_is_detected() {
        let rs = RootSystem::rotation_family(PI, 6)
            .with_root(4, Diffeo::CircleRotation(PI / 4.0 + 0.05))
            .unwrap();
        let e = verify_coherency(&rs, &[2], &circle256(), 1e-12).unwrap();
        assert!(!e.passed);
        assert!((e.residual - 0.1).abs() < 1e-12, "{}", e.residual);
        assert_eq!(e.witness.unwrap().indices, vec![2, 4]);
    }

    #[test]
    fn coherency_reports_missing_reduced_index() {
        let rs = RootSystem::new(
            Diffeo::CircleRotation(PI),
            vec![(4, Diffeo::CircleRotation(PI / 4.0))],
            Provenance::Analytic,
        )
        .unwrap();
        let e = verify_coherency(&rs, &[2], &circle256(), 1e-12).unwrap();
        assert_eq!(e.untestable.len(), 1);
        assert!(e.passed);
    }

    #[test]
    fn chain_coherency_and_lemma() {
        let rs = quat_sqrt_chain(Quat::I, 20).unwrap();
        let grid = sample_grid(ManifoldId::Sphere3, 64, 2).unwrap();
        let e = verify_coherency(&rs, &[2], &grid, 1e-12).unwrap();
        assert!(e.passed, "{e:?}");
        let l = verify_lemma_commute_power(&rs, &[LemmaCase::new(1, 2, 3, 4)], &grid, 1e-11).unwrap();
        assert!(l.raw_residual.unwrap() <= 1e-11, "{l:?}");
    }

    #[test]
    fn lemma_cases_for_rotations() {
        let rs = RootSystem::rotation_family(PI, 4);
        let cases = [LemmaCase::new(1, 2, 1, 4), LemmaCase::new(0, 2, 0, 4), LemmaCase::new(1, 4, 1, 8)];
        let e = verify_lemma_commute_power(&rs, &cases, &circle256(), 1e-11).unwrap();
        assert!(e.passed);
        assert_eq!(e.cases_checked, 2);
        assert_eq!(e.untestable.len(), 1);
    }

    #[test]
    fn convergence_tables() {
        let chain = quat_sqrt_chain(Quat::new(0.0, 0.0, 0.6, 0.8), 20).unwrap();
        let grid = sample_grid(ManifoldId::Sphere3, 32, 0).unwrap();
        let e = verify_convergence_to_identity(&chain, &grid, &ConvergenceSettings::default()).unwrap();
        assert!(e.passed, "{e:?}");
        for row in &e.table {
            assert!((row.value - PI / row.index as f64).abs() < 1e-12);
        }
        let stuck = RootSystem::new(
            Diffeo::CircleRotation(0.3 * 8.0),
            (1..=6).map(|c| (1u64 << c, Diffeo::CircleRotation(0.3))).collect(),
            Provenance::Analytic,
        )
        .unwrap();
        let e = verify_convergence_to_identity(&stuck, &circle256(), &ConvergenceSettings::default()).unwrap();
        assert!(!e.passed);
        assert!(e.gates.iter().any(|g| !g.passed));
    }

    #[test]
    fn reflection_fails_surrogate_with_degree_witness() {
        let rs = RootSystem::new(
            Diffeo::CircleReflection,
            vec![(2, Diffeo::CircleRotation(PI / 2.0))],
            Provenance::Analytic,
        )
        .unwrap();
        let e = verify_isotopy_surrogate(&rs, &circle256()).unwrap();
        assert!(!e.passed && e.surrogate);
        assert_eq!(e.witness.unwrap().note.as_deref(), Some("degree -1"));
        let chain = quat_sqrt_chain(Quat::K, 6).unwrap();
        let grid = sample_grid(ManifoldId::Sphere3, 32, 0).unwrap();
        assert!(verify_isotopy_surrogate(&chain, &grid).unwrap().passed);
    }
}
