//! Root systems to the identity: families `b ↦ g_b` with `g_b^b = f`.
//!
//! Systems are indexed by a cofinal set of positive integers, by default
//! the powers of two `2, 4, …, 2^C`. Index `1` always resolves to the
//! target `f` itself.

mod solver;
mod verify;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::diffeo::Diffeo;
use crate::error::{Error, Result};
use crate::field::{IntegratorSettings, VectorField};
use crate::manifold::ManifoldId;
use crate::quat::Quat;

pub use solver::{
    solve_functional_sqrt, solve_sqrt_chain, verification_grid, SolvedChain, SqrtSettings, SqrtSolution,
};
pub use verify::{
    verify_all, verify_coherency, verify_commutativity, verify_convergence_to_identity,
    verify_isotopy_surrogate, verify_lemma_commute_power, verify_root_property, ConvergenceSettings,
    LemmaCase, VerifySettings,
};

/// Default depth for circle systems built numerically.
pub const DEFAULT_CIRCLE_DEPTH: u32 = 12;
/// Default depth for analytic families.
pub const DEFAULT_ANALYTIC_DEPTH: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    FromField,
    SolvedSqrtChain,
    QuatChain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSystem {
    target: Diffeo,
    roots: BTreeMap<u64, Diffeo>,
    provenance: Provenance,
}

/// `2^c` for `c = 1..=depth`.
pub fn dyadic_indices(depth: u32) -> Vec<u64> {
    (1..=depth).map(|c| 1u64 << c).collect()
}

impl RootSystem {
    pub fn new(target: Diffeo, roots: Vec<(u64, Diffeo)>, provenance: Provenance) -> Result<Self> {
        let m = target.manifold();
        let mut map = BTreeMap::new();
        for (b, g) in roots {
            if b < 2 {
                return Err(Error::InvalidArgument(format!("root index {b} must be at least 2")));
            }
            m.ensure_same(g.manifold())?;
            if map.insert(b, g).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate root index {b}")));
            }
        }
        Ok(RootSystem {
            target,
            roots: map,
            provenance,
        })
    }

    /// Analytic rotation family `g_b = rotation(angle / b)` for
    /// `f = rotation(angle)`.
    pub fn rotation_family(angle: f64, depth: u32) -> Self {
        let roots = dyadic_indices(depth)
            .into_iter()
            .map(|b| (b, Diffeo::CircleRotation(angle / b as f64)))
            .collect();
        RootSystem::new(Diffeo::CircleRotation(angle), roots, Provenance::Analytic)
            .expect("rotation family is well formed")
    }

    /// Analytic translation family on the torus.
    pub fn translation_family(v: &[f64], depth: u32) -> Result<Self> {
        ManifoldId::torus(v.len())?;
        let roots = dyadic_indices(depth)
            .into_iter()
            .map(|b| (b, Diffeo::TorusTranslation(v.iter().map(|x| x / b as f64).collect())))
            .collect();
        RootSystem::new(Diffeo::TorusTranslation(v.to_vec()), roots, Provenance::Analytic)
    }

    /// Replaces (or inserts) one root, e.g. to build a broken system.
    pub fn with_root(mut self, b: u64, g: Diffeo) -> Result<Self> {
        self.target.manifold().ensure_same(g.manifold())?;
        if b < 2 {
            return Err(Error::InvalidArgument("root index must be at least 2".into()));
        }
        self.roots.insert(b, g);
        Ok(self)
    }

    pub fn target(&self) -> &Diffeo {
        &self.target
    }

    pub fn manifold(&self) -> ManifoldId {
        self.target.manifold()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn index_set(&self) -> Vec<u64> {
        self.roots.keys().copied().collect()
    }

    pub fn max_index(&self) -> u64 {
        self.roots.keys().next_back().copied().unwrap_or(1)
    }

    pub fn contains(&self, b: u64) -> bool {
        b == 1 || self.roots.contains_key(&b)
    }

    /// `g_b`; index `1` is the target.
    pub fn root(&self, b: u64) -> Option<&Diffeo> {
        if b == 1 {
            Some(&self.target)
        } else {
            self.roots.get(&b)
        }
    }

    pub fn try_root(&self, b: u64) -> Result<&Diffeo> {
        self.root(b).ok_or(Error::MissingIndex(b))
    }

    pub fn roots(&self) -> impl Iterator<Item = (u64, &Diffeo)> {
        self.roots.iter().map(|(b, g)| (*b, g))
    }
}

/// Roots of the time-one map of `field`: `g_{2^c} = Φ_{2^{-c}}`.
pub fn roots_from_field(field: Arc<VectorField>, depth: u32, settings: IntegratorSettings) -> RootSystem {
    let target = Diffeo::flow_time(field.clone(), 1.0, settings);
    let roots = dyadic_indices(depth)
        .into_iter()
        .map(|b| (b, Diffeo::flow_time(field.clone(), 1.0 / b as f64, settings)))
        .collect();
    RootSystem::new(target, roots, Provenance::FromField).expect("field roots share one manifold")
}

/// Principal square-root chain `u_1 = q`, `u_c = √u_{c-1}` with
/// `g_{2^c} = L_{u_c}`, a root system for the antipodal map `L_{-1}` of the
/// 3-sphere. The level-one choice `q` (a purely imaginary unit quaternion)
/// selects the embedding.
pub fn quat_sqrt_chain(q: Quat, depth: u32) -> Result<RootSystem> {
    if depth < 1 {
        return Err(Error::InvalidArgument("chain depth must be at least 1".into()));
    }
    if !q.is_finite() || q.w.abs() > 1e-12 || (q.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidQuaternion(format!(
            "{q:?} is not a purely imaginary unit quaternion"
        )));
    }
    let mut u = q.imag().normalize();
    let mut roots = Vec::with_capacity(depth as usize);
    roots.push((2u64, Diffeo::QuatLeftMult(u)));
    for c in 2..=depth {
        u = u
            .principal_sqrt()
            .ok_or_else(|| Error::InvalidQuaternion("square root of -1 requested".into()))?;
        roots.push((1u64 << c, Diffeo::QuatLeftMult(u)));
    }
    RootSystem::new(Diffeo::QuatLeftMult(-Quat::ONE), roots, Provenance::QuatChain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::{power, sup_distance};
    use crate::field::AnalyticField;
    use crate::manifold::{distance, sample_grid, Point};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_roots_are_rotations() {
        let f = Arc::new(AnalyticField::ConstantCircle { k: PI }.into());
        let rs = roots_from_field(f, 3, IntegratorSettings::default());
        assert_eq!(rs.root(2), Some(&Diffeo::CircleRotation(PI / 2.0)));
        assert_eq!(rs.root(4), Some(&Diffeo::CircleRotation(PI / 4.0)));
        assert_eq!(rs.root(8), Some(&Diffeo::CircleRotation(PI / 8.0)));
        assert_eq!(rs.provenance(), Provenance::FromField);
    }

    #[test]
    fn zero_field_roots_are_identity() {
        let f = Arc::new(AnalyticField::ConstantCircle { k: 0.0 }.into());
        let rs = roots_from_field(f, 4, IntegratorSettings::default());
        let g = sample_grid(ManifoldId::Circle, 16, 0).unwrap();
        for (_, r) in rs.roots() {
            assert_eq!(sup_distance(r, &Diffeo::identity(ManifoldId::Circle), &g).unwrap(), 0.0);
        }
    }

    #[test]
    fn left_invariant_roots_match_rk4() {
        let q = Quat::new(0.0, 0.6, 0.0, 0.8);
        let field: Arc<VectorField> = Arc::new(AnalyticField::LeftInvariantS3 { omega: q.scale(PI) }.into());
        let exact = roots_from_field(field.clone(), 2, IntegratorSettings::default());
        let rk4 = roots_from_field(field, 2, IntegratorSettings::rk4_only(1e-3));
        let grid = sample_grid(ManifoldId::Sphere3, 16, 3).unwrap();
        for c in 1..=2u32 {
            let b = 1u64 << c;
            let expect = q.scale(PI / b as f64).exp_pure();
            assert!(matches!(exact.root(b), Some(Diffeo::QuatLeftMult(u)) if (*u - expect).norm() < 1e-15));
            let d = sup_distance(exact.root(b).unwrap(), rk4.root(b).unwrap(), &grid).unwrap();
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn chain_levels_square_back() {
        let rs = quat_sqrt_chain(Quat::I, 2).unwrap();
        let s = 0.5f64.sqrt();
        match rs.root(4) {
            Some(Diffeo::QuatLeftMult(u)) => {
                assert!((*u - Quat::new(s, s, 0.0, 0.0)).norm() < 1e-15);
                assert!((*u * *u - Quat::I).norm() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(rs.root(2), Some(&Diffeo::QuatLeftMult(Quat::I)));
    }

    #[test]
    fn chain_angles_halve() {
        let q = Quat::new(0.0, 1.0, 2.0, -2.0).normalize();
        let rs = quat_sqrt_chain(q, 20).unwrap();
        for (b, g) in rs.roots() {
            let Diffeo::QuatLeftMult(u) = g else { panic!() };
            assert!((u.angle_to_one() - PI / b as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn chains_from_different_axes_differ() {
        let gi = quat_sqrt_chain(Quat::I, 3).unwrap();
        let gj = quat_sqrt_chain(Quat::J, 3).unwrap();
        let grid = sample_grid(ManifoldId::Sphere3, 64, 0).unwrap();
        assert!(sup_distance(gi.root(2).unwrap(), gj.root(2).unwrap(), &grid).unwrap() > 1.0);
        // both still square to the antipodal map
        for rs in [&gi, &gj] {
            let sq = power(rs.root(2).unwrap(), 2);
            for p in &grid {
                let Point::Sphere3(x) = p else { panic!() };
                assert!(distance(&sq.apply(p).unwrap(), &Point::Sphere3(-*x)) < 1e-15);
            }
        }
    }

    #[test]
    fn chain_rejects_bad_axes() {
        assert!(quat_sqrt_chain(-Quat::ONE, 3).is_err());
        assert!(quat_sqrt_chain(Quat::new(0.6, 0.8, 0.0, 0.0), 3).is_err());
        assert!(quat_sqrt_chain(Quat::I, 0).is_err());
    }

    #[test]
    fn index_one_is_the_target() {
        let rs = RootSystem::rotation_family(PI, 4);
        assert_eq!(rs.root(1), Some(&Diffeo::CircleRotation(PI)));
        assert_eq!(rs.index_set(), vec![2, 4, 8, 16]);
        assert!(rs.root(3).is_none());
        assert!(RootSystem::new(Diffeo::CircleRotation(PI), vec![(1, Diffeo::CircleReflection)], Provenance::Analytic).is_err());
    }
}
