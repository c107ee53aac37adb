//! Scenario files: one TOML document per experiment.

use std::path::Path;

use anyhow::{bail, Context, Result};
use flowroot::diffeo::{DiffeoSpec, Isometry, IsometrySpec};
use flowroot::field::{AnalyticField, IntegratorSettings};
use flowroot::manifold::ManifoldId;
use flowroot::quat::Quat;
use flowroot::rootsystem::SqrtSettings;
use flowroot::symmetry::conjugating_rotor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    #[serde(rename = "condition-1")]
    Condition1,
    #[serde(rename = "condition-2")]
    Condition2,
    #[serde(rename = "condition-3")]
    Condition3,
    #[serde(rename = "condition-4")]
    Condition4,
    #[serde(rename = "condition-5")]
    Condition5,
    Lemma,
    FlowAxioms,
    Extract,
    RoundTrip,
    Intertwine,
    GroupProbe,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Condition1,
        Check::Condition2,
        Check::Condition3,
        Check::Condition4,
        Check::Condition5,
        Check::Lemma,
        Check::FlowAxioms,
        Check::Extract,
        Check::RoundTrip,
        Check::Intertwine,
        Check::GroupProbe,
    ];

    pub fn is_condition(self) -> bool {
        matches!(
            self,
            Check::Condition1
                | Check::Condition2
                | Check::Condition3
                | Check::Condition4
                | Check::Condition5
                | Check::Lemma
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitRoot {
    pub index: u64,
    pub root: DiffeoSpec,
}

/// Where the root system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RootSource {
    /// Closed-form family for a rotation or torus translation target.
    Analytic { target: DiffeoSpec, depth: u32 },
    /// Roots listed one by one.
    Explicit {
        target: DiffeoSpec,
        roots: Vec<ExplicitRoot>,
    },
    /// Principal square-root chain of `q`, a system for the antipodal map.
    QuatChain { q: [f64; 4], depth: u32 },
    /// `g_{2^c}` = time `2^-c` map of `field`.
    FromField {
        field: AnalyticField,
        depth: u32,
        #[serde(default)]
        integrator: IntegratorSettings,
    },
    /// Repeated numerical square roots of a circle map.
    SolveChain {
        target: DiffeoSpec,
        depth: u32,
        #[serde(default)]
        solver: SqrtSettings,
        /// Chain to compare each solved level against.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<Box<RootSource>>,
    },
}

impl RootSource {
    pub fn depth(&self) -> Option<u32> {
        match self {
            RootSource::Analytic { depth, .. }
            | RootSource::QuatChain { depth, .. }
            | RootSource::FromField { depth, .. }
            | RootSource::SolveChain { depth, .. } => Some(*depth),
            RootSource::Explicit { .. } => None,
        }
    }

    pub fn set_depth(&mut self, d: u32) {
        match self {
            RootSource::Analytic { depth, .. }
            | RootSource::QuatChain { depth, .. }
            | RootSource::FromField { depth, .. }
            | RootSource::SolveChain { depth, .. } => *depth = d,
            RootSource::Explicit { .. } => {}
        }
    }
}

/// Replaces one root after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub index: u64,
    pub root: DiffeoSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Per-composition tolerance for conditions 2 to 4.
    pub conditions: f64,
    pub lemma: f64,
    /// Bound on the extrapolated limit in condition 5.
    pub limit: f64,
    pub slope: f64,
    pub flow: f64,
    /// Target accuracy of real-time evaluation.
    pub real: f64,
    pub extract: f64,
    pub round_trip: f64,
    pub intertwine: f64,
    pub flow_conjugacy: f64,
    pub group: f64,
    /// Construction checks (solver residual, agreement with a reference).
    pub construction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            conditions: 1e-12,
            lemma: 1e-11,
            limit: 1e-12,
            slope: 0.1,
            flow: 1e-12,
            real: 1e-9,
            extract: 1e-12,
            round_trip: 1e-10,
            intertwine: 1e-12,
            flow_conjugacy: 1e-10,
            group: 1e-12,
            construction: 1e-6,
        }
    }
}

impl Tolerances {
    /// Global override from the command line.
    pub fn override_with(&mut self, t: f64) {
        self.conditions = t;
        self.lemma = 10.0 * t;
        self.limit = t;
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.conditions,
            self.lemma,
            self.limit,
            self.slope,
            self.flow,
            self.real,
            self.extract,
            self.round_trip,
            self.intertwine,
            self.flow_conjugacy,
            self.group,
            self.construction,
        ];
        if all.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            bail!("tolerances must be positive and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowAxiomsConfig {
    /// Extra `(t₁, t₂)` pairs evaluated in real time.
    pub real_pairs: Vec<[f64; 2]>,
    /// Times evaluated with the dyadic refinement even when exactly
    /// reachable; the residual is the largest error estimate.
    pub real_probes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderCheck {
    pub richardson: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub level: u32,
    #[serde(default)]
    pub richardson: u32,
    /// Extraction grid size; the main grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Field the extraction is compared against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<AnalyticField>,
    /// Error ratio between levels `level` and `level + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_check: Option<OrderCheck>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default = "default_recognize_tol")]
    pub recognize_tol: f64,
}

fn default_recognize_tol() -> f64 {
    1e-10
}

/// An isometry as written in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IsometryConfig {
    Identity {
        manifold: ManifoldId,
    },
    Reflection,
    QuatConjugation {
        r: [f64; 4],
    },
    QuatLeft {
        q: [f64; 4],
    },
    /// Conjugation by `conjugating_rotor(from, to)^power`.
    Rotor {
        from: [f64; 4],
        to: [f64; 4],
        #[serde(default = "one")]
        power: i64,
    },
    /// Left multiplication by `to·from⁻¹`.
    LeftQuotient {
        from: [f64; 4],
        to: [f64; 4],
    },
}

fn one() -> i64 {
    1
}

impl IsometryConfig {
    pub fn build(&self) -> Result<Isometry> {
        Ok(match self {
            IsometryConfig::Identity { manifold } => IsometrySpec::Identity { manifold: *manifold }.build()?,
            IsometryConfig::Reflection => Isometry::CircleReflection,
            IsometryConfig::QuatConjugation { r } => IsometrySpec::QuatConjugation { r: *r }.build()?,
            IsometryConfig::QuatLeft { q } => IsometrySpec::QuatLeft { q: *q }.build()?,
            IsometryConfig::Rotor { from, to, power } => {
                let r = conjugating_rotor(Quat::from_array(*from), Quat::from_array(*to))?;
                Isometry::QuatConjugation(r.powi_unit(*power).normalize())
            }
            IsometryConfig::LeftQuotient { from, to } => {
                let q = Quat::from_array(*to) * Quat::from_array(*from).inverse();
                IsometrySpec::QuatLeft { q: q.normalize().to_array() }.build()?
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            IsometryConfig::Identity { .. } => "identity".into(),
            IsometryConfig::Reflection => "reflection".into(),
            IsometryConfig::QuatConjugation { .. } => "quat-conjugation".into(),
            IsometryConfig::QuatLeft { .. } => "quat-left".into(),
            IsometryConfig::Rotor { power, .. } => format!("rotor^{power}"),
            IsometryConfig::LeftQuotient { .. } => "left-quotient".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub isometry: IsometryConfig,
    /// Reported without affecting the verdict.
    #[serde(default)]
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryConfig {
    /// Second embedding of the same target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<RootSource>,
    pub field1: AnalyticField,
    pub field2: AnalyticField,
    /// Fitted when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub candidates: Vec<Candidate>,
    #[serde(default = "default_flow_times")]
    pub flow_times: Vec<f64>,
}

fn default_flow_times() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupCandidate {
    pub isometry: IsometryConfig,
    /// Image field; transported from the base field when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<AnalyticField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupProbeConfig {
    pub base_field: AnalyticField,
    pub candidates: Vec<GroupCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub manifold: ManifoldId,
    pub checks: Vec<Check>,
    pub grid: GridConfig,
    pub source: RootSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturb: Vec<Perturbation>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub flow_axioms: FlowAxiomsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract: Option<ExtractConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_probe: Option<GroupProbeConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn wants(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            bail!("scenario name is empty");
        }
        self.tolerances.validate()?;
        if self.grid.resolution < 2 {
            bail!("grid resolution must be at least 2");
        }
        let sources = std::iter::once(&self.source).chain(self.symmetry.as_ref().and_then(|s| s.partner.as_ref()));
        for s in sources {
            if s.depth() == Some(0) {
                bail!("depth must be at least 1");
            }
        }
        if self.wants(Check::Extract) || self.wants(Check::RoundTrip) {
            if self.extract.is_none() {
                bail!("extract and round-trip checks need an [extract] section");
            }
        }
        if self.wants(Check::Intertwine) && self.symmetry.is_none() {
            bail!("the intertwine check needs a [symmetry] section");
        }
        if self.wants(Check::GroupProbe) && self.group_probe.is_none() {
            bail!("the group-probe check needs a [group_probe] section");
        }
        if let Some(s) = &self.symmetry {
            if let Some(k) = s.k {
                if !(k > 0.0) {
                    bail!("symmetry scale k must be positive");
                }
            }
        }
        Ok(())
    }

    /// Keeps only the checks selected by `keep`.
    pub fn restrict(&mut self, keep: impl Fn(Check) -> bool) {
        self.checks.retain(|c| keep(*c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"
manifold = "circle"
checks = ["condition-2", "lemma"]

[grid]
resolution = 16

[source]
kind = "analytic"
target = { kind = "rotation", pi = 1.0 }
depth = 4
"#;

    #[test]
    fn parses_minimal_file() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.checks, vec![Check::Condition2, Check::Lemma]);
        assert_eq!(cfg.source.depth(), Some(4));
        assert_eq!(cfg.tolerances, Tolerances::default());
        let back = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ScenarioConfig::from_toml(&MINIMAL.replace("lemma", "condition-9")).is_err());
        assert!(ScenarioConfig::from_toml(&MINIMAL.replace("depth = 4", "depth = 0")).is_err());
        assert!(ScenarioConfig::from_toml(&MINIMAL.replace("\"lemma\"", "\"extract\"")).is_err());
        let neg = format!("{MINIMAL}\n[tolerances]\nflow = -1.0\n");
        assert!(ScenarioConfig::from_toml(&neg).is_err());
    }

    #[test]
    fn rotor_candidates() {
        let c = IsometryConfig::Rotor {
            from: [0.0, 1.0, 0.0, 0.0],
            to: [0.0, 0.0, 1.0, 0.0],
            power: 2,
        };
        let Isometry::QuatConjugation(r) = c.build().unwrap() else { panic!() };
        assert!((r * Quat::I * r.conj() + Quat::I).norm() < 1e-15);
    }
}
