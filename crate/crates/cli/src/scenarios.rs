//! Built-in scenarios.

use std::f64::consts::PI;

use flowroot::diffeo::DiffeoSpec;
use flowroot::field::{AnalyticField, IntegratorSettings};
use flowroot::manifold::ManifoldId;
use flowroot::quat::Quat;
use flowroot::rootsystem::SqrtSettings;

use crate::config::*;

const I: [f64; 4] = [0.0, 1.0, 0.0, 0.0];
const J: [f64; 4] = [0.0, 0.0, 1.0, 0.0];

fn conditions() -> Vec<Check> {
    Check::ALL.iter().copied().filter(|c| c.is_condition()).collect()
}

fn with(mut base: Vec<Check>, extra: &[Check]) -> Vec<Check> {
    base.extend_from_slice(extra);
    base
}

fn rotation(pi: f64) -> DiffeoSpec {
    DiffeoSpec::Rotation { angle: 0.0, pi }
}

fn left_inv(q: [f64; 4]) -> AnalyticField {
    AnalyticField::LeftInvariantS3 {
        omega: Quat::from_array(q).scale(PI),
    }
}

fn perturbed_field() -> AnalyticField {
    AnalyticField::CircleFourier {
        mean: PI,
        cos: vec![],
        sin: vec![0.3],
    }
}

fn circle_antipodal() -> ScenarioConfig {
    ScenarioConfig {
        name: "circle-antipodal".into(),
        description: "two rotation root systems of the circle antipodal map and the reflection between them".into(),
        manifold: ManifoldId::Circle,
        checks: with(
            conditions(),
            &[Check::FlowAxioms, Check::Extract, Check::RoundTrip, Check::Intertwine],
        ),
        grid: GridConfig {
            resolution: 256,
            seed: 0,
        },
        source: RootSource::Analytic {
            target: rotation(1.0),
            depth: 20,
        },
        perturb: vec![],
        tolerances: Tolerances::default(),
        flow_axioms: FlowAxiomsConfig::default(),
        // low levels keep 2^c·ulp below the extraction tolerance
        extract: Some(ExtractConfig {
            level: 2,
            richardson: 0,
            points: None,
            reference: Some(AnalyticField::ConstantCircle { k: PI }),
            order_check: None,
            integrator: IntegratorSettings::default(),
            recognize_tol: 1e-10,
        }),
        symmetry: Some(SymmetryConfig {
            partner: Some(RootSource::Analytic {
                target: rotation(-1.0),
                depth: 20,
            }),
            field1: AnalyticField::ConstantCircle { k: PI },
            field2: AnalyticField::ConstantCircle { k: -PI },
            k: None,
            candidates: vec![Candidate {
                isometry: IsometryConfig::Reflection,
                informational: false,
            }],
            flow_times: vec![0.25, 0.5, 1.0],
        }),
        group_probe: None,
    }
}

fn s3_antipodal(q1: [f64; 4], q2: [f64; 4], suffix: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: format!("s3-antipodal-{suffix}"),
        description: format!(
            "quaternion square-root chain from {suffix}; both intertwining candidates towards the other axis"
        ),
        manifold: ManifoldId::Sphere3,
        checks: with(
            conditions(),
            &[Check::FlowAxioms, Check::Extract, Check::RoundTrip, Check::Intertwine],
        ),
        grid: GridConfig {
            resolution: 256,
            seed: 7,
        },
        source: RootSource::QuatChain { q: q1, depth: 20 },
        perturb: vec![],
        tolerances: Tolerances {
            extract: 1e-6,
            round_trip: 1e-6,
            flow: 1e-10,
            flow_conjugacy: 1e-8,
            ..Tolerances::default()
        },
        flow_axioms: FlowAxiomsConfig::default(),
        extract: Some(ExtractConfig {
            level: 10,
            richardson: 2,
            points: Some(8),
            reference: Some(left_inv(q1)),
            order_check: None,
            integrator: IntegratorSettings::default(),
            recognize_tol: 1e-10,
        }),
        symmetry: Some(SymmetryConfig {
            partner: Some(RootSource::QuatChain { q: q2, depth: 20 }),
            field1: left_inv(q1),
            field2: left_inv(q2),
            k: Some(1.0),
            candidates: vec![
                Candidate {
                    isometry: IsometryConfig::Rotor {
                        from: q1,
                        to: q2,
                        power: 1,
                    },
                    informational: false,
                },
                Candidate {
                    isometry: IsometryConfig::LeftQuotient { from: q1, to: q2 },
                    informational: true,
                },
            ],
            flow_times: vec![0.25, 0.5, 1.0],
        }),
        group_probe: None,
    }
}

fn circle_perturbed_rotation() -> ScenarioConfig {
    ScenarioConfig {
        name: "circle-perturbed-rotation".into(),
        description: "roots of the time-one map of pi + 0.3 sin(theta), extraction and re-integration".into(),
        manifold: ManifoldId::Circle,
        checks: with(conditions(), &[Check::FlowAxioms, Check::Extract, Check::RoundTrip]),
        grid: GridConfig {
            resolution: 128,
            seed: 0,
        },
        source: RootSource::FromField {
            field: perturbed_field(),
            depth: 12,
            integrator: IntegratorSettings::rk4_only(1e-3),
        },
        perturb: vec![],
        tolerances: Tolerances {
            conditions: 1e-8,
            lemma: 1e-8,
            limit: 1e-8,
            flow: 1e-8,
            extract: 1e-6,
            round_trip: 1e-5,
            ..Tolerances::default()
        },
        flow_axioms: FlowAxiomsConfig::default(),
        extract: Some(ExtractConfig {
            level: 10,
            richardson: 2,
            points: None,
            reference: Some(perturbed_field()),
            order_check: Some(OrderCheck { richardson: 1 }),
            integrator: IntegratorSettings::rk4_only(1e-3),
            recognize_tol: 1e-10,
        }),
        symmetry: None,
        group_probe: None,
    }
}

fn solved_sqrt_chain() -> ScenarioConfig {
    let target = DiffeoSpec::FlowTime {
        field: perturbed_field(),
        t: 1.0,
        step: Some(1e-3),
    };
    ScenarioConfig {
        name: "solved-sqrt-chain".into(),
        description: "three levels of numerical square roots of a circle map, compared with the field roots".into(),
        manifold: ManifoldId::Circle,
        checks: conditions(),
        grid: GridConfig {
            resolution: 256,
            seed: 0,
        },
        source: RootSource::SolveChain {
            target,
            depth: 3,
            solver: SqrtSettings::default(),
            reference: Some(Box::new(RootSource::FromField {
                field: perturbed_field(),
                depth: 3,
                integrator: IntegratorSettings::rk4_only(1e-3),
            })),
        },
        perturb: vec![],
        tolerances: Tolerances {
            conditions: 1e-6,
            lemma: 1e-6,
            limit: 0.05,
            construction: 1e-6,
            ..Tolerances::default()
        },
        flow_axioms: FlowAxiomsConfig::default(),
        extract: None,
        symmetry: None,
        group_probe: None,
    }
}

fn negative_reflection() -> ScenarioConfig {
    ScenarioConfig {
        name: "negative-reflection".into(),
        description: "reflection of the circle; expected failure at the isotopy surrogate".into(),
        manifold: ManifoldId::Circle,
        checks: conditions(),
        grid: GridConfig {
            resolution: 256,
            seed: 0,
        },
        source: RootSource::Explicit {
            target: DiffeoSpec::Reflection,
            roots: [2u64, 4, 8]
                .iter()
                .map(|b| ExplicitRoot {
                    index: *b,
                    root: DiffeoSpec::Reflection,
                })
                .collect(),
        },
        perturb: vec![],
        tolerances: Tolerances::default(),
        flow_axioms: FlowAxiomsConfig::default(),
        extract: None,
        symmetry: None,
        group_probe: None,
    }
}

fn broken_coherency() -> ScenarioConfig {
    ScenarioConfig {
        name: "broken-coherency".into(),
        description: "expected failure".into(),
        manifold: ManifoldId::Circle,
        checks: with(conditions(), &[Check::FlowAxioms]),
        grid: GridConfig {
            resolution: 256,
            seed: 0,
        },
        source: RootSource::Analytic {
            target: rotation(1.0),
            depth: 20,
        },
        perturb: vec![Perturbation {
            index: 4,
            root: DiffeoSpec::Rotation { angle: 0.05, pi: 0.25 },
        }],
        tolerances: Tolerances::default(),
        flow_axioms: FlowAxiomsConfig {
            real_pairs: vec![[0.25, 0.5]],
            real_probes: vec![0.25],
        },
        extract: None,
        symmetry: None,
        group_probe: None,
    }
}

fn group_probe_circle() -> ScenarioConfig {
    ScenarioConfig {
        name: "group-probe-circle".into(),
        description: "closure of {identity, reflection} around the rotation field".into(),
        manifold: ManifoldId::Circle,
        checks: vec![Check::GroupProbe],
        grid: GridConfig {
            resolution: 256,
            seed: 0,
        },
        source: RootSource::Analytic {
            target: rotation(1.0),
            depth: 20,
        },
        perturb: vec![],
        tolerances: Tolerances::default(),
        flow_axioms: FlowAxiomsConfig::default(),
        extract: None,
        symmetry: None,
        group_probe: Some(GroupProbeConfig {
            base_field: AnalyticField::ConstantCircle { k: PI },
            candidates: vec![
                GroupCandidate {
                    isometry: IsometryConfig::Identity {
                        manifold: ManifoldId::Circle,
                    },
                    field: None,
                },
                GroupCandidate {
                    isometry: IsometryConfig::Reflection,
                    field: None,
                },
            ],
        }),
    }
}

fn group_probe_s3() -> ScenarioConfig {
    let rotor = |power| GroupCandidate {
        isometry: IsometryConfig::Rotor { from: I, to: J, power },
        field: None,
    };
    ScenarioConfig {
        name: "group-probe-s3".into(),
        description: "closure of the conjugations by powers of the i-to-j rotor".into(),
        manifold: ManifoldId::Sphere3,
        checks: vec![Check::GroupProbe],
        grid: GridConfig {
            resolution: 256,
            seed: 7,
        },
        source: RootSource::QuatChain { q: I, depth: 20 },
        perturb: vec![],
        tolerances: Tolerances::default(),
        flow_axioms: FlowAxiomsConfig::default(),
        extract: None,
        symmetry: None,
        group_probe: Some(GroupProbeConfig {
            base_field: left_inv(I),
            candidates: vec![
                GroupCandidate {
                    isometry: IsometryConfig::Identity {
                        manifold: ManifoldId::Sphere3,
                    },
                    field: None,
                },
                rotor(1),
                rotor(-1),
                rotor(2),
            ],
        }),
    }
}

/// Every built-in scenario, in listing order.
pub fn builtins() -> Vec<ScenarioConfig> {
    vec![
        circle_antipodal(),
        s3_antipodal(I, J, "i"),
        s3_antipodal(J, I, "j"),
        circle_perturbed_rotation(),
        solved_sqrt_chain(),
        negative_reflection(),
        broken_coherency(),
        group_probe_circle(),
        group_probe_s3(),
    ]
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    builtins().into_iter().find(|s| s.name == name)
}

/// `(name, description)` for every built-in.
pub fn list_scenarios() -> Vec<(String, String)> {
    builtins().into_iter().map(|s| (s.name, s.description)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        let list = list_scenarios();
        assert!(list.len() >= 8);
        assert!(list.iter().any(|(n, _)| n == "circle-antipodal"));
        assert!(list.iter().any(|(n, d)| n == "broken-coherency" && d == "expected failure"));
        let mut names: Vec<_> = list.iter().map(|(n, _)| n.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), list.len());
    }

    #[test]
    fn builtins_are_valid_and_round_trip_through_toml() {
        for s in builtins() {
            s.validate().unwrap();
            let text = s.to_toml().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), s, "{}", s.name);
        }
    }
}
