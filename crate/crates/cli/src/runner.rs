//! Scenario execution and the JSON run report.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use flowroot::diffeo::{sup_distance, Diffeo, Isometry};
use flowroot::error::Error;
use flowroot::field::{AnalyticField, VectorField};
use flowroot::flow::{round_trip_check, verify_flow_axioms, FlowApprox, RoundTripSettings, TimePairs};
use flowroot::manifold::{sample_grid, ManifoldId, Point, TangentVec};
use flowroot::quat::Quat;
use flowroot::report::{CheckEntry, TableRow, Witness};
use flowroot::rootsystem::{
    quat_sqrt_chain, roots_from_field, solve_sqrt_chain, verification_grid, verify_coherency,
    verify_commutativity, verify_convergence_to_identity, verify_isotopy_surrogate, verify_lemma_commute_power,
    verify_root_property, ConvergenceSettings, Provenance, RootSystem, VerifySettings,
};
use flowroot::symmetry::{check_intertwine, fit_scale, flow_conjugacy_check, probe_group, IntertwineCase};
use serde::Serialize;

use crate::config::{Check, ExtractConfig, Perturbation, RootSource, ScenarioConfig, Tolerances};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub precision: &'static str,
    pub manifold: String,
    pub grid_resolution: usize,
    pub grid_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub subject: String,
    pub entries: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl StageReport {
    fn new(stage: &str, subject: &str) -> Self {
        StageReport {
            stage: stage.into(),
            subject: subject.into(),
            entries: Vec::new(),
            error: None,
            details: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.entries.iter().all(|e| e.passed || e.informational)
    }

    pub fn get(&self, check: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.check == check)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub subject: String,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub stages: Vec<StageTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub description: String,
    pub version: &'static str,
    pub environment: Environment,
    pub checks_requested: Vec<Check>,
    pub tolerances: Tolerances,
    pub stages: Vec<StageReport>,
    /// First stage, as `stage/subject`, that failed or errored.
    pub failed_stage: Option<String>,
    pub passed: bool,
    pub timing: Timing,
}

impl RunReport {
    pub fn stage(&self, stage: &str, subject: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage && s.subject == subject)
    }

    /// First entry named `check` in any stage for `subject`.
    pub fn entry(&self, subject: &str, check: &str) -> Option<&CheckEntry> {
        self.stages
            .iter()
            .filter(|s| s.subject == subject)
            .find_map(|s| s.get(check))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The JSON value with `timing` removed, for determinism comparisons.
    pub fn without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

/// Extracted field samples, the data behind the field CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub manifold: ManifoldId,
    pub points: Vec<Point>,
    pub values: Vec<TangentVec>,
}

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub field: Option<FieldSamples>,
}

fn verify_settings(t: &Tolerances) -> VerifySettings {
    VerifySettings {
        tol: t.conditions,
        lemma_tol: t.lemma,
        convergence: ConvergenceSettings {
            limit_tol: t.limit,
            slope_tol: t.slope,
        },
        ..VerifySettings::default()
    }
}

fn entry_or_error(name: &str, r: flowroot::Result<CheckEntry>) -> CheckEntry {
    match r {
        Ok(e) => e,
        Err(err) => {
            let mut e = CheckEntry::errored(name, &err);
            if let Error::ConvergenceFailure { table } = &err {
                e.table = table
                    .iter()
                    .map(|row| TableRow {
                        index: row.level as i64,
                        value: row.estimate,
                    })
                    .collect();
                e = e.with_witness(Witness::note("convergence failure"));
            }
            e
        }
    }
}

/// Builds the root system described by `src`, plus construction entries.
pub fn build_source(
    src: &RootSource,
    perturb: &[Perturbation],
    tol: &Tolerances,
) -> Result<(RootSystem, Vec<CheckEntry>)> {
    let mut entries = Vec::new();
    let mut rs = match src {
        RootSource::Analytic { target, depth } => match target.build()? {
            Diffeo::CircleRotation(a) => RootSystem::rotation_family(a, *depth),
            Diffeo::TorusTranslation(v) => RootSystem::translation_family(&v, *depth)?,
            other => bail!("no closed-form root family for {other}"),
        },
        RootSource::Explicit { target, roots } => {
            let roots = roots
                .iter()
                .map(|r| Ok((r.index, r.root.build()?)))
                .collect::<flowroot::Result<Vec<_>>>()?;
            RootSystem::new(target.build()?, roots, Provenance::Analytic)?
        }
        RootSource::QuatChain { q, depth } => {
            let rs = quat_sqrt_chain(Quat::from_array(*q), *depth)?;
            entries.extend(chain_entries(&rs, Quat::from_array(*q)));
            rs
        }
        RootSource::FromField {
            field,
            depth,
            integrator,
        } => roots_from_field(Arc::new(field.clone().into()), *depth, *integrator),
        RootSource::SolveChain {
            target,
            depth,
            solver,
            reference,
        } => {
            let chain = solve_sqrt_chain(&target.build()?, *depth, solver, &verify_settings(tol))?;
            let worst = chain.levels.iter().map(|(_, r)| *r).fold(0.0, f64::max);
            let mut e = CheckEntry::new("sqrt-solver", worst, solver.tol, chain.levels.len());
            e.table = chain
                .levels
                .iter()
                .map(|(b, r)| TableRow {
                    index: *b as i64,
                    value: *r,
                })
                .collect();
            entries.push(e);
            if let Some(r) = reference {
                let (reference, _) = build_source(r, &[], tol)?;
                entries.push(reference_agreement(&chain.system, &reference, solver.verify_points, tol.construction)?);
            }
            chain.system
        }
    };
    for p in perturb {
        rs = rs.with_root(p.index, p.root.build()?)?;
    }
    Ok((rs, entries))
}

/// Angles `π/b` and squares `u_c² = u_{c-1}` of a quaternion chain.
fn chain_entries(rs: &RootSystem, q: Quat) -> Vec<CheckEntry> {
    let mut angle = (0.0f64, 0i64);
    let mut square = (0.0f64, 0i64);
    let mut prev = -Quat::ONE;
    let mut n = 0;
    for (b, g) in rs.roots() {
        let Diffeo::QuatLeftMult(u) = g else { continue };
        n += 1;
        let a = (u.angle_to_one() - std::f64::consts::PI / b as f64).abs();
        if a > angle.0 {
            angle = (a, b as i64);
        }
        let s = (*u * *u - prev).norm();
        if s > square.0 {
            square = (s, b as i64);
        }
        prev = *u;
    }
    let mk = |name: &str, (r, b): (f64, i64), tol: f64| {
        let mut w = Witness::note(format!("level axis {:?}", q.to_array()));
        w.indices = vec![b];
        CheckEntry::new(name, r, tol, n).with_witness(w)
    };
    vec![mk("chain-angles", angle, 1e-12), mk("chain-squares", square, 1e-14)]
}

fn reference_agreement(solved: &RootSystem, reference: &RootSystem, points: usize, tol: f64) -> Result<CheckEntry> {
    let grid = verification_grid(points);
    let mut rows = Vec::new();
    for (b, g) in solved.roots() {
        let r = reference.try_root(b)?;
        rows.push(TableRow {
            index: b as i64,
            value: sup_distance(g, r, &grid)?,
        });
    }
    let worst = rows.iter().map(|r| r.value).fold(0.0, f64::max);
    let mut e = CheckEntry::new("reference-agreement", worst, tol, rows.len());
    e.table = rows;
    Ok(e)
}

fn run_conditions(cfg: &ScenarioConfig, rs: &RootSystem, grid: &[Point]) -> Vec<CheckEntry> {
    let s = verify_settings(&cfg.tolerances);
    let mut out = Vec::new();
    for c in &cfg.checks {
        let (name, r) = match c {
            Check::Condition1 => ("condition-1", verify_isotopy_surrogate(rs, grid)),
            Check::Condition2 => ("condition-2", verify_root_property(rs, grid, s.tol)),
            Check::Condition3 => ("condition-3", verify_commutativity(rs, grid, s.tol)),
            Check::Condition4 => ("condition-4", verify_coherency(rs, &s.coherency_exponents, grid, s.tol)),
            Check::Condition5 => ("condition-5", verify_convergence_to_identity(rs, grid, &s.convergence)),
            Check::Lemma => ("lemma", verify_lemma_commute_power(rs, &s.lemma_cases, grid, s.lemma_tol)),
            _ => continue,
        };
        out.push(entry_or_error(name, r));
    }
    out
}

fn max_tangent_error(a: &[TangentVec], grid: &[Point], reference: &VectorField) -> flowroot::Result<(f64, usize)> {
    let mut worst = (0.0, 0);
    for (i, (v, p)) in a.iter().zip(grid).enumerate() {
        let r = reference.eval(p)?.components();
        let d = v
            .components()
            .iter()
            .zip(&r)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        if d > worst.0 || d.is_nan() {
            worst = (d, i);
        }
    }
    Ok(worst)
}

fn sampled_values(f: &VectorField) -> Vec<TangentVec> {
    match f {
        VectorField::Sampled(s) => s.values().to_vec(),
        VectorField::Analytic(_) => Vec::new(),
    }
}

fn run_extract(
    ex: &ExtractConfig,
    tol: &Tolerances,
    fa: &FlowApprox,
    grid: &[Point],
    artifacts: &mut Artifacts,
) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    let extracted = match fa.extract_field_grid(grid, ex.level, ex.richardson) {
        Ok(f) => f,
        Err(e) => return vec![CheckEntry::errored("extract", &e)],
    };
    let values = sampled_values(&extracted);
    artifacts.field = Some(FieldSamples {
        manifold: fa.source().manifold(),
        points: grid.to_vec(),
        values: values.clone(),
    });
    let Some(reference) = &ex.reference else {
        out.push(
            CheckEntry::new("extract", 0.0, tol.extract, grid.len())
                .informational()
                .with_note("no reference field given"),
        );
        return out;
    };
    let reference: VectorField = reference.clone().into();
    out.push(entry_or_error(
        "extract",
        max_tangent_error(&values, grid, &reference).map(|(m, i)| {
            CheckEntry::new("extract", m, tol.extract, grid.len())
                .with_witness(Witness::at(&grid[i], vec![ex.level as i64, ex.richardson as i64]))
        }),
    ));
    if let Some(oc) = &ex.order_check {
        let err_at = |c: u32| -> flowroot::Result<f64> {
            let f = fa.extract_field_grid(grid, c, oc.richardson)?;
            Ok(max_tangent_error(&sampled_values(&f), grid, &reference)?.0)
        };
        let r = err_at(ex.level).and_then(|e0| Ok((e0, err_at(ex.level + 1)?)));
        out.push(match r {
            Ok((e0, e1)) => {
                let ratio = e0 / e1;
                let per_level = ratio.powf(1.0 / (oc.richardson + 1) as f64);
                let mut e = CheckEntry::new("extract-order", (per_level - 2.0).abs(), 0.2, 2 * grid.len())
                    .with_note(format!(
                        "error ratio {ratio:.6} between levels {} and {} with {} Richardson levels",
                        ex.level,
                        ex.level + 1,
                        oc.richardson
                    ));
                e.table = vec![
                    TableRow {
                        index: ex.level as i64,
                        value: e0,
                    },
                    TableRow {
                        index: ex.level as i64 + 1,
                        value: e1,
                    },
                ];
                e
            }
            Err(err) => CheckEntry::errored("extract-order", &err),
        });
    }
    out
}

fn real_probe(fa: &FlowApprox, time: f64, grid: &[Point], tol: f64) -> flowroot::Result<CheckEntry> {
    let mut worst = (0.0, 0);
    for (i, p) in grid.iter().enumerate() {
        let e = fa.eval_real(time, p, tol)?;
        if e.error_estimate > worst.0 {
            worst = (e.error_estimate, i);
        }
    }
    Ok(CheckEntry::new("eval-real", worst.0, tol, grid.len())
        .with_witness(Witness::at(&grid[worst.1], vec![]).with_note(format!("t = {time}"))))
}

/// Image of `f` under the isometry, `DP∘f∘P⁻¹`, for the closed forms that
/// stay closed.
pub fn transport_field(p: &Isometry, f: &AnalyticField) -> Result<AnalyticField> {
    Ok(match (p, f) {
        (Isometry::Identity(_), f) => f.clone(),
        (Isometry::CircleReflection, AnalyticField::ConstantCircle { k }) => AnalyticField::ConstantCircle { k: -k },
        (Isometry::CircleReflection, AnalyticField::CircleFourier { mean, cos, sin }) => {
            AnalyticField::CircleFourier {
                mean: -mean,
                cos: cos.iter().map(|c| -c).collect(),
                sin: sin.clone(),
            }
        }
        (Isometry::QuatConjugation(r), AnalyticField::LeftInvariantS3 { omega }) => AnalyticField::LeftInvariantS3 {
            omega: (*r * *omega * r.conj()).imag(),
        },
        _ => bail!("cannot transport {f:?} along {p:?}; give the candidate field explicitly"),
    })
}

struct Runner {
    stages: Vec<StageReport>,
    times: Vec<StageTime>,
}

impl Runner {
    fn stage(&mut self, stage: &str, subject: &str, body: impl FnOnce(&mut StageReport) -> Result<()>) {
        let start = Instant::now();
        let mut s = StageReport::new(stage, subject);
        if let Err(e) = body(&mut s) {
            s.error = Some(format!("{e:#}"));
        }
        self.times.push(StageTime {
            stage: stage.into(),
            subject: subject.into(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        self.stages.push(s);
    }
}

/// Runs every requested check of `cfg` in dependency order.
pub fn run_scenario(cfg: &ScenarioConfig) -> (RunReport, Artifacts) {
    let start = Instant::now();
    let mut run = Runner {
        stages: Vec::new(),
        times: Vec::new(),
    };
    let mut artifacts = Artifacts::default();
    let t = &cfg.tolerances;
    let grid = sample_grid(cfg.manifold, cfg.grid.resolution, cfg.grid.seed);

    let mut primary: Option<Arc<RootSystem>> = None;
    run.stage("source", "primary", |s| {
        grid.as_ref().map_err(|e| anyhow!("{e}"))?;
        let (rs, entries) = build_source(&cfg.source, &cfg.perturb, t)?;
        rs.manifold().ensure_same(cfg.manifold)?;
        s.entries = entries;
        primary = Some(Arc::new(rs));
        Ok(())
    });
    if let (Some(rs), Ok(grid)) = (primary, grid) {
        run_stages(cfg, &mut run, rs, &grid, &mut artifacts);
    }

    let failed_stage = run
        .stages
        .iter()
        .find(|s| !s.passed())
        .map(|s| format!("{}/{}", s.stage, s.subject));
    let report = RunReport {
        scenario: cfg.name.clone(),
        description: cfg.description.clone(),
        version: VERSION,
        environment: Environment {
            precision: "f64",
            manifold: cfg.manifold.to_string(),
            grid_resolution: cfg.grid.resolution,
            grid_seed: cfg.grid.seed,
        },
        checks_requested: cfg.checks.clone(),
        tolerances: cfg.tolerances,
        passed: failed_stage.is_none(),
        failed_stage,
        stages: run.stages,
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            stages: run.times,
        },
    };
    (report, artifacts)
}

fn run_stages(cfg: &ScenarioConfig, run: &mut Runner, rs: Arc<RootSystem>, grid: &[Point], artifacts: &mut Artifacts) {
    let t = &cfg.tolerances;
    let any_condition = cfg.checks.iter().any(|c| c.is_condition());
    if any_condition {
        run.stage("conditions", "primary", |s| {
            s.entries = run_conditions(cfg, &rs, grid);
            Ok(())
        });
    }

    let mut partner: Option<Arc<RootSystem>> = None;
    if let Some(sym) = &cfg.symmetry {
        if let Some(src) = &sym.partner {
            run.stage("source", "partner", |s| {
                let (p, entries) = build_source(src, &[], t)?;
                p.manifold().ensure_same(cfg.manifold)?;
                s.entries = entries;
                if let (Some(a), Some(b)) = (rs.root(2), p.root(2)) {
                    let d = sup_distance(a, b, grid)?;
                    s.entries.push(
                        CheckEntry::new("embedding-distance", d, f64::INFINITY, grid.len())
                            .informational()
                            .with_note("sup distance between the two index-2 roots"),
                    );
                }
                partner = Some(Arc::new(p));
                Ok(())
            });
            if let (Some(p), true) = (&partner, any_condition) {
                run.stage("conditions", "partner", |s| {
                    s.entries = run_conditions(cfg, p, grid);
                    Ok(())
                });
            }
        }
    }

    let fa = FlowApprox::new(rs.clone());
    if cfg.wants(Check::FlowAxioms) {
        run.stage("flow-axioms", "primary", |s| {
            let mut pairs = TimePairs::standard();
            pairs.real = cfg.flow_axioms.real_pairs.iter().map(|p| (p[0], p[1])).collect();
            s.entries.push(entry_or_error(
                "flow-axioms",
                verify_flow_axioms(&fa, &pairs, grid, t.flow, t.real),
            ));
            for &time in &cfg.flow_axioms.real_probes {
                s.entries.push(entry_or_error("eval-real", real_probe(&fa, time, grid, t.real)));
            }
            Ok(())
        });
    }

    if let Some(ex) = &cfg.extract {
        let xgrid = match ex.points {
            Some(n) => sample_grid(cfg.manifold, n, cfg.grid.seed),
            None => Ok(grid.to_vec()),
        };
        if cfg.wants(Check::Extract) {
            run.stage("extract", "primary", |s| {
                let xgrid = xgrid.as_ref().map_err(|e| anyhow!("{e}"))?;
                s.entries = run_extract(ex, t, &fa, xgrid, artifacts);
                Ok(())
            });
        }
        if cfg.wants(Check::RoundTrip) {
            run.stage("round-trip", "primary", |s| {
                let xgrid = xgrid.as_ref().map_err(|e| anyhow!("{e}"))?;
                let settings = RoundTripSettings {
                    level: ex.level,
                    richardson: ex.richardson,
                    recognize_tol: ex.recognize_tol,
                    integrator: ex.integrator,
                    tol: t.round_trip,
                };
                s.entries.push(entry_or_error(
                    "round-trip",
                    round_trip_check(rs.target(), &fa, xgrid, grid, &settings).map(|(e, _)| e),
                ));
                Ok(())
            });
        }
    }

    if let (Some(sym), true) = (&cfg.symmetry, cfg.wants(Check::Intertwine)) {
        let fa2 = partner.map(FlowApprox::new);
        let xi1: Arc<VectorField> = Arc::new(sym.field1.clone().into());
        let xi2: Arc<VectorField> = Arc::new(sym.field2.clone().into());
        for cand in &sym.candidates {
            run.stage("intertwine", &cand.isometry.label(), |s| {
                let iso = cand.isometry.build()?;
                let mut case = IntertwineCase::new(iso.clone(), xi1.clone(), xi2.clone(), sym.k.unwrap_or(1.0))?;
                let mut note = format!("k = {} (given)", case.k);
                if sym.k.is_none() {
                    let fit = fit_scale(&case, grid, t.intertwine)?;
                    case.k = fit.k;
                    note = format!(
                        "k = {} ({})",
                        fit.k,
                        if fit.integer { "integer search" } else { "least-squares fit" }
                    );
                }
                let mut e = check_intertwine(&case, grid, t.intertwine)?
                    .with_note(note)
                    .with_note(format!("isometry {:?}", iso.descriptor()));
                if cand.informational {
                    e = e.informational();
                }
                s.entries.push(e);
                if let Some(fa2) = &fa2 {
                    let mut e = entry_or_error(
                        "flow-conjugacy",
                        flow_conjugacy_check(&iso, &fa, fa2, case.k, &sym.flow_times, grid, t.flow_conjugacy, t.real),
                    );
                    if cand.informational {
                        e = e.informational();
                    }
                    s.entries.push(e);
                }
                Ok(())
            });
        }
    }

    if let (Some(gp), true) = (&cfg.group_probe, cfg.wants(Check::GroupProbe)) {
        run.stage("group-probe", "primary", |s| {
            let base: Arc<VectorField> = Arc::new(gp.base_field.clone().into());
            let cases = gp
                .candidates
                .iter()
                .map(|c| {
                    let iso = c.isometry.build()?;
                    let field = match &c.field {
                        Some(f) => f.clone(),
                        None => transport_field(&iso, &gp.base_field)?,
                    };
                    Ok(IntertwineCase::new(iso, base.clone(), Arc::new(field.into()), 1.0)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let res = probe_group(&cases, grid, t.group)?;
            s.entries.push(res.entry(t.group));
            s.details = Some(serde_json::to_value(&res)?);
            Ok(())
        });
    }
}

/// Flow trajectory `(t, Ψ_t(p), error estimate)` at `steps + 1` evenly
/// spaced times in `[0, t_max]`.
pub fn trajectory(cfg: &ScenarioConfig, p: &Point, steps: usize, t_max: f64) -> Result<Vec<(f64, Point, f64)>> {
    if steps == 0 {
        bail!("steps must be positive");
    }
    let (rs, _) = build_source(&cfg.source, &cfg.perturb, &cfg.tolerances)?;
    rs.manifold().ensure_same(p.manifold())?;
    let fa = FlowApprox::new(Arc::new(rs));
    (0..=steps)
        .map(|i| {
            let t = t_max * i as f64 / steps as f64;
            let e = fa.eval(t, p, cfg.tolerances.real)?;
            Ok((t, e.point, e.error_estimate))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin;

    #[test]
    fn reflection_transport() {
        let f = AnalyticField::CircleFourier {
            mean: 1.0,
            cos: vec![0.5],
            sin: vec![0.25],
        };
        let g = transport_field(&Isometry::CircleReflection, &f).unwrap();
        let (vf, vg): (VectorField, VectorField) = (f.into(), g.into());
        for k in 0..16 {
            let th = 0.4 * k as f64;
            let a = vf.eval(&Point::circle(-th)).unwrap().components()[0];
            let b = vg.eval(&Point::circle(th)).unwrap().components()[0];
            assert!((a + b).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_rotation_scenario() {
        let mut cfg = builtin("circle-antipodal").unwrap();
        cfg.grid.resolution = 16;
        let (r, art) = run_scenario(&cfg);
        assert!(r.passed, "{}", r.to_json());
        assert_eq!(art.field.unwrap().values.len(), 16);
        assert!(r.entry("reflection", "intertwine").unwrap().passed);
    }

    #[test]
    fn construction_error_is_reported() {
        let mut cfg = builtin("circle-antipodal").unwrap();
        cfg.source = RootSource::Analytic {
            target: flowroot::diffeo::DiffeoSpec::Reflection,
            depth: 3,
        };
        let (r, _) = run_scenario(&cfg);
        assert!(!r.passed);
        assert_eq!(r.failed_stage.as_deref(), Some("source/primary"));
        assert!(r.stages[0].error.is_some());
    }

    #[test]
    fn trajectory_follows_rotation() {
        let cfg = builtin("circle-antipodal").unwrap();
        let tr = trajectory(&cfg, &Point::circle(0.0), 8, 1.0).unwrap();
        assert_eq!(tr.len(), 9);
        let (t, p, _) = &tr[3];
        assert!((p.as_angle().unwrap() - std::f64::consts::PI * t).abs() < 1e-14);
    }
}
