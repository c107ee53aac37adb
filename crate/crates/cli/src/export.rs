//! CSV exports.

use std::path::Path;

use anyhow::Result;
use flowroot::manifold::{ManifoldId, Point};

use crate::runner::FieldSamples;

fn coord_names(m: ManifoldId) -> Vec<String> {
    match m {
        ManifoldId::Circle => vec!["theta".into()],
        ManifoldId::Sphere3 => ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect(),
        ManifoldId::Torus(n) => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

/// Header of the field export: coordinates, then tangent components
/// prefixed with `xi_`.
pub fn field_header(m: ManifoldId) -> Vec<String> {
    let c = coord_names(m);
    let v = c.iter().map(|n| format!("xi_{n}"));
    c.iter().cloned().chain(v).collect()
}

pub fn trajectory_header(m: ManifoldId) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(coord_names(m))
        .chain(std::iter::once("error_estimate".to_string()))
        .collect()
}

pub fn write_field_csv(path: &Path, f: &FieldSamples) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(field_header(f.manifold))?;
    for (p, v) in f.points.iter().zip(&f.values) {
        let row: Vec<String> = p.coords().into_iter().chain(v.components()).map(|x| x.to_string()).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, m: ManifoldId, rows: &[(f64, Point, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(m))?;
    for (t, p, e) in rows {
        let row: Vec<String> = std::iter::once(*t)
            .chain(p.coords())
            .chain(std::iter::once(*e))
            .map(|x| x.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        assert_eq!(field_header(ManifoldId::Circle), ["theta", "xi_theta"]);
        assert_eq!(field_header(ManifoldId::Sphere3).len(), 8);
        assert_eq!(trajectory_header(ManifoldId::Torus(2)), ["t", "x1", "x2", "error_estimate"]);
    }
}
