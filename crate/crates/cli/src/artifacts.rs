//! Files written next to report.json.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use meancurv::critical::{Classification, CriticalPointRecord};
use meancurv::geometry::{Point, TriMesh};
use meancurv::nodal::{level_set, ArcEnd, NodalArcSet};
use sha2::{Digest, Sha256};

use crate::pipeline::Report;

const CONTOUR_LEVELS: usize = 10;
const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 20.0;

/// Data produced by a run, all optional so that partial results can be written.
#[derive(Default)]
pub struct Artifacts {
    pub mesh: Option<TriMesh>,
    pub values: Option<Vec<f64>>,
    pub critical_points: Vec<CriticalPointRecord>,
    pub nodal: Option<NodalArcSet>,
}

/// SHA-256 over the vertex coordinates and cell indices.
pub fn mesh_hash(mesh: &TriMesh) -> String {
    let mut h = Sha256::new();
    for p in &mesh.vertices {
        h.update(p[0].to_le_bytes());
        h.update(p[1].to_le_bytes());
    }
    for c in &mesh.cells {
        for v in c {
            h.update((*v as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::Minimum => "minimum",
        Classification::Maximum => "maximum",
        Classification::Saddle => "saddle",
        Classification::Degenerate => "degenerate",
    }
}

fn end_name(e: ArcEnd) -> String {
    match e {
        ArcEnd::Boundary { kind } => format!("boundary_{}", serde_json::to_value(kind).unwrap().as_str().unwrap_or("")),
        ArcEnd::Junction => "junction".into(),
        ArcEnd::Interior => "interior".into(),
    }
}

fn coord_names(meridian: bool) -> [&'static str; 2] {
    if meridian {
        ["r", "z"]
    } else {
        ["x", "y"]
    }
}

/// Writes report.json and whichever of the other artifacts the run produced.
pub fn write_all(dir: &Path, report: &Report, art: &Artifacts, meridian: bool) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    written.push(path);

    let hash = &report.config_hash;
    let names = coord_names(meridian);
    if let (Some(mesh), Some(values)) = (&art.mesh, &art.values) {
        let path = dir.join("solution.csv");
        write_solution(&path, hash, mesh, values, names)?;
        written.push(path);
    }
    if art.values.is_some() {
        let path = dir.join("critical_points.csv");
        write_critical_points(&path, hash, &art.critical_points, names)?;
        written.push(path);
    }
    if let Some(mesh) = &art.mesh {
        let contours = art.values.as_ref().map(|v| contours(mesh, v)).unwrap_or_default();
        let path = dir.join("nodal_arcs.csv");
        write_arcs(&path, hash, art.nodal.as_ref(), &contours, names)?;
        written.push(path);
        let path = dir.join("contours.svg");
        std::fs::write(&path, svg(hash, mesh, &contours, art.nodal.as_ref(), &art.critical_points))
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn csv_writer(path: &Path, comment: &str) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?);
    writeln!(file, "# {comment}")?;
    Ok(csv::Writer::from_writer(file))
}

fn write_solution(path: &Path, hash: &str, mesh: &TriMesh, values: &[f64], names: [&str; 2]) -> anyhow::Result<()> {
    let mut w = csv_writer(path, &format!("config_hash={hash} mesh_hash={}", mesh_hash(mesh)))?;
    w.write_record([names[0], names[1], "value"])?;
    for (p, v) in mesh.vertices.iter().zip(values) {
        w.write_record([p[0].to_string(), p[1].to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_critical_points(
    path: &Path,
    hash: &str,
    records: &[CriticalPointRecord],
    names: [&str; 2],
) -> anyhow::Result<()> {
    let mut w = csv_writer(path, &format!("config_hash={hash}"))?;
    w.write_record([
        names[0],
        names[1],
        "grad_norm",
        "h11",
        "h12",
        "h22",
        "eig_min",
        "eig_max",
        "gauss_curvature",
        "classification",
        "index",
    ])?;
    for r in records {
        w.write_record([
            r.location[0].to_string(),
            r.location[1].to_string(),
            r.grad_norm.to_string(),
            r.hessian[0][0].to_string(),
            r.hessian[0][1].to_string(),
            r.hessian[1][1].to_string(),
            r.eigenvalues[0].to_string(),
            r.eigenvalues[1].to_string(),
            r.gauss_curvature.to_string(),
            class_name(r.classification).to_string(),
            r.index.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct Contour {
    level: f64,
    points: Vec<Point>,
    closed: bool,
}

fn contours(mesh: &TriMesh, values: &[f64]) -> Vec<Contour> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    (1..=CONTOUR_LEVELS)
        .flat_map(|k| {
            let level = lo + (hi - lo) * k as f64 / (CONTOUR_LEVELS + 1) as f64;
            level_set(mesh, values, level).into_iter().map(move |a| Contour {
                level,
                points: a.points,
                closed: a.closed,
            })
        })
        .collect()
}

fn write_arcs(
    path: &Path,
    hash: &str,
    nodal: Option<&NodalArcSet>,
    contours: &[Contour],
    names: [&str; 2],
) -> anyhow::Result<()> {
    let mut w = csv_writer(path, &format!("config_hash={hash}"))?;
    w.write_record(["arc", "kind", "level", "start", "end", "closed", "point", names[0], names[1]])?;
    let mut id = 0usize;
    if let Some(set) = nodal {
        for arc in &set.arcs {
            for (i, p) in arc.points.iter().enumerate() {
                w.write_record([
                    id.to_string(),
                    "nodal".into(),
                    "0".into(),
                    end_name(arc.ends[0]),
                    end_name(arc.ends[1]),
                    arc.closed.to_string(),
                    i.to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                ])?;
            }
            id += 1;
        }
    }
    for c in contours {
        for (i, p) in c.points.iter().enumerate() {
            w.write_record([
                id.to_string(),
                "contour".into(),
                c.level.to_string(),
                String::new(),
                String::new(),
                c.closed.to_string(),
                i.to_string(),
                p[0].to_string(),
                p[1].to_string(),
            ])?;
        }
        id += 1;
    }
    w.flush()?;
    Ok(())
}

struct Frame {
    x0: f64,
    y1: f64,
    s: f64,
}

impl Frame {
    fn of(mesh: &TriMesh) -> (Self, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &mesh.vertices {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let s = (SVG_SIZE - 2.0 * SVG_MARGIN) / (x1 - x0).max(y1 - y0);
        let w = (x1 - x0) * s + 2.0 * SVG_MARGIN;
        let h = (y1 - y0) * s + 2.0 * SVG_MARGIN;
        (Self { x0, y1, s }, w, h)
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (SVG_MARGIN + (p[0] - self.x0) * self.s, SVG_MARGIN + (self.y1 - p[1]) * self.s)
    }

    fn path(&self, pts: &[Point], closed: bool) -> String {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { 'M' } else { 'L' });
        }
        if closed {
            d.push('Z');
        }
        d.trim_end().to_string()
    }
}

fn svg(
    hash: &str,
    mesh: &TriMesh,
    contours: &[Contour],
    nodal: Option<&NodalArcSet>,
    records: &[CriticalPointRecord],
) -> String {
    let (frame, w, h) = Frame::of(mesh);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">"
    );
    let _ = writeln!(out, "<!-- config_hash={hash} mesh_hash={} -->", mesh_hash(mesh));
    let boundary: Vec<Point> = mesh.boundary_edges.iter().map(|e| mesh.vertices[e.v[0]]).collect();
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        frame.path(&boundary, true)
    );
    for c in contours {
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#4a7ab5\" stroke-width=\"0.8\"><title>{}</title></path>",
            frame.path(&c.points, c.closed),
            c.level
        );
    }
    if let Some(set) = nodal {
        for arc in &set.arcs {
            let _ = writeln!(
                out,
                "<path d=\"{}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>",
                frame.path(&arc.points, arc.closed)
            );
        }
    }
    for r in records {
        let (x, y) = frame.map(r.location);
        let color = match r.classification {
            Classification::Minimum => "#27ae60",
            Classification::Maximum => "#8e44ad",
            Classification::Saddle => "#e67e22",
            Classification::Degenerate => "#7f8c8d",
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"><title>{}</title></circle>",
            class_name(r.classification)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Contents of a solution.csv.
pub struct StoredSolution {
    pub config_hash: String,
    pub mesh_hash: String,
    pub values: Vec<f64>,
}

pub fn read_solution(path: &Path) -> anyhow::Result<StoredSolution> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    let field = |key: &str| {
        first
            .split_whitespace()
            .find_map(|w| w.strip_prefix(key))
            .map(str::to_string)
    };
    let (Some(config_hash), Some(mesh_hash)) = (field("config_hash="), field("mesh_hash=")) else {
        bail!("missing hash header line");
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let v = rec.get(2).context("row without a value column")?;
        values.push(v.parse::<f64>().with_context(|| format!("bad value '{v}'"))?);
    }
    Ok(StoredSolution {
        config_hash,
        mesh_hash,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use meancurv::geometry::{triangulate, ConvexDomain};

    #[test]
    fn solution_round_trip_is_exact() {
        let mesh = triangulate(&ConvexDomain::disk(1.0).unwrap(), 0.3).unwrap();
        let values: Vec<f64> = mesh.vertices.iter().map(|p| (p[0] * 1e3).sin() / 7.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.csv");
        write_solution(&path, "abc", &mesh, &values, ["x", "y"]).unwrap();
        let s = read_solution(&path).unwrap();
        assert_eq!(s.config_hash, "abc");
        assert_eq!(s.mesh_hash, mesh_hash(&mesh));
        assert_eq!(s.values, values);
    }

    #[test]
    fn svg_has_one_path_per_contour() {
        let mesh = triangulate(&ConvexDomain::disk(1.0).unwrap(), 0.2).unwrap();
        let values: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
        let c = contours(&mesh, &values);
        assert_eq!(c.len(), CONTOUR_LEVELS);
        let text = svg("h", &mesh, &c, None, &[]);
        assert_eq!(text.matches("<path").count(), CONTOUR_LEVELS + 1);
        assert!(text.starts_with("<svg") && text.ends_with("</svg>\n"));
    }
}
