//! JSON file formats and SVG rendering.
//!
//! Every document written here carries `format_version`; readers accept
//! input files without it.

use crate::abstraction::{Dynamics, ModelError, SafeCell, StateBounds, StateSpace, TransitionSystem};
use crate::geometry::{ConvexPolygon, GeometryError, PartitionResult, Point2, RegionKind, WorkspaceSpec};
use crate::imaging::{AffineImagingMap, LaserMap};
use crate::smc::Lit;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {context}: {message}")]
    ParseError { context: String, message: String },
    #[error("invalid {context}: {message}")]
    Invalid { context: String, message: String },
}

impl IoError {
    fn parse(context: &str, e: impl std::fmt::Display) -> Self {
        IoError::ParseError {
            context: context.to_string(),
            message: e.to_string(),
        }
    }

    fn invalid(context: &str, e: impl std::fmt::Display) -> Self {
        IoError::Invalid {
            context: context.to_string(),
            message: e.to_string(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let io = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
    }
    std::fs::write(path, text).map_err(io)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document serializes");
    s.push('\n');
    s
}

fn check_version(context: &str, v: Option<u32>) -> Result<(), IoError> {
    match v {
        Some(v) if v != FORMAT_VERSION => Err(IoError::invalid(
            context,
            format!("unsupported format_version {v} (expected {FORMAT_VERSION})"),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    boundary: Vec<Point2>,
    #[serde(default)]
    obstacles: Vec<Vec<Point2>>,
}

pub fn parse_workspace(text: &str) -> Result<WorkspaceSpec, IoError> {
    let f: WorkspaceFile = serde_json::from_str(text).map_err(|e| IoError::parse("workspace", e))?;
    check_version("workspace", f.format_version)?;
    let polygon = |what: String, pts: Vec<Point2>| {
        ConvexPolygon::new(pts).map_err(|e: GeometryError| IoError::invalid("workspace", format!("{what}: {e}")))
    };
    let boundary = polygon("boundary".into(), f.boundary)?;
    let obstacles = f
        .obstacles
        .into_iter()
        .enumerate()
        .map(|(i, o)| polygon(format!("obstacle {i}"), o))
        .collect::<Result<Vec<_>, _>>()?;
    WorkspaceSpec::new(boundary, obstacles).map_err(|e| IoError::invalid("workspace", e))
}

pub fn workspace_to_json(ws: &WorkspaceSpec) -> String {
    to_json(&WorkspaceFile {
        format_version: Some(FORMAT_VERSION),
        boundary: ws.boundary().vertices().to_vec(),
        obstacles: ws.obstacles().iter().map(|o| o.vertices().to_vec()).collect(),
    })
}

pub fn load_workspace(path: &Path) -> Result<WorkspaceSpec, IoError> {
    parse_workspace(&read_text(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: IoError, path: &Path) -> IoError {
    match e {
        IoError::ParseError { context, message } => IoError::ParseError {
            context: format!("{context} file {}", path.display()),
            message,
        },
        IoError::Invalid { context, message } => IoError::Invalid {
            context: format!("{context} file {}", path.display()),
            message,
        },
        e => e,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format_version: Option<u32>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<StateBounds>,
}

/// Dynamics plus auxiliary-state bounds; bounds are required exactly when
/// the state has more than the two position coordinates.
pub fn parse_dynamics(text: &str) -> Result<(Dynamics, StateBounds), IoError> {
    let f: DynamicsFile = serde_json::from_str(text).map_err(|e| IoError::parse("dynamics", e))?;
    check_version("dynamics", f.format_version)?;
    let dyn_ = Dynamics::new(f.a, f.b).map_err(|e| IoError::invalid("dynamics", e))?;
    let bounds = f.bounds.unwrap_or_else(StateBounds::none);
    if bounds.aux_dims() + 2 != dyn_.state_dim() {
        return Err(IoError::invalid(
            "dynamics",
            format!(
                "state dimension {} needs bounds for {} auxiliary coordinates, got {}",
                dyn_.state_dim(),
                dyn_.state_dim().saturating_sub(2),
                bounds.aux_dims()
            ),
        ));
    }
    bounds.counts().map_err(|e: ModelError| IoError::invalid("dynamics", e))?;
    Ok((dyn_, bounds))
}

pub fn dynamics_to_json(d: &Dynamics, bounds: &StateBounds) -> String {
    to_json(&DynamicsFile {
        format_version: Some(FORMAT_VERSION),
        a: d.a.clone(),
        b: d.b.clone(),
        bounds: (bounds.aux_dims() > 0).then(|| bounds.clone()),
    })
}

pub fn load_dynamics(path: &Path) -> Result<(Dynamics, StateBounds), IoError> {
    parse_dynamics(&read_text(path)?).map_err(|e| with_path(e, path))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionRegionDoc {
    pub id: usize,
    pub kind: RegionKind,
    pub aggregate: usize,
    pub vertices: Vec<Point2>,
    /// Per laser; absent for obstacle interiors.
    pub imaging: Option<Vec<LaserMap>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AggregateDoc {
    pub id: usize,
    pub kind: RegionKind,
    pub outline: Vec<Point2>,
    pub hull: Vec<Point2>,
    pub members: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub format_version: u32,
    pub laser_angles: Vec<f64>,
    pub primary_lasers: Vec<usize>,
    pub regions: Vec<PartitionRegionDoc>,
    pub aggregates: Vec<AggregateDoc>,
}

impl PartitionDoc {
    pub fn new(
        partition: &PartitionResult,
        maps: &[Option<AffineImagingMap>],
        laser_angles: Vec<f64>,
        primary_lasers: Vec<usize>,
    ) -> Self {
        let members = partition.aggregate_members();
        Self {
            format_version: FORMAT_VERSION,
            laser_angles,
            primary_lasers,
            regions: partition
                .fine_regions
                .iter()
                .enumerate()
                .map(|(i, r)| PartitionRegionDoc {
                    id: i,
                    kind: partition.region_kind[i],
                    aggregate: partition.fine_to_aggregate[i],
                    vertices: r.vertices().to_vec(),
                    imaging: maps.get(i).and_then(|m| m.as_ref()).map(|m| m.lasers.clone()),
                })
                .collect(),
            aggregates: partition
                .aggregate_regions
                .iter()
                .enumerate()
                .map(|(i, a)| AggregateDoc {
                    id: i,
                    kind: a.kind,
                    outline: a.outline.clone(),
                    hull: a.hull.vertices().to_vec(),
                    members: members[i].clone(),
                })
                .collect(),
        }
    }
}

/// Conflict cache of one fine region. `encoding_hash` ties the
/// clauses to the encoding they were learned from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictCacheDoc {
    pub format_version: u32,
    pub region: usize,
    pub vertices: Vec<Point2>,
    pub relu_count: usize,
    pub encoding_hash: String,
    pub feasible_phases: usize,
    /// DIMACS-style literals: variable = 1-based cumulative ReLU index.
    pub clauses: Vec<Vec<i64>>,
}

pub fn clauses_to_dimacs(clauses: &[Vec<Lit>]) -> Vec<Vec<i64>> {
    clauses.iter().map(|c| c.iter().map(|l| l.to_dimacs()).collect()).collect()
}

pub fn clauses_from_dimacs(clauses: &[Vec<i64>], num_bools: usize) -> Result<Vec<Vec<Lit>>, IoError> {
    clauses
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_empty() {
                return Err(IoError::invalid("conflict cache", format!("clause {i} is empty")));
            }
            c.iter()
                .map(|&x| match Lit::from_dimacs(x) {
                    Some(l) if l.var() < num_bools => Ok(l),
                    _ => Err(IoError::invalid(
                        "conflict cache",
                        format!("clause {i}: literal {x} outside ±1..={num_bools}"),
                    )),
                })
                .collect()
        })
        .collect()
}

pub fn parse_conflict_cache(text: &str) -> Result<ConflictCacheDoc, IoError> {
    let d: ConflictCacheDoc = serde_json::from_str(text).map_err(|e| IoError::parse("conflict cache", e))?;
    check_version("conflict cache", Some(d.format_version))?;
    clauses_from_dimacs(&d.clauses, d.relu_count)?;
    Ok(d)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateDoc {
    pub id: usize,
    pub region: usize,
    pub aux: Vec<usize>,
    pub aux_box: Vec<(f64, f64)>,
    pub aggregate: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AggregateStateDoc {
    pub id: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AbstractionDoc {
    pub format_version: u32,
    pub states: Vec<StateDoc>,
    pub sink: usize,
    pub aggregates: Vec<AggregateStateDoc>,
    /// `(s, s')` pairs in ascending order, sink included.
    pub transitions: Vec<(usize, usize)>,
    pub unsafe0: Vec<usize>,
    pub safe: Vec<usize>,
}

impl AbstractionDoc {
    pub fn new(space: &StateSpace, ts: &TransitionSystem, unsafe_flags: &[bool]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            states: (0..space.len())
                .map(|i| StateDoc {
                    id: i,
                    region: space.states[i].region,
                    aux: space.states[i].aux.clone(),
                    aux_box: space.cells[i].aux.clone(),
                    aggregate: space.aggregate_of[i],
                })
                .collect(),
            sink: space.sink(),
            aggregates: space
                .aggregates
                .iter()
                .map(|a| AggregateStateDoc {
                    id: a.aggregate,
                    members: a.members.clone(),
                })
                .collect(),
            transitions: ts
                .successors
                .iter()
                .enumerate()
                .flat_map(|(s, succ)| succ.iter().map(move |&t| (s, t)))
                .collect(),
            unsafe0: (0..ts.num_states()).filter(|&s| ts.unsafe0[s]).collect(),
            safe: (0..space.len()).filter(|&s| !unsafe_flags[s]).collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SafeSetDoc {
    pub format_version: u32,
    pub cells: Vec<SafeCell>,
}

impl SafeSetDoc {
    pub fn new(cells: Vec<SafeCell>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            cells,
        }
    }
}

pub fn parse_safe_set(text: &str) -> Result<SafeSetDoc, IoError> {
    let d: SafeSetDoc = serde_json::from_str(text).map_err(|e| IoError::parse("safe set", e))?;
    check_version("safe set", Some(d.format_version))?;
    Ok(d)
}

/// One filled polygon of an SVG drawing.
#[derive(Debug, Clone)]
pub struct SvgShape<'a> {
    pub vertices: &'a [Point2],
    pub fill: &'static str,
    pub stroke: &'static str,
}

const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 10.0;

/// Static drawing in workspace coordinates with `y` pointing up.
pub fn render_svg(ws: &WorkspaceSpec, shapes: &[SvgShape<'_>]) -> String {
    let (lo, hi) = ws.boundary().bbox();
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    let w = (hi.x - lo.x) * scale + 2.0 * SVG_MARGIN;
    let h = (hi.y - lo.y) * scale + 2.0 * SVG_MARGIN;
    let map = |p: Point2| (SVG_MARGIN + (p.x - lo.x) * scale, SVG_MARGIN + (hi.y - p.y) * scale);
    let points = |vs: &[Point2]| {
        let mut s = String::new();
        for (i, &v) in vs.iter().enumerate() {
            let (x, y) = map(v);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##,
        points(ws.boundary().vertices())
    );
    for s in shapes {
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" stroke="{}" stroke-width="0.5"/>"#,
            points(s.vertices),
            s.fill,
            s.stroke
        );
    }
    for o in ws.obstacles() {
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#555555" stroke="#000000" stroke-width="1"/>"##,
            points(o.vertices())
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn partition_svg(ws: &WorkspaceSpec, partition: &PartitionResult) -> String {
    let shapes: Vec<SvgShape<'_>> = partition
        .free_regions()
        .map(|(_, r)| SvgShape {
            vertices: r.vertices(),
            fill: "#eef4fb",
            stroke: "#4a78b0",
        })
        .collect();
    render_svg(ws, &shapes)
}

/// Free regions shaded by whether any of their states is safe.
pub fn safe_set_svg(ws: &WorkspaceSpec, partition: &PartitionResult, cells: &[SafeCell]) -> String {
    let mut safe = vec![false; partition.fine_regions.len()];
    for c in cells {
        safe[c.region] = true;
    }
    let shapes: Vec<SvgShape<'_>> = partition
        .free_regions()
        .map(|(i, r)| SvgShape {
            vertices: r.vertices(),
            fill: if safe[i] { "#7fd17f" } else { "#f2b8b8" },
            stroke: "#666666",
        })
        .collect();
    render_svg(ws, &shapes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"boundary": [[0,0],[4,0],[4,4],[0,4]], "obstacles": [[[1,1],[2,1],[2,2],[1,2]]]}"#;

    #[test]
    fn workspace_round_trip() {
        let ws = parse_workspace(EXAMPLE).unwrap();
        assert_eq!(ws.obstacles().len(), 1);
        let again = parse_workspace(&workspace_to_json(&ws)).unwrap();
        assert_eq!(ws, again);
    }

    #[test]
    fn workspace_errors() {
        assert!(matches!(parse_workspace("{"), Err(IoError::ParseError { .. })));
        assert!(matches!(
            parse_workspace(r#"{"boundary": [[0,0],[1,0]]}"#),
            Err(IoError::Invalid { .. })
        ));
        assert!(matches!(
            parse_workspace(r#"{"boundary": [[0,0],[4,0],[4,4],[0,4]], "obstacles": [[[3,3],[5,3],[5,5],[3,5]]]}"#),
            Err(IoError::Invalid { .. })
        ));
        assert!(matches!(
            parse_workspace(r#"{"format_version": 9, "boundary": [[0,0],[4,0],[4,4],[0,4]]}"#),
            Err(IoError::Invalid { .. })
        ));
        assert!(matches!(
            parse_workspace(r#"{"boundary": [[0,0],[4,0],[4,4],[0,4]], "extra": 1}"#),
            Err(IoError::ParseError { .. })
        ));
    }

    #[test]
    fn dynamics_bounds_rules() {
        let (d, b) = parse_dynamics(r#"{"A": [[1,0],[0,1]], "B": [[0.5,0],[0,0.5]]}"#).unwrap();
        assert_eq!(d.state_dim(), 2);
        assert_eq!(b.aux_dims(), 0);
        let three = r#"{"A": [[1,0,0],[0,1,0],[0,0,1]], "B": [[1],[0],[0]]}"#;
        assert!(matches!(parse_dynamics(three), Err(IoError::Invalid { .. })));
        let with = r#"{"A": [[1,0,0],[0,1,0],[0,0,1]], "B": [[1],[0],[0]], "bounds": {"lower": [0], "upper": [1], "epsilon": 0.5}}"#;
        let (d, b) = parse_dynamics(with).unwrap();
        assert_eq!((d.state_dim(), b.counts().unwrap()), (3, vec![2]));
        let bad = r#"{"A": [[1,0,0],[0,1,0],[0,0,1]], "B": [[1],[0],[0]], "bounds": {"lower": [0], "upper": [1], "epsilon": 0.3}}"#;
        assert!(matches!(parse_dynamics(bad), Err(IoError::Invalid { .. })));
        let again = parse_dynamics(&dynamics_to_json(&d, &b)).unwrap();
        assert_eq!(again, (d, b));
    }

    #[test]
    fn conflict_cache_validation() {
        let doc = ConflictCacheDoc {
            format_version: FORMAT_VERSION,
            region: 0,
            vertices: vec![],
            relu_count: 2,
            encoding_hash: "0".into(),
            feasible_phases: 1,
            clauses: vec![vec![-1], vec![2, -1]],
        };
        let text = to_json(&doc);
        assert_eq!(parse_conflict_cache(&text).unwrap(), doc);
        let bad = text.replace("-1\n", "-3\n");
        assert!(parse_conflict_cache(&bad).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let ws = parse_workspace(EXAMPLE).unwrap();
        let sq = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)];
        let svg = render_svg(
            &ws,
            &[SvgShape {
                vertices: &sq,
                fill: "#00ff00",
                stroke: "#000000",
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polygon").count(), 3);
        // (0,0) maps to the bottom-left corner.
        assert!(svg.contains("10.000,630.000"));
    }
}
