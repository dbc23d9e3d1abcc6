//! Plain-text output formats. All writers emit a header row (CSV) or a
//! `#` comment header (edge lists, traces, QP dumps), UTF-8 with LF line
//! endings. Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;

use mccst_core::graph::{edge_weight, CommGraph};
use mccst_core::model::{RobotState, WorldConfig};
use mccst_core::protocol::TraceEntry;
use mccst_core::qp::{QpProblem, RowKind};
use mccst_core::sim::StepReport;
use mccst_core::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLine {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub intra: bool,
}

pub const EDGE_LIST_HEADER: &str = "# i j w intra_flag";

/// `i j w intra_flag` per edge of a graph.
pub fn write_graph_edges(graph: &CommGraph) -> String {
    let lines: Vec<EdgeLine> = graph
        .edges()
        .iter()
        .map(|e| EdgeLine { i: e.i, j: e.j, weight: e.weight, intra: e.intra })
        .collect();
    write_edge_list(&lines)
}

/// Edge lines for an enforced edge set, weighted at the given state.
pub fn weighted_edges(robots: &[RobotState], u_hat: &[Vec2], edges: &[(usize, usize)], config: &WorldConfig) -> Vec<EdgeLine> {
    edges
        .iter()
        .map(|&(i, j)| EdgeLine {
            i,
            j,
            weight: edge_weight(
                robots[i].position,
                robots[j].position,
                u_hat[i],
                u_hat[j],
                config.gamma,
                config.comm_radius,
            ),
            intra: robots[i].subgroup == robots[j].subgroup,
        })
        .collect()
}

pub fn write_edge_list(edges: &[EdgeLine]) -> String {
    let mut s = String::from(EDGE_LIST_HEADER);
    s.push('\n');
    for e in edges {
        let _ = writeln!(s, "{} {} {} {}", e.i, e.j, e.weight, u8::from(e.intra));
    }
    s
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("edge list line {line}: {reason}")]
pub struct EdgeListError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_edge_list(text: &str) -> Result<Vec<EdgeLine>, EdgeListError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| EdgeListError { line: k + 1, reason: reason.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        let i = f[0].parse().map_err(|_| err("bad i"))?;
        let j = f[1].parse().map_err(|_| err("bad j"))?;
        let weight = f[2].parse().map_err(|_| err("bad weight"))?;
        let intra = match f[3] {
            "0" => false,
            "1" => true,
            _ => return Err(err("intra_flag must be 0 or 1")),
        };
        out.push(EdgeLine { i, j, weight, intra });
    }
    Ok(out)
}

pub const TRACE_HEADER: &str = "# round seq from to kind";

/// `round seq from to kind` per delivered message.
pub fn write_trace(entries: &[TraceEntry]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for e in entries {
        let _ = writeln!(s, "{} {} {} {} {}", e.round, e.seq, e.from, e.to, e.kind);
    }
    s
}

/// Objective center, then `kind i j gx_i gy_i gx_j gy_j bound` per row.
/// Velocity facets put the facet index in `j` and zeros in the second
/// gradient slot.
pub fn write_qp_dump(problem: &QpProblem) -> String {
    let mut s = String::from("# nominal robot ux uy\n");
    for (r, u) in problem.nominal.iter().enumerate() {
        let _ = writeln!(s, "nominal {r} {} {}", u.x, u.y);
    }
    s.push_str("# kind i j gx_i gy_i gx_j gy_j bound\n");
    for row in &problem.rows {
        let (i, j) = match row.kind {
            RowKind::Safety(i, j) | RowKind::Connectivity(i, j) | RowKind::VelocityFacet(i, j) => (i, j),
        };
        let gi = row.coeffs.iter().find(|c| c.0 == i).map_or(Vec2::ZERO, |c| c.1);
        let gj = match row.kind {
            RowKind::VelocityFacet(..) => Vec2::ZERO,
            _ => row.coeffs.iter().find(|c| c.0 == j).map_or(Vec2::ZERO, |c| c.1),
        };
        let _ = writeln!(s, "{} {i} {j} {} {} {} {} {}", row.kind.tag(), gi.x, gi.y, gj.x, gj.y, row.bound);
    }
    s
}

pub const TRAJECTORY_HEADER: &str = "t,robot_id,x,y,heading,ux_nom,uy_nom,ux_star,uy_star";

/// One trajectory row: the state at time `t` and the controls applied from it.
pub fn trajectory_rows(out: &mut String, t: f64, robots: &[RobotState], u_hat: &[Vec2], u_star: &[Vec2]) {
    for ((r, a), b) in robots.iter().zip(u_hat).zip(u_star) {
        let _ = writeln!(
            out,
            "{t},{},{},{},{},{},{},{},{}",
            r.id, r.position.x, r.position.y, r.heading, a.x, a.y, b.x, b.y
        );
    }
}

pub const METRICS_HEADER: &str = "step,time,min_pair_distance,lambda2,subgroup_connected,perturbation,mean_dist_to_target,protocol_messages,enforced_edges,qp_status,mean_speed";

/// `subgroup_connected` is one 0/1 digit per subgroup; an empty
/// `min_pair_distance` means a single robot.
pub fn write_metrics(reports: &[StepReport]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in reports {
        let flags: String = r.subgroup_connected.iter().map(|&c| if c { '1' } else { '0' }).collect();
        let min_d = r.min_pair_distance.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{min_d},{},{flags},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.lambda2,
            r.perturbation,
            r.mean_dist_to_target,
            r.protocol_messages,
            r.enforced_edges,
            r.qp_status,
            r.mean_speed
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use mccst_core::model::WorldConfig;
    use mccst_core::qp::assemble_qp;

    #[test]
    fn edge_list_round_trip() {
        let edges = vec![
            EdgeLine { i: 0, j: 1, weight: -3.41, intra: true },
            EdgeLine { i: 1, j: 5, weight: 0.1 + 0.2, intra: false },
        ];
        let text = write_edge_list(&edges);
        assert!(text.starts_with("# i j w intra_flag\n0 1 -3.41 1\n"));
        assert_eq!(parse_edge_list(&text).unwrap(), edges);
        assert_eq!(parse_edge_list("0 1 x 1").unwrap_err().line, 1);
        assert!(parse_edge_list("0 1 2.0 2").is_err());
    }

    #[test]
    fn graph_edges() {
        let g = CommGraph::from_weighted_edges(vec![0, 0, 1], [(0, 1, 2.5), (1, 2, -1.0)]).unwrap();
        assert_eq!(write_graph_edges(&g), "# i j w intra_flag\n0 1 2.5 1\n1 2 -1 0\n");
    }

    #[test]
    fn qp_dump_lines() {
        let robots = [
            RobotState { id: 0, position: Vec2::new(0.0, 0.0), heading: 0.0, subgroup: 0, speed_limit: 1.0 },
            RobotState { id: 1, position: Vec2::new(0.9, 0.0), heading: 0.0, subgroup: 0, speed_limit: 1.0 },
        ];
        let mut config = WorldConfig::default();
        config.qp.velocity_facets = 4;
        let p = assemble_qp(&robots, &[Vec2::ZERO; 2], &[(0, 1)], &config);
        let dump = write_qp_dump(&p);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[1], "nominal 0 0 0");
        assert_eq!(lines[4], "safety 1 0 -1.8 -0 1.8 0 0.8");
        assert!(lines[5].starts_with("connectivity 0 1 -1.8 0 1.8 -0 0.18999"));
        assert_eq!(lines.len(), 4 + 2 + 8);
    }

    #[test]
    fn metrics_columns() {
        let r = StepReport {
            step: 3,
            time: 0.04,
            min_pair_distance: None,
            lambda2: 0.0,
            subgroup_connected: vec![true, false],
            perturbation: 0.25,
            mean_dist_to_target: 1.5,
            protocol_messages: 12,
            enforced_edges: 0,
            qp_status: mccst_core::qp::QpStatus::Optimal,
            mean_speed: 0.5,
        };
        let text = write_metrics(&[r]);
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row, "3,0.04,,0,10,0.25,1.5,12,0,optimal,0.5");
        assert_eq!(row.split(',').count(), METRICS_HEADER.split(',').count());
    }
}
