//! Region grid, node placement, boundary election and next-hop planning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::SimError;
use crate::detection::Mode;

pub type NodeId = usize;

/// RNG stream for node placement.
pub(crate) const TOPOLOGY_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Member,
    Boundary,
    Sink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Position,
    pub region: usize,
    pub role: Role,
    pub mode: Mode,
    pub residual_j: f64,
    /// Seconds spent in each [`Mode`], indexed by `Mode::index`.
    pub mode_time_s: [f64; 3],
}

impl Node {
    pub fn is_depleted(&self) -> bool {
        self.residual_j <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub col: usize,
    pub row: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub size: f64,
    /// Sensor ids; the sink is never a member.
    pub members: Vec<NodeId>,
    pub boundary: Option<NodeId>,
}

impl Region {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.x_min
            && p.x <= self.x_min + self.size
            && p.y >= self.y_min
            && p.y <= self.y_min + self.size
    }
}

/// Sensors occupy ids `0..sensor_count`; the sink is the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub regions: Vec<Region>,
    pub cols: usize,
    pub rows: usize,
    pub region_size: f64,
    pub sink_id: NodeId,
}

impl Topology {
    /// Assemble a topology from explicit sensor positions and elect one
    /// boundary per non-empty region.
    pub fn from_positions(
        cols: usize,
        rows: usize,
        region_size: f64,
        sensors: &[Position],
        sink: Position,
        battery_j: f64,
    ) -> Result<Self, SimError> {
        let mut regions: Vec<Region> = (0..rows)
            .flat_map(|row| (0..cols).map(move |col| (row, col)))
            .enumerate()
            .map(|(id, (row, col))| Region {
                id,
                col,
                row,
                x_min: col as f64 * region_size,
                y_min: row as f64 * region_size,
                size: region_size,
                members: Vec::new(),
                boundary: None,
            })
            .collect();
        let locate = |p: Position| -> Result<usize, SimError> {
            let col = (p.x / region_size).floor() as isize;
            let row = (p.y / region_size).floor() as isize;
            // points on the far edge belong to the last region
            let col = col.clamp(0, cols as isize - 1) as usize;
            let row = row.clamp(0, rows as isize - 1) as usize;
            let field = (cols as f64 * region_size, rows as f64 * region_size);
            if p.x < 0.0 || p.y < 0.0 || p.x > field.0 || p.y > field.1 {
                return Err(SimError::Config(format!(
                    "position ({}, {}) lies outside the field",
                    p.x, p.y
                )));
            }
            Ok(row * cols + col)
        };
        let mut nodes = Vec::with_capacity(sensors.len() + 1);
        for (id, &position) in sensors.iter().enumerate() {
            let region = locate(position)?;
            regions[region].members.push(id);
            nodes.push(Node {
                id,
                position,
                region,
                role: Role::Member,
                mode: Mode::Sleep,
                residual_j: battery_j,
                mode_time_s: [0.0; 3],
            });
        }
        let sink_id = nodes.len();
        nodes.push(Node {
            id: sink_id,
            position: sink,
            region: locate(sink)?,
            role: Role::Sink,
            mode: Mode::Active,
            residual_j: f64::INFINITY,
            mode_time_s: [0.0; 3],
        });
        let mut topo = Self {
            nodes,
            regions,
            cols,
            rows,
            region_size,
            sink_id,
        };
        for r in 0..topo.regions.len() {
            if topo.regions[r].members.is_empty() {
                continue;
            }
            let b = elect_boundary(&topo.regions[r], &topo.nodes, sink)?;
            topo.regions[r].boundary = Some(b);
            topo.nodes[b].role = Role::Boundary;
        }
        Ok(topo)
    }

    pub fn sink(&self) -> Position {
        self.nodes[self.sink_id].position
    }

    pub fn sensor_count(&self) -> usize {
        self.sink_id
    }

    pub fn sensors(&self) -> &[Node] {
        &self.nodes[..self.sink_id]
    }

    /// Ids of the up-to-eight regions sharing an edge or corner with `region`.
    pub fn adjacent_regions(&self, region: usize) -> impl Iterator<Item = usize> + '_ {
        let (row, col) = (region / self.cols, region % self.cols);
        (-1isize..=1)
            .flat_map(|dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&d| d != (0, 0))
            .filter_map(move |(dr, dc)| {
                let r = row as isize + dr;
                let c = col as isize + dc;
                (r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols)
                    .then(|| r as usize * self.cols + c as usize)
            })
    }
}

/// Place `node_count` sensors round-robin over the regions, uniformly inside
/// each region, and put the sink at its configured position.
pub fn generate_topology(cfg: &ScenarioConfig, seed: u64) -> Result<Topology, SimError> {
    cfg.validate()?;
    let (cols, rows) = (cfg.regions_x(), cfg.regions_y());
    let n_regions = cols * rows;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TOPOLOGY_STREAM);
    let size = cfg.region_size_m;
    let positions: Vec<Position> = (0..cfg.node_count)
        .map(|i| {
            let region = i % n_regions;
            let (row, col) = (region / cols, region % cols);
            let x = col as f64 * size + rng.gen::<f64>() * size;
            let y = row as f64 * size + rng.gen::<f64>() * size;
            Position::new(x, y)
        })
        .collect();
    Topology::from_positions(
        cols,
        rows,
        size,
        &positions,
        Position::new(cfg.sink_x, cfg.sink_y),
        cfg.initial_battery_j,
    )
}

/// Member closest to the sink; ties go to the lowest id.
pub fn elect_boundary(region: &Region, nodes: &[Node], sink: Position) -> Result<NodeId, SimError> {
    elect_boundary_among(region, nodes, sink, |_| true).ok_or(SimError::EmptyRegion(region.id))
}

pub(crate) fn elect_boundary_among(
    region: &Region,
    nodes: &[Node],
    sink: Position,
    eligible: impl Fn(NodeId) -> bool,
) -> Option<NodeId> {
    region
        .members
        .iter()
        .copied()
        .filter(|&id| eligible(id))
        .min_by(|&a, &b| {
            let da = nodes[a].position.distance(sink);
            let db = nodes[b].position.distance(sink);
            da.total_cmp(&db).then(a.cmp(&b))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextHop {
    Sink,
    Node(NodeId),
}

/// Greedy one-hop forwarding toward the sink.
///
/// Candidates are the boundary nodes of the adjacent regions plus every
/// relay-capable node within `radio_range`; the sink itself is a candidate
/// when in range. Only candidates strictly closer to the sink qualify; the
/// closest wins, ties by lowest id.
pub fn plan_next_hop(
    topo: &Topology,
    from: NodeId,
    radio_range: f64,
    is_relay: impl Fn(NodeId) -> bool,
) -> Result<NextHop, SimError> {
    let sink = topo.sink();
    let here = topo.nodes[from].position;
    let own = here.distance(sink);
    if own <= radio_range {
        return Ok(NextHop::Sink);
    }
    let region = topo.nodes[from].region;
    let adjacent = topo
        .adjacent_regions(region)
        .filter_map(|r| topo.regions[r].boundary);
    let in_range = topo
        .sensors()
        .iter()
        .filter(|n| n.position.distance(here) <= radio_range)
        .map(|n| n.id);
    adjacent
        .chain(in_range)
        .filter(|&id| id != from && is_relay(id))
        .map(|id| (topo.nodes[id].position.distance(sink), id))
        .filter(|&(d, _)| d < own)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| NextHop::Node(id))
        .ok_or(SimError::NoProgress { node: from })
}
