//! Event loop for a single run.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{BaselineKind, ScenarioConfig};
use super::environment::EnvironmentField;
use super::report::{DecisionCounts, PowerStateTimes, SimReport};
use super::sensing::{sense_and_decide, DetectionContext};
use super::topology::{
    elect_boundary_among, generate_topology, plan_next_hop, NextHop, NodeId, Role, Topology,
};
use super::SimError;
use crate::detection::Mode;
use crate::energy::network_energy;

const FLOW_STREAM: u64 = 1;
const SENSING_STREAM: u64 = 2;

/// What the radio and sensor are doing; decides the instantaneous draw.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerState {
    Tx,
    /// Radio on, idle listening.
    Listen,
    /// Sensor on, radio idle.
    Sense,
    Sleep,
    Passive,
    Off,
    /// Listening for the given fraction of the time, asleep otherwise.
    Duty(f64),
}

const TX: usize = 0;
const LISTEN: usize = 1;
const SENSE: usize = 2;
const SLEEP: usize = 3;
const PASSIVE: usize = 4;
const OFF: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    SimEnd,
    Depleted { generation: u64 },
    TxComplete,
    ListenEnd { generation: u64 },
    InitEnd,
    SenseEnd,
    SenseStart,
    Generate,
}

impl EventKind {
    fn rank(self) -> u8 {
        match self {
            EventKind::SimEnd => 0,
            EventKind::Depleted { .. } => 1,
            EventKind::TxComplete => 2,
            EventKind::ListenEnd { .. } => 3,
            EventKind::InitEnd => 4,
            EventKind::SenseEnd => 5,
            EventKind::SenseStart => 6,
            EventKind::Generate => 7,
        }
    }
}

/// Total order: time, then event rank, then node (or flow) id, then insertion.
#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    /// Node id, or flow index for `Generate`.
    target: usize,
    seq: u64,
}

impl Event {
    fn key(&self) -> (f64, u8, usize, u64) {
        (self.time, self.kind.rank(), self.target, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed so the max-heap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

#[derive(Debug, Clone)]
struct Packet {
    bytes: u64,
}

#[derive(Debug, Clone)]
struct Flow {
    region: usize,
    bytes: u64,
    packets: u64,
    next: u64,
    phase: f64,
    interval: f64,
}

impl Flow {
    fn packet_bytes(&self, index: u64, packet_size: u64) -> u64 {
        if index + 1 < self.packets {
            packet_size
        } else {
            self.bytes - (self.packets - 1) * packet_size
        }
    }
}

#[derive(Debug, Clone)]
struct Runtime {
    base: PowerState,
    transmitting: bool,
    sensing: bool,
    dead: bool,
    stalled: bool,
    last_t: f64,
    consumed_j: f64,
    harvested_j: f64,
    state_s: [f64; 6],
    depletion_generation: u64,
    listen_generation: u64,
    epoch: u64,
    queue: VecDeque<Packet>,
    hop: Option<NextHop>,
}

impl Runtime {
    fn new(base: PowerState) -> Self {
        Self {
            base,
            transmitting: false,
            sensing: false,
            dead: false,
            stalled: false,
            last_t: 0.0,
            consumed_j: 0.0,
            harvested_j: 0.0,
            state_s: [0.0; 6],
            depletion_generation: 0,
            listen_generation: 0,
            epoch: 0,
            queue: VecDeque::new(),
            hop: None,
        }
    }

    fn effective(&self) -> PowerState {
        if self.dead {
            PowerState::Off
        } else if self.transmitting {
            PowerState::Tx
        } else if self.sensing {
            PowerState::Sense
        } else {
            self.base
        }
    }
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    kind: &'a BaselineKind,
    aes: bool,
    topo: Topology,
    env: EnvironmentField,
    ctx: Option<DetectionContext>,
    rt: Vec<Runtime>,
    heap: BinaryHeap<Event>,
    seq: u64,
    t_end: f64,
    init_end: f64,
    steady: bool,
    sense_rng: ChaCha8Rng,
    flows: Vec<Flow>,
    active_per_region: Vec<usize>,
    generated: u64,
    delivered: u64,
    dropped: u64,
    first_death: Option<f64>,
    depleted: usize,
    region_violations: u64,
    sleeping_transmissions: u64,
    decisions: DecisionCounts,
}

/// Simulate one protocol on one seeded scenario.
pub fn run(cfg: &ScenarioConfig, kind: &BaselineKind, seed: u64) -> Result<SimReport, SimError> {
    cfg.validate()?;
    kind.validate()?;
    let topo = generate_topology(cfg, seed)?;
    let ctx = if kind.is_aes() {
        Some(DetectionContext::new(&cfg.detection)?)
    } else {
        None
    };
    let mut sim = Sim::new(cfg, kind, seed, topo, ctx);
    if cfg.sim_duration_s > 0.0 {
        sim.start();
        sim.event_loop();
    }
    sim.finish(seed)
}

impl<'a> Sim<'a> {
    fn new(
        cfg: &'a ScenarioConfig,
        kind: &'a BaselineKind,
        seed: u64,
        topo: Topology,
        ctx: Option<DetectionContext>,
    ) -> Self {
        let mut flow_rng = ChaCha8Rng::seed_from_u64(seed);
        flow_rng.set_stream(FLOW_STREAM);
        let mut sense_rng = ChaCha8Rng::seed_from_u64(seed);
        sense_rng.set_stream(SENSING_STREAM);
        let flows = Self::plan_flows(cfg, topo.regions.len(), &mut flow_rng);
        let mut rt: Vec<Runtime> = (0..topo.nodes.len())
            .map(|_| Runtime::new(PowerState::Sleep))
            .collect();
        rt[topo.sink_id].base = PowerState::Listen;
        let regions = topo.regions.len();
        Self {
            cfg,
            kind,
            aes: kind.is_aes(),
            env: EnvironmentField::new(cfg.indoor_zones.clone(), cfg.detection.pc),
            ctx,
            rt,
            heap: BinaryHeap::new(),
            seq: 0,
            t_end: cfg.sim_duration_s,
            init_end: cfg.init_phase_s,
            steady: false,
            sense_rng,
            flows,
            active_per_region: vec![0; regions],
            generated: 0,
            delivered: 0,
            dropped: 0,
            first_death: None,
            depleted: 0,
            region_violations: 0,
            sleeping_transmissions: 0,
            decisions: DecisionCounts::default(),
            topo,
        }
    }

    fn plan_flows(cfg: &ScenarioConfig, regions: usize, rng: &mut ChaCha8Rng) -> Vec<Flow> {
        use rand::Rng;
        let c = cfg.connections as u64;
        let per = cfg.data_total_bytes / c;
        let rem = cfg.data_total_bytes % c;
        let window = cfg.sim_duration_s - cfg.init_phase_s;
        (0..c)
            .map(|f| {
                let bytes = per + u64::from(f < rem);
                let packets = bytes.div_ceil(cfg.packet_size_bytes);
                Flow {
                    region: rng.gen_range(0..regions),
                    bytes,
                    packets,
                    next: 0,
                    phase: f as f64 / c as f64,
                    interval: if packets > 0 {
                        window / packets as f64
                    } else {
                        0.0
                    },
                }
            })
            .collect()
    }

    fn push(&mut self, time: f64, kind: EventKind, target: usize) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            kind,
            target,
            seq: self.seq,
        });
    }

    fn battery(&self) -> f64 {
        self.cfg.initial_battery_j
    }

    fn draw_w(&self, state: PowerState) -> f64 {
        let e = &self.cfg.energy;
        match state {
            PowerState::Tx | PowerState::Listen => e.power_comm * 1e-3,
            PowerState::Sense => e.power_sense * 1e-3,
            PowerState::Sleep => e.power_sleep * 1e-3,
            PowerState::Passive | PowerState::Off => 0.0,
            PowerState::Duty(d) => (d * e.power_comm + (1.0 - d) * e.power_sleep) * 1e-3,
        }
    }

    /// Charge node `i` for the time since its last update.
    fn advance(&mut self, i: NodeId, t: f64) {
        let dt = t - self.rt[i].last_t;
        if dt <= 0.0 {
            return;
        }
        let state = self.rt[i].effective();
        let power = self.draw_w(state);
        let harvest_w = self.cfg.energy.harvest_w();
        let battery = self.battery();
        let node = &mut self.topo.nodes[i];
        let r = &mut self.rt[i];
        match state {
            PowerState::Duty(d) => {
                r.state_s[LISTEN] += d * dt;
                r.state_s[SLEEP] += (1.0 - d) * dt;
                node.mode_time_s[Mode::Active.index()] += d * dt;
                node.mode_time_s[Mode::Sleep.index()] += (1.0 - d) * dt;
            }
            _ => {
                let (slot, mode) = match state {
                    PowerState::Tx => (TX, Mode::Active),
                    PowerState::Listen => (LISTEN, Mode::Active),
                    PowerState::Sense => (SENSE, node.mode),
                    // an idle AES boundary node stays logically active
                    PowerState::Sleep => (SLEEP, node.mode),
                    PowerState::Passive => (PASSIVE, Mode::Passive),
                    PowerState::Off => (OFF, Mode::Sleep),
                    PowerState::Duty(_) => unreachable!(),
                };
                r.state_s[slot] += dt;
                node.mode_time_s[mode.index()] += dt;
            }
        }
        let draw = (power * dt).min(node.residual_j);
        node.residual_j -= draw;
        r.consumed_j += draw;
        if state == PowerState::Passive {
            let credit = (harvest_w * dt).min(battery - node.residual_j).max(0.0);
            node.residual_j += credit;
            r.harvested_j += credit;
        }
        r.last_t = t;
    }

    /// Re-arm the depletion alarm after the draw of node `i` changed.
    fn rearm(&mut self, i: NodeId, t: f64) {
        self.rt[i].depletion_generation += 1;
        if self.rt[i].dead || i == self.topo.sink_id {
            return;
        }
        let power = self.draw_w(self.rt[i].effective());
        if power > 0.0 {
            let at = t + self.topo.nodes[i].residual_j / power;
            if at < self.t_end {
                let generation = self.rt[i].depletion_generation;
                self.push(at, EventKind::Depleted { generation }, i);
            }
        }
    }

    fn set_base(&mut self, i: NodeId, t: f64, base: PowerState) {
        self.advance(i, t);
        self.rt[i].base = base;
        self.rearm(i, t);
    }

    fn set_transmitting(&mut self, i: NodeId, t: f64, on: bool) {
        self.advance(i, t);
        self.rt[i].transmitting = on;
        self.rearm(i, t);
    }

    fn set_sensing(&mut self, i: NodeId, t: f64, on: bool) {
        self.advance(i, t);
        self.rt[i].sensing = on;
        self.rearm(i, t);
    }

    /// Change the logical mode, keeping the per-region active count.
    fn set_mode(&mut self, i: NodeId, t: f64, mode: Mode) {
        self.advance(i, t);
        let region = self.topo.nodes[i].region;
        let old = self.topo.nodes[i].mode;
        if old == mode {
            return;
        }
        if old == Mode::Active {
            self.active_per_region[region] -= 1;
        }
        if mode == Mode::Active {
            self.active_per_region[region] += 1;
            if self.aes && self.steady && self.active_per_region[region] > 1 {
                self.region_violations += 1;
            }
        }
        self.topo.nodes[i].mode = mode;
    }

    fn sensors(&self) -> std::ops::Range<NodeId> {
        0..self.topo.sink_id
    }

    fn start(&mut self) {
        let sink = self.topo.sink();
        let range = self.cfg.radio_range_m;
        for i in self.sensors() {
            let near_sink = self.topo.nodes[i].position.distance(sink) <= range;
            if near_sink {
                self.set_mode(i, 0.0, Mode::Active);
                let base = if self.aes {
                    PowerState::Sense
                } else {
                    PowerState::Listen
                };
                self.rt[i].base = base;
            }
            self.rearm(i, 0.0);
        }
        self.push(self.t_end, EventKind::SimEnd, 0);
        self.push(self.init_end, EventKind::InitEnd, 0);
    }

    fn event_loop(&mut self) {
        while let Some(ev) = self.heap.pop() {
            let t = ev.time;
            let i = ev.target;
            match ev.kind {
                EventKind::SimEnd => break,
                EventKind::Depleted { generation } => {
                    if !self.rt[i].dead && self.rt[i].depletion_generation == generation {
                        self.advance(i, t);
                        self.kill(i, t);
                    }
                }
                EventKind::TxComplete => self.tx_complete(i, t),
                EventKind::ListenEnd { generation } => {
                    if !self.rt[i].dead && self.rt[i].listen_generation == generation {
                        self.set_base(i, t, PowerState::Duty(self.kind.effective_duty()));
                    }
                }
                EventKind::InitEnd => self.init_end(t),
                EventKind::SenseEnd => self.sense_end(i, t),
                EventKind::SenseStart => self.sense_start(i, t),
                EventKind::Generate => self.generate(i, t),
            }
        }
    }

    fn init_end(&mut self, t: f64) {
        self.steady = true;
        let sensors = self.sensors();
        if self.aes {
            // Active nodes sleep between tasks, so every base state is Sleep.
            // Demote first so promotions never see a stale active peer.
            for i in sensors.clone() {
                if !self.rt[i].dead {
                    if self.topo.nodes[i].role != Role::Boundary {
                        self.set_mode(i, t, Mode::Sleep);
                    }
                    self.set_base(i, t, PowerState::Sleep);
                    self.rt[i].epoch = 0;
                    self.push(t, EventKind::SenseStart, i);
                }
            }
            for i in sensors {
                if !self.rt[i].dead && self.topo.nodes[i].role == Role::Boundary {
                    self.set_mode(i, t, Mode::Active);
                }
            }
        } else {
            let duty = PowerState::Duty(self.kind.effective_duty());
            for i in sensors {
                if !self.rt[i].dead {
                    self.set_mode(i, t, Mode::Active);
                    self.set_base(i, t, duty);
                }
            }
        }
        for f in 0..self.flows.len() {
            self.schedule_generation(f);
        }
    }

    fn schedule_generation(&mut self, f: usize) {
        let flow = &self.flows[f];
        if flow.next < flow.packets {
            let at = self.init_end + (flow.next as f64 + flow.phase) * flow.interval;
            self.push(at, EventKind::Generate, f);
        }
    }

    fn generate(&mut self, f: usize, t: f64) {
        let flow = &mut self.flows[f];
        let bytes = flow.packet_bytes(flow.next, self.cfg.packet_size_bytes);
        let region = flow.region;
        flow.next += 1;
        self.generated += 1;
        match self.topo.regions[region].boundary {
            Some(b) if self.rt[b].queue.len() >= self.cfg.queue_capacity_packets => {
                self.dropped += 1
            }
            Some(b) => {
                self.rt[b].queue.push_back(Packet { bytes });
                self.try_send(b, t);
            }
            None => self.dropped += 1,
        }
        self.schedule_generation(f);
    }

    /// Alive boundary nodes with a route and buffer space. A stalled node
    /// advertises no route, so dead ends and congestion push back upstream.
    fn is_relay(&self, id: NodeId) -> bool {
        id < self.topo.sink_id
            && !self.rt[id].dead
            && !self.rt[id].stalled
            && self.rt[id].queue.len() < self.cfg.queue_capacity_packets
            && self.topo.nodes[id].role == Role::Boundary
            && (!self.aes || self.topo.nodes[id].mode == Mode::Active)
    }

    fn try_send(&mut self, i: NodeId, t: f64) {
        let r = &self.rt[i];
        if r.dead || r.transmitting || r.queue.is_empty() {
            return;
        }
        let hop = match plan_next_hop(&self.topo, i, self.cfg.radio_range_m, |id| {
            self.is_relay(id)
        }) {
            Ok(hop) => hop,
            Err(_) => {
                self.rt[i].stalled = true;
                return;
            }
        };
        self.rt[i].stalled = false;
        if self.topo.nodes[i].mode == Mode::Sleep {
            self.sleeping_transmissions += 1;
        }
        let bytes = self.rt[i].queue[0].bytes;
        let airtime = bytes as f64 * self.cfg.byte_time_s() * self.kind.overhead_factor;
        self.rt[i].hop = Some(hop);
        self.set_transmitting(i, t, true);
        self.push(t + airtime, EventKind::TxComplete, i);
    }

    fn tx_complete(&mut self, i: NodeId, t: f64) {
        if self.rt[i].dead {
            return;
        }
        self.set_transmitting(i, t, false);
        let was_full = self.rt[i].queue.len() >= self.cfg.queue_capacity_packets;
        let packet = self.rt[i]
            .queue
            .pop_front()
            .expect("transmitting node has a packet");
        match self.rt[i].hop.take() {
            Some(NextHop::Sink) => self.delivered += 1,
            Some(NextHop::Node(j)) if !self.rt[j].dead => {
                self.rt[j].queue.push_back(packet);
                self.try_send(j, t);
            }
            _ => self.dropped += 1,
        }
        if !self.aes && self.kind.adaptive_timeout_s > 0.0 {
            self.rt[i].listen_generation += 1;
            let generation = self.rt[i].listen_generation;
            self.set_base(i, t, PowerState::Listen);
            self.push(
                t + self.kind.adaptive_timeout_s,
                EventKind::ListenEnd { generation },
                i,
            );
        }
        self.try_send(i, t);
        if was_full {
            self.retry_stalled(t);
        }
    }

    fn sense_start(&mut self, i: NodeId, t: f64) {
        if self.rt[i].dead {
            return;
        }
        self.set_sensing(i, t, true);
        self.push(t + self.cfg.sense_duration_s, EventKind::SenseEnd, i);
    }

    fn sense_end(&mut self, i: NodeId, t: f64) {
        if self.rt[i].dead {
            return;
        }
        self.set_sensing(i, t, false);
        self.rt[i].epoch += 1;
        let next = self.init_end + self.rt[i].epoch as f64 * self.cfg.sense_epoch_s;
        self.push(next, EventKind::SenseStart, i);
        // the boundary senses for its region but its role fixes its mode
        if self.topo.nodes[i].role == Role::Boundary {
            return;
        }
        let ctx = self.ctx.as_ref().expect("AES runs carry a detector");
        let decision = sense_and_decide(&self.topo.nodes[i], &self.env, ctx, &mut self.sense_rng)
            .expect("detector inputs were validated");
        if let Some(d) = decision {
            self.decisions.record(d.mode);
            let (mode, base) = match d.mode {
                Mode::Passive => (Mode::Passive, PowerState::Passive),
                Mode::Sleep => (Mode::Sleep, PowerState::Sleep),
                // only the boundary node may be active in a region
                Mode::Active => {
                    self.decisions.suppressed += 1;
                    (Mode::Sleep, PowerState::Sleep)
                }
            };
            self.set_mode(i, t, mode);
            self.set_base(i, t, base);
        }
    }

    fn kill(&mut self, i: NodeId, t: f64) {
        let leftover = self.topo.nodes[i].residual_j;
        self.rt[i].consumed_j += leftover;
        self.topo.nodes[i].residual_j = 0.0;
        self.set_mode(i, t, Mode::Sleep);
        let r = &mut self.rt[i];
        r.dead = true;
        r.transmitting = false;
        r.sensing = false;
        r.stalled = false;
        r.base = PowerState::Off;
        r.hop = None;
        self.dropped += r.queue.len() as u64;
        r.queue.clear();
        self.rearm(i, t);
        self.depleted += 1;
        self.first_death.get_or_insert(t);
        if self.topo.nodes[i].role == Role::Boundary {
            self.topo.nodes[i].role = Role::Member;
            let region = self.topo.nodes[i].region;
            self.reelect(region, t);
        }
        self.retry_stalled(t);
    }

    fn reelect(&mut self, region: usize, t: f64) {
        let sink = self.topo.sink();
        let elected =
            elect_boundary_among(&self.topo.regions[region], &self.topo.nodes, sink, |id| {
                !self.rt[id].dead
            });
        self.topo.regions[region].boundary = elected;
        if let Some(b) = elected {
            self.topo.nodes[b].role = Role::Boundary;
            if self.aes && self.steady {
                self.set_mode(b, t, Mode::Active);
                self.set_base(b, t, PowerState::Sleep);
            }
        }
    }

    /// Retry stalled nodes until no more of them find a route; a node that
    /// recovers may be the relay another one was waiting for.
    fn retry_stalled(&mut self, t: f64) {
        loop {
            let stalled: Vec<NodeId> = self
                .sensors()
                .filter(|&i| self.rt[i].stalled && !self.rt[i].dead)
                .collect();
            let mut progressed = false;
            for i in stalled {
                self.rt[i].stalled = false;
                self.try_send(i, t);
                progressed |= !self.rt[i].stalled;
            }
            if !progressed {
                break;
            }
        }
    }

    fn finish(mut self, seed: u64) -> Result<SimReport, SimError> {
        let t_end = self.t_end;
        for i in 0..self.topo.nodes.len() {
            self.advance(i, t_end);
        }
        let mut in_flight = 0u64;
        for i in self.sensors() {
            let queued = self.rt[i].queue.len() as u64;
            if self.rt[i].stalled {
                self.dropped += queued;
            } else {
                in_flight += queued;
            }
        }
        let accounted: Vec<NodeId> = if self.cfg.include_sink_energy {
            (0..self.topo.nodes.len()).collect()
        } else {
            self.sensors().collect()
        };
        let per_node: Vec<f64> = accounted
            .iter()
            // credits never exceed prior consumption; clamp rounding residue
            .map(|&i| (self.rt[i].consumed_j - self.rt[i].harvested_j).max(0.0))
            .collect();
        let total = network_energy(&per_node, &vec![true; per_node.len()])?;
        let mut states = [0.0; 6];
        let mut modes = [0.0; 3];
        let mut harvested = 0.0;
        for &i in &accounted {
            for (acc, v) in states.iter_mut().zip(self.rt[i].state_s) {
                *acc += v;
            }
            for (acc, v) in modes.iter_mut().zip(self.topo.nodes[i].mode_time_s) {
                *acc += v;
            }
            harvested += self.rt[i].harvested_j;
        }
        Ok(SimReport {
            protocol: self.kind.protocol,
            seed,
            node_count: accounted.len(),
            sim_duration_s: t_end,
            total_energy_j: total,
            per_node_energy_j: per_node,
            harvested_j: harvested,
            packets_generated: self.generated,
            packets_delivered: self.delivered,
            packets_dropped: self.dropped,
            packets_in_flight: in_flight,
            active_s: modes[Mode::Active.index()],
            passive_s: modes[Mode::Passive.index()],
            sleep_s: modes[Mode::Sleep.index()],
            power_state_s: PowerStateTimes {
                tx_s: states[TX],
                listen_s: states[LISTEN],
                sense_s: states[SENSE],
                sleep_s: states[SLEEP],
                passive_s: states[PASSIVE],
                off_s: states[OFF],
            },
            lifetime_s: self.first_death.unwrap_or(t_end),
            depleted_nodes: self.depleted,
            savings_pct: None,
            region_violations: self.region_violations,
            sleeping_transmissions: self.sleeping_transmissions,
            decisions: self.decisions,
        })
    }
}
