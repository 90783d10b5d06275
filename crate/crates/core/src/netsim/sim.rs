use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bandit::{Action, Context, Modulation, PowerLevel, SnrClass};
use crate::channel::{ber, bitrate, evolve_shadowing, frame_success, LinkBudget, LinkState};

use super::controller::LinkController;
use super::metrics::{EpisodeOutput, FrameCounters, IntervalRecord, LinkInfo, SlotRecord};
use super::queue::EventQueue;
use super::{class_of, SimConfig, SimError};

/// What happened to one frame at its addressed receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameFate {
    Delivered,
    LostBer,
    LostCollision,
    LostHalfDuplex,
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Fate of a frame occupying `window` at its receiver.
///
/// `own_tx` are the receiver's own transmissions and `interference` the
/// arrival windows of every other transmission at the receiver. Intervals
/// are half-open; touching intervals do not overlap. Half-duplex loss takes
/// precedence over collision, which takes precedence over bit errors. The
/// frame survives bit errors when `draw < success_probability`.
pub fn reception_fate<I, J>(
    window: (f64, f64),
    own_tx: I,
    interference: J,
    success_probability: f64,
    draw: f64,
) -> FrameFate
where
    I: IntoIterator<Item = (f64, f64)>,
    J: IntoIterator<Item = (f64, f64)>,
{
    if own_tx.into_iter().any(|t| overlaps(window, t)) {
        FrameFate::LostHalfDuplex
    } else if interference.into_iter().any(|t| overlaps(window, t)) {
        FrameFate::LostCollision
    } else if draw < success_probability {
        FrameFate::Delivered
    } else {
        FrameFate::LostBer
    }
}

/// Runs one episode. Identical inputs give identical outputs.
pub fn run_episode(config: &SimConfig, seed: u64) -> Result<EpisodeOutput, SimError> {
    config.validate()?;
    let mut sim = Simulator::new(config, seed)?;
    while let Some((t, ev)) = sim.events.pop() {
        sim.now = t;
        sim.handle(ev)?;
    }
    Ok(sim.finish())
}

#[derive(Clone, Copy, Debug)]
enum Payload {
    Data {
        origin: usize,
        bits: u64,
    },
    Request {
        probe: bool,
        from_slot: u64,
    },
    Feedback {
        probe: bool,
        bits: u64,
        snr_db: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug)]
struct Frame {
    link: usize,
    src: usize,
    dst: usize,
    slot: u64,
    tx: (f64, f64),
    modulation: Modulation,
    power: PowerLevel,
    bitrate: f64,
    bits: u64,
    payload: Payload,
}

#[derive(Debug)]
enum Event {
    SlotStart(u64),
    Request { link: usize, slot: u64, probe: bool },
    DataPhase(u64),
    ReceptionEnd(Frame),
}

#[derive(Clone, Copy, Debug)]
struct AirRecord {
    src: usize,
    start: f64,
    end: f64,
}

#[derive(Clone, Debug, Default)]
struct SlotStat {
    decision: Option<(Context, Action, SnrClass)>,
    aoi: u64,
    frames: FrameCounters,
    delivered_bits: u64,
    energy_data_j: f64,
}

struct LinkRuntime {
    src: usize,
    dst: usize,
    state: LinkState,
    ctrl: LinkController,
    slots: Vec<SlotStat>,
    /// Latest reference-power SNR measured by the receiver.
    rx_snr_db: Option<f64>,
}

struct NodeRuntime {
    busy_until: f64,
    energy_j: f64,
    queue: VecDeque<(usize, u64)>,
    own_bits: u64,
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    budget: LinkBudget,
    links: Vec<LinkRuntime>,
    nodes: Vec<NodeRuntime>,
    airlog: Vec<AirRecord>,
    events: EventQueue<Event>,
    now: f64,
    rng_shadow: ChaCha8Rng,
    rng_mac: ChaCha8Rng,
    rng_loss: ChaCha8Rng,
    rng_policy: ChaCha8Rng,
    total_slots: u64,
    max_bits_per_slot: u64,
    max_prop_s: f64,
    max_airtime_s: f64,
    intervals: Vec<IntervalRecord>,
    frame_energy_j: f64,
    deferred_slots: u64,
    control_sent: u64,
    control_lost: u64,
    sink_bits: Vec<u64>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a SimConfig, seed: u64) -> Result<Self, SimError> {
        let budget = LinkBudget::new(&cfg.channel, &cfg.power)?;
        let topo = &cfg.topology;
        let n = topo.node_count();
        let total_slots = cfg.total_slots();
        let mut rng_policy = stream(seed, 3);
        let cost = cfg
            .controller
            .resolved_feedback_cost(&cfg.radio, &cfg.power);
        let mut links = Vec::new();
        for (child, parent) in topo.links() {
            let ctrl = LinkController::new(
                &cfg.policy,
                &cfg.controller,
                cost,
                cfg.slots_per_minute(),
                cfg.radio.initial_snr_db,
                &mut rng_policy,
            )?;
            links.push(LinkRuntime {
                src: child,
                dst: parent,
                state: LinkState::new(topo.distance(child, parent)),
                ctrl,
                slots: vec![SlotStat::default(); total_slots as usize],
                rx_snr_db: None,
            });
        }
        let nodes = (0..n)
            .map(|_| NodeRuntime {
                busy_until: 0.0,
                energy_j: 0.0,
                queue: VecDeque::new(),
                own_bits: 0,
            })
            .collect();
        let radio = &cfg.radio;
        let max_airtime_s = radio
            .frame_airtime_s(Modulation::Bpsk, &cfg.channel)
            .max(radio.request_airtime_s())
            .max(radio.feedback_airtime_s());
        let mut events = EventQueue::new();
        events.push(0.0, Event::SlotStart(0));
        Ok(Self {
            cfg,
            budget,
            links,
            nodes,
            airlog: Vec::new(),
            events,
            now: 0.0,
            rng_shadow: stream(seed, 0),
            rng_mac: stream(seed, 1),
            rng_loss: stream(seed, 2),
            rng_policy,
            total_slots,
            max_bits_per_slot: radio.max_bits_per_slot(&cfg.channel),
            max_prop_s: topo.max_pairwise_distance() / cfg.channel.sound_speed_mps,
            max_airtime_s,
            intervals: Vec::new(),
            frame_energy_j: 0.0,
            deferred_slots: 0,
            control_sent: 0,
            control_lost: 0,
            sink_bits: vec![0; n],
        })
    }

    fn slot_start_s(&self, slot: u64) -> f64 {
        slot as f64 * self.cfg.radio.slot_s
    }

    fn prop_s(&self, a: usize, b: usize) -> f64 {
        self.cfg.topology.distance(a, b) / self.cfg.channel.sound_speed_mps
    }

    fn handle(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::SlotStart(slot) => self.on_slot_start(slot),
            Event::Request { link, slot, probe } => {
                self.on_request(link, slot, probe);
                Ok(())
            }
            Event::DataPhase(slot) => {
                self.on_data_phase(slot);
                Ok(())
            }
            Event::ReceptionEnd(frame) => self.on_reception(frame),
        }
    }

    fn on_slot_start(&mut self, slot: u64) -> Result<(), SimError> {
        let t0 = self.now;
        let horizon = self.max_prop_s + self.max_airtime_s;
        self.airlog.retain(|r| r.end + horizon >= t0);
        let radio = &self.cfg.radio;
        let exchange = radio.exchange_budget_s(self.max_prop_s);
        let window = radio.guard_s() - exchange - self.max_prop_s;
        for i in 0..self.links.len() {
            let draw: f64 = self.rng_shadow.sample(StandardNormal);
            let l = &mut self.links[i];
            l.state = evolve_shadowing(&l.state, &self.cfg.channel, draw);
            l.ctrl.clock.advance_to(slot);
            let due = l.ctrl.feedback_due(slot);
            if due || !l.ctrl.has_report {
                let offset = self.max_prop_s + self.rng_mac.random::<f64>() * window;
                self.events.push(
                    t0 + offset,
                    Event::Request {
                        link: i,
                        slot,
                        probe: !due,
                    },
                );
            }
        }
        self.events
            .push(t0 + radio.guard_s(), Event::DataPhase(slot));
        if slot + 1 < self.total_slots {
            self.events
                .push(self.slot_start_s(slot + 1), Event::SlotStart(slot + 1));
        }
        Ok(())
    }

    /// Puts a frame on the air and schedules its reception.
    fn transmit(&mut self, frame: Frame) {
        let energy = self.cfg.power.watts(frame.power) * (frame.tx.1 - frame.tx.0);
        let node = &mut self.nodes[frame.src];
        node.busy_until = node.busy_until.max(frame.tx.1);
        node.energy_j += energy;
        self.frame_energy_j += energy;
        let arrival_end = frame.tx.1 + self.prop_s(frame.src, frame.dst);
        self.events.push(arrival_end, Event::ReceptionEnd(frame));
    }

    fn control_frame(
        &self,
        link: usize,
        src: usize,
        dst: usize,
        slot: u64,
        bits: u64,
        payload: Payload,
    ) -> Frame {
        let start = self.now.max(self.nodes[src].busy_until);
        let radio = &self.cfg.radio;
        Frame {
            link,
            src,
            dst,
            slot,
            tx: (start, start + bits as f64 / radio.control_bitrate),
            modulation: Modulation::Bpsk,
            power: radio.control_power,
            bitrate: radio.control_bitrate,
            bits,
            payload,
        }
    }

    fn send_control(&mut self, frame: Frame) {
        self.airlog.push(AirRecord {
            src: frame.src,
            start: frame.tx.0,
            end: frame.tx.1,
        });
        let energy = self.cfg.power.watts(frame.power) * (frame.tx.1 - frame.tx.0);
        self.links[frame.link].ctrl.fb_energy_j += energy;
        self.control_sent += 1;
        self.transmit(frame);
    }

    fn on_request(&mut self, link: usize, slot: u64, probe: bool) {
        let (src, dst) = (self.links[link].src, self.links[link].dst);
        let from_slot = self.links[link].ctrl.interval_start_slot;
        let frame = self.control_frame(
            link,
            src,
            dst,
            slot,
            self.cfg.radio.request_bits,
            Payload::Request { probe, from_slot },
        );
        self.send_control(frame);
    }

    fn on_data_phase(&mut self, slot: u64) {
        let t0 = self.now;
        let radio = &self.cfg.radio;
        let sub = radio.subslot_s();
        let subslots = radio.subslots;
        for i in 0..self.links.len() {
            let src = self.links[i].src;
            let j = self.rng_mac.random_range(0..subslots);
            let start = t0 + f64::from(j) * sub;
            let age = self.links[i].ctrl.clock.age();
            self.links[i].slots[slot as usize].aoi = age;
            if self.nodes[src].busy_until > start {
                self.deferred_slots += 1;
                continue;
            }
            let true_class = class_of(
                self.budget
                    .snr_db(&self.links[i].state, self.cfg.radio.reference_power),
            );
            let (ctx, action) = self.links[i].ctrl.decide(slot, &mut self.rng_policy);
            self.send_burst(i, slot, start, action);
            self.links[i].slots[slot as usize].decision = Some((ctx, action, true_class));
        }
    }

    fn send_burst(&mut self, link: usize, slot: u64, start: f64, action: Action) {
        let (src, dst) = (self.links[link].src, self.links[link].dst);
        let radio = &self.cfg.radio;
        let rate = bitrate(action.modulation, &self.cfg.channel);
        let airtime = radio.frame_airtime_s(action.modulation, &self.cfg.channel);
        let capacity = radio.burst_capacity(action.modulation, &self.cfg.channel);
        let frame_bits = radio.frame_bits;
        let packet_bits = radio.packet_bits;
        let mut t = start;
        for _ in 0..capacity {
            let node = &mut self.nodes[src];
            if node.own_bits == 0 {
                node.queue.push_back((src, packet_bits));
                node.own_bits = packet_bits;
            }
            let (origin, seg) = node.queue.front_mut().expect("queue refilled above");
            let origin = *origin;
            let take = (*seg).min(frame_bits);
            *seg -= take;
            if *seg == 0 {
                node.queue.pop_front();
            }
            if origin == src {
                node.own_bits -= take;
            }
            let frame = Frame {
                link,
                src,
                dst,
                slot,
                tx: (t, t + airtime),
                modulation: action.modulation,
                power: action.power,
                bitrate: rate,
                bits: frame_bits,
                payload: Payload::Data { origin, bits: take },
            };
            let energy = self.cfg.power.watts(action.power) * airtime;
            let stat = &mut self.links[link].slots[slot as usize];
            stat.frames.sent += 1;
            stat.energy_data_j += energy;
            self.transmit(frame);
            t += airtime;
        }
        if t > start {
            self.airlog.push(AirRecord { src, start, end: t });
        }
    }

    fn fate(&mut self, frame: &Frame) -> FrameFate {
        let prop = self.prop_s(frame.src, frame.dst);
        let window = (frame.tx.0 + prop, frame.tx.1 + prop);
        let dst = frame.dst;
        let topo = &self.cfg.topology;
        let c = self.cfg.channel.sound_speed_mps;
        let own = self
            .airlog
            .iter()
            .filter(|r| r.src == dst)
            .map(|r| (r.start, r.end));
        let others = self
            .airlog
            .iter()
            .filter(|r| r.src != dst && r.src != frame.src)
            .map(|r| {
                let d = topo.distance(r.src, dst) / c;
                (r.start + d, r.end + d)
            });
        let snr = self
            .budget
            .snr_db(&self.links[frame.link].state, frame.power);
        let p = frame_success(
            ber(snr, frame.modulation, &self.cfg.channel, frame.bitrate),
            frame.bits,
        );
        let draw: f64 = self.rng_loss.random();
        reception_fate(window, own, others, p, draw)
    }

    fn on_reception(&mut self, frame: Frame) -> Result<(), SimError> {
        let fate = self.fate(&frame);
        let link = frame.link;
        // any frame the receiver could synchronize on yields an SNR estimate
        if matches!(fate, FrameFate::Delivered | FrameFate::LostBer)
            && self.links[link].dst == frame.dst
        {
            let snr = self
                .budget
                .snr_db(&self.links[link].state, self.cfg.radio.reference_power);
            self.links[link].rx_snr_db = Some(snr);
        }
        match frame.payload {
            Payload::Data { origin, bits } => {
                let stat = &mut self.links[link].slots[frame.slot as usize];
                match fate {
                    FrameFate::Delivered => {
                        stat.frames.delivered += 1;
                        stat.delivered_bits += bits;
                        if frame.dst == self.cfg.topology.sink() {
                            self.sink_bits[origin] += bits;
                        } else {
                            self.nodes[frame.dst].queue.push_back((origin, bits));
                        }
                    }
                    FrameFate::LostBer => stat.frames.lost_ber += 1,
                    FrameFate::LostCollision => stat.frames.lost_collision += 1,
                    FrameFate::LostHalfDuplex => stat.frames.lost_halfduplex += 1,
                }
            }
            _ if fate != FrameFate::Delivered => self.control_lost += 1,
            Payload::Request { probe, from_slot } => {
                let l = &self.links[link];
                let bits = if probe {
                    0
                } else {
                    l.slots[from_slot as usize..frame.slot as usize]
                        .iter()
                        .map(|s| s.delivered_bits)
                        .sum()
                };
                let reply = self.control_frame(
                    link,
                    l.dst,
                    l.src,
                    frame.slot,
                    self.cfg.radio.feedback_bits,
                    Payload::Feedback {
                        probe,
                        bits,
                        snr_db: l.rx_snr_db,
                    },
                );
                self.send_control(reply);
            }
            Payload::Feedback {
                probe,
                bits,
                snr_db,
            } => {
                let deadline = self.slot_start_s(frame.slot) + self.cfg.radio.guard_s();
                if self.now > deadline {
                    self.control_lost += 1;
                } else if probe {
                    self.links[link].ctrl.on_probe(snr_db);
                } else {
                    self.close_interval(link, frame.slot, bits, snr_db)?;
                }
            }
        }
        Ok(())
    }

    fn close_interval(
        &mut self,
        link: usize,
        slot: u64,
        bits: u64,
        snr_db: Option<f64>,
    ) -> Result<(), SimError> {
        let max_bits = self.max_bits_per_slot;
        let l = &mut self.links[link];
        let closed = l
            .ctrl
            .on_feedback(slot, bits, max_bits, snr_db, &mut self.rng_policy)?;
        let mut rec = self.interval_record(link, closed.start_slot, slot);
        rec.k = closed.k;
        rec.q_k_min = closed.q_min;
        rec.r_k_norm = closed.r_norm;
        rec.energy_fb_j = closed.fb_energy_j;
        rec.aoi_peak_slots = closed.peak_age;
        rec.closed = true;
        debug_assert_eq!(rec.r_k_bits, bits);
        self.intervals.push(rec);
        Ok(())
    }

    /// Per-slot statistics of `link` over slots `[from, to)`.
    fn interval_record(&self, link: usize, from: u64, to: u64) -> IntervalRecord {
        let l = &self.links[link];
        let slots = &l.slots[from as usize..to as usize];
        let mut frames = FrameCounters::default();
        let mut action_counts = [0; Action::COUNT];
        let mut r_k_bits = 0;
        let mut energy_data_j = 0.0;
        let mut aoi_sum = 0;
        for s in slots {
            frames.add(&s.frames);
            r_k_bits += s.delivered_bits;
            energy_data_j += s.energy_data_j;
            aoi_sum += s.aoi;
            if let Some((_, a, _)) = s.decision {
                action_counts[a.index()] += 1;
            }
        }
        IntervalRecord {
            link,
            link_src: l.src,
            link_dst: l.dst,
            k: 0,
            t_start_s: self.slot_start_s(from),
            q_k_min: 0,
            r_k_bits,
            r_k_norm: 0.0,
            energy_data_j,
            energy_fb_j: 0.0,
            aoi_mean_slots: if slots.is_empty() {
                0.0
            } else {
                aoi_sum as f64 / slots.len() as f64
            },
            aoi_peak_slots: 0,
            frames,
            action_counts,
            closed: false,
        }
    }

    fn finish(mut self) -> EpisodeOutput {
        for i in 0..self.links.len() {
            let ctrl = &self.links[i].ctrl;
            let mut rec = self.interval_record(i, ctrl.interval_start_slot, self.total_slots);
            rec.k = ctrl.k;
            rec.q_k_min = ctrl.q_min;
            let decisions = rec.decisions();
            rec.r_k_norm = if decisions > 0 {
                rec.r_k_bits as f64 / self.max_bits_per_slot as f64 / decisions as f64
            } else {
                0.0
            };
            rec.energy_fb_j = ctrl.fb_energy_j;
            rec.aoi_peak_slots = ctrl.clock.age();
            self.intervals.push(rec);
        }
        self.intervals.sort_by_key(|r| (r.link, r.k));
        let mut slots = Vec::new();
        let mut delivered_bits = 0;
        for (i, l) in self.links.iter().enumerate() {
            for (s, stat) in l.slots.iter().enumerate() {
                delivered_bits += stat.delivered_bits;
                if let Some((context, action, true_class)) = stat.decision {
                    slots.push(SlotRecord {
                        link: i,
                        slot: s as u64,
                        context,
                        action,
                        true_class,
                        delivered_bits: stat.delivered_bits,
                    });
                }
            }
        }
        EpisodeOutput {
            links: self
                .links
                .iter()
                .map(|l| LinkInfo {
                    src: l.src,
                    dst: l.dst,
                    distance_m: l.state.distance_m,
                })
                .collect(),
            intervals: self.intervals,
            slots,
            node_energy_j: self.nodes.iter().map(|n| n.energy_j).collect(),
            frame_energy_j: self.frame_energy_j,
            delivered_bits,
            sink_bits: self.sink_bits,
            deferred_slots: self.deferred_slots,
            control_sent: self.control_sent,
            control_lost: self.control_lost,
            total_slots: self.total_slots,
            max_bits_per_slot: self.max_bits_per_slot,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fate_precedence() {
        let w = (1.0, 2.0);
        assert_eq!(
            reception_fate(w, [(1.5, 3.0)], [(0.0, 1.2)], 1.0, 0.0),
            FrameFate::LostHalfDuplex
        );
        assert_eq!(
            reception_fate(w, [], [(0.0, 1.2)], 1.0, 0.0),
            FrameFate::LostCollision
        );
        assert_eq!(reception_fate(w, [], [], 0.3, 0.2), FrameFate::Delivered);
        assert_eq!(reception_fate(w, [], [], 0.3, 0.3), FrameFate::LostBer);
    }

    #[test]
    fn touching_intervals_do_not_collide() {
        let w = (1.0, 2.0);
        assert_eq!(
            reception_fate(w, [(2.0, 3.0)], [(0.0, 1.0)], 1.0, 0.5),
            FrameFate::Delivered
        );
    }
}
