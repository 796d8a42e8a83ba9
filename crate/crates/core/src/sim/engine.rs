//! Event-driven scenario runner on a virtual millisecond clock.
//!
//! Sensors capture on their own `1/rate_hz` grids and publish after their
//! latency; the monitor evaluates on a fixed cadence. Events at the same
//! instant are ordered: frame arrivals, then captures, then monitor ticks,
//! then insertion order. Each sensor draws from its own ChaCha stream seeded
//! from the scenario seed, so a run is a pure function of its inputs.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bus::{self, Bus, Payload};
use crate::config::RunConfig;
use crate::domain::{DetectedObject, ObjectListFrame, Position, SensorSource, Timestamp};
use crate::log::{LogRecord, RunHeader, VerdictLog};
use crate::mode_control::{ModeMachine, ModeTransition};
use crate::monitor::Monitor;
use crate::sim::scenario::{Scenario, SensorModel};
use crate::Error;

enum Event {
    Arrival(ObjectListFrame),
    Capture { source: SensorSource, k: u64 },
    MonitorTick { k: u64 },
}

impl Event {
    fn rank(&self) -> u8 {
        match self {
            Event::Arrival(_) => 0,
            Event::Capture { .. } => 1,
            Event::MonitorTick { .. } => 2,
        }
    }
}

struct Scheduled {
    at: u64,
    rank: u8,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.rank, other.seq).cmp(&(self.at, self.rank, self.seq))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, at: u64, event: Event) {
        let rank = event.rank();
        self.heap.push(Scheduled { at, rank, seq: self.seq, event });
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<(u64, Event)> {
        self.heap.pop().map(|s| (s.at, s.event))
    }
}

/// `k`-th instant of a grid with the given rate, rounded to whole ms.
fn grid_time(k: u64, rate_hz: f64) -> u64 {
    (k as f64 * 1000.0 / rate_hz).round() as u64
}

struct SensorSim {
    rng: ChaCha8Rng,
}

impl SensorSim {
    fn new(seed: u64, source: SensorSource) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(match source {
            SensorSource::Camera => 1,
            SensorSource::Lidar => 2,
        });
        SensorSim { rng }
    }

    fn gauss(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sigma).expect("sigma validated").sample(&mut self.rng)
    }

    /// Frame captured at `t`, or `None` when the sensor is down or drops it.
    fn capture(&mut self, scenario: &Scenario, model: &SensorModel, t: Timestamp) -> Option<ObjectListFrame> {
        if model.in_outage(t) {
            return None;
        }
        if model.dropout_prob > 0.0 && self.rng.random::<f64>() < model.dropout_prob {
            return None;
        }
        let mut objects = Vec::new();
        for actor in scenario.actors.iter().filter(|a| a.is_visible_to(model.source)) {
            let Some(truth) = actor.position_at(t) else { continue };
            let sigma_p = model.position_noise_sigma_m;
            let sigma_s = model.size_noise_sigma_m;
            let position = Position::new(truth.x_m + self.gauss(sigma_p), truth.y_m + self.gauss(sigma_p));
            let width_m = (actor.width_m + self.gauss(sigma_s)).max(0.0);
            let height_m = (actor.height_m + self.gauss(sigma_s)).max(0.0);
            let (lo, hi) = model.confidence_range;
            let confidence = if lo < hi { self.rng.random_range(lo..=hi) } else { lo };
            objects.push(DetectedObject {
                class_label: actor.class_label.clone(),
                width_m,
                height_m,
                position,
                confidence,
                sensed_at: t,
                source: model.source,
            });
        }
        Some(ObjectListFrame { source: model.source, frame_time: t.plus_ms(model.latency_ms), objects })
    }
}

/// Runs `scenario` under `cfg` and returns the full verdict log.
pub fn run(scenario: &Scenario, cfg: &RunConfig) -> Result<VerdictLog, Error> {
    cfg.validate()?;
    scenario.validate()?;

    let mut bus = Bus::with_standard_topics();
    let failure: Rc<RefCell<Option<Error>>> = Rc::default();

    let monitor = Rc::new(RefCell::new(Monitor::new(cfg.clone(), Timestamp::ZERO)?));
    for topic in [bus::CAMERA_OBJECTS, bus::LIDAR_OBJECTS] {
        let (m, f) = (Rc::clone(&monitor), Rc::clone(&failure));
        bus.subscribe(topic, move |msg| {
            if let Payload::ObjectList(frame) = msg.payload {
                if let Err(e) = m.borrow_mut().ingest(frame.clone()) {
                    f.borrow_mut().get_or_insert(e);
                }
            }
        })?;
    }
    {
        let (m, f) = (Rc::clone(&monitor), Rc::clone(&failure));
        bus.subscribe(bus::EGO_STATE, move |msg| {
            if let Payload::Ego(ego) = msg.payload {
                if let Err(e) = m.borrow_mut().set_ego(ego.clone()) {
                    f.borrow_mut().get_or_insert(e.into());
                }
            }
        })?;
    }

    let log = Rc::new(RefCell::new(VerdictLog::new()));
    log.borrow_mut().push(LogRecord::Run(RunHeader {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        duration_ms: scenario.duration_ms,
        monitor_rate_hz: cfg.monitor_rate_hz,
    }));
    {
        let l = Rc::clone(&log);
        bus.subscribe(bus::VERDICT, move |msg| {
            if let Payload::Verdict(v) = msg.payload {
                l.borrow_mut().push(LogRecord::Verdict(v.clone()));
            }
        })?;
        let l = Rc::clone(&log);
        bus.subscribe(bus::MODE, move |msg| {
            if let Payload::Mode(t) = msg.payload {
                l.borrow_mut().push(LogRecord::Mode(t.clone()));
            }
        })?;
    }

    // Mode control consumes verdicts; its transitions go out on the next
    // publish, since a handler cannot publish re-entrantly.
    let outbox: Rc<RefCell<Vec<ModeTransition>>> = Rc::default();
    {
        let mut machine = ModeMachine::new(cfg.mode.clone(), Timestamp::ZERO);
        let (o, f) = (Rc::clone(&outbox), Rc::clone(&failure));
        bus.subscribe(bus::VERDICT, move |msg| {
            if let Payload::Verdict(v) = msg.payload {
                match machine.step(v) {
                    Ok(Some(t)) => o.borrow_mut().push(t),
                    Ok(None) => {}
                    Err(e) => {
                        f.borrow_mut().get_or_insert(e.into());
                    }
                }
            }
        })?;
    }

    let mut sensors = [
        (SensorSource::Camera, SensorSim::new(scenario.seed, SensorSource::Camera)),
        (SensorSource::Lidar, SensorSim::new(scenario.seed, SensorSource::Lidar)),
    ];

    let end = scenario.duration_ms;
    let mut queue = Queue::default();
    for source in SensorSource::ALL {
        queue.push(0, Event::Capture { source, k: 0 });
    }
    let first_tick = grid_time(1, cfg.monitor_rate_hz);
    if first_tick <= end {
        queue.push(first_tick, Event::MonitorTick { k: 1 });
    }

    while let Some((at, event)) = queue.pop() {
        let now = Timestamp(at);
        match event {
            Event::Capture { source, k } => {
                let model = scenario.sensor(source);
                let next = grid_time(k + 1, model.rate_hz);
                if next <= end {
                    queue.push(next, Event::Capture { source, k: k + 1 });
                }
                let sim = &mut sensors.iter_mut().find(|(s, _)| *s == source).expect("both sensors").1;
                if let Some(frame) = sim.capture(scenario, model, now) {
                    let arrival = frame.frame_time.ms();
                    if arrival <= end {
                        queue.push(arrival, Event::Arrival(frame));
                    }
                }
            }
            Event::Arrival(frame) => {
                let topic = match frame.source {
                    SensorSource::Camera => bus::CAMERA_OBJECTS,
                    SensorSource::Lidar => bus::LIDAR_OBJECTS,
                };
                bus.publish(topic, Payload::ObjectList(frame), now)?;
            }
            Event::MonitorTick { k } => {
                bus.publish(bus::EGO_STATE, Payload::Ego(scenario.ego_at(now)), now)?;
                if let Some(e) = failure.borrow_mut().take() {
                    return Err(e);
                }
                let verdict = monitor.borrow().verdict(now)?;
                bus.publish(bus::VERDICT, Payload::Verdict(verdict), now)?;
                let pending: Vec<_> = outbox.borrow_mut().drain(..).collect();
                for t in pending {
                    bus.publish(bus::MODE, Payload::Mode(t), now)?;
                }
                let next = grid_time(k + 1, cfg.monitor_rate_hz);
                if next <= end {
                    queue.push(next, Event::MonitorTick { k: k + 1 });
                }
            }
        }
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
    }

    drop(bus);
    let log = Rc::try_unwrap(log).map(RefCell::into_inner).unwrap_or_else(|rc| rc.borrow().clone());
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::{Actor, EgoParams, EgoSample, Waypoint};
    use crate::validator::VerdictStatus;

    fn sensor(source: SensorSource, rate_hz: f64) -> SensorModel {
        SensorModel {
            source,
            rate_hz,
            latency_ms: 0,
            dropout_prob: 0.0,
            position_noise_sigma_m: 0.0,
            size_noise_sigma_m: 0.0,
            confidence_range: (0.9, 0.9),
            outages: vec![],
        }
    }

    fn scenario(visible_to: Vec<SensorSource>, x: f64) -> Scenario {
        Scenario {
            name: "unit".into(),
            description: String::new(),
            duration_ms: 2000,
            seed: 7,
            ego_params: EgoParams::default(),
            ego_timeline: vec![EgoSample { t_ms: 0, speed_mps: 0.0, steering_angle_rad: 0.0 }],
            actors: vec![Actor {
                id: "a".into(),
                class_label: "person".into(),
                width_m: 0.1,
                height_m: 0.3,
                trajectory: vec![Waypoint { t_ms: 0, x_m: x, y_m: 0.0 }],
                visible_to,
            }],
            sensors: vec![sensor(SensorSource::Camera, 30.0), sensor(SensorSource::Lidar, 10.0)],
            expected: vec![],
        }
    }

    #[test]
    fn grid_rounds_to_ms() {
        assert_eq!(grid_time(1, 30.0), 33);
        assert_eq!(grid_time(2, 30.0), 67);
        assert_eq!(grid_time(3, 30.0), 100);
        assert_eq!(grid_time(7, 10.0), 700);
    }

    #[test]
    fn one_verdict_per_tick() {
        let log = run(&scenario(vec![SensorSource::Camera, SensorSource::Lidar], 1.0), &RunConfig::default()).unwrap();
        let times: Vec<u64> = log.verdicts().map(|v| v.at.ms()).collect();
        assert_eq!(times, (1..=20).map(|k| k * 100).collect::<Vec<_>>());
        assert!(log.verdicts().all(|v| v.status == VerdictStatus::Consistent));
        assert_eq!(log.header().unwrap().seed, 7);
    }

    #[test]
    fn one_sided_detection_degrades() {
        let log = run(&scenario(vec![SensorSource::Lidar], 1.0), &RunConfig::default()).unwrap();
        assert!(log.verdicts().all(|v| v.status == VerdictStatus::Inconsistent));
        let modes: Vec<_> = log.transitions().map(|t| (t.at.ms(), t.to)).collect();
        assert_eq!(modes, vec![(300, crate::mode_control::Mode::Degraded)]);
    }

    #[test]
    fn outage_starves_and_stops() {
        let mut s = scenario(vec![SensorSource::Camera, SensorSource::Lidar], 1.0);
        s.duration_ms = 6000;
        s.sensors[1].outages.push(crate::sim::scenario::Outage { from_ms: 1000, to_ms: 6000 });
        let log = run(&s, &RunConfig::default()).unwrap();
        // last lidar frame at 900; starved once now - 900 > 2000
        let first_nodata = log.verdicts().find(|v| v.status == VerdictStatus::NoData).unwrap();
        assert_eq!(first_nodata.at, Timestamp(3000));
        let stop = log.transitions().last().unwrap();
        assert_eq!((stop.at, stop.to), (Timestamp(4000), crate::mode_control::Mode::SafeStopRequested));
    }

    #[test]
    fn seed_changes_noise_but_not_replay() {
        let mut s = scenario(vec![SensorSource::Camera, SensorSource::Lidar], 1.0);
        s.sensors[0].position_noise_sigma_m = 0.01;
        let a = run(&s, &RunConfig::default()).unwrap().to_jsonl();
        let b = run(&s, &RunConfig::default()).unwrap().to_jsonl();
        assert_eq!(a, b);
        s.seed = 8;
        let c = run(&s, &RunConfig::default()).unwrap().to_jsonl();
        assert_ne!(a, c);
    }
}
