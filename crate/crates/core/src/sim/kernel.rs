//! Event kernel and collective group-control dispatcher.
//!
//! Each car runs a small state machine (idle, moving one floor, doors
//! opening, passenger transfer, dwell, doors closing). The kernel advances
//! to the earliest pending event, processes everything due at that instant
//! in a fixed order (car phases by index, watchdogs, arrivals by arrival
//! order), then lets idle cars pick up work.

use std::collections::{BTreeSet, VecDeque};

use super::{
    BuildingConfig, CarEnv, Direction, DoorState, EnvState, FaultConfig, Observer, OutcomeEvent,
    PassengerOutcome, RunOptions, SimError, SimOutcome,
};
use crate::trace::{Passenger, TestInput, DEFAULT_MASS};

const UP: usize = 0;
const DOWN: usize = 1;

/// Added to the cost of a car that cannot take another passenger.
const FULL_PENALTY_MS: i64 = 600_000;
/// Dispatcher's guess at passenger transfer time per stop.
const TRANSFER_ESTIMATE_MS: i64 = 2_400;
/// Share of rated load above which the dispatcher treats a car as full.
const FULL_FRACTION: f64 = 0.8;
/// Re-evaluation only moves a call when it saves at least this much.
const REASSIGN_MARGIN_MS: i64 = 5_000;
/// A run must finish within this long after the last arrival.
const HORIZON_MS: i64 = 86_400_000;

fn ms(seconds: f64) -> i64 {
    (seconds * 1000.0).round() as i64
}

fn secs(t: i64) -> f64 {
    t as f64 / 1000.0
}

fn dir_index(d: Direction) -> Option<usize> {
    match d {
        Direction::Up => Some(UP),
        Direction::Down => Some(DOWN),
        Direction::Idle => None,
    }
}

fn dir_of(i: usize) -> Direction {
    if i == UP {
        Direction::Up
    } else {
        Direction::Down
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Moving { to: u32, start: i64 },
    Opening,
    Transfer,
    Dwell,
    Closing,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Alight(usize),
    Board(usize),
}

#[derive(Debug)]
struct Car {
    floor: u32,
    phase: Phase,
    until: i64,
    dir: Direction,
    /// Direction being served at the current stop.
    serve: Option<usize>,
    car_calls: BTreeSet<u32>,
    riders: Vec<usize>,
    actions: VecDeque<Action>,
    parking: bool,
    dead: bool,
    travel_ms: i64,
    open_ms: i64,
    close_ms: i64,
    dwell_ms: i64,
    capacity: f64,
}

impl Car {
    fn doors_active(&self) -> bool {
        matches!(self.phase, Phase::Opening | Phase::Transfer | Phase::Dwell)
    }

    fn at_floor_with_doors(&self) -> bool {
        matches!(
            self.phase,
            Phase::Opening | Phase::Transfer | Phase::Dwell | Phase::Closing
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct HallCall {
    car: usize,
    seq: u64,
    /// Set once a watchdog has moved the call off the dead car.
    avoid_dead: bool,
}

#[derive(Debug, Clone, Copy)]
struct Record {
    car: usize,
    arrived: i64,
    dest: Option<i64>,
}

pub(super) struct Kernel<'a> {
    passengers: &'a [Passenger],
    floors: u32,
    fault: &'a FaultConfig,
    opts: &'a RunOptions,
    cars: Vec<Car>,
    now: i64,
    start_ms: i64,
    next_arrival: usize,
    waiting: Vec<[VecDeque<usize>; 2]>,
    calls: Vec<[Option<HallCall>; 2]>,
    call_seq: u64,
    watchdogs: BTreeSet<(i64, u64, u32, usize)>,
    last_served: Vec<Option<usize>>,
    records: Vec<Option<Record>>,
    remaining: usize,
    became_idle: bool,
    events: Vec<(OutcomeEvent, usize)>,
    env_log: Vec<EnvState>,
    next_sample: i64,
}

impl<'a> Kernel<'a> {
    pub(super) fn new(
        ti: &'a TestInput,
        building: &'a BuildingConfig,
        fault: &'a FaultConfig,
        opts: &'a RunOptions,
    ) -> Self {
        let positions = opts
            .checkpoint
            .as_ref()
            .map(|cp| cp.car_positions.clone())
            .unwrap_or_else(|| building.home_floors());
        let dead_car = match fault {
            FaultConfig::DeadCar { car, .. } => Some(*car),
            _ => None,
        };
        let cars = building
            .cars
            .iter()
            .zip(positions)
            .enumerate()
            .map(|(i, (spec, floor))| Car {
                floor,
                phase: Phase::Idle,
                until: 0,
                dir: Direction::Idle,
                serve: None,
                car_calls: BTreeSet::new(),
                riders: Vec::new(),
                actions: VecDeque::new(),
                parking: false,
                dead: dead_car == Some(i),
                travel_ms: ms(building.floor_height / spec.speed).max(1),
                open_ms: ms(spec.door_open_time).max(1),
                close_ms: ms(spec.door_close_time).max(1),
                dwell_ms: ms(spec.door_dwell).max(1),
                capacity: spec.rated_capacity,
            })
            .collect();
        let start = match (&opts.checkpoint, ti.first()) {
            (Some(cp), _) => cp.start_time,
            (None, Some(p)) => p.at(),
            (None, None) => 0,
        };
        let n_floors = building.floors as usize + 1;
        Self {
            passengers: ti.passengers(),
            floors: building.floors,
            fault,
            opts,
            cars,
            now: start * 1000,
            start_ms: start * 1000,
            next_arrival: 0,
            waiting: (0..n_floors).map(|_| [VecDeque::new(), VecDeque::new()]).collect(),
            calls: vec![[None, None]; n_floors],
            call_seq: 0,
            watchdogs: BTreeSet::new(),
            last_served: vec![None; n_floors],
            records: vec![None; ti.np()],
            remaining: ti.np(),
            became_idle: false,
            events: Vec::new(),
            env_log: Vec::new(),
            next_sample: start,
        }
    }

    pub(super) fn run(mut self, observer: &mut dyn Observer) -> Result<SimOutcome, SimError> {
        let stop_ms = self.opts.stop_time.map(|s| s * 1000);
        let horizon = self
            .passengers
            .last()
            .map_or(self.start_ms, |p| p.at() * 1000)
            + HORIZON_MS;
        let mut stopped_early = false;

        // Cars settle before the first arrival (parking, for instance).
        self.kick_idle();
        self.skip_quiet_start(stop_ms);

        let end = loop {
            if stop_ms.is_none() && self.remaining == 0 {
                break self.now;
            }
            let next = self.next_event_time();
            let t = match (next, stop_ms) {
                (Some(t), Some(s)) if t > s => break s,
                (Some(t), _) => t,
                (None, Some(s)) => break s.max(self.now),
                (None, None) => {
                    return Err(SimError::Diverged {
                        at: secs(self.now),
                        message: format!("{} passengers can never be served", self.remaining),
                    })
                }
            };
            if t > horizon {
                return Err(SimError::Diverged {
                    at: secs(t),
                    message: format!("{} passengers still unserved", self.remaining),
                });
            }
            self.sample_before(t);
            self.now = t;
            self.step();
            for (event, idx) in std::mem::take(&mut self.events) {
                let outcome = self.outcome_of(idx);
                observer.observe(event, &outcome);
            }
            if observer.should_stop() {
                stopped_early = true;
                break self.now;
            }
        };
        self.sample_through(end);

        let mut outcomes: Vec<PassengerOutcome> = (0..self.passengers.len())
            .filter(|&i| self.records[i].is_some())
            .map(|i| self.outcome_of(i))
            .collect();
        outcomes.sort_by_key(|o| o.passenger_id);
        let sim_start = self.start_ms / 1000;
        Ok(SimOutcome {
            outcomes,
            env_log: self.env_log,
            sim_start,
            sim_end: secs(end),
            simulated_duration: secs(end - self.start_ms),
            stopped_early,
        })
    }

    /// A group with nothing to do stays exactly as it is until the first
    /// arrival, so a run from a checkpoint starts there instead.
    fn skip_quiet_start(&mut self, stop_ms: Option<i64>) {
        let quiet = self.cars.iter().all(|c| c.phase == Phase::Idle) && self.watchdogs.is_empty();
        let Some(first) = self.passengers.first() else { return };
        let t = first.at() * 1000;
        if quiet && t > self.now && stop_ms.is_none_or(|s| s >= t) {
            self.now = t;
            self.start_ms = t;
            self.next_sample = first.at();
        }
    }

    fn outcome_of(&self, idx: usize) -> PassengerOutcome {
        let p = &self.passengers[idx];
        let r = self.records[idx].expect("outcome requested for an unserved passenger");
        let arrived = secs(r.arrived);
        let dest = r.dest.map(secs);
        PassengerOutcome {
            passenger_id: p.id(),
            elevator_used: r.car,
            t_elev_arrived: arrived,
            t_reached_destination: dest,
            wt: secs(r.arrived - p.at() * 1000),
            tt: r.dest.map(|d| secs(d - r.arrived)),
        }
    }

    fn next_event_time(&self) -> Option<i64> {
        let arrival = self.passengers.get(self.next_arrival).map(|p| p.at() * 1000);
        let car = self
            .cars
            .iter()
            .filter(|c| c.phase != Phase::Idle)
            .map(|c| c.until)
            .min();
        let dog = self.watchdogs.first().map(|w| w.0);
        [arrival, car, dog].into_iter().flatten().min()
    }

    fn step(&mut self) {
        loop {
            let mut progressed = false;
            for c in 0..self.cars.len() {
                if self.cars[c].phase != Phase::Idle && self.cars[c].until <= self.now {
                    self.advance_car(c);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        while let Some(&(t, seq, floor, d)) = self.watchdogs.first() {
            if t > self.now {
                break;
            }
            self.watchdogs.pop_first();
            self.fire_watchdog(seq, floor, d);
        }
        while let Some(p) = self.passengers.get(self.next_arrival) {
            if p.at() * 1000 > self.now {
                break;
            }
            self.arrive(self.next_arrival);
            self.next_arrival += 1;
        }
        self.reissue_orphans();
        self.kick_idle();
    }

    fn kick_idle(&mut self) {
        for _ in 0..4 {
            for c in 0..self.cars.len() {
                if self.cars[c].phase == Phase::Idle && !self.cars[c].dead {
                    self.decide(c);
                }
            }
            if !std::mem::take(&mut self.became_idle) {
                break;
            }
            if !matches!(self.fault, FaultConfig::StaleAssignment) {
                self.reevaluate();
            }
        }
    }

    // ---- car state machine -------------------------------------------------

    fn advance_car(&mut self, c: usize) {
        match self.cars[c].phase {
            Phase::Idle => {}
            Phase::Moving { to, .. } => {
                self.cars[c].floor = to;
                self.on_floor(c);
            }
            Phase::Opening => self.doors_opened(c),
            Phase::Transfer => self.finish_action(c),
            Phase::Dwell => {
                let car = &mut self.cars[c];
                car.phase = Phase::Closing;
                car.until = self.now + car.close_ms;
            }
            Phase::Closing => {
                self.cars[c].serve = None;
                self.cars[c].phase = Phase::Idle;
                self.decide(c);
            }
        }
    }

    fn on_floor(&mut self, c: usize) {
        let f = self.cars[c].floor;
        if self.cars[c].parking {
            if f == 1 {
                self.cars[c].parking = false;
                self.cars[c].phase = Phase::Idle;
                self.cars[c].dir = Direction::Idle;
                self.became_idle = true;
                self.decide(c);
            } else {
                self.start_move(c, Direction::Down);
            }
            return;
        }
        let d = self.cars[c].dir;
        let Some(di) = dir_index(d) else {
            self.decide(c);
            return;
        };
        let beyond = self.requests_beyond(c, f, d);
        let stop = self.cars[c].car_calls.contains(&f)
            || self.assigned_to(f, di, c)
            || (self.assigned_to(f, 1 - di, c) && !beyond);
        if stop {
            let serve = if beyond || self.demand(f, di) {
                di
            } else if self.demand(f, 1 - di) {
                1 - di
            } else {
                di
            };
            self.open(c, serve);
        } else {
            self.cars[c].phase = Phase::Idle;
            self.decide_move(c);
        }
    }

    /// Picks the next action for a car that is idle or has just closed its doors.
    fn decide(&mut self, c: usize) {
        if self.cars[c].dead {
            return;
        }
        let f = self.cars[c].floor;
        let d = self.cars[c].dir;
        let up = self.assigned_to(f, UP, c);
        let down = self.assigned_to(f, DOWN, c);
        let serve = match d {
            Direction::Up if up => Some(UP),
            Direction::Up if down && !self.requests_beyond(c, f, Direction::Up) => Some(DOWN),
            Direction::Down if down => Some(DOWN),
            Direction::Down if up && !self.requests_beyond(c, f, Direction::Down) => Some(UP),
            Direction::Idle => match (self.calls[f as usize][UP], self.calls[f as usize][DOWN]) {
                (Some(u), Some(w)) if up && down => Some(if u.seq < w.seq { UP } else { DOWN }),
                _ if up => Some(UP),
                _ if down => Some(DOWN),
                _ => None,
            },
            _ => None,
        };
        match serve {
            Some(s) => self.open(c, s),
            None => self.decide_move(c),
        }
    }

    fn decide_move(&mut self, c: usize) {
        let f = self.cars[c].floor;
        let d = self.cars[c].dir;
        if d != Direction::Idle && self.requests_beyond(c, f, d) {
            self.start_move(c, d);
            return;
        }
        let nearest = self
            .requests(c)
            .into_iter()
            .filter(|&r| r != f)
            .min_by_key(|&r| (r.abs_diff(f), r));
        match nearest {
            Some(r) if r > f => self.start_move(c, Direction::Up),
            Some(_) => self.start_move(c, Direction::Down),
            None => self.become_idle(c),
        }
    }

    fn become_idle(&mut self, c: usize) {
        let car = &mut self.cars[c];
        let was_idle = car.phase == Phase::Idle && car.dir == Direction::Idle;
        car.phase = Phase::Idle;
        car.dir = Direction::Idle;
        car.serve = None;
        if matches!(self.fault, FaultConfig::ParkingStorm) && car.floor != 1 {
            car.parking = true;
            self.start_move(c, Direction::Down);
        } else if !was_idle {
            self.became_idle = true;
        }
    }

    fn start_move(&mut self, c: usize, d: Direction) {
        let car = &mut self.cars[c];
        let to = match d {
            Direction::Up => car.floor + 1,
            Direction::Down => car.floor - 1,
            Direction::Idle => unreachable!("start_move needs a direction"),
        };
        debug_assert!(to >= 1 && to <= self.floors);
        car.dir = d;
        car.phase = Phase::Moving {
            to,
            start: self.now,
        };
        car.until = self.now + car.travel_ms;
    }

    fn open(&mut self, c: usize, serve: usize) {
        let f = self.cars[c].floor;
        let car = &mut self.cars[c];
        car.phase = Phase::Opening;
        car.until = self.now + car.open_ms;
        car.serve = Some(serve);
        car.dir = dir_of(serve);
        car.car_calls.remove(&f);
        self.calls[f as usize][serve] = None;
        self.last_served[f as usize] = Some(c);
    }

    fn doors_opened(&mut self, c: usize) {
        let f = self.cars[c].floor;
        let s = self.cars[c].serve.expect("doors open without a served direction");
        let mut actions: VecDeque<Action> = self.cars[c]
            .riders
            .iter()
            .filter(|&&r| self.passengers[r].df() == f)
            .map(|&r| Action::Alight(r))
            .collect();
        let queue = std::mem::take(&mut self.waiting[f as usize][s]);
        let mut refused = VecDeque::new();
        for idx in queue {
            if self.fits(c, idx) {
                self.board(c, idx);
                actions.push_back(Action::Board(idx));
            } else {
                refused.push_back(idx);
            }
        }
        self.waiting[f as usize][s] = refused;
        let first = actions.front().map(|&a| self.action_ms(a));
        let car = &mut self.cars[c];
        car.actions = actions;
        match first {
            Some(d) => {
                car.phase = Phase::Transfer;
                car.until = self.now + d;
            }
            None => {
                car.phase = Phase::Dwell;
                car.until = self.now + car.dwell_ms;
            }
        }
    }

    fn finish_action(&mut self, c: usize) {
        if let Some(Action::Alight(r)) = self.cars[c].actions.pop_front() {
            self.cars[c].riders.retain(|&x| x != r);
            if let Some(rec) = self.records[r].as_mut() {
                rec.dest = Some(self.now);
            }
            self.remaining -= 1;
            self.events.push((OutcomeEvent::ReachedDestination, r));
        }
        match self.cars[c].actions.front().copied() {
            Some(a) => self.cars[c].until = self.now + self.action_ms(a),
            None => {
                let car = &mut self.cars[c];
                car.phase = Phase::Dwell;
                car.until = self.now + car.dwell_ms;
            }
        }
    }

    fn action_ms(&self, a: Action) -> i64 {
        match a {
            Action::Alight(r) => ms(self.passengers[r].ext()).max(1),
            Action::Board(r) => ms(self.passengers[r].ent()).max(1),
        }
    }

    fn board(&mut self, c: usize, idx: usize) {
        self.records[idx] = Some(Record {
            car: c,
            arrived: self.now,
            dest: None,
        });
        let df = self.passengers[idx].df();
        let car = &mut self.cars[c];
        car.riders.push(idx);
        car.car_calls.insert(df);
        self.events.push((OutcomeEvent::Boarded, idx));
    }

    /// Load that stays in the car after this stop's alighting passengers leave.
    fn staying_load(&self, c: usize) -> f64 {
        let car = &self.cars[c];
        let here = car.at_floor_with_doors().then_some(car.floor);
        car.riders
            .iter()
            .filter(|&&r| Some(self.passengers[r].df()) != here)
            .fold(0.0, |acc, &r| acc + self.passengers[r].m())
    }

    fn load(&self, c: usize) -> f64 {
        self.cars[c].riders.iter().fold(0.0, |acc, &r| acc + self.passengers[r].m())
    }

    fn fits(&self, c: usize, idx: usize) -> bool {
        let p = &self.passengers[idx];
        self.staying_load(c) + p.m() <= p.cf() / 100.0 * self.cars[c].capacity
    }

    // ---- passengers and calls ----------------------------------------------

    fn arrive(&mut self, idx: usize) {
        let p = &self.passengers[idx];
        let f = p.af();
        let d = if p.going_up() { UP } else { DOWN };
        let open_car = (0..self.cars.len()).find(|&c| {
            let car = &self.cars[c];
            !car.dead && car.floor == f && car.serve == Some(d) && car.doors_active()
        });
        if let Some(c) = open_car {
            match self.cars[c].phase {
                Phase::Opening => {
                    self.waiting[f as usize][d].push_back(idx);
                    return;
                }
                _ if self.fits(c, idx) => {
                    self.board(c, idx);
                    let action = Action::Board(idx);
                    let dur = self.action_ms(action);
                    let car = &mut self.cars[c];
                    car.actions.push_back(action);
                    if car.phase == Phase::Dwell {
                        car.phase = Phase::Transfer;
                        car.until = self.now + dur;
                    }
                    return;
                }
                _ => {
                    // Refused: waits for the car to leave, then calls again.
                    self.waiting[f as usize][d].push_back(idx);
                    return;
                }
            }
        }
        self.waiting[f as usize][d].push_back(idx);
        if self.calls[f as usize][d].is_none() {
            self.register(f, d);
        }
    }

    /// Registers calls for passengers left behind by a full car once no car
    /// is standing at their floor.
    fn reissue_orphans(&mut self) {
        for f in 1..=self.floors {
            for d in [UP, DOWN] {
                if self.waiting[f as usize][d].is_empty() || self.calls[f as usize][d].is_some() {
                    continue;
                }
                let blocked = self.cars.iter().any(|car| car.floor == f && car.at_floor_with_doors());
                if !blocked {
                    self.register(f, d);
                }
            }
        }
    }

    fn register(&mut self, f: u32, d: usize) {
        let car = self.assign(f, d, false);
        let seq = self.call_seq;
        self.call_seq += 1;
        self.calls[f as usize][d] = Some(HallCall {
            car,
            seq,
            avoid_dead: false,
        });
        self.arm_watchdog(car, seq, f, d);
    }

    /// Starts the stuck-call timer when a call lands on the dead car.
    fn arm_watchdog(&mut self, car: usize, seq: u64, f: u32, d: usize) {
        if let FaultConfig::DeadCar { detect_after, .. } = self.fault {
            if self.cars[car].dead {
                self.watchdogs.insert((self.now + ms(*detect_after), seq, f, d));
            }
        }
    }

    fn fire_watchdog(&mut self, seq: u64, f: u32, d: usize) {
        let Some(call) = self.calls[f as usize][d] else {
            return;
        };
        if call.seq != seq || !self.cars[call.car].dead {
            return;
        }
        let car = self.assign(f, d, true);
        self.calls[f as usize][d] = Some(HallCall {
            car,
            seq,
            avoid_dead: true,
        });
    }

    fn reevaluate(&mut self) {
        let mut keys: Vec<(u64, u32, usize)> = Vec::new();
        for f in 1..=self.floors {
            for d in [UP, DOWN] {
                if let Some(call) = self.calls[f as usize][d] {
                    keys.push((call.seq, f, d));
                }
            }
        }
        keys.sort_unstable();
        for (_, f, d) in keys {
            let call = self.calls[f as usize][d].expect("call vanished during re-evaluation");
            let current = &self.cars[call.car];
            if current.phase == Phase::Idle && !current.parking && !current.dead {
                continue;
            }
            // Parking cars only look idle; handing them calls again and
            // again would let two cars trade a call forever.
            let best = (0..self.cars.len())
                .filter(|&c| !self.cars[c].parking && !(call.avoid_dead && self.cars[c].dead))
                .min_by_key(|&c| (self.cost(c, f, d), c));
            let Some(best) = best else { continue };
            if best != call.car && self.cost(best, f, d) + REASSIGN_MARGIN_MS < self.cost(call.car, f, d) {
                self.calls[f as usize][d] = Some(HallCall { car: best, ..call });
                self.arm_watchdog(best, call.seq, f, d);
            }
        }
    }

    // ---- dispatcher --------------------------------------------------------

    fn assign(&self, f: u32, d: usize, avoid_dead: bool) -> usize {
        if matches!(self.fault, FaultConfig::StaleAssignment) {
            if let Some(c) = self.last_served[f as usize] {
                return c;
            }
        }
        (0..self.cars.len())
            .filter(|&c| !(avoid_dead && self.cars[c].dead))
            .min_by_key(|&c| (self.cost(c, f, d), c))
            .expect("building has at least one car")
    }

    fn cost(&self, c: usize, f: u32, d: usize) -> i64 {
        let mut cost = self.eta(c, f, d);
        let full = self.load(c) + DEFAULT_MASS > FULL_FRACTION * self.cars[c].capacity;
        if full && !matches!(self.fault, FaultConfig::LoadBlind) {
            cost += FULL_PENALTY_MS;
        }
        cost
    }

    /// Estimated milliseconds until car `c` could open its doors at `f`
    /// heading `d`, following the collective sweep through its commitments.
    fn eta(&self, c: usize, f: u32, d: usize) -> i64 {
        let car = &self.cars[c];
        let stop_ms = car.open_ms + car.dwell_ms + car.close_ms + TRANSFER_ESTIMATE_MS;
        let door_rest = |phase: Phase, until: i64| -> i64 {
            let left = (until - self.now).max(0);
            match phase {
                Phase::Opening => left + TRANSFER_ESTIMATE_MS + car.dwell_ms + car.close_ms,
                Phase::Transfer => left + car.dwell_ms + car.close_ms,
                Phase::Dwell => left + car.close_ms,
                Phase::Closing => left,
                _ => 0,
            }
        };
        let (pos, dir, t0) = match car.phase {
            _ if car.dead || car.parking => (car.floor, Direction::Idle, 0),
            Phase::Idle => (car.floor, Direction::Idle, 0),
            Phase::Moving { to, .. } => (to, car.dir, (car.until - self.now).max(0)),
            phase => (car.floor, car.dir, door_rest(phase, car.until)),
        };
        let stops: Vec<u32> = self.requests(c).into_iter().filter(|&r| r != f).collect();
        let (dist, n_stops) = sweep(self.floors, pos, dir, f, dir_of(d), &stops);
        t0 + i64::from(dist) * car.travel_ms + n_stops as i64 * stop_ms
    }

    /// Floors the car is committed to: car calls plus assigned hall calls.
    fn requests(&self, c: usize) -> Vec<u32> {
        let mut out: Vec<u32> = self.cars[c].car_calls.iter().copied().collect();
        for f in 1..=self.floors {
            if self.assigned_to(f, UP, c) || self.assigned_to(f, DOWN, c) {
                out.push(f);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn requests_beyond(&self, c: usize, f: u32, d: Direction) -> bool {
        let car = &self.cars[c];
        let beyond = |r: u32| match d {
            Direction::Up => r > f,
            Direction::Down => r < f,
            Direction::Idle => false,
        };
        car.car_calls.iter().any(|&r| beyond(r))
            || (1..=self.floors)
                .filter(|&r| beyond(r))
                .any(|r| self.assigned_to(r, UP, c) || self.assigned_to(r, DOWN, c))
    }

    fn assigned_to(&self, f: u32, d: usize, c: usize) -> bool {
        self.calls[f as usize][d].is_some_and(|call| call.car == c)
    }

    fn demand(&self, f: u32, d: usize) -> bool {
        self.calls[f as usize][d].is_some() || !self.waiting[f as usize][d].is_empty()
    }

    // ---- environment log ---------------------------------------------------

    fn sample_before(&mut self, t: i64) {
        if !self.opts.record_env {
            return;
        }
        while self.next_sample * 1000 < t {
            let s = self.next_sample;
            self.push_sample(s);
            self.next_sample += 1;
        }
    }

    fn sample_through(&mut self, t: i64) {
        if !self.opts.record_env {
            return;
        }
        while self.next_sample * 1000 <= t {
            let s = self.next_sample;
            self.push_sample(s);
            self.next_sample += 1;
        }
    }

    fn push_sample(&mut self, s: i64) {
        let t = s * 1000;
        let cars = (0..self.cars.len())
            .map(|c| {
                let car = &self.cars[c];
                let position = match car.phase {
                    Phase::Moving { to, start } => {
                        let frac = (t - start) as f64 / (car.until - start) as f64;
                        let frac = frac.clamp(0.0, 1.0);
                        f64::from(car.floor) + (f64::from(to) - f64::from(car.floor)) * frac
                    }
                    _ => f64::from(car.floor),
                };
                let direction = if car.phase == Phase::Idle {
                    Direction::Idle
                } else {
                    car.dir
                };
                let door = match car.phase {
                    Phase::Opening | Phase::Closing => DoorState::Moving,
                    Phase::Transfer | Phase::Dwell => DoorState::Open,
                    _ => DoorState::Closed,
                };
                CarEnv {
                    position,
                    direction,
                    door,
                    occupants: car.riders.len(),
                    load: self.load(c),
                }
            })
            .collect();
        let mut pending: usize = self.cars.iter().map(|c| c.car_calls.len()).sum();
        for f in 1..=self.floors as usize {
            for d in [UP, DOWN] {
                if self.calls[f][d].is_some() || !self.waiting[f][d].is_empty() {
                    pending += 1;
                }
            }
        }
        self.env_log.push(EnvState {
            time: s,
            cars,
            pending_calls: pending,
        });
    }
}

/// Floors travelled and intermediate stops for a car at `pos` heading `dir`
/// to reach floor `f` ready to travel `want`.
fn sweep(floors: u32, pos: u32, dir: Direction, f: u32, want: Direction, stops: &[u32]) -> (u32, usize) {
    match dir {
        Direction::Idle => {
            let (lo, hi) = (pos.min(f), pos.max(f));
            (hi - lo, stops.iter().filter(|&&s| s > lo && s < hi).count())
        }
        Direction::Up => sweep_up(pos, f, want == Direction::Up, stops),
        Direction::Down => {
            let mirror = |x: u32| floors + 1 - x;
            let mirrored: Vec<u32> = stops.iter().map(|&s| mirror(s)).collect();
            sweep_up(mirror(pos), mirror(f), want == Direction::Down, &mirrored)
        }
    }
}

/// `sweep` for a car travelling up; `same_way` means the call also goes up.
fn sweep_up(pos: u32, f: u32, same_way: bool, stops: &[u32]) -> (u32, usize) {
    let between = |lo: u32, hi: u32| stops.iter().filter(|&&s| s > lo && s < hi).count();
    let top = stops.iter().copied().filter(|&s| s > pos).max().unwrap_or(pos);
    if f >= pos && same_way {
        return (f - pos, between(pos, f));
    }
    if !same_way {
        let top = top.max(f);
        let above = stops.iter().filter(|&&s| s > pos && s <= top).count();
        let back = between(f, top);
        return ((top - pos) + (top - f), above + back);
    }
    // Call below the car but going up: sweep to the top, down to the
    // lowest commitment, then back up.
    let bottom = stops.iter().copied().min().unwrap_or(f).min(f);
    let dist = (top - pos) + (top - bottom) + (f - bottom);
    (dist, stops.len())
}
