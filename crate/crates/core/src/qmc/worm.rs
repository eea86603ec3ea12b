//! Continuous-time worldline configurations and worm updates.
//!
//! A configuration stores, per site, the occupation just after `τ = 0` and a
//! time-ordered list of events at which the occupation flips. Events are
//! hopping kinks (one entry on each of the two sites) or worm ends. The
//! weight of a closed configuration is `t^K exp(Σ_i (μ - ε_i) ∫ n_i dτ)`;
//! open configurations carry an extra factor `η`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::model::BoseModel;
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    /// Hop between this site and `partner`, which lies in `Direction::ALL[dir]`.
    /// `outgoing` when the particle leaves this site.
    Kink { partner: u32, dir: u8, outgoing: bool },
    /// Worm end; `raising` when the occupation goes from 0 to 1.
    End { raising: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WormEnd {
    pub site: usize,
    pub time: f64,
}

/// Move probabilities in the open sector and the worm weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WormParams {
    pub p_close: f64,
    pub p_shift: f64,
    /// Probability of each of the kink insertion and removal moves.
    pub p_kink: f64,
    /// Weight of open configurations; `0.2 / (p_close N β²)` when unset.
    pub eta: Option<f64>,
}

impl Default for WormParams {
    fn default() -> Self {
        Self {
            p_close: 0.1,
            p_shift: 0.3,
            p_kink: 0.3,
            eta: None,
        }
    }
}

impl WormParams {
    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_close, self.p_shift, self.p_kink];
        if ps.iter().any(|p| !(*p > 0.0)) || (self.p_close + self.p_shift + 2.0 * self.p_kink - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "move probabilities must be positive with p_close + p_shift + 2 p_kink = 1".into(),
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
            }
        }
        Ok(())
    }

    pub fn eta_for(&self, model: &BoseModel) -> f64 {
        self.eta
            .unwrap_or(0.2 / (self.p_close * model.num_sites() as f64 * model.beta * model.beta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    Open,
    Close,
    Shift,
    Insert,
    Remove,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Open, Move::Close, Move::Shift, Move::Insert, Move::Remove];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub attempted: [u64; 5],
    pub accepted: [u64; 5],
}

impl MoveStats {
    fn record(&mut self, m: Move, accepted: bool) {
        self.attempted[m as usize] += 1;
        self.accepted[m as usize] += accepted as u64;
    }

    pub fn acceptance(&self, m: Move) -> f64 {
        let a = self.attempted[m as usize];
        if a == 0 {
            0.0
        } else {
            self.accepted[m as usize] as f64 / a as f64
        }
    }

    pub fn merge(&mut self, other: &MoveStats) {
        for k in 0..5 {
            self.attempted[k] += other.attempted[k];
            self.accepted[k] += other.accepted[k];
        }
    }
}

fn unit(dir: u8) -> [i64; 2] {
    Direction::ALL[dir as usize].unit()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormState {
    size: usize,
    beta: f64,
    n0: Vec<bool>,
    events: Vec<Vec<Event>>,
    ends: Option<[WormEnd; 2]>,
    kinks: usize,
    /// Summed particle displacement of all kinks; `L W` in the closed sector.
    displacement: [i64; 2],
    /// `Σ_i (μ - ε_i) ∫ n_i dτ`.
    action: f64,
    particles: usize,
}

impl WormState {
    /// Closed configuration with static occupations and no kinks.
    pub fn classical(model: &BoseModel, occupation: &[bool]) -> Result<Self> {
        if occupation.len() != model.num_sites() {
            return Err(Error::DimensionMismatch {
                expected: model.num_sites(),
                got: occupation.len(),
            });
        }
        let mut s = Self {
            size: model.size,
            beta: model.beta,
            n0: occupation.to_vec(),
            events: vec![Vec::new(); model.num_sites()],
            ends: None,
            kinks: 0,
            displacement: [0, 0],
            action: 0.0,
            particles: 0,
        };
        s.recompute(model);
        Ok(s)
    }

    pub fn empty(model: &BoseModel) -> Self {
        Self::classical(model, &vec![false; model.num_sites()]).expect("sizes agree")
    }

    pub fn is_closed(&self) -> bool {
        self.ends.is_none()
    }

    pub fn ends(&self) -> Option<[WormEnd; 2]> {
        self.ends
    }

    pub fn kinks(&self) -> usize {
        self.kinks
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn events(&self, site: usize) -> &[Event] {
        &self.events[site]
    }

    /// Particle number; only meaningful in the closed sector.
    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Winding numbers `(W_x, W_y)`; `None` while the worm is open.
    pub fn winding(&self) -> Option<[i64; 2]> {
        if !self.is_closed() {
            return None;
        }
        let l = self.size as i64;
        debug_assert!(self.displacement.iter().all(|d| d % l == 0));
        Some(self.displacement.map(|d| d / l))
    }

    /// Occupation numbers at `τ = 0`.
    pub fn occupation_at_zero(&self) -> &[bool] {
        &self.n0
    }

    pub fn occupation(&self, site: usize, tau: f64) -> bool {
        let k = self.events[site].partition_point(|e| e.time < tau);
        self.n0[site] ^ (k % 2 == 1)
    }

    /// `∫ n_i dτ` for every site.
    pub fn occupied_time(&self) -> Vec<f64> {
        (0..self.n0.len())
            .map(|i| {
                let mut occ = self.n0[i];
                let mut last = 0.0;
                let mut total = 0.0;
                for e in &self.events[i] {
                    if occ {
                        total += e.time - last;
                    }
                    occ = !occ;
                    last = e.time;
                }
                if occ {
                    total += self.beta - last;
                }
                total
            })
            .collect()
    }

    /// Rebuild the cached totals from the event lists.
    pub fn recompute(&mut self, model: &BoseModel) {
        let occupied = self.occupied_time();
        self.action = occupied.iter().enumerate().map(|(i, t)| model.site_field(i) * t).sum();
        self.particles = self.n0.iter().filter(|&&b| b).count();
        let mut kinks = 0;
        let mut disp = [0i64; 2];
        for list in &self.events {
            for e in list {
                if let EventKind::Kink { dir, outgoing: true, .. } = e.kind {
                    kinks += 1;
                    let u = unit(dir);
                    disp[0] += u[0];
                    disp[1] += u[1];
                }
            }
        }
        self.kinks = kinks;
        self.displacement = disp;
    }

    /// Full consistency check of the configuration against `model`.
    pub fn check_invariants(&self, model: &BoseModel) -> std::result::Result<(), String> {
        let nb = model.neighbor_table();
        let mut end_count = 0;
        for (i, list) in self.events.iter().enumerate() {
            let mut occ = self.n0[i];
            let mut last = -1.0;
            for e in list {
                if !(e.time >= 0.0 && e.time < self.beta) || e.time <= last {
                    return Err(format!("site {i}: event times not ordered within [0, beta)"));
                }
                last = e.time;
                match e.kind {
                    EventKind::Kink { partner, dir, outgoing } => {
                        if nb[i][dir as usize] != partner {
                            return Err(format!("site {i}: kink partner is not a neighbour"));
                        }
                        let p = &self.events[partner as usize];
                        let twin = p.iter().find(|f| f.time == e.time);
                        match twin.map(|f| f.kind) {
                            Some(EventKind::Kink { partner: q, dir: d2, outgoing: o2 })
                                if q as usize == i && d2 == dir ^ 1 && o2 != outgoing => {}
                            _ => return Err(format!("site {i}: unmatched kink at {}", e.time)),
                        }
                        if occ != outgoing {
                            return Err(format!("site {i}: kink inconsistent with occupation"));
                        }
                    }
                    EventKind::End { raising } => {
                        end_count += 1;
                        if occ == raising {
                            return Err(format!("site {i}: worm end inconsistent with occupation"));
                        }
                        let known = self
                            .ends
                            .is_some_and(|ends| ends.iter().any(|w| w.site == i && w.time == e.time));
                        if !known {
                            return Err(format!("site {i}: untracked worm end"));
                        }
                    }
                }
                occ = !occ;
            }
            if occ != self.n0[i] {
                return Err(format!("site {i}: worldline not periodic"));
            }
        }
        if end_count != if self.is_closed() { 0 } else { 2 } {
            return Err(format!("{end_count} worm ends in the event lists"));
        }
        let mut copy = self.clone();
        copy.recompute(model);
        if copy.kinks != self.kinks || copy.displacement != self.displacement {
            return Err("cached kink count or displacement out of date".into());
        }
        if self.is_closed() && copy.particles != self.particles {
            return Err("cached particle number out of date".into());
        }
        let scale = 1.0 + copy.action.abs();
        if (copy.action - self.action).abs() > 1e-8 * scale {
            return Err(format!("cached action {} differs from {}", self.action, copy.action));
        }
        if self.is_closed() {
            let l = self.size as i64;
            if self.displacement.iter().any(|d| d % l != 0) {
                return Err("non-integer winding in the closed sector".into());
            }
        }
        Ok(())
    }

    fn wrap(&self, t: f64) -> f64 {
        let w = t.rem_euclid(self.beta);
        if w >= self.beta {
            f64::from_bits(self.beta.to_bits() - 1)
        } else {
            w
        }
    }

    /// Distance from `tau` to the nearest event on `site` in the given time
    /// direction, ignoring events at `tau` itself and at the times in `skip`;
    /// `β` when there is none. Also returns the event found.
    fn gap(&self, site: usize, tau: f64, forward: bool, skip: &[f64]) -> (f64, Option<Event>) {
        let list = &self.events[site];
        let n = list.len();
        if n == 0 {
            return (self.beta, None);
        }
        let start = if forward {
            list.partition_point(|e| e.time <= tau)
        } else {
            list.partition_point(|e| e.time < tau) + n - 1
        };
        for k in 0..n {
            let e = if forward { list[(start + k) % n] } else { list[(start + n - k) % n] };
            if e.time == tau || skip.contains(&e.time) {
                continue;
            }
            let d = if forward { e.time - tau } else { tau - e.time };
            return (d.rem_euclid(self.beta), Some(e));
        }
        (self.beta, None)
    }

    fn insert(&mut self, site: usize, e: Event) {
        let list = &mut self.events[site];
        let k = list.partition_point(|f| f.time < e.time);
        list.insert(k, e);
    }

    fn remove(&mut self, site: usize, time: f64) -> Event {
        let list = &mut self.events[site];
        let k = list.partition_point(|f| f.time < time);
        debug_assert!(list[k].time == time);
        list.remove(k)
    }

    fn toggle_n0(&mut self, site: usize) {
        if self.n0[site] {
            self.particles -= 1;
        } else {
            self.particles += 1;
        }
        self.n0[site] = !self.n0[site];
    }

    /// One update attempt.
    pub fn update(
        &mut self,
        model: &BoseModel,
        params: &WormParams,
        eta: f64,
        neighbors: &[[u32; 4]],
        rng: &mut Rng,
        stats: &mut MoveStats,
    ) {
        if self.is_closed() {
            let ok = self.open(model, params, eta, rng);
            stats.record(Move::Open, ok);
            return;
        }
        let end = rng.random_range(0..2usize);
        let u: f64 = rng.random();
        if u < params.p_close {
            let ok = self.close(model, params, eta, end, rng);
            stats.record(Move::Close, ok);
        } else if u < params.p_close + params.p_shift {
            self.shift(model, end, rng);
            stats.record(Move::Shift, true);
        } else {
            let forward = rng.random::<bool>();
            if u < params.p_close + params.p_shift + params.p_kink {
                let ok = self.insert_kink(model, end, forward, neighbors, rng);
                stats.record(Move::Insert, ok);
            } else {
                let ok = self.remove_kink(model, end, forward, rng);
                stats.record(Move::Remove, ok);
            }
        }
    }

    fn open(&mut self, model: &BoseModel, params: &WormParams, eta: f64, rng: &mut Rng) -> bool {
        let n_sites = model.num_sites();
        let i = rng.random_range(0..n_sites);
        let t1 = self.wrap(rng.random::<f64>() * self.beta);
        let (d_next, _) = self.gap(i, t1, true, &[]);
        let delta = rng.random::<f64>() * d_next;
        let n = self.occupation(i, t1);
        let ds = if n { -1.0 } else { 1.0 } * model.site_field(i) * delta;
        let ratio = 0.5 * params.p_close * n_sites as f64 * self.beta * d_next * eta * ds.exp();
        if !(rng.random::<f64>() < ratio) {
            return false;
        }
        let t2 = self.wrap(t1 + delta);
        if t2 == t1 || self.events[i].iter().any(|e| e.time == t2) {
            return false;
        }
        self.insert(i, Event { time: t1, kind: EventKind::End { raising: !n } });
        self.insert(i, Event { time: t2, kind: EventKind::End { raising: n } });
        if t1 + delta >= self.beta {
            self.toggle_n0(i);
        }
        self.action += ds;
        self.ends = Some([WormEnd { site: i, time: t1 }, WormEnd { site: i, time: t2 }]);
        true
    }

    fn close(&mut self, model: &BoseModel, params: &WormParams, eta: f64, end: usize, rng: &mut Rng) -> bool {
        let ends = self.ends.expect("open sector");
        let (a, b) = (ends[end], ends[1 - end]);
        if a.site != b.site {
            return false;
        }
        let i = a.site;
        match self.gap(i, a.time, true, &[]) {
            (_, Some(e)) if e.time == b.time => {}
            _ => return false,
        }
        let delta = (b.time - a.time).rem_euclid(self.beta);
        let (d_next, _) = self.gap(i, a.time, true, &[b.time]);
        // The segment (a, b) is currently flipped; closing restores it.
        let inside = self.occupation(i, a.time) ^ true;
        let ds = if inside { -1.0 } else { 1.0 } * model.site_field(i) * delta;
        let ratio = ds.exp() / (0.5 * params.p_close * model.num_sites() as f64 * self.beta * d_next * eta);
        if !(rng.random::<f64>() < ratio) {
            return false;
        }
        self.remove(i, a.time);
        self.remove(i, b.time);
        if b.time < a.time {
            self.toggle_n0(i);
        }
        self.action += ds;
        self.ends = None;
        true
    }

    fn shift(&mut self, model: &BoseModel, end: usize, rng: &mut Rng) {
        let mut ends = self.ends.expect("open sector");
        let WormEnd { site: i, time: te } = ends[end];
        let (dp, _) = self.gap(i, te, false, &[]);
        let (dn, _) = self.gap(i, te, true, &[]);
        let span = dp + dn;
        let left = !self.current_end_raising(i, te);
        let a = model.site_field(i) * if left { 1.0 } else { -1.0 };
        let u: f64 = rng.random();
        let x = a * span;
        let s = if x.abs() < 1e-12 {
            u * span
        } else if a > 0.0 {
            span + (u + (1.0 - u) * (-x).exp()).ln() / a
        } else {
            (u * x.exp_m1()).ln_1p() / a
        };
        let s = s.clamp(0.0, span);
        let unwrapped = te - dp + s;
        let new_time = self.wrap(unwrapped);
        if new_time == te || self.events[i].iter().any(|e| e.time == new_time) {
            return;
        }
        let ev = self.remove(i, te);
        self.insert(i, Event { time: new_time, ..ev });
        let (lo, hi) = if unwrapped < te { (unwrapped, te) } else { (te, unwrapped) };
        if (lo / self.beta).floor() != (hi / self.beta).floor() {
            self.toggle_n0(i);
        }
        self.action += a * (s - dp);
        ends[end].time = new_time;
        self.ends = Some(ends);
    }

    fn current_end_raising(&self, site: usize, time: f64) -> bool {
        let list = &self.events[site];
        let k = list.partition_point(|e| e.time < time);
        match list[k].kind {
            EventKind::End { raising } => raising,
            EventKind::Kink { .. } => unreachable!("worm end not found"),
        }
    }

    fn insert_kink(
        &mut self,
        model: &BoseModel,
        end: usize,
        forward: bool,
        neighbors: &[[u32; 4]],
        rng: &mut Rng,
    ) -> bool {
        let mut ends = self.ends.expect("open sector");
        let WormEnd { site: i, time: te } = ends[end];
        let dir = rng.random_range(0..4u8);
        let j = neighbors[i][dir as usize] as usize;
        let raising = self.current_end_raising(i, te);
        let (n_minus, n_plus) = (!raising, raising);
        let need_j = if forward { n_minus } else { n_plus };
        if self.occupation(j, te) != need_j {
            return false;
        }
        let (gi, _) = self.gap(i, te, forward, &[]);
        let (gj, _) = self.gap(j, te, forward, &[]);
        let window = gi.min(gj);
        let len = rng.random::<f64>() * window;
        // Site i over the segment goes from n_plus to n_minus (forward) or
        // the reverse; site j flips the other way.
        let sign_i = match (forward, raising) {
            (true, true) | (false, false) => -1.0,
            _ => 1.0,
        };
        let ds = len * sign_i * (model.site_field(i) - model.site_field(j));
        let ratio = 4.0 * window * model.hopping * ds.exp();
        if !(rng.random::<f64>() < ratio) {
            return false;
        }
        let raw = if forward { te + len } else { te - len };
        let tk = self.wrap(raw);
        if tk == te
            || self.events[i].iter().any(|e| e.time == tk)
            || self.events[j].iter().any(|e| e.time == tk || e.time == te)
        {
            return false;
        }
        let out_i = !raising;
        self.remove(i, te);
        self.insert(i, Event { time: tk, kind: EventKind::Kink { partner: j as u32, dir, outgoing: out_i } });
        self.insert(j, Event { time: tk, kind: EventKind::Kink { partner: i as u32, dir: dir ^ 1, outgoing: !out_i } });
        self.insert(j, Event { time: te, kind: EventKind::End { raising } });
        if !(0.0..self.beta).contains(&raw) {
            self.toggle_n0(i);
            self.toggle_n0(j);
        }
        let u = unit(dir);
        let s = if out_i { 1 } else { -1 };
        self.displacement[0] += s * u[0];
        self.displacement[1] += s * u[1];
        self.kinks += 1;
        self.action += ds;
        ends[end].site = j;
        self.ends = Some(ends);
        true
    }

    fn remove_kink(&mut self, model: &BoseModel, end: usize, forward: bool, rng: &mut Rng) -> bool {
        let mut ends = self.ends.expect("open sector");
        let WormEnd { site: j, time: te } = ends[end];
        let (len, found) = self.gap(j, te, forward, &[]);
        let Some(Event { time: tk, kind: EventKind::Kink { partner, dir, outgoing } }) = found else {
            return false;
        };
        let i = partner as usize;
        let (gi2, _) = self.gap(i, te, forward, &[tk]);
        if gi2 < len {
            return false;
        }
        let (gj2, _) = self.gap(j, te, forward, &[tk]);
        let window = gi2.min(gj2);
        let raising = self.current_end_raising(j, te);
        // Occupations over the segment before removal.
        let occ_j = if forward { raising } else { !raising };
        let occ_i = self.occupation(i, te);
        let f = |site: usize, occ: bool| model.site_field(site) * if occ { -1.0 } else { 1.0 };
        let ds = len * (f(j, occ_j) + f(i, occ_i));
        let ratio = ds.exp() / (4.0 * window * model.hopping);
        if !(rng.random::<f64>() < ratio) {
            return false;
        }
        self.remove(j, tk);
        self.remove(i, tk);
        self.remove(j, te);
        self.insert(i, Event { time: te, kind: EventKind::End { raising } });
        let raw = if forward { te + len } else { te - len };
        if !(0.0..self.beta).contains(&raw) {
            self.toggle_n0(i);
            self.toggle_n0(j);
        }
        // The removed kink moved a particle from j to i when `outgoing`.
        let u = unit(dir);
        let s = if outgoing { 1 } else { -1 };
        self.displacement[0] -= s * u[0];
        self.displacement[1] -= s * u[1];
        self.kinks -= 1;
        self.action += ds;
        ends[end].site = i;
        self.ends = Some(ends);
        true
    }
}
