//! Per-link queue and age state.

use std::collections::VecDeque;

use crate::config::Discipline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub slot: u64,
    pub generated: u64,
    /// Whether the delivery lowered the age (false for stale LCFS-PR packets).
    pub caused_reset: bool,
    /// Age just before the delivery slot.
    pub age_before: u64,
}

#[derive(Debug, Clone, Default)]
pub struct LinkState {
    /// Generation slots of queued packets, oldest at the front.
    pub queue: VecDeque<u64>,
    pub active_now: bool,
    /// Age after the most recent slot. Zero before the first slot.
    pub aoi: u64,
    pub last_delivered_gen: Option<u64>,
    pub delivery_log: Option<Vec<Delivery>>,
    pub busy_slots: u64,
    pub elapsed_slots: u64,
    pub arrivals: u64,
    pub departures: u64,
}

impl LinkState {
    pub fn new(trace: bool) -> Self {
        LinkState {
            delivery_log: trace.then(Vec::new),
            ..Default::default()
        }
    }

    pub fn arrive(&mut self, t: u64) {
        self.queue.push_back(t);
        self.arrivals += 1;
    }

    /// Generation time of the packet that would be sent now.
    pub fn head(&self, discipline: Discipline) -> Option<u64> {
        match discipline {
            Discipline::Fcfs => self.queue.front().copied(),
            Discipline::LcfsPr => self.queue.back().copied(),
        }
    }

    /// Remove the transmitted packet after a successful slot and update the
    /// age. Returns `None` when the queue was empty (a saturated dummy
    /// transmission). Age bookkeeping for an idle slot is [`LinkState::age`].
    pub fn deliver(&mut self, discipline: Discipline, t: u64) -> Option<Delivery> {
        let generated = match discipline {
            Discipline::Fcfs => self.queue.pop_front(),
            Discipline::LcfsPr => self.queue.pop_back(),
        }?;
        self.departures += 1;
        let fresh = self.last_delivered_gen.is_none_or(|g| generated > g);
        let age_before = self.aoi;
        if fresh {
            self.last_delivered_gen = Some(generated);
            self.aoi = t - generated + 1;
        } else {
            self.aoi += 1;
        }
        let d = Delivery {
            slot: t,
            generated,
            caused_reset: fresh,
            age_before,
        };
        if let Some(log) = &mut self.delivery_log {
            log.push(d);
        }
        Some(d)
    }

    /// Slot without a delivery.
    pub fn age(&mut self) {
        self.aoi += 1;
    }
}
