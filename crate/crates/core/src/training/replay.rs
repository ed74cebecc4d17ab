use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use crate::checkpoint::Checkpoint;
use crate::error::CheckpointError;
use crate::observation::{Observation, OwnObservation, TargetEntry, OWN_DIM, TARGET_DIM};

/// One stored step of the main agent.
///
/// `window` holds `h + 2` consecutive observations: the first `h + 1` form
/// the history the action was taken on, the last `h + 1` the next history.
/// Observations are shared with neighbouring records.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub window: Vec<Arc<Observation>>,
    pub action: f64,
    pub reward: f64,
    pub terminal: bool,
}

impl TransitionRecord {
    pub fn obs_history(&self) -> Vec<&Observation> {
        self.window[..self.window.len() - 1].iter().map(|o| o.as_ref()).collect()
    }

    pub fn next_obs_history(&self) -> Vec<&Observation> {
        self.window[1..].iter().map(|o| o.as_ref()).collect()
    }

    /// Entry signal seen in the newest observation the action was taken on.
    pub fn sigma(&self) -> f64 {
        self.window[self.window.len() - 2].own.sigma
    }
}

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    records: Vec<TransitionRecord>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, records: Vec::new(), cursor: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: TransitionRecord) {
        if self.records.len() < self.capacity {
            self.records.push(record);
        } else {
            self.records[self.cursor] = record;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransitionRecord> {
        self.records.iter()
    }

    /// Up to `batch` distinct records, uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&TransitionRecord> {
        let k = batch.min(self.records.len());
        index::sample(rng, self.records.len(), k).into_iter().map(|i| &self.records[i]).collect()
    }

    pub(crate) fn write_to(&self, ck: &mut Checkpoint) {
        let mut ids: HashMap<*const Observation, u64> = HashMap::new();
        let mut own = Vec::new();
        let mut counts = Vec::new();
        let mut targets = Vec::new();
        let width = self.records.first().map_or(0, |r| r.window.len());
        let mut windows = Vec::with_capacity(self.records.len() * width);
        for r in &self.records {
            for o in &r.window {
                let next = ids.len() as u64;
                let id = *ids.entry(Arc::as_ptr(o)).or_insert_with(|| {
                    own.extend_from_slice(&o.own.to_array());
                    counts.push(o.targets.len() as u64);
                    for t in &o.targets {
                        targets.extend_from_slice(&t.to_array());
                    }
                    next
                });
                windows.push(id);
            }
        }
        let n = self.records.len();
        let n_obs = counts.len();
        let n_targets = targets.len() / TARGET_DIM;
        ck.put_scalar_u64("replay.capacity", self.capacity as u64);
        ck.put_scalar_u64("replay.cursor", self.cursor as u64);
        ck.put_f64("replay.own", vec![n_obs, OWN_DIM], own);
        ck.put_u64("replay.target_counts", vec![n_obs], counts);
        ck.put_f64("replay.targets", vec![n_targets, TARGET_DIM], targets);
        ck.put_u64("replay.windows", vec![n, width], windows);
        ck.put_f64("replay.actions", vec![n], self.records.iter().map(|r| r.action).collect());
        ck.put_f64("replay.rewards", vec![n], self.records.iter().map(|r| r.reward).collect());
        ck.put_u64("replay.terminal", vec![n], self.records.iter().map(|r| r.terminal as u64).collect());
    }

    pub(crate) fn read_from(ck: &Checkpoint) -> Result<Self, CheckpointError> {
        let bad = |m: &str| CheckpointError::Malformed(format!("replay buffer: {m}"));
        let capacity = ck.scalar_u64("replay.capacity")? as usize;
        let cursor = ck.scalar_u64("replay.cursor")? as usize;
        let own = ck.f64s("replay.own")?;
        let counts = ck.u64s("replay.target_counts")?;
        let targets = ck.f64s("replay.targets")?;
        if own.len() != counts.len() * OWN_DIM || targets.len() % TARGET_DIM != 0 {
            return Err(bad("observation table sizes disagree"));
        }
        let mut obs = Vec::with_capacity(counts.len());
        let mut t = 0;
        for (i, &c) in counts.iter().enumerate() {
            let o = &own[i * OWN_DIM..(i + 1) * OWN_DIM];
            let end = t + c as usize;
            if end * TARGET_DIM > targets.len() {
                return Err(bad("target table too short"));
            }
            let entries = (t..end)
                .map(|j| TargetEntry::from_array(targets[j * TARGET_DIM..(j + 1) * TARGET_DIM].try_into().expect("row")))
                .collect();
            t = end;
            obs.push(Arc::new(Observation {
                own: OwnObservation { bearing_to_vertiport: o[0], distance_to_vertiport: o[1], sigma: o[2] },
                targets: entries,
            }));
        }
        let windows_arr = ck.get("replay.windows").ok_or_else(|| CheckpointError::MissingArray("replay.windows".into()))?;
        let width = windows_arr.shape.get(1).copied().unwrap_or(0);
        let windows = ck.u64s("replay.windows")?;
        let actions = ck.f64s("replay.actions")?;
        let rewards = ck.f64s("replay.rewards")?;
        let terminal = ck.u64s("replay.terminal")?;
        let n = actions.len();
        if rewards.len() != n || terminal.len() != n || windows.len() != n * width || n > capacity || (n > 0 && cursor >= capacity) {
            return Err(bad("record arrays disagree"));
        }
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let window = windows[i * width..(i + 1) * width]
                .iter()
                .map(|&k| obs.get(k as usize).cloned().ok_or_else(|| bad("observation index out of range")))
                .collect::<Result<Vec<_>, _>>()?;
            records.push(TransitionRecord { window, action: actions[i], reward: rewards[i], terminal: terminal[i] != 0 });
        }
        Ok(Self { capacity, records, cursor })
    }
}
