//! A deterministic bulk-synchronous runtime for virtual PEs.
//!
//! Every PE runs the same step function once per superstep. Messages sent
//! during superstep `t` are delivered, grouped by sender and in send order,
//! at the start of superstep `t + 1`. PEs may be multiplexed onto any number
//! of worker threads; results never depend on the thread count or on the
//! order in which PEs are scheduled.

use std::convert::Infallible;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Environment variable capping worker parallelism.
pub const THREADS_ENV: &str = "EDGEPART_THREADS";

#[derive(Debug, Error)]
pub enum RuntimeError<E: std::error::Error + 'static> {
    #[error("the runtime needs at least one PE")]
    NoPes,
    #[error("PE {pe} failed in superstep {step}: {source}")]
    PeFailed {
        pe: usize,
        step: usize,
        #[source]
        source: E,
    },
    #[error("PE {from} addressed a message to PE {to}, but only {pes} PEs exist")]
    BadDestination { from: usize, to: usize, pes: usize },
    #[error("program did not terminate within {0} supersteps")]
    StepLimit(usize),
}

impl RuntimeError<Infallible> {
    /// Widens an error from an infallible program into any error type.
    pub fn widen<E: std::error::Error + 'static>(self) -> RuntimeError<E> {
        match self {
            RuntimeError::NoPes => RuntimeError::NoPes,
            RuntimeError::PeFailed { source, .. } => match source {},
            RuntimeError::BadDestination { from, to, pes } => {
                RuntimeError::BadDestination { from, to, pes }
            }
            RuntimeError::StepLimit(s) => RuntimeError::StepLimit(s),
        }
    }
}

/// What a PE reports at the end of a superstep. The run ends after the first
/// superstep in which every PE reports `Done` and no message was sent; a PE
/// that reported `Done` earlier keeps being stepped until then.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Continue,
    Done,
}

/// Order in which PEs are handed to worker threads within a superstep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    InOrder,
    /// A fresh permutation per superstep, derived from the seed.
    Shuffled(u64),
}

/// Per-PE view during one superstep.
#[derive(Debug)]
pub struct PeContext<M> {
    pe: usize,
    pes: usize,
    superstep: usize,
    inbox: Vec<Vec<M>>,
    outbox: Vec<Vec<M>>,
    bad_destination: Option<usize>,
}

impl<M> PeContext<M> {
    fn new(pe: usize, pes: usize) -> Self {
        PeContext {
            pe,
            pes,
            superstep: 0,
            inbox: (0..pes).map(|_| Vec::new()).collect(),
            outbox: (0..pes).map(|_| Vec::new()).collect(),
            bad_destination: None,
        }
    }

    pub fn pe(&self) -> usize {
        self.pe
    }

    pub fn pe_count(&self) -> usize {
        self.pes
    }

    pub fn superstep(&self) -> usize {
        self.superstep
    }

    /// Messages received from `source` in the previous superstep.
    pub fn inbox(&self, source: usize) -> &[M] {
        &self.inbox[source]
    }

    /// Non-empty batches of the previous superstep as `(source, messages)`,
    /// ordered by source.
    pub fn batches(&self) -> impl Iterator<Item = (usize, &[M])> {
        self.inbox
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(s, b)| (s, b.as_slice()))
    }

    pub fn take_inbox(&mut self, source: usize) -> Vec<M> {
        std::mem::take(&mut self.inbox[source])
    }

    /// Queues `message` for `dest`. An out-of-range destination aborts the
    /// run at the end of the superstep.
    pub fn send(&mut self, dest: usize, message: M) {
        match self.outbox.get_mut(dest) {
            Some(buffer) => buffer.push(message),
            None => {
                self.bad_destination.get_or_insert(dest);
            }
        }
    }

    pub fn send_batch(&mut self, dest: usize, messages: impl IntoIterator<Item = M>) {
        match self.outbox.get_mut(dest) {
            Some(buffer) => buffer.extend(messages),
            None => {
                self.bad_destination.get_or_insert(dest);
            }
        }
    }
}

/// Traffic sent by one PE. A message is one non-empty batch from a sender
/// to a receiver within a superstep; a record is one value inside a batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PeTraffic {
    pub messages: u64,
    pub records: u64,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CommStats {
    pub supersteps: usize,
    pub per_pe: Vec<PeTraffic>,
}

impl CommStats {
    fn new(pes: usize) -> Self {
        CommStats {
            supersteps: 0,
            per_pe: vec![PeTraffic::default(); pes],
        }
    }

    pub fn total(&self) -> PeTraffic {
        self.per_pe.iter().fold(PeTraffic::default(), |acc, t| PeTraffic {
            messages: acc.messages + t.messages,
            records: acc.records + t.records,
            bytes: acc.bytes + t.bytes,
        })
    }

    /// Accumulates a later run on the same PEs.
    pub fn absorb(&mut self, other: &CommStats) {
        self.supersteps += other.supersteps;
        if self.per_pe.len() < other.per_pe.len() {
            self.per_pe.resize(other.per_pe.len(), PeTraffic::default());
        }
        for (mine, theirs) in self.per_pe.iter_mut().zip(&other.per_pe) {
            mine.messages += theirs.messages;
            mine.records += theirs.records;
            mine.bytes += theirs.bytes;
        }
    }
}

#[derive(Debug)]
pub struct RunOutput<S> {
    pub states: Vec<S>,
    pub stats: CommStats,
}

/// Worker count from `EDGEPART_THREADS`, else the available parallelism.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Applies `f` to every item on up to `threads` scoped worker threads and
/// returns the results in input order.
pub fn parallel_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let len = items.len();
    let threads = threads.clamp(1, len.max(1));
    if threads == 1 {
        return items.into_iter().map(f).collect();
    }
    let mut lanes: Vec<Vec<(usize, T)>> = (0..threads).map(|_| Vec::new()).collect();
    for (i, item) in items.into_iter().enumerate() {
        lanes[i % threads].push((i, item));
    }
    let f = &f;
    let mut results: Vec<Option<R>> = (0..len).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = lanes
            .into_iter()
            .map(|lane| {
                scope.spawn(move || {
                    lane.into_iter()
                        .map(|(i, item)| (i, f(item)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (i, r) in handle.join().expect("worker thread panicked") {
                results[i] = Some(r);
            }
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

/// The simulated machine: `pes` virtual PEs on `threads` workers.
#[derive(Clone, Debug)]
pub struct Runtime {
    pes: usize,
    threads: usize,
    schedule: Schedule,
}

impl Runtime {
    pub fn new(pes: usize) -> Self {
        Runtime {
            pes,
            threads: default_threads(),
            schedule: Schedule::InOrder,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn pe_count(&self) -> usize {
        self.pes
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Runs `step` on every PE, superstep after superstep, until all PEs are
    /// done and the network is quiet. `states[p]` is the private state of PE
    /// `p` and is handed back at the end.
    pub fn run<S, M, E, F>(
        &self,
        mut states: Vec<S>,
        max_steps: usize,
        step: F,
    ) -> Result<RunOutput<S>, RuntimeError<E>>
    where
        S: Send,
        M: Send,
        E: std::error::Error + Send + 'static,
        F: Fn(&mut S, &mut PeContext<M>) -> Result<Status, E> + Sync,
    {
        let pes = self.pes;
        if pes == 0 {
            return Err(RuntimeError::NoPes);
        }
        assert_eq!(states.len(), pes, "one state per PE");
        let mut contexts: Vec<PeContext<M>> = (0..pes).map(|p| PeContext::new(p, pes)).collect();
        let mut stats = CommStats::new(pes);
        let record_size = std::mem::size_of::<M>() as u64;

        for superstep in 0..max_steps {
            let mut tasks: Vec<(usize, &mut S, &mut PeContext<M>)> = states
                .iter_mut()
                .zip(contexts.iter_mut())
                .enumerate()
                .map(|(p, (s, c))| {
                    c.superstep = superstep;
                    (p, s, c)
                })
                .collect();
            if let Schedule::Shuffled(seed) = self.schedule {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (superstep as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                tasks.shuffle(&mut rng);
            }
            let step = &step;
            let mut outcomes: Vec<(usize, Result<Status, E>)> =
                parallel_map(tasks, self.threads, |(p, state, ctx)| (p, step(state, ctx)));
            outcomes.sort_by_key(|(p, _)| *p);
            stats.supersteps = superstep + 1;

            let mut all_done = true;
            for (p, outcome) in outcomes {
                match outcome {
                    Ok(Status::Done) => {}
                    Ok(Status::Continue) => all_done = false,
                    Err(source) => {
                        return Err(RuntimeError::PeFailed {
                            pe: p,
                            step: superstep,
                            source,
                        })
                    }
                }
            }
            if let Some((from, to)) = contexts
                .iter()
                .find_map(|c| c.bad_destination.map(|to| (c.pe, to)))
            {
                return Err(RuntimeError::BadDestination { from, to, pes });
            }

            // barrier: move every outbox into the receivers' inboxes
            let mut sent_any = false;
            for c in contexts.iter_mut() {
                for inbox in c.inbox.iter_mut() {
                    inbox.clear();
                }
            }
            for src in 0..pes {
                for dst in 0..pes {
                    let batch = std::mem::take(&mut contexts[src].outbox[dst]);
                    if batch.is_empty() {
                        continue;
                    }
                    sent_any = true;
                    let traffic = &mut stats.per_pe[src];
                    traffic.messages += 1;
                    traffic.records += batch.len() as u64;
                    traffic.bytes += batch.len() as u64 * record_size;
                    contexts[dst].inbox[src] = batch;
                }
            }
            if all_done && !sent_any {
                return Ok(RunOutput { states, stats });
            }
        }
        Err(RuntimeError::StepLimit(max_steps))
    }
}

/// Result of a collective: one value per PE plus the traffic it caused.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveResult<T> {
    pub values: Vec<T>,
    pub stats: CommStats,
}

/// Exclusive prefix sum `Σ_{q<p} values[q]` on every PE, computed by
/// recursive doubling in `⌈log2 p⌉ + 1` supersteps.
pub fn prefix_sum_collective(
    runtime: &Runtime,
    values: &[u64],
) -> Result<CollectiveResult<u64>, RuntimeError<Infallible>> {
    struct ScanState {
        own: u64,
        partial: u64,
    }
    let pes = runtime.pe_count();
    assert_eq!(values.len(), pes, "one value per PE");
    let states = values
        .iter()
        .map(|&v| ScanState { own: v, partial: v })
        .collect();
    let max_steps = usize::BITS as usize + 2;
    let out = runtime.run(states, max_steps, |state: &mut ScanState, ctx: &mut PeContext<u64>| {
        let step = ctx.superstep();
        if step > 0 {
            let from = ctx.pe().checked_sub(1 << (step - 1));
            if let Some(src) = from {
                state.partial += ctx.inbox(src).iter().sum::<u64>();
            }
        }
        let distance = 1usize.checked_shl(step as u32).unwrap_or(usize::MAX);
        if distance >= ctx.pe_count() {
            return Ok(Status::Done);
        }
        if ctx.pe() + distance < ctx.pe_count() {
            ctx.send(ctx.pe() + distance, state.partial);
        }
        Ok::<_, Infallible>(Status::Continue)
    })?;
    Ok(CollectiveResult {
        values: out.states.iter().map(|s| s.partial - s.own).collect(),
        stats: out.stats,
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("expected one outbox per PE ({expected}), got {found}")]
    OutboxCount { expected: usize, found: usize },
    #[error("PE {from} addressed a batch to PE {to}, but only {pes} PEs exist")]
    BadDestination { from: usize, to: usize, pes: usize },
}

/// Personalised all-to-all exchange. `outboxes[src]` lists `(dest, batch)`
/// pairs; the result `inboxes[dest][src]` concatenates, in order, every batch
/// `src` addressed to `dest`.
pub fn all_to_all_exchange<M>(
    pes: usize,
    outboxes: Vec<Vec<(usize, Vec<M>)>>,
) -> Result<Vec<Vec<Vec<M>>>, ExchangeError> {
    if outboxes.len() != pes {
        return Err(ExchangeError::OutboxCount {
            expected: pes,
            found: outboxes.len(),
        });
    }
    for (src, outbox) in outboxes.iter().enumerate() {
        if let Some(&(to, _)) = outbox.iter().find(|(to, _)| *to >= pes) {
            return Err(ExchangeError::BadDestination { from: src, to, pes });
        }
    }
    let mut inboxes: Vec<Vec<Vec<M>>> = (0..pes)
        .map(|_| (0..pes).map(|_| Vec::new()).collect())
        .collect();
    for (src, outbox) in outboxes.into_iter().enumerate() {
        for (dst, batch) in outbox {
            inboxes[dst][src].extend(batch);
        }
    }
    Ok(inboxes)
}
