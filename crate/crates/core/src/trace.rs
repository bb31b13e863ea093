//! Trace events and the context every traced algorithm runs inside.
//!
//! Only the assigned variable and its new value are recorded per step. Work
//! done inside [`TraceContext::invisible`] computes normally but records
//! nothing and is never corrupted by dynamic noise, so atomic sub-calls stay
//! atomic.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::noise;
use crate::tint::{Render, TInt};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Problem(String),
    /// One or more `name = value` bindings printed on a single line.
    Assign(Vec<(String, String)>),
    Code(String),
    Answer(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub ordinal: usize,
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn line(&self) -> String {
        match &self.kind {
            EventKind::Problem(t) | EventKind::Code(t) | EventKind::Answer(t) => t.clone(),
            EventKind::Assign(bindings) => bindings
                .iter()
                .map(|(n, v)| format!("{n} = {v}"))
                .collect::<Vec<_>>()
                .join(" , "),
        }
    }
}

/// One dynamic corruption applied at an initialization site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    /// Index of the `init_traced` call (counting every call, visible or not).
    pub site: usize,
    pub var: String,
    pub original: String,
    pub corrupted: String,
    /// Ordinal of the emitted event carrying the corrupted value.
    pub event: Option<usize>,
}

enum Hook {
    Off,
    Random { rng: ChaCha8Rng, intensity: f64 },
    Replay(BTreeMap<usize, TInt>),
}

pub struct TraceContext {
    events: Vec<TraceEvent>,
    invisible_depth: usize,
    emit_code_lines: bool,
    hook: Hook,
    init_sites: usize,
    gated_sites: usize,
    corruptions: Vec<Corruption>,
}

impl Default for TraceContext {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceContext {
    /// Noise-free context.
    pub fn new() -> Self {
        TraceContext {
            events: Vec::new(),
            invisible_depth: 0,
            emit_code_lines: false,
            hook: Hook::Off,
            init_sites: 0,
            gated_sites: 0,
            corruptions: Vec::new(),
        }
    }

    /// Context that corrupts each visible initialization with probability
    /// `intensity`, drawing from `rng`.
    pub fn with_dynamic_noise(rng: ChaCha8Rng, intensity: f64) -> Self {
        TraceContext {
            hook: Hook::Random { rng, intensity },
            ..Self::new()
        }
    }

    /// Context that injects previously recorded corruptions at the same sites.
    pub fn replaying(corruptions: &[Corruption]) -> Result<Self, crate::tint::TIntError> {
        let mut map = BTreeMap::new();
        for c in corruptions {
            map.insert(c.site, TInt::parse(&c.corrupted)?);
        }
        Ok(TraceContext {
            hook: Hook::Replay(map),
            ..Self::new()
        })
    }

    pub fn emit_code_lines(mut self, on: bool) -> Self {
        self.emit_code_lines = on;
        self
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    pub fn corruptions(&self) -> &[Corruption] {
        &self.corruptions
    }

    pub fn take_corruptions(&mut self) -> Vec<Corruption> {
        std::mem::take(&mut self.corruptions)
    }

    /// Number of `init_traced` calls so far.
    pub fn init_sites(&self) -> usize {
        self.init_sites
    }

    /// Visible initialization sites that were eligible for dynamic noise.
    pub fn eligible_sites(&self) -> usize {
        self.gated_sites
    }

    pub fn invisibility_depth(&self) -> usize {
        self.invisible_depth
    }

    pub fn is_visible(&self) -> bool {
        self.invisible_depth == 0
    }

    fn push(&mut self, kind: EventKind) -> Option<usize> {
        if !self.is_visible() {
            return None;
        }
        let ordinal = self.events.len();
        self.events.push(TraceEvent { ordinal, kind });
        Some(ordinal)
    }

    pub fn problem(&mut self, text: impl Into<String>) {
        self.push(EventKind::Problem(text.into()));
    }

    pub fn answer(&mut self, text: impl Into<String>) {
        self.push(EventKind::Answer(text.into()));
    }

    pub fn code(&mut self, text: &str) {
        if self.emit_code_lines {
            self.push(EventKind::Code(text.to_string()));
        }
    }

    /// Records a freshly computed value, applying dynamic noise first when
    /// enabled. The returned value (possibly corrupted) is what the caller
    /// must keep computing with.
    pub fn init_traced(&mut self, name: &str, value: TInt) -> TInt {
        let site = self.init_sites;
        self.init_sites += 1;
        let visible = self.is_visible();
        let replaced = if visible {
            match &mut self.hook {
                Hook::Off => None,
                Hook::Random { rng, intensity } => {
                    self.gated_sites += 1;
                    noise::corrupt_init(rng, &value, *intensity)
                }
                Hook::Replay(map) => {
                    self.gated_sites += 1;
                    map.get(&site).cloned()
                }
            }
        } else {
            None
        };
        match replaced {
            Some(corrupted) => {
                let event = self.push(EventKind::Assign(vec![(name.to_string(), corrupted.render())]));
                self.corruptions.push(Corruption {
                    site,
                    var: name.to_string(),
                    original: value.render(),
                    corrupted: corrupted.render(),
                    event,
                });
                corrupted
            }
            None => {
                self.push(EventKind::Assign(vec![(name.to_string(), value.render())]));
                value
            }
        }
    }

    /// Records a re-assignment as-is. Repeated values are recorded again.
    pub fn assign<V: Render + ?Sized>(&mut self, name: &str, value: &V) {
        if self.is_visible() {
            self.push(EventKind::Assign(vec![(name.to_string(), value.render())]));
        }
    }

    /// Records several bindings on one line (`x = 5 , y = 6`).
    pub fn assign_many(&mut self, bindings: &[(&str, &dyn Render)]) {
        if self.is_visible() {
            let b = bindings
                .iter()
                .map(|(n, v)| (n.to_string(), v.render()))
                .collect();
            self.push(EventKind::Assign(b));
        }
    }

    /// Runs `body` with recording (and dynamic noise) suspended.
    pub fn invisible<R>(&mut self, body: impl FnOnce(&mut Self) -> R) -> R {
        self.invisible_depth += 1;
        let out = body(self);
        self.invisible_depth -= 1;
        out
    }
}
