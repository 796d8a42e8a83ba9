//! In-process publish/subscribe with named, typed topics. Delivery is
//! synchronous and in subscription order, so a run driven by the virtual
//! clock replays identically.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::{self, Write};
use std::rc::Rc;

use serde::Serialize;

use crate::domain::{EgoState, ObjectListFrame, Timestamp};
use crate::mode_control::ModeTransition;
use crate::validator::ValidationVerdict;

pub const CAMERA_OBJECTS: &str = "perception/camera/objects";
pub const LIDAR_OBJECTS: &str = "perception/lidar/objects";
pub const EGO_STATE: &str = "ego/state";
pub const VERDICT: &str = "monitor/verdict";
pub const MODE: &str = "monitor/mode";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadKind {
    ObjectList,
    Ego,
    Verdict,
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    ObjectList(ObjectListFrame),
    Ego(EgoState),
    Verdict(ValidationVerdict),
    Mode(ModeTransition),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::ObjectList(_) => PayloadKind::ObjectList,
            Payload::Ego(_) => PayloadKind::Ego,
            Payload::Verdict(_) => PayloadKind::Verdict,
            Payload::Mode(_) => PayloadKind::Mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Message<'a> {
    pub topic: &'a str,
    #[serde(rename = "t_ms")]
    pub at: Timestamp,
    pub payload: &'a Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubscriptionId(u64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BusError {
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("topic {0:?} already exists")]
    DuplicateTopic(String),
    #[error("topic {topic:?} carries {expected:?}, got {got:?}")]
    KindMismatch { topic: String, expected: PayloadKind, got: PayloadKind },
}

type Handler = Box<dyn FnMut(&Message<'_>)>;

struct TopicEntry {
    kind: PayloadKind,
    subscribers: Vec<(SubscriptionId, Handler)>,
}

#[derive(Default)]
pub struct Bus {
    topics: BTreeMap<String, TopicEntry>,
    next_id: u64,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    /// A bus with the five topics the monitor pipeline uses.
    pub fn with_standard_topics() -> Self {
        let mut bus = Bus::new();
        for (name, kind) in [
            (CAMERA_OBJECTS, PayloadKind::ObjectList),
            (LIDAR_OBJECTS, PayloadKind::ObjectList),
            (EGO_STATE, PayloadKind::Ego),
            (VERDICT, PayloadKind::Verdict),
            (MODE, PayloadKind::Mode),
        ] {
            bus.add_topic(name, kind).expect("standard topic names are distinct");
        }
        bus
    }

    pub fn add_topic(&mut self, name: &str, kind: PayloadKind) -> Result<(), BusError> {
        if self.topics.contains_key(name) {
            return Err(BusError::DuplicateTopic(name.to_owned()));
        }
        self.topics.insert(name.to_owned(), TopicEntry { kind, subscribers: Vec::new() });
        Ok(())
    }

    pub fn topic_kind(&self, name: &str) -> Option<PayloadKind> {
        self.topics.get(name).map(|t| t.kind)
    }

    pub fn subscribe<F>(&mut self, topic: &str, handler: F) -> Result<SubscriptionId, BusError>
    where
        F: FnMut(&Message<'_>) + 'static,
    {
        let entry = self
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_owned()))?;
        let id = SubscriptionId(self.next_id);
        self.next_id += 1;
        entry.subscribers.push((id, Box::new(handler)));
        Ok(id)
    }

    pub fn unsubscribe(&mut self, id: SubscriptionId) -> bool {
        for entry in self.topics.values_mut() {
            if let Some(pos) = entry.subscribers.iter().position(|(s, _)| *s == id) {
                drop(entry.subscribers.remove(pos));
                return true;
            }
        }
        false
    }

    /// Delivers `payload` to every current subscriber of `topic` and returns
    /// how many received it.
    pub fn publish(&mut self, topic: &str, payload: Payload, at: Timestamp) -> Result<usize, BusError> {
        let entry = self
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.to_owned()))?;
        if payload.kind() != entry.kind {
            return Err(BusError::KindMismatch { topic: topic.to_owned(), expected: entry.kind, got: payload.kind() });
        }
        let msg = Message { topic, at, payload: &payload };
        for (_, handler) in entry.subscribers.iter_mut() {
            handler(&msg);
        }
        Ok(entry.subscribers.len())
    }

    /// Mirrors `topic` to `writer` as one JSON object per line. The returned
    /// handle surfaces the first write error, if any.
    pub fn tap<W: Write + 'static>(&mut self, topic: &str, writer: W) -> Result<Tap, BusError> {
        let error: Rc<RefCell<Option<io::Error>>> = Rc::default();
        let sink = Rc::clone(&error);
        let mut writer = writer;
        let id = self.subscribe(topic, move |msg| {
            if sink.borrow().is_some() {
                return;
            }
            let res = serde_json::to_writer(&mut writer, msg)
                .map_err(io::Error::from)
                .and_then(|_| writer.write_all(b"\n"))
                .and_then(|_| writer.flush());
            if let Err(e) = res {
                *sink.borrow_mut() = Some(e);
            }
        })?;
        Ok(Tap { id, error })
    }
}

pub struct Tap {
    pub id: SubscriptionId,
    error: Rc<RefCell<Option<io::Error>>>,
}

impl Tap {
    pub fn take_error(&self) -> Option<io::Error> {
        self.error.borrow_mut().take()
    }
}
