//! Stage instrumentation used to audit when ground-truth labels are read.

use std::sync::Mutex;

use crate::embedding_io::LabelVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Load,
    Graph,
    Filter,
    Cluster,
    Split,
    Train,
    Metrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Enter(Stage),
    /// The label values were handed out.
    LabelsRead,
    /// Only the number of classes was handed out.
    ClassCountRead,
}

#[derive(Debug, Default)]
pub struct Trace {
    events: Mutex<Vec<TraceEvent>>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, event: TraceEvent) {
        self.events.lock().expect("trace lock").push(event);
    }

    pub fn enter(&self, stage: Stage) {
        self.record(TraceEvent::Enter(stage));
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.events.lock().expect("trace lock").clone()
    }

    /// True when no label values were read before the first `Metrics` stage.
    pub fn labels_untouched_before_metrics(&self) -> bool {
        let events = self.events();
        let metrics = events
            .iter()
            .position(|e| *e == TraceEvent::Enter(Stage::Metrics))
            .unwrap_or(events.len());
        !events[..metrics].contains(&TraceEvent::LabelsRead)
    }
}

/// Label vector whose accesses are logged to a [`Trace`].
#[derive(Debug)]
pub struct GuardedLabels<'a> {
    labels: &'a LabelVector,
    trace: &'a Trace,
}

impl<'a> GuardedLabels<'a> {
    pub fn new(labels: &'a LabelVector, trace: &'a Trace) -> Self {
        Self { labels, trace }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.trace.record(TraceEvent::ClassCountRead);
        self.labels.n_classes()
    }

    pub fn read(&self) -> &'a LabelVector {
        self.trace.record(TraceEvent::LabelsRead);
        self.labels
    }
}
