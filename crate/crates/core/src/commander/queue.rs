use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};

/// Bounded FIFO between a frame producer and the replay loop. When full, a
/// push discards the oldest queued frame so the consumer always works on
/// recent data.
#[derive(Debug)]
pub struct FrameQueue<F> {
    capacity: usize,
    inner: Mutex<Inner<F>>,
    ready: Condvar,
}

#[derive(Debug)]
struct Inner<F> {
    items: VecDeque<F>,
    closed: bool,
    dropped: u64,
}

impl<F> FrameQueue<F> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            capacity,
            inner: Mutex::new(Inner {
                items: VecDeque::with_capacity(capacity),
                closed: false,
                dropped: 0,
            }),
            ready: Condvar::new(),
        }
    }

    /// Enqueues `item`; returns the frame evicted to make room, if any.
    pub fn push(&self, item: F) -> Option<F> {
        let mut g = self.inner.lock().expect("queue lock");
        let evicted = if g.items.len() == self.capacity {
            g.dropped += 1;
            g.items.pop_front()
        } else {
            None
        };
        g.items.push_back(item);
        self.ready.notify_one();
        evicted
    }

    /// Blocks until a frame is available. `None` once the queue is closed
    /// and drained.
    pub fn pop(&self) -> Option<F> {
        let mut g = self.inner.lock().expect("queue lock");
        loop {
            if let Some(item) = g.items.pop_front() {
                return Some(item);
            }
            if g.closed {
                return None;
            }
            g = self.ready.wait(g).expect("queue lock");
        }
    }

    /// Marks the end of input; pending frames can still be popped.
    pub fn close(&self) {
        self.inner.lock().expect("queue lock").closed = true;
        self.ready.notify_all();
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("queue lock").items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().expect("queue lock").dropped
    }
}
