use std::collections::VecDeque;
use std::sync::Arc;

use super::AgentState;

/// One stored experience. States are shared because consecutive transitions
/// reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Arc<AgentState>,
    pub a: usize,
    pub s_next: Arc<AgentState>,
    pub r: f64,
    /// No bootstrap from `s_next` (the step ended in a collision).
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions; the oldest is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::ShotMode;

    fn t(r: f64) -> Transition {
        let s = Arc::new(AgentState::from_parts(&[0; 576], ShotMode::Back, 0.2));
        Transition {
            s: s.clone(),
            a: 0,
            s_next: s,
            r,
            terminal: false,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(t(i as f64 / 10.0));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.iter().map(|t| t.r).collect();
        assert_eq!(rewards, vec![0.2, 0.3, 0.4]);
    }

    #[test]
    fn never_exceeds_capacity() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..25 {
            buf.push(t(0.0));
            assert!(buf.len() <= 10, "len {} after {} pushes", buf.len(), i + 1);
        }
    }
}
