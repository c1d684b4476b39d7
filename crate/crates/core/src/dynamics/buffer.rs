use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    pub reward: f64,
}

/// Insertion-ordered transition store. With a capacity, the oldest records
/// are evicted first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    state_dim: usize,
    action_dim: usize,
    capacity: Option<usize>,
    transitions: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(state_dim: usize, action_dim: usize, capacity: Option<usize>) -> Self {
        Self {
            state_dim,
            action_dim,
            capacity,
            transitions: VecDeque::new(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        ensure_dim("transition state", self.state_dim, t.state.len())?;
        ensure_dim("transition next_state", self.state_dim, t.next_state.len())?;
        ensure_dim("transition action", self.action_dim, t.action.len())?;
        if let Some(cap) = self.capacity {
            if cap == 0 {
                return Ok(());
            }
            while self.transitions.len() >= cap {
                self.transitions.pop_front();
            }
        }
        self.transitions.push_back(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.transitions.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.transitions.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: f64) -> Transition {
        Transition {
            state: vec![x, 0.0],
            action: vec![0.0],
            next_state: vec![x + 1.0, 0.0],
            reward: x,
        }
    }

    #[test]
    fn rejects_inconsistent_dims() {
        let mut b = ReplayBuffer::new(2, 1, None);
        let mut bad = t(0.0);
        bad.action = vec![0.0, 1.0];
        assert!(b.push(bad).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn capacity_evicts_oldest_in_order() {
        let mut b = ReplayBuffer::new(2, 1, Some(3));
        for i in 0..5 {
            b.push(t(i as f64)).unwrap();
        }
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }
}
