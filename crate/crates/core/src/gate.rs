use std::sync::{Condvar, Mutex};

/// Counting gate that caps the number of concurrent requests.
#[derive(Debug)]
pub struct InFlightGate {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct GatePermit<'a> {
    gate: &'a InFlightGate,
}

impl InFlightGate {
    pub fn new(limit: usize) -> Self {
        InFlightGate { limit: limit.max(1), active: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> GatePermit<'_> {
        let mut active = self.active.lock().expect("gate lock poisoned");
        while *active >= self.limit {
            active = self.freed.wait(active).expect("gate lock poisoned");
        }
        *active += 1;
        GatePermit { gate: self }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut active = self.gate.active.lock().expect("gate lock poisoned");
        *active -= 1;
        self.gate.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn never_exceeds_limit() {
        let gate = Arc::new(InFlightGate::new(2));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (gate, current, peak) = (gate.clone(), current.clone(), peak.clone());
                s.spawn(move || {
                    let _permit = gate.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(5));
                    current.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
