use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Health {
    Healthy,
    Suspect,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointStatus {
    pub id: String,
    pub base_url: String,
    pub health: Health,
    pub consecutive_failures: u32,
    pub calls_completed: u64,
}

/// Round-robin cursor and health bookkeeping for a fixed set of endpoints.
///
/// One failure makes an endpoint suspect; `max_consecutive_failures` in a
/// row take it down. Any success resets it to healthy. Down endpoints are
/// skipped until [`EndpointPool::readmit_down`] is called.
#[derive(Debug, Clone)]
pub struct EndpointPool {
    endpoints: Vec<EndpointStatus>,
    cursor: usize,
    max_consecutive_failures: u32,
}

impl EndpointPool {
    pub fn new<'a>(
        endpoints: impl IntoIterator<Item = (&'a str, &'a str)>,
        max_consecutive_failures: u32,
    ) -> Self {
        Self {
            endpoints: endpoints
                .into_iter()
                .map(|(id, url)| EndpointStatus {
                    id: id.to_string(),
                    base_url: url.to_string(),
                    health: Health::Healthy,
                    consecutive_failures: 0,
                    calls_completed: 0,
                })
                .collect(),
            cursor: 0,
            max_consecutive_failures: max_consecutive_failures.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    pub fn status(&self) -> &[EndpointStatus] {
        &self.endpoints
    }

    /// Next endpoint in cyclic order that is not down; `None` means all down.
    pub fn next_endpoint(&mut self) -> Option<usize> {
        self.next_endpoint_avoiding(&[])
    }

    /// Like [`next_endpoint`](Self::next_endpoint) but prefers endpoints not
    /// in `tried`, falling back to them when nothing else is up.
    pub fn next_endpoint_avoiding(&mut self, tried: &[usize]) -> Option<usize> {
        let n = self.endpoints.len();
        let order = (0..n).map(|k| (self.cursor + k) % n);
        let up = |i: &usize| self.endpoints[*i].health != Health::Down;
        let pick = order
            .clone()
            .filter(up)
            .find(|i| !tried.contains(i))
            .or_else(|| order.filter(up).next())?;
        self.cursor = (pick + 1) % n;
        Some(pick)
    }

    pub fn record_success(&mut self, index: usize) {
        let e = &mut self.endpoints[index];
        e.health = Health::Healthy;
        e.consecutive_failures = 0;
        e.calls_completed += 1;
    }

    pub fn record_failure(&mut self, index: usize) {
        let max = self.max_consecutive_failures;
        let e = &mut self.endpoints[index];
        e.consecutive_failures += 1;
        e.health = if e.consecutive_failures >= max {
            Health::Down
        } else {
            Health::Suspect
        };
    }

    pub fn all_down(&self) -> bool {
        self.endpoints.iter().all(|e| e.health == Health::Down)
    }

    /// Give every down endpoint one more chance: it comes back as suspect
    /// and a single further failure takes it down again.
    pub fn readmit_down(&mut self) {
        let max = self.max_consecutive_failures;
        for e in &mut self.endpoints {
            if e.health == Health::Down {
                e.health = Health::Suspect;
                e.consecutive_failures = max - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> EndpointPool {
        let ids: Vec<String> = (1..=n).map(|i| format!("E{i}")).collect();
        EndpointPool::new(ids.iter().map(|s| (s.as_str(), "mock://x")), 3)
    }

    fn take(p: &mut EndpointPool, k: usize) -> Vec<usize> {
        (0..k).map(|_| p.next_endpoint().unwrap()).collect()
    }

    #[test]
    fn cycles_in_order() {
        let mut p = pool(3);
        assert_eq!(take(&mut p, 6), vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn skips_down_endpoints() {
        let mut p = pool(3);
        for _ in 0..3 {
            p.record_failure(1);
        }
        assert_eq!(p.status()[1].health, Health::Down);
        assert_eq!(take(&mut p, 4), vec![0, 2, 0, 2]);
    }

    #[test]
    fn health_transitions() {
        let mut p = pool(1);
        p.record_failure(0);
        assert_eq!(p.status()[0].health, Health::Suspect);
        p.record_failure(0);
        assert_eq!(p.status()[0].health, Health::Suspect);
        p.record_success(0);
        assert_eq!(p.status()[0].health, Health::Healthy);
        assert_eq!(p.status()[0].consecutive_failures, 0);
        for _ in 0..3 {
            p.record_failure(0);
        }
        assert!(p.all_down());
        assert_eq!(p.next_endpoint(), None);
        p.readmit_down();
        assert_eq!(p.next_endpoint(), Some(0));
        p.record_failure(0);
        assert!(p.all_down());
    }

    #[test]
    fn avoids_tried_endpoints_when_possible() {
        let mut p = pool(3);
        assert_eq!(p.next_endpoint(), Some(0));
        // cursor now at 1, but 1 was already tried for this item
        assert_eq!(p.next_endpoint_avoiding(&[1]), Some(2));
        assert_eq!(p.next_endpoint_avoiding(&[0, 1, 2]), Some(0));
    }

    #[test]
    fn balanced_over_many_calls() {
        let mut p = pool(3);
        let mut counts = [0u32; 3];
        for _ in 0..299_998 {
            counts[p.next_endpoint().unwrap()] += 1;
        }
        assert_eq!(counts, [100_000, 99_999, 99_999]);
        assert_eq!(counts.iter().sum::<u32>(), 299_998);
    }
}
