//! Retry policy, concurrency gate and token-bucket rate limiter.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendPolicy {
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    pub timeout_secs: u64,
    pub max_concurrent: usize,
    pub requests_per_minute: Option<u32>,
}

impl Default for BackendPolicy {
    fn default() -> Self {
        BackendPolicy {
            max_retries: 5,
            backoff_base_ms: 1_000,
            backoff_cap_ms: 60_000,
            timeout_secs: 120,
            max_concurrent: 4,
            requests_per_minute: None,
        }
    }
}

impl BackendPolicy {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Delay before retry number `retry` (0-based), with `jitter` in [0, 1).
    ///
    /// Equal jitter: half the capped exponential step is fixed, half random.
    pub fn backoff(&self, retry: u32, jitter: f64) -> Duration {
        let step = self
            .backoff_base_ms
            .saturating_mul(1u64.checked_shl(retry.min(32)).unwrap_or(u64::MAX))
            .min(self.backoff_cap_ms);
        let half = step as f64 / 2.0;
        Duration::from_millis((half + jitter.clamp(0.0, 1.0) * half).round() as u64)
    }

    /// Only transport errors, 429 and 5xx are worth retrying.
    pub fn is_retryable_status(status: u16) -> bool {
        status == 429 || (500..600).contains(&status)
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct ConcurrencyGate {
    limit: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

pub struct GatePermit<'a> {
    gate: &'a ConcurrencyGate,
}

impl ConcurrencyGate {
    pub fn new(limit: usize) -> Self {
        ConcurrencyGate { limit: limit.max(1), in_use: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> GatePermit<'_> {
        let mut n = self.in_use.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        GatePermit { gate: self }
    }

    pub fn in_use(&self) -> usize {
        *self.in_use.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut n = self.gate.in_use.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.gate.freed.notify_one();
    }
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    last: Instant,
}

/// Token bucket refilled continuously at `per_minute / 60` tokens per second.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<Bucket>,
}

impl TokenBucket {
    pub fn per_minute(per_minute: u32) -> Self {
        let capacity = per_minute.max(1) as f64;
        TokenBucket {
            capacity,
            per_second: capacity / 60.0,
            state: Mutex::new(Bucket { tokens: capacity, last: Instant::now() }),
        }
    }

    /// Takes a token if one is available, else returns the wait until one is.
    pub fn try_take(&self) -> Result<(), Duration> {
        let mut b = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        let elapsed = now.duration_since(b.last).as_secs_f64();
        b.tokens = (b.tokens + elapsed * self.per_second).min(self.capacity);
        b.last = now;
        if b.tokens >= 1.0 {
            b.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - b.tokens) / self.per_second))
        }
    }

    pub fn acquire(&self, sleeper: &dyn Sleeper) {
        while let Err(wait) = self.try_take() {
            sleeper.sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn backoff_grows_and_caps() {
        let p = BackendPolicy::default();
        assert_eq!(p.backoff(0, 0.0), Duration::from_millis(500));
        assert_eq!(p.backoff(0, 1.0), Duration::from_millis(1000));
        assert_eq!(p.backoff(3, 1.0), Duration::from_millis(8000));
        assert_eq!(p.backoff(10, 1.0), Duration::from_millis(60_000));
        assert_eq!(p.backoff(40, 0.0), Duration::from_millis(30_000));
    }

    #[test]
    fn retryable_statuses() {
        assert!(BackendPolicy::is_retryable_status(429));
        assert!(BackendPolicy::is_retryable_status(503));
        assert!(!BackendPolicy::is_retryable_status(400));
        assert!(!BackendPolicy::is_retryable_status(401));
    }

    #[test]
    fn gate_bounds_concurrency() {
        let gate = Arc::new(ConcurrencyGate::new(2));
        let peak = Arc::new(Mutex::new(0usize));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let gate = gate.clone();
                let peak = peak.clone();
                s.spawn(move || {
                    let _p = gate.acquire();
                    let now = gate.in_use();
                    let mut m = peak.lock().unwrap();
                    *m = (*m).max(now);
                    drop(m);
                    std::thread::sleep(Duration::from_millis(5));
                });
            }
        });
        assert!(*peak.lock().unwrap() <= 2);
        assert_eq!(gate.in_use(), 0);
    }

    #[test]
    fn bucket_limits_burst() {
        let b = TokenBucket::per_minute(3);
        assert!(b.try_take().is_ok());
        assert!(b.try_take().is_ok());
        assert!(b.try_take().is_ok());
        let wait = b.try_take().unwrap_err();
        assert!(wait > Duration::from_secs(15) && wait <= Duration::from_secs(20));
    }
}
