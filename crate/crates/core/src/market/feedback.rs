//! Exact event-driven simulation of the price-feedback market.
//!
//! Between events every agent's mood and the log-price are constant, so the
//! aggregate buy and sell intensities are constant too. The next event is the
//! earlier of the next scheduled mood change (a min-heap over agents) and an
//! exponential order clock with the aggregate intensity. Separable rates make
//! the aggregate `T (g±(S) Σ_a f(x^a) + N h±(S))`, updated in O(1) per event.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};
use crate::semi_markov::SemiMarkovSpec;
use crate::series::{GridSeries, SeriesRole};

use super::rates::RateSpec;

/// Simulations expected to exceed this many events are refused.
pub const MAX_EXPECTED_EVENTS: f64 = 1e9;

fn default_one() -> f64 {
    1.0
}

fn default_grid_step() -> f64 {
    1e-3
}

/// Size and timing parameters of a market run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub n_agents: usize,
    /// Speed-up `T` of the agents' mood clocks.
    #[serde(default = "default_one")]
    pub time_scale: f64,
    #[serde(default = "default_one")]
    pub horizon: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 1 {
            return Err(Error::invariant("N ≥ 1", format!("n_agents = {}", self.n_agents)));
        }
        if !(self.time_scale >= 1.0 && self.time_scale.is_finite()) {
            return Err(Error::invariant("T ≥ 1", format!("time_scale = {}", self.time_scale)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invariant("horizon > 0", format!("horizon = {}", self.horizon)));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= self.horizon) {
            return Err(Error::invariant("0 < grid_step ≤ horizon", format!("grid_step = {}", self.grid_step)));
        }
        super::fluid::grid_steps(self.horizon, self.grid_step)?;
        Ok(())
    }

    pub fn grid_steps(&self) -> usize {
        (self.horizon / self.grid_step).round() as usize
    }
}

/// Everything needed to reproduce one feedback-market run.
#[derive(Debug, Clone)]
pub struct MarketConfig {
    pub params: MarketParams,
    pub semi_markov: SemiMarkovSpec,
    pub rates: RateSpec,
    pub seed: u64,
}

impl MarketConfig {
    pub fn new(params: MarketParams, semi_markov: SemiMarkovSpec, rates: RateSpec, seed: u64) -> Result<Self> {
        params.validate()?;
        if rates.f().len() != semi_markov.len() {
            return Err(Error::invariant(
                "f defined for every state",
                format!("{} values for {} states", rates.f().len(), semi_markov.len()),
            ));
        }
        Ok(Self {
            params,
            semi_markov,
            rates,
            seed,
        })
    }

    /// Order and mood-change events expected over the horizon (upper estimate).
    pub fn expected_events(&self) -> f64 {
        let p = &self.params;
        let scale = p.n_agents as f64 * p.time_scale * p.horizon;
        scale * (2.0 * self.rates.rate_bound() + self.semi_markov.jump_rate())
    }

    /// Log-price jump per order, `1 / (N T)`.
    pub fn tick(&self) -> f64 {
        1.0 / (self.params.n_agents as f64 * self.params.time_scale)
    }

    pub fn rng(&self) -> SimRng {
        stream(self.seed, 0)
    }
}

/// Order arrivals and the log-price after each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    /// Times of orders; the initial state `(0, 0)` is not included.
    pub event_times: Vec<f64>,
    /// Net order count after each order; the price is `net * tick`.
    pub net_orders: Vec<i64>,
    pub tick: f64,
    pub horizon: f64,
    pub mood_changes: u64,
}

impl PricePath {
    pub fn order_count(&self) -> usize {
        self.event_times.len()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.net_orders.iter().map(|&k| k as f64 * self.tick).collect()
    }

    pub fn price_at(&self, t: f64) -> f64 {
        let k = self.event_times.partition_point(|&e| e <= t);
        if k == 0 {
            0.0
        } else {
            self.net_orders[k - 1] as f64 * self.tick
        }
    }

    /// Right-continuous price sampled on `0, dt, ..., horizon`.
    pub fn to_grid(&self, grid_step: f64) -> Result<GridSeries> {
        let n = super::fluid::grid_steps(self.horizon, grid_step)?;
        let mut out = Vec::with_capacity(n + 1);
        let mut e = 0;
        let mut net = 0;
        for k in 0..=n {
            let t = k as f64 * grid_step;
            while e < self.event_times.len() && self.event_times[e] <= t {
                net = self.net_orders[e];
                e += 1;
            }
            out.push(net as f64 * self.tick);
        }
        GridSeries::new(grid_step, out, SeriesRole::Price)
    }

    /// `event_index,time,log_price`, starting with the initial `0,0,0` row.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(32 * (self.event_times.len() + 1));
        out.push_str("0,0,0\n");
        for (k, (&t, &net)) in self.event_times.iter().zip(&self.net_orders).enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, t, net as f64 * self.tick);
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    agent: u32,
}

impl Eq for Pending {}

impl Ord for Pending {
    // Reversed: BinaryHeap pops the earliest change first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.agent.cmp(&self.agent))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One exact run of the feedback market over `[0, horizon]`, agents started
/// in their stationary regime and `S_0 = 0`.
pub fn simulate_feedback<R: Rng + ?Sized>(config: &MarketConfig, rng: &mut R) -> Result<PricePath> {
    let estimate = config.expected_events();
    if estimate > MAX_EXPECTED_EVENTS {
        return Err(Error::TooManyEvents {
            estimate,
            limit: MAX_EXPECTED_EVENTS,
        });
    }
    let p = &config.params;
    let spec = &config.semi_markov;
    let rates = &config.rates;
    let f = rates.f();
    let speed = p.time_scale;
    let n = p.n_agents as f64;

    let mut moods = Vec::with_capacity(p.n_agents);
    let mut heap = BinaryHeap::with_capacity(p.n_agents);
    let mut f_sum = 0.0;
    for a in 0..p.n_agents {
        let (idx, residual) = spec.stationary_init(rng);
        moods.push(idx);
        f_sum += f[idx];
        heap.push(Pending {
            time: residual / speed,
            agent: a as u32,
        });
    }

    let tick = config.tick();
    let mut path = PricePath {
        event_times: Vec::with_capacity((2.0 * n * speed * p.horizon) as usize),
        net_orders: Vec::new(),
        tick,
        horizon: p.horizon,
        mood_changes: 0,
    };
    let mut t = 0.0;
    let mut net: i64 = 0;
    loop {
        let price = net as f64 * tick;
        let (buy, sell) = rates.aggregate(f_sum, n, price);
        let (buy, sell) = (buy * speed, sell * speed);
        let total = buy + sell;
        let next_order = if total > 0.0 {
            t - (1.0 - rng.random::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let next_mood = heap.peek().map_or(f64::INFINITY, |e| e.time);
        if next_order.min(next_mood) > p.horizon {
            break;
        }
        if next_order < next_mood {
            t = next_order;
            if rng.random::<f64>() * total < buy {
                net += 1;
            } else {
                net -= 1;
            }
            path.event_times.push(t);
            path.net_orders.push(net);
        } else {
            let Pending { time, agent } = heap.pop().expect("peeked");
            t = time;
            let a = agent as usize;
            let old = moods[a];
            let new = spec.next_index(old, rng);
            f_sum += f[new] - f[old];
            moods[a] = new;
            heap.push(Pending {
                time: t + spec.law(new).sample(rng) / speed,
                agent,
            });
            path.mood_changes += 1;
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::rates::{RateDef, ScalarFn};
    use crate::semi_markov::SojournLaw;

    fn constant_market(n: usize, buy: f64, sell: f64, time_scale: f64) -> MarketConfig {
        let spec = SemiMarkovSpec::new(vec![0, 1], vec![vec![0.5, 0.5]; 2], vec![SojournLaw::Exponential { rate: 1.0 }; 2]).unwrap();
        let def = RateDef {
            f: vec![0.0, 1.0],
            g_plus: ScalarFn::Zero,
            g_minus: ScalarFn::Zero,
            h_plus: ScalarFn::Constant { value: buy },
            h_minus: ScalarFn::Constant { value: sell },
            rate_bound: buy.max(sell).max(1e-9),
            lipschitz: 0.0,
            price_range: [-5.0, 5.0],
        };
        let rates = RateSpec::new(def, &spec).unwrap();
        let params = MarketParams {
            n_agents: n,
            time_scale,
            horizon: 1.0,
            grid_step: 1e-3,
        };
        MarketConfig::new(params, spec, rates, 11).unwrap()
    }

    #[test]
    fn price_moves_in_ticks() {
        let cfg = constant_market(50, 1.0, 0.7, 1.0);
        let path = simulate_feedback(&cfg, &mut cfg.rng()).unwrap();
        let prices = path.prices();
        let mut prev = 0.0;
        for p in prices {
            assert!(((p - prev).abs() - 1.0 / 50.0).abs() < 1e-12);
            prev = p;
        }
        assert!(path.event_times.windows(2).all(|w| w[0] < w[1]));
        assert!(path.event_times.iter().all(|&t| t > 0.0 && t <= 1.0));
    }

    #[test]
    fn tick_shrinks_with_time_scale() {
        let cfg = constant_market(10, 1.0, 1.0, 4.0);
        assert!((cfg.tick() - 1.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn silent_market_stays_at_zero() {
        let cfg = constant_market(20, 0.0, 0.0, 1.0);
        let path = simulate_feedback(&cfg, &mut cfg.rng()).unwrap();
        assert_eq!(path.order_count(), 0);
        assert!(path.mood_changes > 0);
        assert!(path.to_grid(0.1).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn refuses_enormous_runs() {
        let mut cfg = constant_market(10, 1.0, 1.0, 1.0);
        cfg.params.n_agents = 2_000_000_000;
        cfg.params.time_scale = 10.0;
        assert!(matches!(simulate_feedback(&cfg, &mut cfg.rng()), Err(Error::TooManyEvents { .. })));
    }

    #[test]
    fn grid_view_and_csv() {
        let path = PricePath {
            event_times: vec![0.25, 0.5],
            net_orders: vec![1, 0],
            tick: 0.5,
            horizon: 1.0,
            mood_changes: 0,
        };
        assert_eq!(path.to_grid(0.25).unwrap().values(), &[0.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(path.to_csv_string(), "0,0,0\n1,0.25,0.5\n2,0.5,0\n");
        assert_eq!(path.price_at(0.3), 0.5);
    }

    #[test]
    fn params_validation() {
        let ok = MarketParams {
            n_agents: 1,
            time_scale: 1.0,
            horizon: 1.0,
            grid_step: 0.01,
        };
        assert!(ok.validate().is_ok());
        assert!(MarketParams { n_agents: 0, ..ok }.validate().is_err());
        assert!(MarketParams { time_scale: 0.5, ..ok }.validate().is_err());
        assert!(MarketParams { horizon: 0.0, ..ok }.validate().is_err());
        assert!(MarketParams { grid_step: 0.3, ..ok }.validate().is_err());
    }
}
