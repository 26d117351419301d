#![allow(dead_code)]

use augustin::{Channel, FiniteDist, Order};
use proptest::prelude::*;

pub fn order(a: f64) -> Order {
    Order::new(a).unwrap()
}

pub fn dist(n: usize) -> impl Strategy<Value = FiniteDist> {
    prop::collection::vec(1e-3f64..1.0, n).prop_map(|w| FiniteDist::new(w).unwrap())
}

/// Some entries may be exactly zero; the first is always kept.
pub fn sparse_dist(n: usize) -> impl Strategy<Value = FiniteDist> {
    prop::collection::vec(prop_oneof![3 => 1e-3f64..1.0, 1 => Just(0.0)], n).prop_map(|mut w| {
        w[0] = w[0].max(1e-3);
        FiniteDist::new(w).unwrap()
    })
}

pub fn channel(k: usize, n: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(dist(n), k).prop_map(|rows| Channel::new(rows, None).unwrap())
}

/// Channel with a scalar cost that vanishes on input 0.
pub fn costed_channel(k: usize, n: usize) -> impl Strategy<Value = Channel> {
    (channel(k, n), prop::collection::vec(0.1f64..1.0, k - 1)).prop_map(|(ch, c)| {
        let cost = std::iter::once(vec![0.0])
            .chain(c.into_iter().map(|v| vec![v]))
            .collect();
        ch.with_cost(cost).unwrap()
    })
}

pub fn sizes() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4, 2usize..=4)
}

/// A channel with a prior on its inputs and a probe on its outputs.
pub fn instance() -> impl Strategy<Value = (Channel, FiniteDist, FiniteDist)> {
    sizes().prop_flat_map(|(k, n)| (channel(k, n), dist(k), dist(n)))
}

pub fn costed_instance() -> impl Strategy<Value = (Channel, FiniteDist, FiniteDist)> {
    sizes().prop_flat_map(|(k, n)| (costed_channel(k, n), dist(k), dist(n)))
}
