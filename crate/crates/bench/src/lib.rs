//! Inputs shared by the benchmarks.

use std::path::PathBuf;

use sdfmig::{Actor, Channel, Scenario, Sdfg};

/// The bundled MJPEG scenario.
pub fn mjpeg() -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/mjpeg_base.toml");
    Scenario::load(path).expect("bundled fixture loads")
}

/// Homogeneous ring of `n` actors with `tokens` initial tokens spread over
/// its channels and a chord every third actor.
pub fn ring(n: usize, tokens: u64) -> Sdfg {
    let mut g = Sdfg::new();
    for i in 0..n {
        g.add_actor(Actor::software(format!("a{i}"), 1 + (i as u64 * 7) % 13)).unwrap();
    }
    for i in 0..n {
        let t = tokens / n as u64 + u64::from((i as u64) < tokens % n as u64);
        g.add_channel(Channel::new(format!("r{i}"), format!("a{i}"), format!("a{}", (i + 1) % n)).tokens(t)).unwrap();
    }
    for i in (0..n).step_by(3) {
        let j = (i + n / 2) % n;
        g.add_channel(Channel::new(format!("x{i}"), format!("a{i}"), format!("a{j}")).tokens(2)).unwrap();
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_is_live() {
        let g = ring(12, 5);
        assert!(sdfmig::self_timed_throughput(&g, &Default::default()).is_ok());
        assert!(sdfmig::mcm_throughput(&g).is_ok());
        assert!(mjpeg().mapping.is_some());
    }
}
