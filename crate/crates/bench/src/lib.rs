//! Fixture helpers shared by the benchmarks.

use callnet::synth::{generate, Span, SynthFixture, SynthSpec};
use callnet::Timestamp;

/// A seeded ecosystem of `packages` packages with a few versions each.
pub fn ecosystem(packages: usize) -> SynthFixture {
    generate(&SynthSpec {
        packages,
        versions: Span::new(2, 5),
        fan_out: Span::new(1, 4.min(packages.saturating_sub(1)).max(1)),
        functions: Span::new(20, 60),
        seed: 0x5eed,
        ..SynthSpec::default()
    })
    .expect("bench spec is valid")
}

/// The last publication instant, where every release is visible.
pub fn latest(fixture: &SynthFixture) -> Timestamp {
    *fixture.timestamps.last().expect("non-empty fixture")
}
