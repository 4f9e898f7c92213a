//! Small reference models, used by tests, benchmarks and the CLI docs.

use crate::model::{load_model, ProductMc};
use crate::scalar::Rational;

/// `s0` branches on `a` into a chain that only ever emits `a` and one that
/// eventually emits `b`; the property is "some `b` occurs". Not diagnosable.
pub const TWO_BRANCH: &str = "\
[mc]
initial s0
trans s0 a 1/2 s1
trans s0 a 1/2 s2
trans s1 a 1 s1
trans s2 a 1/2 s2
trans s2 b 1/2 s2
[dfa]
initial q0
accepting f
trans q0 a q0
trans q0 b f
";

/// Non-hidden: from `sa` emit `b` (into a `b`-sink) or `c` (to `sc`, which
/// returns with `a`). Property: "some `c` occurs". The first letter can be
/// skipped for free.
pub const SKIP_ONCE: &str = "\
[mc]
initial sa
trans sa b 1/2 sb
trans sa c 1/2 sc
trans sb b 1 sb
trans sc a 1 sa
[dfa]
initial q0
accepting f
trans q0 a q0
trans q0 b q0
trans q0 c f
";

/// Non-hidden: `sa` loops on `a` and leaves for a `b`-sink or a `c`-sink with
/// probability 1/3 each. Property: "some `c` occurs".
pub const GEOMETRIC_WAIT: &str = "\
[mc]
initial sa
trans sa a 1/3 sa
trans sa b 1/3 sb
trans sa c 1/3 sc
trans sb b 1 sb
trans sc c 1 sc
[dfa]
initial q0
accepting f
trans q0 a q0
trans q0 b q0
trans q0 c f
";

/// Parses and composes a model file, panicking on malformed input.
pub fn product(text: &str) -> ProductMc<Rational> {
    let (mc, dfa) = load_model(text).expect("malformed model");
    ProductMc::compose(&mc, &dfa).expect("alphabet mismatch")
}

pub fn two_branch() -> ProductMc<Rational> {
    product(TWO_BRANCH)
}

pub fn skip_once() -> ProductMc<Rational> {
    product(SKIP_ONCE)
}

pub fn geometric_wait() -> ProductMc<Rational> {
    product(GEOMETRIC_WAIT)
}
