#![no_main]

use libfuzzer_sys::fuzz_target;
use musym::expr::Context;

// Anything that parses must print to text that parses back to the same
// normal form.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 512 {
        return;
    }
    let ctx = Context::new(&["x", "t"], &["u", "v"])
        .with_constants(&["c", "λ"])
        .with_auxiliaries(&["z"])
        .with_function("w", 1)
        .with_function("F", 2);
    let Ok(e) = ctx.parse(text) else {
        return;
    };
    let printed = ctx.print(&e);
    let back = ctx
        .parse(&printed)
        .unwrap_or_else(|err| panic!("printed form `{printed}` does not parse: {err}"));
    assert_eq!(back, e, "`{text}` printed as `{printed}`");
});
