#![no_main]

use libfuzzer_sys::fuzz_target;
use musym::expr::Context;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let ctx = Context::new(&["x", "t"], &["u", "v"])
        .with_constants(&["c", "λ"])
        .with_auxiliaries(&["z"])
        .with_function("w", 1)
        .with_function("F", 2);
    let _ = ctx.parse_ast(text);
    let _ = ctx.parse(text);
});
