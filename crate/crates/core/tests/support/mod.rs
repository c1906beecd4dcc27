// shared with the cli acceptance run, which uses all of it
#[allow(dead_code)]
pub mod brute;
