pub mod bench;
pub mod evaluate;
pub mod learn;
pub mod propose;
pub mod synth;
pub mod train;
