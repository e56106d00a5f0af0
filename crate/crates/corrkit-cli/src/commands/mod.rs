pub mod convert;
pub mod eval;
pub mod filter;
pub mod fmat;
pub mod match_cmd;
pub mod reorg;
