pub mod frontend;
pub mod ir;
pub mod pdg;
pub mod sensors;
pub mod detector;
pub mod analysis;
pub mod crosschain;
pub mod cli;
