pub mod error;
pub mod operator;
pub mod pb;
pub mod phase_space;
pub mod povm;
pub mod quantization;
