//! placeholder
pub struct TensorState;
pub fn init_tensors() {}
