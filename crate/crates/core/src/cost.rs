/// Counts the bits exchanged during one protocol run.
///
/// Only ever increases; one meter belongs to one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostMeter {
    bits: u64,
}

impl CostMeter {
    pub fn new() -> Self {
        CostMeter::default()
    }

    pub fn charge(&mut self, bits: u64) {
        self.bits += bits;
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }
}
