//! Small deterministic helpers shared across modules.

/// 64-bit FNV-1a over a byte stream.
#[derive(Clone, Copy)]
pub struct Fnv64(u64);

impl Fnv64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Fnv64(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

/// Derives a per-item RNG seed from a base seed plus identifying context.
/// Stable across platforms and runs.
pub fn derive_seed(base: u64, utt_id: &str, index: usize) -> u64 {
    let mut h = Fnv64::new();
    h.write_u64(base);
    h.write(utt_id.as_bytes());
    h.write_u64(index as u64);
    h.finish()
}
