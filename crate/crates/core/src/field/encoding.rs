use serde::{Deserialize, Serialize};

/// Band counts for the sinusoidal input encodings. Zero bands means the raw
/// input is passed through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub l_pos: u32,
    pub l_dir: u32,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig { l_pos: 10, l_dir: 4 }
    }
}

pub fn encoded_len(input_len: usize, bands: u32) -> usize {
    if bands == 0 {
        input_len
    } else {
        input_len * 2 * bands as usize
    }
}

/// Sinusoidal encoding. For each band `j` in `0..bands` the output holds
/// `sin(2ʲ xᵢ)` for every input, followed by `cos(2ʲ xᵢ)` for every input.
pub fn encode(values: &[f64], bands: u32) -> Vec<f64> {
    let mut out = vec![0.0; encoded_len(values.len(), bands)];
    encode_into(values, bands, &mut out);
    out
}

pub fn encode_into(values: &[f64], bands: u32, out: &mut [f64]) {
    if bands == 0 {
        out.copy_from_slice(values);
        return;
    }
    let n = values.len();
    for j in 0..bands {
        let scale = (1u64 << j) as f64;
        let base = 2 * n * j as usize;
        for (i, v) in values.iter().enumerate() {
            let (s, c) = (scale * v).sin_cos();
            out[base + i] = s;
            out[base + n + i] = c;
        }
    }
}
