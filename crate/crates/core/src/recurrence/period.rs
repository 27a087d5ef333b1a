use crate::error::{Error, Result};
use crate::systems::SymbolicWord;

/// KMP border (failure) array: border[i] is the length of the longest proper
/// border of w[..=i].
fn border_array(w: &[u8]) -> Vec<usize> {
    let mut border = vec![0usize; w.len()];
    let mut b = 0usize;
    for i in 1..w.len() {
        while b > 0 && w[i] != w[b] {
            b = border[b - 1];
        }
        if w[i] == w[b] {
            b += 1;
        }
        border[i] = b;
    }
    border
}

/// Minimal period of each prefix listed in `n_ladder`, read off one border
/// array pass over the full word.
pub fn min_return_prefix_profile(w: &SymbolicWord, n_ladder: &[usize]) -> Result<Vec<usize>> {
    let border = border_array(w.symbols());
    n_ladder
        .iter()
        .map(|&n| {
            if n == 0 || n > w.len() {
                Err(Error::IndexOutOfRange(format!(
                    "prefix length {n} outside word of length {}",
                    w.len()
                )))
            } else {
                Ok(n - border[n - 1])
            }
        })
        .collect()
}

/// Minimal period p(w) = min{k >= 1 : w_{t+k} = w_t for all t < n-k}, in
/// O(n) via the border array. On the full shift this is the minimal return
/// time of the cylinder [w] to itself.
pub fn min_return_time_symbolic(w: &SymbolicWord) -> Result<usize> {
    let s = w.symbols();
    if s.is_empty() {
        return Err(Error::EmptyWord);
    }
    let border = border_array(s);
    Ok(s.len() - border[s.len() - 1])
}

/// Z-array: z[i] is the length of the longest common prefix of w and w[i..],
/// with z[0] = len. Linear time.
pub fn z_array(w: &[u8]) -> Vec<u32> {
    let n = w.len();
    let mut z = vec![0u32; n];
    if n == 0 {
        return z;
    }
    z[0] = n as u32;
    let (mut l, mut r) = (0usize, 0usize);
    for i in 1..n {
        let mut k = if i < r { (z[i - l] as usize).min(r - i) } else { 0 };
        while i + k < n && w[k] == w[i + k] {
            k += 1;
        }
        z[i] = k as u32;
        if i + k > r {
            l = i;
            r = i + k;
        }
    }
    z
}
