//! Counting ordered pairs at small cyclic distance.

/// Ordered pairs `(i, j)`, `i != j`, with `mod_norm(values[i] - values[j], r)
/// <= max_norm`. Values must already be reduced mod `r`.
///
/// Sorts a copy and walks two pointers, so the cost is `O(n log n)`.
pub fn count_pairs_within(values: &[u64], r: u64, max_norm: u64) -> u64 {
    let n = values.len() as u64;
    if n < 2 {
        return 0;
    }
    if max_norm >= r / 2 {
        return n * (n - 1);
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    // With max_norm < r/2 a pair is close either directly (gap <= t) or
    // around the wrap (gap >= r - t), never both.
    let t = max_norm;
    let mut unordered = 0u64;
    let mut j = 0;
    for i in 0..v.len() {
        j = j.max(i);
        while j + 1 < v.len() && v[j + 1] - v[i] <= t {
            j += 1;
        }
        unordered += (j - i) as u64;
    }
    let mut k = 0;
    for i in 0..v.len() {
        // First index whose gap from v[i] reaches r - t.
        k = k.max(i + 1);
        while k < v.len() && v[k] - v[i] < r - t {
            k += 1;
        }
        unordered += (v.len() - k) as u64;
    }
    2 * unordered
}

/// Ordered pairs of distinct positions whose difference has modular norm
/// strictly below `bound`. A bound of zero or less counts nothing.
pub fn count_close_pairs(values: &[u64], r: u64, bound: f64) -> u64 {
    if bound.is_nan() || bound <= 0.0 {
        return 0;
    }
    // norm < bound  <=>  norm <= ceil(bound) - 1
    let limit = bound.ceil() - 1.0;
    if limit >= r as f64 {
        return count_pairs_within(values, r, r);
    }
    count_pairs_within(values, r, limit as u64)
}
