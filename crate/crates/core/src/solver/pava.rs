/// Weighted pool-adjacent-violators on a totally ordered sequence.
/// Returns the nondecreasing least-squares fit.
pub fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // (weighted sum, weight, length) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&y, &w) in values.iter().zip(weights) {
        let mut cur = (y * w, w, 1usize);
        while let Some(&(s, wt, len)) = blocks.last() {
            if s / wt > cur.0 / cur.1 {
                blocks.pop();
                cur = (cur.0 + s, cur.1 + wt, cur.2 + len);
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, w, len) in blocks {
        let mean = s / w;
        out.extend(std::iter::repeat_n(mean, len));
    }
    out
}
