//! Small helpers over flat `f64` slices holding stacked `p`-dimensional blocks.

#[inline]
pub fn block(v: &[f64], i: usize, p: usize) -> &[f64] {
    &v[i * p..(i + 1) * p]
}

#[inline]
pub fn block_mut(v: &mut [f64], i: usize, p: usize) -> &mut [f64] {
    &mut v[i * p..(i + 1) * p]
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
