//! Multi-channel correlation kernels.
//!
//! Sources are channel-major rows with a common pitch; a tap is an offset into
//! every row. Each output element accumulates its products in a fixed order
//! (channel, then tap). On AVX-512 hardware `f32` goes through a
//! register-blocked path with fused multiply-add; everything else uses the
//! portable loops below.

use std::any::TypeId;

use crate::tensor::Scalar;

fn as_f32<T: Scalar>(s: &[T]) -> Option<&[f32]> {
    // SAFETY: T is f32, so the layouts are identical.
    (TypeId::of::<T>() == TypeId::of::<f32>())
        .then(|| unsafe { std::slice::from_raw_parts(s.as_ptr().cast::<f32>(), s.len()) })
}

fn as_f32_mut<T: Scalar>(s: &mut [T]) -> Option<&mut [f32]> {
    // SAFETY: T is f32, so the layouts are identical.
    (TypeId::of::<T>() == TypeId::of::<f32>())
        .then(|| unsafe { std::slice::from_raw_parts_mut(s.as_mut_ptr().cast::<f32>(), s.len()) })
}

#[cfg(target_arch = "x86_64")]
fn has_avx512() -> bool {
    std::arch::is_x86_feature_detected!("avx512f")
}

/// Positions per accumulator block.
const P: usize = 256;
/// Output rows per accumulator block.
const OT: usize = 8;

/// Row-major views shared by both kernels.
pub struct Rows<'a, T> {
    pub data: &'a [T],
    pub pitch: usize,
    pub count: usize,
}

/// `dst[o][p] = sum_c sum_t w[o][c][t] * src[c][p + taps[t]]` for `p < len`.
///
/// `w` is indexed `(o * src.count + c) * taps.len() + t`; `dst` rows are
/// `dst_pitch` apart and are overwritten.
pub fn correlate<T: Scalar>(
    src: &Rows<'_, T>,
    taps: &[usize],
    w: &[T],
    outs: usize,
    len: usize,
    dst: &mut [T],
    dst_pitch: usize,
) {
    let need = taps.iter().max().map_or(0, |&m| m + len);
    assert!(src.count == 0 || (src.count - 1) * src.pitch + need <= src.data.len());
    assert!(w.len() >= outs * src.count * taps.len());
    assert!(outs == 0 || (outs - 1) * dst_pitch + len <= dst.len());
    // Weights regrouped as [o_tile][c][t][OT] so a tile reads them contiguously.
    let tiles = outs.div_ceil(OT);
    let kt = src.count * taps.len();
    let mut packed = vec![T::zero(); tiles * kt * OT];
    for o in 0..outs {
        for ct in 0..kt {
            packed[((o / OT) * kt + ct) * OT + o % OT] = w[o * kt + ct];
        }
    }
    #[cfg(target_arch = "x86_64")]
    if has_avx512() {
        if let (Some(data), Some(w), Some(d)) = (as_f32(src.data), as_f32(&packed), as_f32_mut(dst)) {
            let rows = Rows { data, pitch: src.pitch, count: src.count };
            // SAFETY: feature detected; bounds asserted above.
            unsafe { avx512::correlate(&rows, taps, w, outs, len, d, dst_pitch) };
            return;
        }
    }
    dispatch_correlate(src, taps, &packed, outs, len, dst, dst_pitch);
}

macro_rules! dispatch {
    ($name:ident, $body:ident, ($($arg:ident : $ty:ty),*)) => {
        #[allow(clippy::too_many_arguments)]
        fn $name<T: Scalar>($($arg: $ty),*) {
            #[cfg(target_arch = "x86_64")]
            {
                if std::arch::is_x86_feature_detected!("avx512f") {
                    #[target_feature(enable = "avx512f")]
                    #[allow(clippy::too_many_arguments)]
                    unsafe fn wide<T: Scalar>($($arg: $ty),*) {
                        $body($($arg),*)
                    }
                    // SAFETY: the feature was detected at runtime.
                    return unsafe { wide($($arg),*) };
                }
                if std::arch::is_x86_feature_detected!("avx2") {
                    #[target_feature(enable = "avx2")]
                    #[allow(clippy::too_many_arguments)]
                    unsafe fn mid<T: Scalar>($($arg: $ty),*) {
                        $body($($arg),*)
                    }
                    // SAFETY: the feature was detected at runtime.
                    return unsafe { mid($($arg),*) };
                }
            }
            $body($($arg),*)
        }
    };
}

dispatch!(
    dispatch_correlate,
    correlate_body,
    (
        src: &Rows<'_, T>,
        taps: &[usize],
        packed: &[T],
        outs: usize,
        len: usize,
        dst: &mut [T],
        dst_pitch: usize
    )
);

#[inline(always)]
fn correlate_body<T: Scalar>(
    src: &Rows<'_, T>,
    taps: &[usize],
    packed: &[T],
    outs: usize,
    len: usize,
    dst: &mut [T],
    dst_pitch: usize,
) {
    let kt = src.count * taps.len();
    let mut acc = vec![T::zero(); OT * P];
    for tile in 0..outs.div_ceil(OT) {
        let wt = &packed[tile * kt * OT..(tile + 1) * kt * OT];
        let o0 = tile * OT;
        let rows = OT.min(outs - o0);
        let mut p0 = 0;
        while p0 < len {
            let width = P.min(len - p0);
            acc.fill(T::zero());
            for c in 0..src.count {
                let row = &src.data[c * src.pitch..];
                for (t, &shift) in taps.iter().enumerate() {
                    let s = &row[p0 + shift..p0 + shift + width];
                    let wv = &wt[(c * taps.len() + t) * OT..][..OT];
                    for (lanes, &k) in acc.chunks_exact_mut(P).zip(wv).take(rows) {
                        for (a, &x) in lanes[..width].iter_mut().zip(s) {
                            *a += k * x;
                        }
                    }
                }
            }
            for (o, lanes) in acc.chunks_exact(P).enumerate().take(rows) {
                let at = (o0 + o) * dst_pitch + p0;
                dst[at..at + width].copy_from_slice(&lanes[..width]);
            }
            p0 += width;
        }
    }
}

/// `dw[(o * b.count + c) * taps.len() + t] = sum_{p < len} a[o][p] * b[c][p + taps[t]]`.
///
/// Sums run over fixed lane partitions and are reduced in lane order.
pub fn weight_grad<T: Scalar>(a: &Rows<'_, T>, b: &Rows<'_, T>, taps: &[usize], len: usize) -> Vec<T> {
    let need = taps.iter().max().map_or(0, |&m| m + len);
    assert!(a.count == 0 || (a.count - 1) * a.pitch + len <= a.data.len());
    assert!(b.count == 0 || (b.count - 1) * b.pitch + need <= b.data.len());
    let mut dw = vec![T::zero(); a.count * b.count * taps.len()];
    #[cfg(target_arch = "x86_64")]
    if has_avx512() {
        if let (Some(ad), Some(bd), Some(d)) = (as_f32(a.data), as_f32(b.data), as_f32_mut(&mut dw)) {
            let a = Rows { data: ad, pitch: a.pitch, count: a.count };
            let b = Rows { data: bd, pitch: b.pitch, count: b.count };
            // SAFETY: feature detected; bounds asserted above.
            unsafe { avx512::weight_grad(&a, &b, taps, len, d) };
            return dw;
        }
    }
    dispatch_weight_grad(a, b, taps, len, &mut dw);
    dw
}

dispatch!(
    dispatch_weight_grad,
    weight_grad_body,
    (a: &Rows<'_, T>, b: &Rows<'_, T>, taps: &[usize], len: usize, dw: &mut [T])
);

#[inline(always)]
fn weight_grad_body<T: Scalar>(
    a: &Rows<'_, T>,
    b: &Rows<'_, T>,
    taps: &[usize],
    len: usize,
    dw: &mut [T],
) {
    // Lane-wise partial sums over LANES-wide strips, reduced in lane order.
    const LANES: usize = 16;
    for o in 0..a.count {
        let arow = &a.data[o * a.pitch..o * a.pitch + len];
        for c in 0..b.count {
            let brow = &b.data[c * b.pitch..];
            for (t, &shift) in taps.iter().enumerate() {
                let s = &brow[shift..shift + len];
                let mut lanes = [T::zero(); LANES];
                let (ah, at) = arow.split_at(len / LANES * LANES);
                let (sh, st) = s.split_at(len / LANES * LANES);
                for (ab, sb) in ah.chunks_exact(LANES).zip(sh.chunks_exact(LANES)) {
                    for l in 0..LANES {
                        lanes[l] += ab[l] * sb[l];
                    }
                }
                for (l, (&x, &y)) in at.iter().zip(st).enumerate() {
                    lanes[l] += x * y;
                }
                dw[(o * b.count + c) * taps.len() + t] = lanes.iter().fold(T::zero(), |x, &y| x + y);
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    use super::Rows;

    /// Lane masks covering the first `width` of 32 positions.
    fn masks(width: usize) -> (__mmask16, __mmask16) {
        let m = |n: usize| if n >= 16 { 0xFFFF } else { (1u16 << n) - 1 };
        (m(width), m(width.saturating_sub(16)))
    }

    /// Same contract as [`super::correlate`] with weights already packed as
    /// `[tile][c][t][8]`.
    ///
    /// # Safety
    /// Requires AVX-512F and the bounds checked by the caller.
    #[target_feature(enable = "avx512f")]
    pub unsafe fn correlate(
        src: &Rows<'_, f32>,
        taps: &[usize],
        packed: &[f32],
        outs: usize,
        len: usize,
        dst: &mut [f32],
        dst_pitch: usize,
    ) {
        let kt = src.count * taps.len();
        for tile in 0..outs.div_ceil(8) {
            let wt = packed.as_ptr().add(tile * kt * 8);
            let o0 = tile * 8;
            let rows = 8.min(outs - o0);
            let mut p0 = 0;
            while p0 < len {
                let width = 32.min(len - p0);
                let (m0, m1) = masks(width);
                let mut acc = [_mm512_setzero_ps(); 16];
                for c in 0..src.count {
                    let row = src.data.as_ptr().add(c * src.pitch + p0);
                    for (t, &shift) in taps.iter().enumerate() {
                        let p = row.add(shift);
                        let x0 = _mm512_maskz_loadu_ps(m0, p);
                        let x1 = _mm512_maskz_loadu_ps(m1, p.add(16));
                        let w = wt.add((c * taps.len() + t) * 8);
                        for o in 0..8 {
                            let k = _mm512_set1_ps(*w.add(o));
                            acc[2 * o] = _mm512_fmadd_ps(k, x0, acc[2 * o]);
                            acc[2 * o + 1] = _mm512_fmadd_ps(k, x1, acc[2 * o + 1]);
                        }
                    }
                }
                for o in 0..rows {
                    let d = dst.as_mut_ptr().add((o0 + o) * dst_pitch + p0);
                    _mm512_mask_storeu_ps(d, m0, acc[2 * o]);
                    _mm512_mask_storeu_ps(d.add(16), m1, acc[2 * o + 1]);
                }
                p0 += width;
            }
        }
    }

    /// Same contract as [`super::weight_grad`], writing into `dw`.
    ///
    /// # Safety
    /// Requires AVX-512F and the bounds checked by the caller.
    #[target_feature(enable = "avx512f")]
    pub unsafe fn weight_grad(
        a: &Rows<'_, f32>,
        b: &Rows<'_, f32>,
        taps: &[usize],
        len: usize,
        dw: &mut [f32],
    ) {
        let nt = taps.len();
        for o0 in (0..a.count).step_by(8) {
            let rows = 8.min(a.count - o0);
            // Rows past the end repeat the last one; their sums are dropped.
            let arows: [*const f32; 8] =
                std::array::from_fn(|o| a.data.as_ptr().add((o0 + o.min(rows - 1)) * a.pitch));
            for c in 0..b.count {
                let brow = b.data.as_ptr().add(c * b.pitch);
                for t0 in (0..nt).step_by(2) {
                    let t1 = (t0 + 1).min(nt - 1);
                    let (b0, b1) = (brow.add(taps[t0]), brow.add(taps[t1]));
                    let mut acc = [_mm512_setzero_ps(); 16];
                    let mut p = 0;
                    while p < len {
                        let (m, _) = masks(len - p);
                        let x0 = _mm512_maskz_loadu_ps(m, b0.add(p));
                        let x1 = _mm512_maskz_loadu_ps(m, b1.add(p));
                        for o in 0..8 {
                            let av = _mm512_maskz_loadu_ps(m, arows[o].add(p));
                            acc[o] = _mm512_fmadd_ps(av, x0, acc[o]);
                            acc[8 + o] = _mm512_fmadd_ps(av, x1, acc[8 + o]);
                        }
                        p += 16;
                    }
                    for o in 0..rows {
                        let base = ((o0 + o) * b.count + c) * nt;
                        dw[base + t0] = _mm512_reduce_add_ps(acc[o]);
                        if t1 != t0 {
                            dw[base + t1] = _mm512_reduce_add_ps(acc[8 + o]);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_correlate(src: &[f64], pitch: usize, cin: usize, taps: &[usize], w: &[f64], outs: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; outs * len];
        for o in 0..outs {
            for p in 0..len {
                for c in 0..cin {
                    for (t, &s) in taps.iter().enumerate() {
                        out[o * len + p] += w[(o * cin + c) * taps.len() + t] * src[c * pitch + p + s];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn correlate_matches_naive_across_tiles() {
        let (cin, outs, len) = (3, 11, 75);
        let taps = [0, 1, 9, 40];
        let pitch = len + 40;
        let src: Vec<f64> = (0..cin * pitch).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let w: Vec<f64> = (0..outs * cin * taps.len()).map(|i| ((i * 13 % 29) as f64 - 14.0) / 7.0).collect();
        let mut dst = vec![0.0; outs * len];
        let rows = Rows { data: &src, pitch, count: cin };
        correlate(&rows, &taps, &w, outs, len, &mut dst, len);
        let want = naive_correlate(&src, pitch, cin, &taps, &w, outs, len);
        for (a, b) in dst.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_grad_matches_naive() {
        let (outs, cin, len) = (9, 2, 70);
        let taps = [0, 3, 5];
        let a: Vec<f64> = (0..outs * len).map(|i| ((i * 7 % 23) as f64 - 11.0) / 5.0).collect();
        let pitch = len + 5;
        let b: Vec<f64> = (0..cin * pitch).map(|i| ((i * 11 % 19) as f64 - 9.0) / 3.0).collect();
        let dw = weight_grad(
            &Rows { data: &a, pitch: len, count: outs },
            &Rows { data: &b, pitch, count: cin },
            &taps,
            len,
        );
        for o in 0..outs {
            for c in 0..cin {
                for (t, &s) in taps.iter().enumerate() {
                    let want: f64 = (0..len).map(|p| a[o * len + p] * b[c * pitch + p + s]).sum();
                    assert!((dw[(o * cin + c) * 3 + t] - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn f32_paths_match_f64_reference() {
        let (cin, outs, len) = (5, 13, 301);
        let taps = [0, 2, 17, 33, 34];
        let pitch = len + 34;
        let src: Vec<f64> = (0..cin * pitch).map(|i| ((i * 37 % 101) as f64 - 50.0) / 64.0).collect();
        let w: Vec<f64> = (0..outs * cin * taps.len()).map(|i| ((i * 13 % 29) as f64 - 14.0) / 16.0).collect();
        let want = naive_correlate(&src, pitch, cin, &taps, &w, outs, len);
        let src32: Vec<f32> = src.iter().map(|&v| v as f32).collect();
        let w32: Vec<f32> = w.iter().map(|&v| v as f32).collect();
        let mut dst = vec![0f32; outs * len];
        correlate(&Rows { data: &src32, pitch, count: cin }, &taps, &w32, outs, len, &mut dst, len);
        for (a, b) in dst.iter().zip(&want) {
            assert!((*a as f64 - b).abs() < 1e-4 * (1.0 + b.abs()));
        }

        let a32: Vec<f32> = want.iter().map(|&v| v as f32).collect();
        let dw = weight_grad(
            &Rows { data: &a32, pitch: len, count: outs },
            &Rows { data: &src32, pitch, count: cin },
            &taps,
            len,
        );
        for o in 0..outs {
            for c in 0..cin {
                for (t, &sh) in taps.iter().enumerate() {
                    let r: f64 = (0..len).map(|p| a32[o * len + p] as f64 * src[c * pitch + p + sh]).sum();
                    let got = dw[(o * cin + c) * taps.len() + t] as f64;
                    assert!((got - r).abs() < 1e-4 * (1.0 + r.abs()), "{got} vs {r}");
                }
            }
        }
    }
}
