//! Floating-point abstraction shared by the geometry, network and training code.

use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate.
///
/// Geometry and the collision-probability network are written against this
/// trait so the same code runs in `f64` (labels, gradient checks, file I/O)
/// and `f32` (fast batched training and inference).
pub trait Scalar:
    NdFloat + FloatConst + FromPrimitive + ToPrimitive + Default + Sum + Send + Sync + 'static
{
    /// Geometric comparison tolerance in meters.
    const GEOM_TOL: Self;

    fn of(v: f64) -> Self;

    fn to_f64_lossless(self) -> f64;

    /// Hyperbolic tangent; `f32` uses a vectorizable rational approximation.
    fn tanh_fast(self) -> Self;
}

impl Scalar for f64 {
    const GEOM_TOL: Self = 1e-9;

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn tanh_fast(self) -> Self {
        self.tanh()
    }
}

impl Scalar for f32 {
    const GEOM_TOL: Self = 1e-5;

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn tanh_fast(self) -> Self {
        tanh_f32(self)
    }
}

/// Odd 13/6 rational fit of tanh on `[-7.9, 7.9]`, saturating outside.
#[inline]
fn tanh_f32(x: f32) -> f32 {
    const CLAMP: f32 = 7.905_311;
    const A: [f32; 7] = [
        4.893_524_6e-3,
        6.372_619_3e-4,
        1.485_722_4e-5,
        5.122_297e-8,
        -8.604_672e-11,
        2.000_187_9e-13,
        -2.760_768_5e-16,
    ];
    const B: [f32; 4] = [4.893_525e-3, 2.268_434_6e-3, 1.185_347e-4, 1.198_258_4e-6];
    let x = x.clamp(-CLAMP, CLAMP);
    let x2 = x * x;
    let mut p = A[6];
    for &a in A[..6].iter().rev() {
        p = p * x2 + a;
    }
    let q = ((B[3] * x2 + B[2]) * x2 + B[1]) * x2 + B[0];
    x * p / q
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::of(30.0) {
        x
    } else if x < T::of(-30.0) {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Flush-to-zero and denormals-are-zero on the current thread while alive.
///
/// Subnormal operands make SSE arithmetic many times slower; they show up in
/// small gradients and Adam moments during f32 training. The previous control
/// state is restored on drop. No-op off x86-64.
pub struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

impl FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    pub fn new() -> Self {
        const FTZ_DAZ: u32 = 0x8040;
        let mut saved: u32 = 0;
        // SAFETY: stmxcsr/ldmxcsr only touch the SSE control register of this
        // thread; FTZ and DAZ change rounding of subnormals, nothing else.
        unsafe {
            std::arch::asm!("stmxcsr [{}]", in(reg) &mut saved, options(nostack));
            let new = saved | FTZ_DAZ;
            std::arch::asm!("ldmxcsr [{}]", in(reg) &new, options(nostack));
        }
        FlushDenormals { saved }
    }

    #[cfg(not(target_arch = "x86_64"))]
    pub fn new() -> Self {
        FlushDenormals {}
    }
}

impl Default for FlushDenormals {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for FlushDenormals {
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the value read in `new`.
        unsafe {
            std::arch::asm!("ldmxcsr [{}]", in(reg) &self.saved, options(nostack));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_saturates_cleanly() {
        for &x in &[-800.0, -20.0, -1.0, 0.0, 0.5, 20.0, 800.0] {
            let s: f64 = sigmoid(x);
            assert!((s + sigmoid(-x) - 1.0).abs() < 1e-15);
            assert!(s.is_finite());
        }
        assert_eq!(sigmoid(0.0f32), 0.5);
    }

    #[test]
    fn flush_guard_restores_state() {
        let tiny = std::hint::black_box(f32::MIN_POSITIVE);
        let before = std::hint::black_box(tiny) / std::hint::black_box(4.0f32);
        assert!(before > 0.0);
        {
            let _g = FlushDenormals::new();
            let flushed = std::hint::black_box(tiny) / std::hint::black_box(4.0f32);
            #[cfg(target_arch = "x86_64")]
            assert_eq!(flushed, 0.0);
            let _ = flushed;
        }
        assert_eq!(std::hint::black_box(tiny) / std::hint::black_box(4.0f32), before);
    }

    #[test]
    fn fast_tanh_accuracy() {
        let mut worst = 0.0f64;
        for i in -20_000..=20_000 {
            let x = i as f64 * 1e-3;
            let e = (tanh_f32(x as f32) as f64 - (x as f32 as f64).tanh()).abs();
            worst = worst.max(e);
        }
        assert!(worst < 5e-7, "{worst}");
        assert_eq!(tanh_f32(100.0), 1.0);
        assert_eq!(tanh_f32(-100.0), -1.0);
        assert_eq!(tanh_f32(0.0), 0.0);
    }

    #[test]
    fn softplus_matches_definition() {
        for &x in &[-40.0f64, -3.0, 0.0, 2.0, 29.0, 31.0, 100.0] {
            let direct = (1.0 + x.exp()).ln();
            assert!((softplus(x) - direct).abs() <= 1e-12 * direct.max(1e-300) + 1e-15, "{x}");
        }
    }
}
