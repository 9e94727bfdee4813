//! The dyadic odometer (von Neumann–Kakutani adding machine) on `[0,1)`.
//!
//! On `I_k = [1 - 2^{1-k}, 1 - 2^{-k})` the map is the translation
//! `x ↦ x - (1 - 2^{1-k}) + 2^{-k}`. Reading the binary digits of `x` as a
//! 2-adic integer (first digit least significant), `T` adds one with carry.

use num_traits::{One, Zero};

use crate::rational::{dyadic, Rational};
use crate::sets::IntervalSet;

/// Translation applied by `T` on `I_k`: `3·2^{-k} - 1`.
fn shift(k: u32) -> Rational {
    dyadic(k) * Rational::from_integer(3.into()) - Rational::one()
}

/// Index `k ≥ 1` with `x ∈ I_k`.
fn piece_of(x: &Rational) -> u32 {
    let gap = Rational::one() - x;
    let mut k = 1;
    while dyadic(k) >= gap {
        k += 1;
    }
    k
}

/// Index `k ≥ 1` with `y ∈ J_k = [2^{-k}, 2^{1-k})`, for `y > 0`.
fn image_piece_of(y: &Rational) -> u32 {
    let mut k = 1;
    while dyadic(k) > *y {
        k += 1;
    }
    k
}

/// `T(x)` for a single point `x ∈ [0,1)`.
pub fn step_point(x: &Rational) -> Rational {
    x + shift(piece_of(x))
}

/// `T^{-1}(y)` for a single point `y ∈ (0,1)`. The preimage of `0` is the
/// missing endpoint `1`; zero is returned unchanged.
pub fn step_point_inv(y: &Rational) -> Rational {
    if y.is_zero() {
        return y.clone();
    }
    y - shift(image_piece_of(y))
}

/// One odometer step on a 64-bit dyadic grid point `m / 2^64`.
///
/// The most significant bit of `m` is the first binary digit. The single point
/// `m = u64::MAX` wraps to zero instead of `2^{-65}`.
pub fn step_word(m: u64) -> u64 {
    m.reverse_bits().wrapping_add(1).reverse_bits()
}

/// Pieces of `T([lo,hi))`.
fn forward_once(lo: &Rational, hi: &Rational, out: &mut Vec<(Rational, Rational)>) {
    let one = Rational::one();
    let mut k = piece_of(lo);
    let mut a = lo.clone();
    loop {
        let top = &one - dyadic(k);
        if *hi == one && a == &one - dyadic(k - 1) {
            // remaining tail ⋃_{j≥k} I_j = [1 - 2^{1-k}, 1) lands on [0, 2^{1-k})
            out.push((Rational::zero(), dyadic(k - 1)));
            return;
        }
        let b = if *hi < top { hi.clone() } else { top.clone() };
        let s = shift(k);
        out.push((&a + &s, &b + &s));
        if *hi <= top {
            return;
        }
        a = top;
        k += 1;
    }
}

/// Pieces of `T^{-1}([lo,hi))`.
fn backward_once(lo: &Rational, hi: &Rational, out: &mut Vec<(Rational, Rational)>) {
    let one = Rational::one();
    // J_k holding the points just below hi
    let mut k = 1;
    while dyadic(k) >= *hi {
        k += 1;
    }
    let mut b = hi.clone();
    loop {
        if lo.is_zero() && b == dyadic(k - 1) {
            // [0, 2^{1-k}) = ⋃_{j≥k} J_j comes from [1 - 2^{1-k}, 1)
            out.push((&one - &b, one));
            return;
        }
        let bottom = dyadic(k);
        let a = if *lo > bottom { lo.clone() } else { bottom.clone() };
        let s = shift(k);
        out.push((&a - &s, &b - &s));
        if *lo >= bottom {
            return;
        }
        b = bottom;
        k += 1;
    }
}

/// Appends `T^t([lo,hi))`, mapped through `y ↦ offset + scale·y`.
fn image_rec(
    lo: &Rational,
    hi: &Rational,
    t: i64,
    offset: &Rational,
    scale: &Rational,
    out: &mut Vec<(Rational, Rational)>,
) {
    if lo >= hi {
        return;
    }
    let full = lo.is_zero() && hi.is_one();
    if t == 0 || full {
        out.push((offset + scale * lo, offset + scale * hi));
        return;
    }
    if t == 1 || t == -1 {
        let mut pieces = Vec::new();
        if t == 1 {
            forward_once(lo, hi, &mut pieces);
        } else {
            backward_once(lo, hi, &mut pieces);
        }
        out.extend(
            pieces
                .into_iter()
                .map(|(a, b)| (offset + scale * a, offset + scale * b)),
        );
        return;
    }
    let half = Rational::new(1.into(), 2.into());
    let two = Rational::from_integer(2.into());
    let sub_scale = scale * &half;
    for digit_in in 0..2i64 {
        let cell_lo = Rational::from_integer(digit_in.into()) * &half;
        let cell_hi = &cell_lo + &half;
        let a = if *lo > cell_lo { lo.clone() } else { cell_lo.clone() };
        let b = if *hi < cell_hi { hi.clone() } else { cell_hi.clone() };
        if a >= b {
            continue;
        }
        let local_lo = &a * &two - Rational::from_integer(digit_in.into());
        let local_hi = &b * &two - Rational::from_integer(digit_in.into());
        let s = digit_in + t;
        let digit_out = s.rem_euclid(2);
        let carry = s.div_euclid(2);
        let sub_offset = offset + scale * &half * Rational::from_integer(digit_out.into());
        image_rec(&local_lo, &local_hi, carry, &sub_offset, &sub_scale, out);
    }
}

/// Raw pieces of `T^t(A)`; the caller normalizes.
pub(crate) fn image_pieces(a: &IntervalSet, t: i64, out: &mut Vec<(Rational, Rational)>) {
    let zero = Rational::zero();
    let one = Rational::one();
    for (lo, hi) in a.intervals() {
        image_rec(lo, hi, t, &zero, &one, out);
    }
}

/// The exact set `T^t(A)` modulo null sets.
pub fn odometer_image(a: &IntervalSet, t: i64) -> IntervalSet {
    if t == 0 || a.is_empty() {
        return a.clone();
    }
    let mut out = Vec::new();
    image_pieces(a, t, &mut out);
    IntervalSet::from_pieces(out)
}
