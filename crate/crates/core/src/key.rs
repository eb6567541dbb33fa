//! Sketch keys for edge types and node ids.
//!
//! All sketches in one detector share a layout, so each record is hashed
//! once. The ordered pair `(s, d)` is first folded into a single 64-bit key:
//! `s` is shifted into the high half, xor-folded with `d`, and the result is
//! passed through an invertible bit mixer so that structured id spaces do not
//! line up with the row hashers. Because the mixer is a bijection,
//! [`edge_preimage`] can recover an `(s, d)` pair for any desired key value;
//! tests use that to place edge types in chosen sketch cells and to force or
//! rule out collisions.

/// Invertible 64-bit finalizer (xorshift-multiply rounds).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    z
}

/// Inverse of [`mix64`].
#[inline]
pub fn unmix64(mut z: u64) -> u64 {
    z = invert_xorshift(z, 31);
    z = z.wrapping_mul(0x3196_42b2_d24d_8ec3); // modular inverse of 0x94d049bb133111eb
    z = invert_xorshift(z, 27);
    z = z.wrapping_mul(0x96de_1b17_3f11_9089); // modular inverse of 0xbf58476d1ce4e5b9
    z = invert_xorshift(z, 30);
    z
}

#[inline]
fn invert_xorshift(z: u64, shift: u32) -> u64 {
    // y = x ^ (x >> s) is undone by reapplying the shifted feedback until
    // every bit group has been recovered.
    let mut x = z;
    let mut s = shift;
    while s < 64 {
        x = z ^ (x >> shift);
        s += shift;
    }
    x
}

/// Key of the ordered edge type `(s, d)`.
#[inline]
pub fn edge_key(s: u64, d: u64) -> u64 {
    mix64((s << 32) ^ d)
}

/// Key of a single node id.
#[inline]
pub fn node_key(n: u64) -> u64 {
    n
}

/// An `(s, d)` pair whose [`edge_key`] equals `key`.
///
/// Only meaningful for ids below 2^32, which is all the inverse can recover.
#[inline]
pub fn edge_preimage(key: u64) -> (u64, u64) {
    let packed = unmix64(key);
    (packed >> 32, packed & 0xffff_ffff)
}
