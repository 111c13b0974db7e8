//! Extended-precision oracles, independent of the f64 solver code paths.

#![allow(dead_code)]

use dashu_float::FBig;

/// Working precision in bits.
pub const PRECISION: usize = 256;

pub fn big(x: f64) -> FBig {
    FBig::try_from(x)
        .expect("finite input")
        .with_precision(PRECISION)
        .value()
}

pub fn to_f64(x: &FBig) -> f64 {
    x.to_f64().value()
}

/// One classical RK4 step of the SI system, stage by stage:
/// k1 = f(S, I), k2 = f(S + h k1^S / 2, I + h k1^I / 2), ...,
/// with f^S = -a S I and f^I = a S I.
pub fn rk4_si_step(alpha: f64, s: f64, i: f64, h: f64) -> (f64, f64) {
    let (a, s, i, h) = (big(alpha), big(s), big(i), big(h));
    let two = big(2.0);
    let six = big(6.0);
    let half_h = &h / &two;

    let k1s = -(&a * &s * &i);
    let k1i = &a * &s * &i;
    let s2 = &s + &half_h * &k1s;
    let i2 = &i + &half_h * &k1i;
    let k2s = -(&a * &s2 * &i2);
    let k2i = &a * &s2 * &i2;
    let s3 = &s + &half_h * &k2s;
    let i3 = &i + &half_h * &k2i;
    let k3s = -(&a * &s3 * &i3);
    let k3i = &a * &s3 * &i3;
    let s4 = &s + &h * &k3s;
    let i4 = &i + &h * &k3i;
    let k4s = -(&a * &s4 * &i4);
    let k4i = &a * &s4 * &i4;

    let s_next = &s + &h / &six * (k1s + &two * k2s + &two * k3s + k4s);
    let i_next = &i + &h / &six * (k1i + &two * k2i + &two * k3i + k4i);
    (to_f64(&s_next), to_f64(&i_next))
}

/// Closed-form SI solution evaluated in extended precision.
pub fn si_exact(alpha: f64, s0: f64, i0: f64, t: f64) -> (f64, f64) {
    let (a, s0, i0, t) = (big(alpha), big(s0), big(i0), big(t));
    let one = big(1.0);
    let n = &s0 + &i0;
    let c = &s0 / (&n - &s0);
    let decay = (-(&a * &t * &n)).exp();
    let scaled = &decay * &c;
    let s = &n * &scaled / (&one + &scaled);
    let i = &n * (&n - &s0) / (&n - &s0 + &decay * &s0);
    (to_f64(&s), to_f64(&i))
}
