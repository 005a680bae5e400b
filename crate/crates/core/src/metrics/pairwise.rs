//! Nanoscopic metrics for one ordered pair of participants in one frame.

use crate::scalar::Real;
use crate::scene::ParticipantState;

/// Minimum speed for a gap-time prediction, m/s.
pub const GAP_TIME_MIN_SPEED: f64 = 0.1;

/// Car-following relation of the pair: `a` follows `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Following<T> {
    /// Bumper-to-bumper gap, > 0.
    pub s_net: T,
    /// Follower minus leader speed along the follower's path; positive when closing.
    pub delta_v: T,
    pub leader_speed: T,
    pub follower_speed: T,
}

/// Remaining path distances of both participants to their paths' crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConflictPoint<T> {
    pub d_a: T,
    pub d_b: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairContext<T> {
    pub a: ParticipantState<T>,
    pub b: ParticipantState<T>,
    pub following: Option<Following<T>>,
    pub conflict: Option<ConflictPoint<T>>,
    pub r_a: T,
    pub r_b: T,
}

impl<T: Real> PairContext<T> {
    pub fn new(a: ParticipantState<T>, b: ParticipantState<T>) -> Self {
        let (r_a, r_b) = (a.radius(), b.radius());
        Self {
            a,
            b,
            following: None,
            conflict: None,
            r_a,
            r_b,
        }
    }
}

pub fn metric_distance<T: Real>(a: &ParticipantState<T>, b: &ParticipantState<T>) -> T {
    a.position.dist(b.position)
}

/// Inverse time to collision of a following pair, 0 when the gap opens.
pub fn inverse_ttc<T: Real>(s_net: T, delta_v: T) -> T {
    if delta_v > T::zero() {
        delta_v / s_net
    } else {
        T::zero()
    }
}

pub fn metric_inverse_ttc<T: Real>(ctx: &PairContext<T>) -> Option<T> {
    ctx.following.map(|f| inverse_ttc(f.s_net, f.delta_v))
}

/// Potential time to collision: the leader brakes at `b_p` until it stops,
/// the follower keeps its speed.
///
/// `None` when the gap never closes, which requires a stopped follower.
pub fn pttc<T: Real>(s_net: T, delta_v: T, leader_speed: T, follower_speed: T, b_p: T) -> Option<T> {
    let two = T::lit(2.0);
    if s_net <= T::zero() {
        return Some(T::zero());
    }
    // g(t) = s - dv t - b t^2 / 2; stable form of its positive root
    let disc = (delta_v * delta_v + two * b_p * s_net).sqrt();
    let t1 = two * s_net / (delta_v + disc);
    let t_stop = leader_speed.max(T::zero()) / b_p;
    if t1 <= t_stop {
        return Some(t1);
    }
    if follower_speed <= T::zero() {
        return None;
    }
    let g_stop = s_net - delta_v * t_stop - b_p * t_stop * t_stop / two;
    Some(t_stop + g_stop / follower_speed)
}

pub fn metric_pttc<T: Real>(ctx: &PairContext<T>, b_p: T) -> Option<T> {
    let f = ctx.following?;
    pttc(f.s_net, f.delta_v, f.leader_speed, f.follower_speed, b_p)
}

/// Worst-case time to collision of two discs growing with `v t + a_w t^2 / 2`.
pub fn wttc<T: Real>(distance: T, r_a: T, r_b: T, v_a: T, v_b: T, a_w: T) -> T {
    let c = r_a + r_b - distance;
    if c >= T::zero() {
        return T::zero();
    }
    let b = v_a + v_b;
    let four = T::lit(4.0);
    T::lit(2.0) * (-c) / (b + (b * b - four * a_w * c).sqrt())
}

pub fn metric_wttc<T: Real>(ctx: &PairContext<T>, a_w: T) -> T {
    wttc(
        metric_distance(&ctx.a, &ctx.b),
        ctx.r_a,
        ctx.r_b,
        ctx.a.speed(),
        ctx.b.speed(),
        a_w,
    )
}

/// Difference of predicted arrival times at the conflict point.
pub fn metric_gap_time<T: Real>(ctx: &PairContext<T>) -> Option<T> {
    let c = ctx.conflict?;
    let eps = T::lit(GAP_TIME_MIN_SPEED);
    let (v_a, v_b) = (ctx.a.speed(), ctx.b.speed());
    if v_a <= eps || v_b <= eps || c.d_a < T::zero() || c.d_b < T::zero() {
        return None;
    }
    Some((c.d_a / v_a - c.d_b / v_b).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::test_util::state;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let a = state(1, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(metric_distance(&a, &a), 0.0);
        assert_eq!(metric_distance(&a, &state(2, 3.0, 4.0, 1.0, 2.0)), 5.0);
    }

    #[test]
    fn inverse_ttc_examples() {
        assert_eq!(inverse_ttc(20.0, 5.0), 0.25);
        assert_eq!(inverse_ttc(20.0, -2.0), 0.0);
        let ctx = PairContext::new(state(1, 0.0, 0.0, 0.0, 5.0), state(2, 0.0, 10.0, 0.0, 5.0));
        assert_eq!(metric_inverse_ttc(&ctx), None);
    }

    #[test]
    fn pttc_piecewise_example() {
        // leader stops at t = 2 with 12 m left, closed at 6 m/s
        let t: f64 = pttc(18.0, 0.0, 6.0, 6.0, 3.0).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        // leader still moving at the root
        let t: f64 = pttc(18.0, 0.0, 30.0, 30.0, 3.0).unwrap();
        assert!((t - 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(pttc(10.0, -3.0, 3.0, 0.0, 3.0), None);
    }

    #[test]
    fn wttc_examples() {
        assert_eq!(wttc(1.0, 1.0, 1.0, 3.0, 4.0, 7.5), 0.0);
        let t = wttc(20.0, 1.0, 1.0, 0.0, 0.0, 7.5);
        assert!((t - (18.0f64 / 7.5).sqrt()).abs() < 1e-12);
        assert!((t - 1.549).abs() < 1e-3);
    }

    #[test]
    fn gap_time_examples() {
        let mut ctx = PairContext::new(state(1, 0.0, 0.0, 0.0, 10.0), state(2, 5.0, 5.0, 1.0, 10.0));
        ctx.conflict = Some(ConflictPoint { d_a: 20.0, d_b: 30.0 });
        assert_eq!(metric_gap_time(&ctx), Some(1.0));
        ctx.conflict = Some(ConflictPoint { d_a: 30.0, d_b: 30.0 });
        assert_eq!(metric_gap_time(&ctx), Some(0.0));
        ctx.conflict = None;
        assert_eq!(metric_gap_time(&ctx), None);
        ctx.conflict = Some(ConflictPoint { d_a: 30.0, d_b: 30.0 });
        ctx.b = state(2, 5.0, 5.0, 1.0, 0.05);
        assert_eq!(metric_gap_time(&ctx), None);
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_scales(x in -1e3..1e3f64, y in -1e3..1e3f64, k in 0.1..10.0f64) {
            let a = state(1, 0.0, 0.0, 0.0, 0.0);
            let b = state(2, x, y, 0.0, 0.0);
            prop_assert_eq!(metric_distance(&a, &b), metric_distance(&b, &a));
            let scaled = metric_distance(&a, &state(2, k * x, k * y, 0.0, 0.0));
            prop_assert!((scaled - k * metric_distance(&a, &b)).abs() <= 1e-9 * (1.0 + scaled));
        }

        #[test]
        fn inverse_ttc_halves_when_gap_doubles(s in 0.1..200.0f64, dv in 0.0..30.0f64) {
            prop_assert!((inverse_ttc(2.0 * s, dv) - inverse_ttc(s, dv) / 2.0).abs() < 1e-12);
        }

        #[test]
        fn wttc_symmetric(d in 0.0..100.0f64, ra in 0.5..3.0f64, rb in 0.5..3.0f64, va in 0.0..30.0f64, vb in 0.0..30.0f64) {
            prop_assert_eq!(wttc(d, ra, rb, va, vb, 7.5), wttc(d, rb, ra, vb, va, 7.5));
        }
    }
}
