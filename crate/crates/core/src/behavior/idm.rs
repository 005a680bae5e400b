//! Intelligent Driver Model.

use crate::scalar::Real;

/// Deceleration floor applied to every IDM output, m/s².
pub const HARD_BRAKING: f64 = 9.0;

/// IDM parameters with a resolved target speed. All values strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdmParams<T> {
    /// Maximal acceleration, m/s².
    pub a_max: T,
    /// Comfortable braking deceleration, m/s².
    pub b: T,
    /// Time headway, s.
    pub time_headway: T,
    /// Minimum distance, m.
    pub s0: T,
    /// Acceleration exponent.
    pub delta: T,
    /// Target speed, m/s.
    pub v0: T,
}

impl<T: Real> IdmParams<T> {
    pub fn is_valid(&self) -> bool {
        [self.a_max, self.b, self.time_headway, self.s0, self.delta, self.v0]
            .iter()
            .all(|x| *x > T::zero() && x.is_finite())
    }

    /// Desired gap s*, never below `s0`.
    pub fn desired_gap(&self, v: T, delta_v: T) -> T {
        let two = T::lit(2.0);
        let dynamic = v * self.time_headway + v * delta_v / (two * (self.a_max * self.b).sqrt());
        (self.s0 + dynamic).max(self.s0)
    }

    /// Steady-state net gap of a follower at speed `v` behind a leader at the same speed.
    pub fn equilibrium_gap(&self, v: T) -> T {
        self.desired_gap(v, T::zero()) / (T::one() - (v / self.v0).powf(self.delta)).sqrt()
    }
}

/// IDM acceleration for speed `v`, net gap `s_net` (use `T::infinity()` when
/// no leader is present) and approach rate `delta_v` (positive when closing).
///
/// The result is clamped to `[-HARD_BRAKING, a_max]`.
pub fn idm_accel<T: Real>(p: &IdmParams<T>, v: T, s_net: T, delta_v: T) -> T {
    let free = (v / p.v0).powf(p.delta);
    let interaction = if s_net.is_infinite() {
        T::zero()
    } else {
        let ratio = p.desired_gap(v, delta_v) / s_net;
        ratio * ratio
    };
    let a = p.a_max * (T::one() - free - interaction);
    a.max(-T::lit(HARD_BRAKING)).min(p.a_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn standard() -> IdmParams<f64> {
        IdmParams {
            a_max: 2.0,
            b: 3.0,
            time_headway: 3.1,
            s0: 9.0,
            delta: 4.0,
            v0: 10.0,
        }
    }

    #[test]
    fn free_flow_boundaries() {
        let p = standard();
        assert_eq!(idm_accel(&p, 0.0, f64::INFINITY, 0.0), p.a_max);
        assert_eq!(idm_accel(&p, p.v0, f64::INFINITY, 0.0), 0.0);
    }

    #[test]
    fn standard_driver_at_desired_gap() {
        // s* = 9 + 10 * 3.1 = 40, so a = 2 * (1 - 1 - 1)
        let p = standard();
        assert!((p.desired_gap(10.0, 0.0) - 40.0).abs() < 1e-12);
        assert!((idm_accel(&p, 10.0, 40.0, 0.0) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn stopped_behind_stopped_leader_does_not_accelerate() {
        let p = standard();
        assert!(idm_accel(&p, 0.0, 9.0, 0.0) <= 0.0);
    }

    #[test]
    fn desired_gap_clamped_at_minimum() {
        let p = standard();
        assert_eq!(p.desired_gap(5.0, -100.0), p.s0);
    }

    #[test]
    fn output_is_clamped() {
        let p = standard();
        assert_eq!(idm_accel(&p, 10.0, 0.5, 10.0), -HARD_BRAKING);
        assert!(idm_accel(&p, 0.0, 1e9, -50.0) <= p.a_max);
    }

    fn params() -> impl Strategy<Value = IdmParams<f64>> {
        (0.5..4.0f64, 1.0..9.0f64, 0.5..4.0f64, 1.0..10.0f64, 1.0..6.0f64, 5.0..40.0f64).prop_map(
            |(a_max, b, time_headway, s0, delta, v0)| IdmParams {
                a_max,
                b,
                time_headway,
                s0,
                delta,
                v0,
            },
        )
    }

    proptest! {
        #[test]
        fn monotone_in_speed_gap_and_approach(
            p in params(),
            v in 0.0..40.0f64,
            s in 0.5..200.0f64,
            dv in -10.0..10.0f64,
            h in 0.01..5.0f64,
        ) {
            let a = idm_accel(&p, v, s, dv);
            prop_assert!(idm_accel(&p, v + h, s, dv) <= a + 1e-12);
            prop_assert!(idm_accel(&p, v, s + h, dv) >= a - 1e-12);
            prop_assert!(idm_accel(&p, v, s, dv + h) <= a + 1e-12);
        }
    }
}
