use crate::error::{Error, Result};
use crate::Real;

/// Internal quality factor from `1/Q_l = 1/Q_i + Re{e^{-iφ}}/|Q_c|`.
pub fn qi_from_ql<T: Real>(q_l: T, q_c_mag: T, phi: T) -> Result<T> {
    if !(q_l > T::zero()) || !(q_c_mag > T::zero()) || !phi.is_finite() {
        return Err(Error::invalid("quality factors", "q_l and q_c_mag must be > 0, phi finite"));
    }
    let inv = T::one() / q_l - phi.cos() / q_c_mag;
    if !(inv > T::zero()) {
        return Err(Error::NonPhysical(format!(
            "1/Q_l = {} does not exceed Re(1/Q_c) = {}; Q_i would be non-positive",
            T::one() / q_l,
            phi.cos() / q_c_mag
        )));
    }
    Ok(T::one() / inv)
}

/// Inverse of [`qi_from_ql`].
pub fn ql_from_qi<T: Real>(q_i: T, q_c_mag: T, phi: T) -> Result<T> {
    if !(q_i > T::zero()) || !(q_c_mag > T::zero()) || !phi.is_finite() {
        return Err(Error::invalid("quality factors", "q_i and q_c_mag must be > 0, phi finite"));
    }
    let inv = T::one() / q_i + phi.cos() / q_c_mag;
    if !(inv > T::zero()) {
        return Err(Error::NonPhysical("loaded linewidth would be non-positive".into()));
    }
    Ok(T::one() / inv)
}

/// `Q = f / κ` for a linewidth contribution `κ` in Hz.
pub fn quality_from_rate<T: Real>(f: T, kappa: T) -> T {
    f / kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_relative_eq!(qi_from_ql(3e5, 6e5, 0.0).unwrap(), 6e5, max_relative = 1e-12);
        assert_relative_eq!(
            qi_from_ql(2.4e5, 6e5, std::f64::consts::FRAC_PI_2).unwrap(),
            2.4e5,
            max_relative = 1e-9
        );
        assert!(matches!(qi_from_ql(7e5, 6e5, 0.0), Err(Error::NonPhysical(_))));
        assert!(qi_from_ql(-1.0, 6e5, 0.0).is_err());
    }

    #[test]
    fn table_rates_give_qi_in_the_measured_range() {
        let m = presets::standard_fit::<f64>();
        let q_c = quality_from_rate(m.f0, m.kappa_ext);
        assert!((5e5..7e5).contains(&q_c));
        // from n_c upwards the saturable rate keeps Q_i inside 1..5 x 10^6;
        // the zero-power limit sits just below at 8.5 x 10^5
        for n in [2.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
            let q_i = quality_from_rate(m.f0, m.kappa0 + m.tls_damping_rate(f64::sqrt(n)));
            assert!((1e6..5e6).contains(&q_i), "n = {n}: {q_i}");
        }
        let q_i0 = quality_from_rate(m.f0, m.kappa0 + m.kappa_tls);
        assert_relative_eq!(q_i0, 854469.8544698545, max_relative = 1e-12);
        let q_l = quality_from_rate(m.f0, m.kappa_total());
        assert_relative_eq!(qi_from_ql(q_l, q_c, 0.0).unwrap(), q_i0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn inverse_roundtrip(q_i in 1e3f64..1e8, q_c in 1e3f64..1e8, phi in -1.5f64..1.5) {
            let q_l = ql_from_qi(q_i, q_c, phi).unwrap();
            let back = qi_from_ql(q_l, q_c, phi).unwrap();
            prop_assert!((back / q_i - 1.0).abs() < 1e-9);
        }
    }
}
