//! Exact conversion factors between the imperial units used at every file
//! and CLI boundary and the SI units used internally.

pub const FT: f64 = 0.3048;
pub const INCH: f64 = 0.0254;
pub const LB: f64 = 0.453_592_37;
pub const MPH: f64 = 0.447_04;
/// Pound-force.
pub const LBF: f64 = 4.448_221_615_260_5;
pub const LB_FT: f64 = LBF * FT;
pub const G: f64 = 9.806_65;

#[inline]
pub fn ft_to_m(ft: f64) -> f64 {
    ft * FT
}

#[inline]
pub fn m_to_ft(m: f64) -> f64 {
    m / FT
}

#[inline]
pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPH
}

#[inline]
pub fn mps_to_mph(mps: f64) -> f64 {
    mps / MPH
}

/// Nudges a length in metres to a value `m` for which `(m / FT) * FT == m`,
/// so that a value written in feet and read back is bit-identical.
pub fn snap_to_feet(m: f64) -> f64 {
    let mut v = m;
    for _ in 0..16 {
        let back = (v / FT) * FT;
        if back == v {
            return v;
        }
        v = back;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factors() {
        assert_eq!(mps_to_mph(mph_to_mps(35.0)), 35.0);
        assert!((LB_FT - 1.355_817_948_331_400_4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn snapped_lengths_survive_feet_round_trip(m in -5000.0f64..5000.0) {
            let s = snap_to_feet(m);
            prop_assert_eq!((s / FT) * FT, s);
            prop_assert!((s - m).abs() <= 4.0 * f64::EPSILON * m.abs().max(1.0));
            let text = format!("{}", s / FT);
            let parsed: f64 = text.parse().unwrap();
            prop_assert_eq!(parsed * FT, s);
        }
    }
}
