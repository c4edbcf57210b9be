//! Checks the comfort module against the brute-force reference in
//! `support/pmv_reference.rs` and freezes regression constants from it.

#[path = "support/pmv_reference.rs"]
mod pmv_reference;

use ceco_core::comfort::{self, ComfortEnv, OccupantParams};
use pmv_reference::{default_person, oracle_pmv, Person};
use proptest::prelude::*;

/// Regression constants, frozen from the reference evaluation.
const T_CL_REFERENCE: f64 = 27.551_547_880_75;
const PMV_MODIFIED_REFERENCE: f64 = 6.705_715_862_554_689;

#[test]
fn oracle_frozen_values() {
    // Clothing temperature at M = 58.15, I_cl = 0.155, p_a = 1700 Pa, T_a = 26 °C.
    let m: f64 = 58.15;
    let icl = 0.155;
    let pa = 1.7;
    let tcl = 35.7
        - 0.0275 * m
        - icl
            * (m - 3.05 * (5.73 - 0.007 * m - pa)
                - 0.42 * (m - 58.15)
                - 0.0173 * m * (5.87 - pa)
                - 0.0014 * m * (34.0 - 26.0));
    assert!((tcl - T_CL_REFERENCE).abs() < 1e-12, "{tcl}");

    // Modified PMV reference point: T_cab = 26, T_ain = 10, T_int = 28 °C,
    // m_bl = 0.1 kg/s, effective W_rad = 150 W/m², default occupant
    // (α1 = 0.8, α2 = 0.2, k_v = 5).
    let ta = 0.8 * 26.0 + 0.2 * 10.0;
    let y = oracle_pmv(&default_person(), ta, 28.0, 5.0 * 0.1, 150.0);
    assert!((y - PMV_MODIFIED_REFERENCE).abs() < 1e-12, "{y}");
}

#[test]
fn cloth_surface_temp_matches_frozen_value() {
    let occ = OccupantParams {
        clothing_insulation: 0.155,
        ..OccupantParams::default()
    };
    let tcl = comfort::cloth_surface_temp(&occ, 26.0);
    assert!((tcl - T_CL_REFERENCE).abs() < 1e-9, "{tcl}");
}

#[test]
fn pmv_modified_matches_frozen_value() {
    let occ = OccupantParams::default();
    let y = comfort::pmv_modified(26.0, 10.0, 28.0, 0.1, 150.0, &occ);
    assert!((y - PMV_MODIFIED_REFERENCE).abs() < 1e-9, "{y}");
}

fn arb_env() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64)> {
    (
        40.0f64..120.0, // M
        0.0f64..20.0,   // W_mech
        0.0f64..0.3,    // I_cl
        500.0f64..3500.0,
        5.0f64..45.0, // T_a
        5.0f64..55.0, // T_mr
        0.0f64..2.0,  // V_air
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn original_matches_oracle((m, w, icl, pa, ta, tmr, v) in arb_env()) {
        let occ = OccupantParams {
            metabolic_rate: m,
            mech_power: w,
            clothing_insulation: icl,
            vapor_pressure: pa,
            ..OccupantParams::default()
        };
        let env = ComfortEnv { t_a: ta, t_mr: tmr, v_air: v, w_rad: 0.0 };
        let ours = comfort::pmv_original(&occ, &env);
        let reference = oracle_pmv(&Person { m, w, icl, pa_pa: pa }, ta, tmr, v, 0.0);
        prop_assert!((ours - reference).abs() <= 1e-9, "ours {} oracle {}", ours, reference);
    }

    #[test]
    fn modified_matches_oracle(
        t_cab in 15.0f64..45.0,
        t_ain in 2.0f64..30.0,
        t_int in 15.0f64..60.0,
        m_bl in 0.0f64..0.2,
        w_rad in 0.0f64..100.0,
    ) {
        let occ = OccupantParams::default();
        let ours = comfort::pmv_modified(t_cab, t_ain, t_int, m_bl, w_rad, &occ);
        let ta = occ.alpha1 * t_cab + occ.alpha2 * t_ain;
        let reference = oracle_pmv(&default_person(), ta, t_int, occ.vent_velocity_gain * m_bl, w_rad);
        prop_assert!((ours - reference).abs() <= 1e-9);
    }
}
