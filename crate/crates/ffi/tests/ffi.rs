use std::ffi::CStr;
use std::ptr;

use surprisal_ffi::*;

fn last_error() -> String {
    let p = surprisal_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn entropies_of_weights() {
    let w = [0.75, 0.25];
    let mut h = 0.0;
    unsafe {
        assert_eq!(surprisal_shannon_entropy(w.as_ptr(), 2, &mut h), SurprisalStatus::Ok);
        assert!((h - 0.562_335_144_618_808_4).abs() < 1e-15);
        assert_eq!(surprisal_min_entropy(w.as_ptr(), 2, &mut h), SurprisalStatus::Ok);
        assert!((h - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(surprisal_renyi_entropy(w.as_ptr(), 2, 2.0, &mut h), SurprisalStatus::Ok);
        assert!((h - (1.0f64 / 0.625).ln()).abs() < 1e-15);
    }
}

#[test]
fn error_codes_and_messages() {
    let bad = [0.5, 0.6];
    let mut h = 0.0;
    unsafe {
        assert_eq!(
            surprisal_shannon_entropy(bad.as_ptr(), 2, &mut h),
            SurprisalStatus::InvalidDistribution
        );
        assert!(last_error().contains("sum"));
        assert_eq!(
            surprisal_renyi_entropy([0.5, 0.5].as_ptr(), 2, 1.0, &mut h),
            SurprisalStatus::Domain
        );
        assert_eq!(
            surprisal_shannon_entropy(bad.as_ptr(), 2, ptr::null_mut()),
            SurprisalStatus::NullPointer
        );
        assert_eq!(surprisal_shannon_entropy(ptr::null(), 2, &mut h), SurprisalStatus::Domain);
        let mut c = std::mem::zeroed();
        assert_eq!(surprisal_certificate(10, 8, 0.01, 1e-6, 7, 1.0, &mut c), SurprisalStatus::Domain);
    }
}

#[test]
fn two_level_handles() {
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(surprisal_two_level_from_theta(4, 0.25, &mut h), SurprisalStatus::Ok);
        assert_eq!(surprisal_two_level_theta(h), 0.25);
        assert_eq!(surprisal_two_level_deficiency(h), 0.0);
        let mut m = 0.0;
        assert_eq!(surprisal_two_level_mgf(h, 1.5, &mut m), SurprisalStatus::Ok);
        assert_eq!(m, 1.0);
        surprisal_two_level_free(h);

        let delta = 0.024 * std::f64::consts::LN_2;
        assert_eq!(surprisal_two_level_from_deficiency(8, delta, &mut h), SurprisalStatus::Ok);
        assert!((surprisal_two_level_deficiency(h) - delta).abs() < 1e-12);
        let k = surprisal_two_level_shannon(h);
        assert_eq!(surprisal_two_level_mgf(h, -1.0, &mut m), SurprisalStatus::Ok);
        assert!((m - 256.0 * (-k).exp()).abs() < 1e-12 * m);
        assert_eq!(surprisal_two_level_mgf(h, -2.0, &mut m), SurprisalStatus::Domain);
        let mut r = 0.0;
        assert_eq!(surprisal_two_level_renyi(h, 2.0, &mut r), SurprisalStatus::Ok);
        assert!(r < k && surprisal_two_level_min_entropy(h) < r);
        surprisal_two_level_free(h);

        assert_eq!(surprisal_two_level_from_entropy(256, 1.0, &mut h), SurprisalStatus::Ok);
        assert!((surprisal_two_level_shannon(h) - 1.0).abs() < 1e-12);
        surprisal_two_level_free(h);

        assert!(surprisal_two_level_theta(ptr::null()).is_nan());
        surprisal_two_level_free(ptr::null_mut());
        assert_eq!(surprisal_two_level_from_theta(1, 0.5, &mut h), SurprisalStatus::Domain);
    }
}

#[test]
fn worst_renyi_figure_value() {
    let mut v = 0.0;
    let k = 255.999 * std::f64::consts::LN_2;
    unsafe {
        assert_eq!(surprisal_worst_renyi(256, k, 2.0, &mut v), SurprisalStatus::Ok);
    }
    assert!((v / std::f64::consts::LN_2 - 35.7).abs() < 0.3);
}

#[test]
fn certificate_matches_library() {
    let delta = 0.024 * std::f64::consts::LN_2;
    let eps = 2f64.powi(-60);
    let mut c = SurprisalCertificate {
        n: 0,
        alphabet_bits: 0,
        delta_def: 0.0,
        epsilon: 0.0,
        deviation_t: 0.0,
        min_entropy_bound: 0.0,
        rate_per_symbol: 0.0,
    };
    for (code, method) in [
        (SurprisalMethod::Deficiency, surprisal::Method::Deficiency),
        (SurprisalMethod::HolensteinRenner, surprisal::Method::holenstein_renner()),
    ] {
        unsafe {
            assert_eq!(
                surprisal_certificate(250, 8, delta, eps, code as u32, 1.0, &mut c),
                SurprisalStatus::Ok
            );
        }
        let lib = surprisal::tails::certificate(250, surprisal::Alphabet::new(256).unwrap(), delta, eps, method).unwrap();
        assert_eq!(c.deviation_t, lib.deviation_t);
        assert_eq!(c.min_entropy_bound, lib.min_entropy_bound);
        assert_eq!(c.rate_per_symbol, lib.rate_per_symbol);
        assert_eq!(c.alphabet_bits, 8);
    }
    let mut tail = 0.0;
    unsafe {
        assert_eq!(surprisal_tail_epsilon(250, 8, delta, 0.0, &mut tail), SurprisalStatus::Ok);
    }
    assert_eq!(tail, 1.0);
}

#[test]
fn committed_header_is_current() {
    let generated = include_str!(concat!(env!("OUT_DIR"), "/surprisal.h"));
    let committed = include_str!("../include/surprisal.h");
    assert_eq!(generated, committed, "regenerate include/surprisal.h from the build output");
}
