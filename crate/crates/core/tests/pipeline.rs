use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use vbm_core::beamforming::{achievable_rate, dft_codebook, rsrp_sweep, vbm_beamformer, Beamformer, LinkBudget};
use vbm_core::channel::{los_channel, ArrayGeometry, PathLossModel, PathLossParams};
use vbm_core::dataset::{load_corpus, select, write_synthetic_corpus, ObjectClass, SelectionQuery};
use vbm_core::detector::{builtin_profile, simulate_detection};
use vbm_core::geometry::{wrap_angle, SphericalTarget};
use vbm_core::music::{estimate_aoa, sample_covariance, simulate_snapshots, MusicGrid};
use vbm_core::random::rng_from_seed;

#[test]
fn music_within_one_grid_step_at_20_db() {
    let rx = ArrayGeometry::new(2, 2).unwrap();
    let grid = MusicGrid::hemisphere(181, 181).unwrap();
    let mut rng = rng_from_seed(42);
    let mut ok = 0;
    for _ in 0..200 {
        let truth = SphericalTarget::new(1.0, rng.gen_range(0.05..1.4), wrap_angle(rng.gen_range(-PI..PI)));
        let r = sample_covariance(&simulate_snapshots(&truth, &rx, 20.0, 200, &mut rng).unwrap());
        let e = estimate_aoa(&r, &rx, &grid).unwrap();
        if (e.azimuth_rad - truth.azimuth_rad).abs() <= grid.theta_step()
            && wrap_angle(e.elevation_rad - truth.elevation_rad).abs() <= grid.phi_step()
        {
            ok += 1;
        }
    }
    assert!(ok >= 190, "{ok}/200");
}

#[test]
fn detected_beams_never_beat_the_matched_filter() {
    let tx = ArrayGeometry::new(8, 8).unwrap();
    let rx = ArrayGeometry::new(2, 2).unwrap();
    let pl = PathLossParams::new(100.0, PathLossModel::Normalized).unwrap();
    let lb = LinkBudget::default();
    let p = builtin_profile("vomtc-test").unwrap();
    let mut rng = rng_from_seed(3);
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..200 {
        let aod = SphericalTarget::new(5.0, rng.gen_range(0.0..1.4), wrap_angle(rng.gen_range(-PI..PI)));
        let aoa = SphericalTarget::new(5.0, rng.gen_range(0.0..1.4), wrap_angle(rng.gen_range(-PI..PI)));
        let ch = los_channel(&tx, &rx, &aod, &aoa, &pl, one).unwrap();
        let matched = achievable_rate(&ch.h, &vbm_beamformer(&aod, &aoa, &tx, &rx), &lb, &[]).unwrap();
        if let Some(est) = simulate_detection(&aod, &p, &mut rng) {
            let r = achievable_rate(&ch.h, &vbm_beamformer(&est, &aoa, &tx, &rx), &lb, &[]).unwrap();
            assert!(r <= matched + 1e-12);
        }
        let cb_tx = dft_codebook(&tx, 1, Some(8)).unwrap();
        let cb_rx = dft_codebook(&rx, 1, Some(8)).unwrap();
        let s = rsrp_sweep(&ch.h, &cb_tx, &cb_rx, lb.power_w).unwrap();
        let bf = Beamformer::new(cb_tx.codeword(s.tx_index).clone(), cb_rx.codeword(s.rx_index).clone());
        assert!(achievable_rate(&ch.h, &bf, &lb, &[]).unwrap() <= matched + 1e-12);
    }
}

#[test]
fn synthetic_corpus_survives_disk_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_corpus(dir.path(), 50, &mut rng_from_seed(8)).unwrap();
    let loaded = load_corpus(dir.path()).unwrap();
    assert_eq!(loaded.len(), 50);
    assert!(loaded.iter().all(|r| r.objects.iter().all(|o| o.distance_m.is_some())));

    let mut rng = rng_from_seed(8);
    for (i, r) in loaded.iter().enumerate() {
        let fresh = vbm_core::dataset::synth_record(&mut rng, &format!("{i:06}"), 160, 120);
        assert_eq!(r.objects, fresh.objects);
    }

    let q = SelectionQuery::new(&[ObjectClass::Person, ObjectClass::Phone], Some(6), 30.0).unwrap();
    let kept = select(&loaded, &q);
    assert!(kept.len() < loaded.len());
    assert_eq!(select(&kept, &q), kept);
}
