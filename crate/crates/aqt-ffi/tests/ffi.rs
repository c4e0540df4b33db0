//! Exercises the C ABI through the exported symbols, the way a foreign
//! binding would.

use aqt_ffi::*;
use std::ffi::CString;
use std::ptr;

fn last_error() -> String {
    let mut buf = vec![0i8; 256];
    let n = unsafe { aqt_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&b| b as u8).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

#[test]
fn state_frame_sample_probability_round_trip() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(aqt_state_ghz(3, &mut state), AqtStatus::Ok);
        let mut frame = ptr::null_mut();
        assert_eq!(aqt_frame_pauli4(&mut frame), AqtStatus::Ok);

        let mut p = 0.0;
        let a = [0u8, 0, 0];
        assert_eq!(
            aqt_outcome_prob(state, frame, a.as_ptr(), 3, &mut p),
            AqtStatus::Ok
        );
        assert!((p - 1.0 / 54.0).abs() <= 1e-14);

        let mut dataset = ptr::null_mut();
        assert_eq!(aqt_sample(state, frame, 100, 7, &mut dataset), AqtStatus::Ok);
        assert_eq!(aqt_dataset_len(dataset), 100);
        assert_eq!(aqt_dataset_n_qubits(dataset), 3);
        let mut buf = [9u8; 3];
        assert_eq!(aqt_dataset_outcome(dataset, 0, buf.as_mut_ptr()), AqtStatus::Ok);
        assert!(buf.iter().all(|&s| s < 4));

        aqt_dataset_free(dataset);
        aqt_frame_free(frame);
        aqt_state_free(state);
    }
}

#[test]
fn train_evaluate_reconstruct_through_the_abi() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(aqt_state_faulty(0.2, &mut state), AqtStatus::Ok);
        let mut frame = ptr::null_mut();
        assert_eq!(aqt_frame_pauli4(&mut frame), AqtStatus::Ok);
        let mut dataset = ptr::null_mut();
        assert_eq!(aqt_sample(state, frame, 2000, 3, &mut dataset), AqtStatus::Ok);

        let mut model = ptr::null_mut();
        assert_eq!(aqt_model_init_desk(3, 1, &mut model), AqtStatus::Ok);
        assert_eq!(aqt_model_n_qubits(model), 3);

        let mut opts = std::mem::zeroed();
        assert_eq!(aqt_train_options_default(&mut opts), AqtStatus::Ok);
        opts.epochs = 6;
        opts.batch_size = 64;
        opts.heldout_fraction = 0.0;
        opts.patience = u64::MAX;
        let mut trained = ptr::null_mut();
        assert_eq!(aqt_train(model, dataset, &opts, &mut trained), AqtStatus::Ok);

        let mut lp = 0.0;
        let a = [0u8, 0, 0];
        assert_eq!(
            aqt_model_log_prob(trained, a.as_ptr(), 3, &mut lp),
            AqtStatus::Ok
        );
        assert!(lp < 0.0);

        let mut value = 0.0;
        let mut std_error = 0.0;
        assert_eq!(
            aqt_classical_fidelity_sampled(state, frame, trained, 5000, 2, &mut value, &mut std_error),
            AqtStatus::Ok
        );
        assert!(value > 0.8 && value <= 1.0 + 1e-9, "fc = {value}");
        assert!(std_error > 0.0);

        let mut exact = 0.0;
        assert_eq!(
            aqt_classical_fidelity_exact(state, frame, trained, &mut exact),
            AqtStatus::Ok
        );
        assert!((exact - value).abs() <= 5.0 * std_error + 1e-6);

        // reconstruction routes
        let mut raw = ptr::null_mut();
        assert_eq!(aqt_reconstruct_from_model(trained, frame, &mut raw), AqtStatus::Ok);
        assert_eq!(aqt_dm_is_projected(raw), 0);
        let mut projected = ptr::null_mut();
        let mut distance = 0.0;
        assert_eq!(aqt_project_to_psd(raw, &mut projected, &mut distance), AqtStatus::Ok);
        assert_eq!(aqt_dm_is_projected(projected), 1);
        assert!(distance >= 0.0);

        let mut fit = ptr::null_mut();
        assert_eq!(
            aqt_physical_fit_from_model(trained, frame, 2000, 1e-12, &mut fit),
            AqtStatus::Ok
        );
        let mut target = ptr::null_mut();
        assert_eq!(aqt_state_density_matrix(state, &mut target), AqtStatus::Ok);
        let mut fq = 0.0;
        assert_eq!(aqt_quantum_fidelity(fit, target, &mut fq), AqtStatus::Ok);
        assert!(fq > 0.3 && fq <= 1.0 + 1e-9, "fq = {fq}");

        let mut inverted = ptr::null_mut();
        assert_eq!(aqt_linear_inversion(dataset, frame, &mut inverted), AqtStatus::Ok);
        let mut mle = ptr::null_mut();
        let mut converged = 0u8;
        assert_eq!(
            aqt_mle_reconstruct(dataset, frame, 500, 1e-10, &mut mle, &mut converged),
            AqtStatus::Ok
        );
        let mut off = 1.0;
        assert_eq!(aqt_dm_off_corner_fraction(mle, &mut off), AqtStatus::Ok);
        assert!((0.0..=1.0).contains(&off));

        for dm in [raw, projected, fit, target, inverted, mle] {
            aqt_dm_free(dm);
        }
        aqt_model_free(trained);
        aqt_model_free(model);
        aqt_dataset_free(dataset);
        aqt_frame_free(frame);
        aqt_state_free(state);
    }
}

#[test]
fn files_round_trip_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(aqt_state_ghz(2, &mut state), AqtStatus::Ok);
        let mut frame = ptr::null_mut();
        assert_eq!(aqt_frame_pauli4(&mut frame), AqtStatus::Ok);
        let mut dataset = ptr::null_mut();
        assert_eq!(aqt_sample(state, frame, 50, 1, &mut dataset), AqtStatus::Ok);

        let data_path = CString::new(dir.path().join("d.txt").display().to_string()).unwrap();
        assert_eq!(aqt_dataset_save(dataset, data_path.as_ptr()), AqtStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(aqt_dataset_load(data_path.as_ptr(), &mut loaded), AqtStatus::Ok);
        assert_eq!(aqt_dataset_len(loaded), 50);

        let mut model = ptr::null_mut();
        assert_eq!(aqt_model_init_desk(2, 5, &mut model), AqtStatus::Ok);
        let ckpt_path = CString::new(dir.path().join("m.ckpt").display().to_string()).unwrap();
        assert_eq!(aqt_model_save(model, ckpt_path.as_ptr()), AqtStatus::Ok);
        let mut reloaded = ptr::null_mut();
        assert_eq!(aqt_model_load(ckpt_path.as_ptr(), &mut reloaded), AqtStatus::Ok);
        let mut lp0 = 0.0;
        let mut lp1 = 0.0;
        let a = [1u8, 2];
        assert_eq!(aqt_model_log_prob(model, a.as_ptr(), 2, &mut lp0), AqtStatus::Ok);
        assert_eq!(aqt_model_log_prob(reloaded, a.as_ptr(), 2, &mut lp1), AqtStatus::Ok);
        assert_eq!(lp0.to_bits(), lp1.to_bits());

        let mut target = ptr::null_mut();
        assert_eq!(aqt_state_density_matrix(state, &mut target), AqtStatus::Ok);
        let dm_path = CString::new(dir.path().join("dm.json").display().to_string()).unwrap();
        assert_eq!(aqt_dm_save(target, dm_path.as_ptr()), AqtStatus::Ok);
        let mut dm_loaded = ptr::null_mut();
        assert_eq!(aqt_dm_load(dm_path.as_ptr(), &mut dm_loaded), AqtStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(aqt_dm_get(dm_loaded, 0, 3, &mut re, &mut im), AqtStatus::Ok);
        assert!((re - 0.5).abs() <= 1e-15 && im.abs() <= 1e-15);

        aqt_dm_free(dm_loaded);
        aqt_dm_free(target);
        aqt_model_free(reloaded);
        aqt_model_free(model);
        aqt_dataset_free(loaded);
        aqt_dataset_free(dataset);
        aqt_frame_free(frame);
        aqt_state_free(state);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        // null pointer
        let status = aqt_state_ghz(3, ptr::null_mut());
        assert_eq!(status, AqtStatus::NullPointer);

        // domain validation
        let mut state = ptr::null_mut();
        assert_eq!(aqt_state_faulty(1.5, &mut state), AqtStatus::Validation);
        assert!(last_error().contains("outside [0, 1]"), "{}", last_error());

        // capacity: reconstruction past the dense cap
        let mut model = ptr::null_mut();
        assert_eq!(aqt_model_init_desk(10, 0, &mut model), AqtStatus::Ok);
        let mut frame = ptr::null_mut();
        assert_eq!(aqt_frame_pauli4(&mut frame), AqtStatus::Ok);
        let mut dm = ptr::null_mut();
        assert_eq!(
            aqt_reconstruct_from_model(model, frame, &mut dm),
            AqtStatus::Capacity
        );

        // io: missing file
        let path = CString::new("/nonexistent/nowhere.ckpt").unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(aqt_model_load(path.as_ptr(), &mut loaded), AqtStatus::Io);

        aqt_frame_free(frame);
        aqt_model_free(model);
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("aqt.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for symbol in [
        "AQT_H",
        "typedef struct AqtState AqtState;",
        "typedef struct AqtModel AqtModel;",
        "AqtStatus aqt_quantum_fidelity",
        "AqtStatus aqt_train(",
        "struct AqtTrainOptions",
        "aqt_last_error",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol:?}");
    }
}
