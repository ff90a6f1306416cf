use std::ffi::{CStr, CString};
use std::ptr;

use augmi::attacks::{AttackModel, LossSelector, Statistic, ThresholdModel};
use augmi::data::{Sample, Shape};
use augmi::rng;
use augmi::target::{Architecture, TargetModel};
use augmi_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(augmi_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn cross_entropy_matches_core() {
    let logits = [0.5, -1.0, 2.0];
    let mut l = 0.0;
    let s = unsafe { augmi_cross_entropy(logits.as_ptr(), 3, 2, &mut l) };
    assert_eq!(s, AugmiStatus::Ok);
    assert_eq!(l, augmi::loss::cross_entropy_loss(&logits, 2).unwrap());

    let s = unsafe { augmi_cross_entropy(logits.as_ptr(), 3, 7, &mut l) };
    assert_eq!(s, AugmiStatus::InvalidInput);
    assert!(last_error().contains("invalid input"));
}

#[test]
fn null_pointers_are_reported() {
    let s = unsafe { augmi_mean_statistic(ptr::null(), 4, &mut 0.0) };
    assert_eq!(s, AugmiStatus::NullPointer);
    let s = unsafe { augmi_mean_statistic([1.0].as_ptr(), 1, ptr::null_mut()) };
    assert_eq!(s, AugmiStatus::NullPointer);
}

#[test]
fn moments_report_required_length() {
    let losses = [0.2, 1.0, 3.0];
    let mut buf = [0.0; 4];
    let mut written = 0;
    let s = unsafe { augmi_moment_features(losses.as_ptr(), 3, 10, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!((s, written), (AugmiStatus::BufferTooSmall, 10));

    let mut buf = [0.0; 10];
    let s = unsafe { augmi_moment_features(losses.as_ptr(), 3, 10, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, AugmiStatus::Ok);
    assert_eq!(buf.to_vec(), augmi::attacks::moment_features(&losses, 10).unwrap().0);
    let mut mean = 0.0;
    unsafe { augmi_mean_statistic(losses.as_ptr(), 3, &mut mean) };
    assert_eq!(mean, buf[0]);
}

#[test]
fn bound_at_zero_epsilon_is_prior() {
    let mut b = 0.0;
    assert_eq!(unsafe { augmi_mi_upper_bound(0.0, 1, 0.3, &mut b) }, AugmiStatus::Ok);
    assert_eq!(b, 0.3);
    assert_eq!(unsafe { augmi_mi_upper_bound(1.0, 1, 1.5, &mut b) }, AugmiStatus::InvalidInput);
}

#[test]
fn target_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let shape = Shape::Grid { rows: 4, cols: 4 };
    let model = TargetModel::initialized(Architecture::SoftmaxRegression, shape, 3, &mut rng::stream(1, "ffi", 0)).unwrap();
    let file = dir.path().join("model.ckpt");
    model.write_checkpoint(&file).unwrap();
    let c_path = CString::new(file.to_str().unwrap()).unwrap();

    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { augmi_target_model_load(c_path.as_ptr(), &mut handle) }, AugmiStatus::Ok);
    assert_eq!(unsafe { augmi_target_model_classes(handle) }, 3);
    assert_eq!(unsafe { augmi_target_model_input_len(handle) }, 16);

    let x: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
    let mut logits = [0.0; 3];
    let mut written = 0;
    let s = unsafe { augmi_target_model_logits(handle, x.as_ptr(), 16, logits.as_mut_ptr(), 3, &mut written) };
    assert_eq!((s, written), (AugmiStatus::Ok, 3));
    let expected = model.logits(&Sample::new(0, shape, x.clone(), 0).unwrap()).unwrap();
    assert_eq!(logits.to_vec(), expected);

    let s = unsafe { augmi_target_model_logits(handle, x.as_ptr(), 5, logits.as_mut_ptr(), 3, &mut written) };
    assert_eq!(s, AugmiStatus::InvalidInput);
    unsafe { augmi_target_model_free(handle) };
    unsafe { augmi_target_model_free(ptr::null_mut()) };
}

#[test]
fn missing_files_are_io_errors() {
    let p = CString::new("/nonexistent/augmi/model.ckpt").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { augmi_target_model_load(p.as_ptr(), &mut t) }, AugmiStatus::Io);
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { augmi_attack_model_load(p.as_ptr(), &mut a) }, AugmiStatus::Io);
    assert!(t.is_null() && a.is_null());
}

#[test]
fn attack_model_decides_like_core() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("attack.txt");
    AttackModel::Threshold(ThresholdModel { tau: 0.5, statistic: Statistic::MeanLoss }).write(&file).unwrap();
    let c_path = CString::new(file.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { augmi_attack_model_load(c_path.as_ptr(), &mut handle) }, AugmiStatus::Ok);

    let mut member = false;
    let low = [0.1, 0.3];
    assert_eq!(unsafe { augmi_attack_model_decide(handle, low.as_ptr(), 2, f64::NAN, &mut member) }, AugmiStatus::Ok);
    assert!(member);
    let high = [0.9, 0.3];
    unsafe { augmi_attack_model_decide(handle, high.as_ptr(), 2, f64::NAN, &mut member) };
    assert!(!member);
    unsafe { augmi_attack_model_free(handle) };

    let original = dir.path().join("orig.txt");
    AttackModel::Threshold(ThresholdModel { tau: 0.5, statistic: Statistic::SingleLoss(LossSelector::Original) }).write(&original).unwrap();
    let c_path = CString::new(original.to_str().unwrap()).unwrap();
    unsafe { augmi_attack_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(unsafe { augmi_attack_model_decide(handle, high.as_ptr(), 2, 0.2, &mut member) }, AugmiStatus::Ok);
    assert!(member);
    assert_ne!(unsafe { augmi_attack_model_decide(handle, high.as_ptr(), 2, f64::NAN, &mut member) }, AugmiStatus::Ok);
    unsafe { augmi_attack_model_free(handle) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/augmi.h")).unwrap();
    for name in [
        "augmi_last_error",
        "augmi_version",
        "augmi_cross_entropy",
        "augmi_mean_statistic",
        "augmi_moment_features",
        "augmi_mi_upper_bound",
        "augmi_target_model_load",
        "augmi_target_model_logits",
        "augmi_target_model_free",
        "augmi_attack_model_load",
        "augmi_attack_model_decide",
        "augmi_attack_model_free",
        "AUGMI_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(augmi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
