use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hyperim::ball::BallPoint;
use hyperim::embed::Vocabulary;
use hyperim::model::{self, checkpoint, HyperIMParams, ModelConfig};
use hyperim_ffi::*;

const LABELS: [&str; 4] = ["animal", "cat", "dog", "plant"];

fn params() -> HyperIMParams {
    let vocab = Vocabulary::from_words(["<pad>", "<unk>", "purr", "bark", "leaf", "fur"]);
    let labels = Vocabulary::from_words(LABELS);
    let cfg = ModelConfig {
        seq_len: 4,
        ..ModelConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    HyperIMParams::new(cfg, vocab, labels, vec![(0, 1), (0, 2)], None, None, &mut rng).unwrap()
}

fn cstring(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = hyperim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Loaded {
    model: *mut HyperimModel,
    params: HyperIMParams,
    _dir: tempfile::TempDir,
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe { hyperim_model_free(self.model) };
    }
}

fn load() -> Loaded {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let params = params();
    checkpoint::save(&params, &path).unwrap();
    let mut model = ptr::null_mut();
    let st = unsafe { hyperim_model_load(cstring(&path).as_ptr(), &mut model) };
    assert_eq!(st, HyperimStatus::Ok);
    assert!(hyperim_last_error().is_null());
    Loaded {
        model,
        params,
        _dir: dir,
    }
}

#[test]
fn label_metadata() {
    let m = load();
    let mut n = 0;
    assert_eq!(unsafe { hyperim_model_num_labels(m.model, &mut n) }, HyperimStatus::Ok);
    assert_eq!(n, LABELS.len());
    for (i, want) in LABELS.iter().enumerate() {
        let mut name = ptr::null();
        assert_eq!(
            unsafe { hyperim_model_label_name(m.model, i, &mut name) },
            HyperimStatus::Ok
        );
        assert_eq!(unsafe { CStr::from_ptr(name) }.to_str().unwrap(), *want);
    }
    let mut name = ptr::null();
    assert_eq!(
        unsafe { hyperim_model_label_name(m.model, 9, &mut name) },
        HyperimStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));
}

#[test]
fn scores_match_library_forward() {
    let m = load();
    let text = CString::new("PURR fur unknownword").unwrap();
    let mut probs = [0.0; 4];
    assert_eq!(
        unsafe { hyperim_model_scores(m.model, text.as_ptr(), probs.as_mut_ptr(), 4) },
        HyperimStatus::Ok
    );
    // purr=2, fur=5, unknown=1, padded to 4
    let want = model::forward(&[2, 5, 1, 0], &m.params);
    assert_eq!(probs.to_vec(), want);

    let mut small = [0.0; 2];
    let st = unsafe { hyperim_model_scores(m.model, text.as_ptr(), small.as_mut_ptr(), 2) };
    assert_eq!(st, HyperimStatus::BufferTooSmall);
}

#[test]
fn predict_returns_sorted_top_k() {
    let m = load();
    let text = CString::new("bark leaf").unwrap();
    let mut all = [0.0; 4];
    unsafe { hyperim_model_scores(m.model, text.as_ptr(), all.as_mut_ptr(), 4) };

    let (mut idx, mut p, mut written) = ([usize::MAX; 8], [0.0; 8], 0);
    let st = unsafe {
        hyperim_model_predict(
            m.model,
            text.as_ptr(),
            8,
            idx.as_mut_ptr(),
            p.as_mut_ptr(),
            &mut written,
        )
    };
    assert_eq!(st, HyperimStatus::Ok);
    assert_eq!(written, 4);
    let mut seen = idx[..4].to_vec();
    seen.sort();
    assert_eq!(seen, vec![0, 1, 2, 3]);
    for j in 0..4 {
        assert_eq!(p[j], all[idx[j]]);
    }
    assert!(p[..4].windows(2).all(|w| w[0] >= w[1]));

    let st = unsafe {
        hyperim_model_predict(
            m.model,
            text.as_ptr(),
            2,
            idx.as_mut_ptr(),
            p.as_mut_ptr(),
            &mut written,
        )
    };
    assert_eq!(st, HyperimStatus::Ok);
    assert_eq!(written, 2);
}

#[test]
fn load_failures_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = ptr::null_mut();

    let missing = cstring(&dir.path().join("nope.ckpt"));
    assert_eq!(
        unsafe { hyperim_model_load(missing.as_ptr(), &mut model) },
        HyperimStatus::Io
    );
    assert!(model.is_null());

    let junk = dir.path().join("junk.ckpt");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(
        unsafe { hyperim_model_load(cstring(&junk).as_ptr(), &mut model) },
        HyperimStatus::Checkpoint
    );
    assert!(last_error().starts_with("checkpoint"));

    assert_eq!(
        unsafe { hyperim_model_load(ptr::null(), &mut model) },
        HyperimStatus::NullPointer
    );
    assert_eq!(
        unsafe { hyperim_model_load(missing.as_ptr(), ptr::null_mut()) },
        HyperimStatus::NullPointer
    );
    let mut n = 0;
    assert_eq!(
        unsafe { hyperim_model_num_labels(ptr::null(), &mut n) },
        HyperimStatus::NullPointer
    );
    unsafe { hyperim_model_free(ptr::null_mut()) };
}

#[test]
fn ball_functions_agree_with_library() {
    let u = [0.3, -0.2, 0.1];
    let v = [-0.5, 0.4, 0.2];
    let (bu, bv) = (BallPoint::project(&u).unwrap(), BallPoint::project(&v).unwrap());

    let mut d = 0.0;
    assert_eq!(
        unsafe { hyperim_ball_distance(u.as_ptr(), v.as_ptr(), 3, &mut d) },
        HyperimStatus::Ok
    );
    assert_eq!(d, bu.distance(&bv));

    let mut out = [0.0; 3];
    unsafe { hyperim_ball_mobius_add(u.as_ptr(), v.as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(out, bu.mobius_add(&bv).coords());

    unsafe { hyperim_ball_scalar_mul(-1.5, u.as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(out, bu.scalar_mul(-1.5).coords());

    let mut w = [0.0; 3];
    unsafe { hyperim_ball_log_map(u.as_ptr(), v.as_ptr(), 3, w.as_mut_ptr()) };
    unsafe { hyperim_ball_exp_map(u.as_ptr(), w.as_ptr(), 3, out.as_mut_ptr()) };
    for (a, b) in out.iter().zip(&v) {
        assert!((a - b).abs() < 1e-12);
    }

    let far = [3.0, 4.0, 0.0];
    unsafe { hyperim_ball_project(far.as_ptr(), 3, out.as_mut_ptr()) };
    let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(n <= 1.0 - 1e-5 && n > 1.0 - 2e-5);
}

#[test]
fn ball_functions_reject_bad_input() {
    let nan = [f64::NAN, 0.0];
    let ok = [0.1, 0.1];
    let mut d = 0.0;
    assert_eq!(
        unsafe { hyperim_ball_distance(nan.as_ptr(), ok.as_ptr(), 2, &mut d) },
        HyperimStatus::InvalidArgument
    );
    assert!(last_error().contains("non-finite"));
    assert_eq!(
        unsafe { hyperim_ball_distance(ok.as_ptr(), ok.as_ptr(), 0, &mut d) },
        HyperimStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { hyperim_ball_distance(ok.as_ptr(), ptr::null(), 2, &mut d) },
        HyperimStatus::NullPointer
    );
    let mut out = [0.0; 2];
    let st = unsafe { hyperim_ball_scalar_mul(f64::INFINITY, ok.as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(st, HyperimStatus::InvalidArgument);
    // error state is per call
    assert_eq!(
        unsafe { hyperim_ball_distance(ok.as_ptr(), ok.as_ptr(), 2, &mut d) },
        HyperimStatus::Ok
    );
    assert_eq!(d, 0.0);
    assert!(hyperim_last_error().is_null());
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hyperim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "hyperim_model_load",
        "hyperim_model_predict",
        "hyperim_ball_distance",
        "HYPERIM_STATUS_PANIC",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
