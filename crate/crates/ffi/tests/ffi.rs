use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use harvest_core::geometry::Point3;
use harvest_core::synth::{render_frame, vga_intrinsics, FruitSpec, SceneSpec};
use harvest_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = hv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scene(dir: &Path) -> PathBuf {
    let mut spec = SceneSpec::new(vga_intrinsics());
    spec.fruits.push(FruitSpec { id: 1, center: Point3::new(-0.06, 0.0, 0.40), radius: 0.04 });
    spec.fruits.push(FruitSpec { id: 2, center: Point3::new(0.07, 0.01, 0.42), radius: 0.035 });
    let frame = dir.join("frame");
    render_frame(&spec, 1, &frame).unwrap();
    frame
}

#[test]
fn process_frame_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let frame = scene(tmp.path());
    let out = tmp.path().join("out");
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(hv_config_default(&mut cfg), HvStatus::Ok);
        let mut list = ptr::null_mut();
        let st = hv_process_frame(cfg, cstr(&frame).as_ptr(), cstr(&out).as_ptr(), &mut list);
        assert_eq!(st, HvStatus::Ok);
        assert_eq!(hv_pick_list_len(list), 2);
        assert_eq!(hv_pick_list_rejected_len(list), 0);

        let mut first = HvFruit::default();
        assert_eq!(hv_pick_list_get(list, 0, &mut first), HvStatus::Ok);
        assert!(first.has_pose && first.can_pick);
        assert!(first.radius_m > 0.03 && first.radius_m < 0.05);
        let mut m = [0.0; 9];
        hv_rotation_matrix(first.theta_rad, first.phi_rad, m.as_mut_ptr());
        assert_eq!(m, first.r_pose);
        // the pose's first column is the approach direction with its
        // vertical component mirrored
        assert_eq!([m[0], m[3], -m[6]], first.approach_dir);

        let mut missing = HvFruit::default();
        assert_eq!(hv_pick_list_get(list, 2, &mut missing), HvStatus::OutOfRange);
        assert!(last_error().contains("out of range"));

        let mut json = ptr::null_mut();
        assert_eq!(hv_pick_list_to_json(list, &mut json), HvStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        hv_string_free(json);
        assert_eq!(text, std::fs::read_to_string(out.join("pick_list.json")).unwrap());

        hv_pick_list_free(list);
        hv_config_free(cfg);
    }
}

#[test]
fn errors_name_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let frame = scene(tmp.path());
    std::fs::remove_file(frame.join("intrinsics.json")).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        hv_config_default(&mut cfg);
        let mut list = ptr::null_mut();
        let st = hv_process_frame(cfg, cstr(&frame).as_ptr(), ptr::null(), &mut list);
        assert_eq!(st, HvStatus::Io);
        assert!(list.is_null());
        assert!(last_error().contains("intrinsics.json"));
        hv_config_free(cfg);
    }
}

#[test]
fn null_and_bad_arguments() {
    unsafe {
        assert_eq!(hv_config_default(ptr::null_mut()), HvStatus::NullArgument);
        let mut list = ptr::null_mut();
        let dir = CString::new(".").unwrap();
        assert_eq!(hv_process_frame(ptr::null(), dir.as_ptr(), ptr::null(), &mut list), HvStatus::NullArgument);
        assert_eq!(hv_pick_list_len(ptr::null()), 0);
        hv_pick_list_free(ptr::null_mut());
        hv_config_free(ptr::null_mut());
        hv_string_free(ptr::null_mut());

        let tmp = tempfile::tempdir().unwrap();
        let bad = tmp.path().join("bad.toml");
        std::fs::write(&bad, "tau = 7\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(hv_config_load(cstr(&bad).as_ptr(), &mut cfg), HvStatus::Format);
        assert!(last_error().contains("bad.toml"));

        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(hv_config_load(invalid.as_ptr().cast(), &mut cfg), HvStatus::InvalidUtf8);
    }
}

#[test]
fn config_load_and_toggle() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.toml");
    std::fs::write(&path, "tau = 0.7\n").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(hv_config_load(cstr(&path).as_ptr(), &mut cfg), HvStatus::Ok);
        assert_eq!(hv_config_set_verify(cfg, false), HvStatus::Ok);
        hv_config_free(cfg);
    }
}

#[test]
fn scalar_helpers() {
    assert_eq!(hv_confidence_from_penalty(0.0), 1.0);
    assert!((hv_confidence_from_penalty(1.0) - 2.0 / (1.0 + 1f64.exp())).abs() < 1e-15);
    let v = unsafe { CStr::from_ptr(hv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let mut m = [0.0; 9];
    assert_eq!(unsafe { hv_rotation_matrix(0.0, 0.0, m.as_mut_ptr()) }, HvStatus::Ok);
    assert_eq!(m, [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn synth_render_writes_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("scene.json");
    let mut spec = SceneSpec::new(vga_intrinsics());
    spec.fruits.push(FruitSpec { id: 3, center: Point3::new(0.0, 0.0, 0.5), radius: 0.04 });
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = tmp.path().join("f");
    let st = unsafe { hv_synth_render(cstr(&spec_path).as_ptr(), 5, cstr(&out).as_ptr()) };
    assert_eq!(st, HvStatus::Ok);
    for f in ["depth.png", "fruit_mask.png", "semantic_mask.png", "intrinsics.json", "ground_truth.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/harvest.h")).unwrap()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    for sym in [
        "HvStatus",
        "HV_STATUS_OK",
        "HV_STATUS_PANIC",
        "typedef struct HvConfig HvConfig",
        "typedef struct HvPickList HvPickList",
        "HvFruit",
        "hv_last_error_message",
        "hv_version",
        "hv_config_default",
        "hv_config_load",
        "hv_config_set_verify",
        "hv_config_free",
        "hv_process_frame",
        "hv_pick_list_len",
        "hv_pick_list_rejected_len",
        "hv_pick_list_get",
        "hv_pick_list_to_json",
        "hv_pick_list_free",
        "hv_string_free",
        "hv_rotation_matrix",
        "hv_confidence_from_penalty",
        "hv_synth_render",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"harvest.h\"\n\
         int main(void) {\n\
           HvConfig *cfg = 0;\n\
           HvFruit f;\n\
           double m[9];\n\
           if (hv_config_default(&cfg) != HV_STATUS_OK) return 1;\n\
           hv_rotation_matrix(0.1, 0.2, m);\n\
           (void)f;\n\
           hv_config_free(cfg);\n\
           return hv_confidence_from_penalty(0.0) == 1.0 ? 0 : 2;\n\
         }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_and_runs() {
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap().to_path_buf();
    if !lib_dir.join("libharvest_ffi.so").is_file() {
        eprintln!("shared library not built in {}; skipping", lib_dir.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("run.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "harvest.h"
int main(void) {
  HvConfig *cfg = NULL;
  HvPickList *list = NULL;
  if (hv_config_default(&cfg) != HV_STATUS_OK) return 1;
  if (hv_process_frame(cfg, "/nonexistent/frame", NULL, &list) != HV_STATUS_IO) return 2;
  if (strstr(hv_last_error_message(), "/nonexistent/frame/") == NULL) return 3;
  double m[9];
  hv_rotation_matrix(1.5707963267948966, 0.0, m);
  if (m[3] < 0.999999) return 4;
  hv_config_free(cfg);
  puts("ok");
  return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("run");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let Ok(cc) = Command::new("cc")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lharvest_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&bin)
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
