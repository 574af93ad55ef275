//! Exercises the C interface through the Rust library target and through a
//! C program compiled against the generated header.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use continual_dp::diff::{diff_release, Adjacency, ReleaseConfig};
use continual_dp::funcs::GraphFunction;
use continual_dp::graph::GraphSequence;
use continual_dp::noise::RandomSource;
use continual_dp_ffi::*;

const TRIANGLE_LOG: &str = "# max_weight=1\nt=0 +v:0,1,2\nt=1 +e:0-1:1\nt=2 +e:1-2:1\nt=3 +e:0-2:1\n";

fn function(name: &CStr) -> CdpFunction {
    CdpFunction {
        name: name.as_ptr(),
        tau: 2,
        k: 2,
        source: 0,
        sink: 1,
    }
}

fn params(name: &CStr, seed: u64) -> CdpReleaseParams {
    CdpReleaseParams {
        mechanism: CdpMechanism::DiffRelease,
        function: function(name),
        adjacency: CdpAdjacency::Edge,
        epsilon: 1.0,
        delta: 0.05,
        beta: 0.5,
        range: 0.0,
        max_degree: 0,
        seed,
        noise_off: false,
    }
}

fn parse(log: &str) -> *mut CdpSequence {
    let text = CString::new(log).unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { cdp_sequence_from_log(text.as_ptr(), &mut seq) }, CdpStatus::Ok);
    seq
}

fn last_error() -> String {
    let p = cdp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn triangle_log_values() {
    let seq = parse(TRIANGLE_LOG);
    let mut len = 0;
    assert_eq!(unsafe { cdp_sequence_len(seq, &mut len) }, CdpStatus::Ok);
    assert_eq!(len, 3);
    let tri = CString::new("triangle_count").unwrap();
    let edges = CString::new("edge_count").unwrap();
    let mut v = -1.0;
    for (t, want_edges, want_tri) in [(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 2.0, 0.0), (3, 3.0, 1.0)] {
        assert_eq!(unsafe { cdp_eval(seq, &function(&edges), t, &mut v) }, CdpStatus::Ok);
        assert_eq!(v, want_edges);
        assert_eq!(unsafe { cdp_eval(seq, &function(&tri), t, &mut v) }, CdpStatus::Ok);
        assert_eq!(v, want_tri);
    }
    assert_eq!(unsafe { cdp_eval(seq, &function(&tri), 4, &mut v) }, CdpStatus::OutOfRange);
    unsafe { cdp_sequence_free(seq) };
}

#[test]
fn log_round_trip_through_handles() {
    let seq = parse(TRIANGLE_LOG);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { cdp_sequence_to_log(seq, &mut text) }, CdpStatus::Ok);
    let log = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    unsafe { cdp_string_free(text) };
    assert_eq!(
        GraphSequence::from_log(&log).unwrap(),
        GraphSequence::from_log(TRIANGLE_LOG).unwrap()
    );
    unsafe { cdp_sequence_free(seq) };
}

#[test]
fn release_matches_library_for_same_seed() {
    let seq = parse(TRIANGLE_LOG);
    let name = CString::new("edge_count").unwrap();
    let mut rel = ptr::null_mut();
    assert_eq!(unsafe { cdp_release(seq, &params(&name, 17), &mut rel) }, CdpStatus::Ok);

    let direct = diff_release(
        &GraphSequence::from_log(TRIANGLE_LOG).unwrap(),
        &ReleaseConfig {
            function: GraphFunction::EdgeCount,
            adjacency: Adjacency::Edge,
            epsilon: 1.0,
            delta: 0.05,
            max_degree: None,
        },
        &RandomSource::from_seed(17),
    )
    .unwrap();

    let mut len = 0;
    assert_eq!(unsafe { cdp_release_len(rel, &mut len) }, CdpStatus::Ok);
    assert_eq!(len, direct.steps.len());
    for (i, step) in direct.steps.iter().enumerate() {
        let (mut out, mut truth) = (0.0, 0.0);
        assert_eq!(unsafe { cdp_release_value(rel, i + 1, &mut out, &mut truth) }, CdpStatus::Ok);
        assert_eq!(out, step.released[0]);
        assert_eq!(truth, step.truth[0]);
    }
    let mut bound = 0.0;
    assert_eq!(unsafe { cdp_release_bound(rel, &mut bound) }, CdpStatus::Ok);
    assert_eq!(bound, direct.bound);
    assert_eq!(unsafe { cdp_release_value(rel, 0, ptr::null_mut(), ptr::null_mut()) }, CdpStatus::OutOfRange);
    unsafe {
        cdp_release_free(rel);
        cdp_sequence_free(seq);
    }
}

#[test]
fn noise_off_monotone_release_is_a_power_of_the_slack() {
    let seq = parse(TRIANGLE_LOG);
    let name = CString::new("max_cardinality_matching").unwrap();
    let mut p = params(&name, 1);
    p.mechanism = CdpMechanism::Monotone;
    p.beta = 1.0;
    p.noise_off = true;
    let mut rel = ptr::null_mut();
    assert_eq!(unsafe { cdp_release(seq, &p, &mut rel) }, CdpStatus::Ok);
    for t in 1..=3 {
        let (mut out, mut truth) = (0.0, 0.0);
        assert_eq!(unsafe { cdp_release_value(rel, t, &mut out, &mut truth) }, CdpStatus::Ok);
        // Matching size 1 at every step: smallest power of two above it is 2.
        assert_eq!((truth, out), (1.0, 2.0));
    }
    unsafe {
        cdp_release_free(rel);
        cdp_sequence_free(seq);
    }
}

#[test]
fn generated_sequence_has_one_step_per_bit() {
    let target = CString::new("edges-edge").unwrap();
    let sigma = CString::new("1011").unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(
        unsafe { cdp_sequence_generate(target.as_ptr(), sigma.as_ptr(), 1, &mut seq) },
        CdpStatus::Ok
    );
    let mut len = 0;
    assert_eq!(unsafe { cdp_sequence_len(seq, &mut len) }, CdpStatus::Ok);
    assert_eq!(len, 4);
    unsafe { cdp_sequence_free(seq) };

    let bad = CString::new("10x").unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(
        unsafe { cdp_sequence_generate(target.as_ptr(), bad.as_ptr(), 1, &mut seq) },
        CdpStatus::InvalidArgument
    );
    assert!(seq.is_null());
}

#[test]
fn sensitivity_bound_cells() {
    let edges = CString::new("edge_count").unwrap();
    let mst = CString::new("mst_weight").unwrap();
    let mut v = 0.0;
    let f = function(&edges);
    let s = unsafe { cdp_sensitivity_bound(&f, CdpAdjacency::Edge, CdpRegime::Incremental, 0, 1, &mut v) };
    assert_eq!((s, v), (CdpStatus::Ok, 1.0));
    let s = unsafe { cdp_sensitivity_bound(&f, CdpAdjacency::Edge, CdpRegime::FullyDynamic, 0, 1, &mut v) };
    assert_eq!((s, v), (CdpStatus::Ok, 2.0));
    let f = function(&mst);
    let s = unsafe { cdp_sensitivity_bound(&f, CdpAdjacency::Edge, CdpRegime::Incremental, 0, 3, &mut v) };
    assert_eq!((s, v), (CdpStatus::Ok, 4.0));
    let s = unsafe { cdp_sensitivity_bound(&f, CdpAdjacency::Edge, CdpRegime::FullyDynamic, 0, 3, &mut v) };
    assert_eq!((s, v), (CdpStatus::Ok, f64::INFINITY));
}

#[test]
fn errors_set_status_and_message() {
    let mut seq = ptr::null_mut();
    let broken = CString::new("t=0 +v:0\nt=1 +e:0-5:1\n").unwrap();
    assert_eq!(
        unsafe { cdp_sequence_from_log(broken.as_ptr(), &mut seq) },
        CdpStatus::InvalidSequence
    );
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { cdp_sequence_from_log(ptr::null(), &mut seq) }, CdpStatus::NullPointer);

    let seq = parse(TRIANGLE_LOG);
    let unknown = CString::new("no_such_statistic").unwrap();
    let mut v = 0.0;
    assert_eq!(unsafe { cdp_eval(seq, &function(&unknown), 1, &mut v) }, CdpStatus::InvalidArgument);
    assert!(last_error().contains("no_such_statistic"));

    let cut = CString::new("min_cut").unwrap();
    let mut rel = ptr::null_mut();
    assert_eq!(unsafe { cdp_release(seq, &params(&cut, 1), &mut rel) }, CdpStatus::Unsupported);
    assert!(rel.is_null());
    let hist = CString::new("degree_histogram").unwrap();
    assert_eq!(unsafe { cdp_release(seq, &params(&hist, 1), &mut rel) }, CdpStatus::Unsupported);
    unsafe {
        cdp_sequence_free(seq);
        cdp_sequence_free(ptr::null_mut());
        cdp_release_free(ptr::null_mut());
        cdp_string_free(ptr::null_mut());
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/continual_dp.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cdp_last_error",
        "cdp_sequence_from_log",
        "cdp_sequence_generate",
        "cdp_sequence_free",
        "cdp_sequence_len",
        "cdp_sequence_to_log",
        "cdp_string_free",
        "cdp_eval",
        "cdp_sensitivity_bound",
        "cdp_release",
        "cdp_release_len",
        "cdp_release_value",
        "cdp_release_bound",
        "cdp_release_free",
        "typedef struct CdpSequence CdpSequence",
        "typedef struct CdpRelease CdpRelease",
        "CDP_STATUS_UNSUPPORTED = 4",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r##"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "continual_dp.h"

int main(void) {
    const char *log = "# max_weight=1\nt=0 +v:0,1,2\nt=1 +e:0-1:1\nt=2 +e:1-2:1\nt=3 +e:0-2:1\n";
    CdpSequence *seq = NULL;
    if (cdp_sequence_from_log(log, &seq) != CDP_STATUS_OK) return 10;
    CdpFunction f = { "triangle_count", 2, 2, 0, 1 };
    double v = -1.0;
    if (cdp_eval(seq, &f, 3, &v) != CDP_STATUS_OK || v != 1.0) return 11;

    CdpReleaseParams p;
    memset(&p, 0, sizeof p);
    p.mechanism = CDP_MECHANISM_DIFF_RELEASE;
    p.function.name = "edge_count";
    p.adjacency = CDP_ADJACENCY_EDGE;
    p.epsilon = 1.0;
    p.delta = 0.05;
    p.seed = 5;
    p.noise_off = true;
    CdpRelease *rel = NULL;
    if (cdp_release(seq, &p, &rel) != CDP_STATUS_OK) return 12;
    for (size_t t = 1; t <= 3; t++) {
        double out, truth;
        if (cdp_release_value(rel, t, &out, &truth) != CDP_STATUS_OK) return 13;
        if (out != truth || truth != (double)t) return 14;
    }
    cdp_release_free(rel);

    f.name = "no_such_statistic";
    if (cdp_eval(seq, &f, 1, &v) != CDP_STATUS_INVALID_ARGUMENT) return 15;
    if (cdp_last_error() == NULL) return 16;
    cdp_sequence_free(seq);
    printf("ok\n");
    return 0;
}
"##;

#[test]
fn c_program_links_against_shared_library() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    // Test binaries live in <target>/<profile>/deps; the library sits one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(
        lib_dir.join("libcontinual_dp_ffi.so").exists() || lib_dir.join("libcontinual_dp_ffi.dylib").exists(),
        "shared library missing from {}",
        lib_dir.display()
    );
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("capi");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    let bin = work.join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lcontinual_dp_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "C program failed: {out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
