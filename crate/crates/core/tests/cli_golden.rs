use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radiomap::cli::{exit, EvalReport, StatsReport};
use radiomap::cr::{cr_map_fast, CrParams};
use radiomap::fuse::build_stack;
use radiomap::glcm::{re_map_fast, GlcmParams};
use radiomap::imgio::{encode_mask_pgm, encode_pgm, load_raster, read_image};
use radiomap::metrics::{confusion, summarize};
use radiomap::phantom::{generate, PhantomSpec};
use radiomap::preprocess::prepare;
use radiomap::stability::{load_curve, sdd};
use radiomap::stats::{bonferroni, load_paired, wilcoxon_signed_rank, Alternative};
use radiomap::{BinaryMask, FeatureMap};

fn radiomap(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radiomap"));
    cmd.args(args).env_remove("RADIOMAP_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = radiomap(args, &[]);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn as_f32(map: &FeatureMap) -> Vec<f32> {
    map.values().iter().map(|&v| v as f32).collect()
}

/// Small phantom written to `<dir>/ph.nii` and `<dir>/ph_mask.pgm`.
fn small_phantom(dir: &Path) -> (PathBuf, PathBuf, PhantomSpec) {
    let mut spec = PhantomSpec {
        width: 72,
        height: 64,
        ..PhantomSpec::default()
    };
    spec.lesions.truncate(1);
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let stem = dir.join("ph");
    ok(&[
        "phantom",
        "--spec",
        s(&spec_path),
        "--out",
        s(&stem),
        "--seed",
        "5",
    ]);
    spec.seed = 5;
    (dir.join("ph.nii"), dir.join("ph_mask.pgm"), spec)
}

#[test]
fn phantom_matches_library_and_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (nii, mask, spec) = small_phantom(dir.path());
    let first = (std::fs::read(&nii).unwrap(), std::fs::read(&mask).unwrap());
    small_phantom(dir.path());
    let second = (std::fs::read(&nii).unwrap(), std::fs::read(&mask).unwrap());
    assert_eq!(first, second);

    let (img, m) = generate(&spec).unwrap();
    let back = read_image(&nii, None).unwrap();
    let want: Vec<f64> = img.values().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(back.values(), &want[..]);
    assert_eq!(first.1, encode_mask_pgm(&m));
}

#[test]
fn features_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let (nii, _, _) = small_phantom(dir.path());
    let stem = dir.path().join("maps");
    let stdout = ok(&[
        "features",
        "--in",
        s(&nii),
        "--cr",
        "--re",
        "--out",
        s(&stem),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["channels"], serde_json::json!(["cr", "re"]));
    assert!(dir.path().join("maps.bin").exists());
    assert!(dir.path().join("maps.json").exists());

    let q = prepare(&read_image(&nii, None).unwrap());
    let raster = load_raster(&stem).unwrap();
    assert_eq!(
        raster.channel("cr").unwrap().data,
        as_f32(&cr_map_fast(&q, &CrParams::default()).unwrap())
    );
    assert_eq!(
        raster.channel("re").unwrap().data,
        as_f32(&re_map_fast(&q, &GlcmParams::default()).unwrap())
    );
}

#[test]
fn config_then_flags_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<u16> = (0..30 * 20).map(|i| ((i * 7919) % 256) as u16).collect();
    let pgm = dir.path().join("slice.pgm");
    std::fs::write(&pgm, encode_pgm(30, 20, 255, &samples).unwrap()).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"cr":{"count":10,"exclude":3},"re":{"radius":2,"alpha":2}}"#,
    )
    .unwrap();
    let stem = dir.path().join("out");
    ok(&[
        "--config",
        s(&cfg),
        "features",
        "--in",
        s(&pgm),
        "--cr",
        "--re",
        "--count",
        "12",
        "--out",
        s(&stem),
    ]);

    let q = prepare(&read_image(&pgm, None).unwrap());
    let cr = CrParams {
        count: 12,
        exclude: 3,
        ..CrParams::default()
    };
    let re = GlcmParams {
        radius: 2,
        alpha: 2.0,
        ..GlcmParams::default()
    };
    let raster = load_raster(&stem).unwrap();
    assert_eq!(
        raster.channel("cr").unwrap().data,
        as_f32(&cr_map_fast(&q, &cr).unwrap())
    );
    assert_eq!(
        raster.channel("re").unwrap().data,
        as_f32(&re_map_fast(&q, &re).unwrap())
    );
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (nii, _, _) = small_phantom(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let stem = dir.path().join(format!("t{threads}"));
        let out = radiomap(
            &["features", "--in", s(&nii), "--out", s(&stem)],
            &[("RADIOMAP_THREADS", threads)],
        );
        assert!(out.status.success());
        outputs.push(std::fs::read(dir.path().join(format!("t{threads}.bin"))).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = radiomap(
        &[
            "features",
            "--in",
            s(&nii),
            "--out",
            s(&dir.path().join("x")),
        ],
        &[("RADIOMAP_THREADS", "zero")],
    );
    assert_eq!(bad.status.code(), Some(exit::CONFIG));
}

#[test]
fn fuse_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (nii, _, _) = small_phantom(dir.path());
    let maps = dir.path().join("maps");
    ok(&["features", "--in", s(&nii), "--cr", "--out", s(&maps)]);
    let stack_stem = dir.path().join("stack");
    let doc: serde_json::Value = serde_json::from_str(&ok(&[
        "fuse",
        "--raw",
        s(&nii),
        "--maps",
        s(&maps),
        "--out",
        s(&stack_stem),
    ]))
    .unwrap();
    assert_eq!(doc["channels"], serde_json::json!(["flair", "cr"]));

    let raw = read_image(&nii, None).unwrap();
    let loaded = load_raster(&maps).unwrap().to_feature_maps();
    let refs: Vec<(&str, &FeatureMap)> = loaded.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let stack = build_stack(&raw, &refs, true).unwrap();
    let got = load_raster(&stack_stem).unwrap();
    for (name, map) in stack.channels() {
        assert_eq!(got.channel(name).unwrap().data, as_f32(map), "{name}");
    }

    // the raw channel name is reserved
    let dup = radiomap(
        &[
            "fuse",
            "--raw",
            s(&nii),
            "--maps",
            s(&stack_stem),
            "--out",
            s(&dir.path().join("d")),
        ],
        &[],
    );
    assert_eq!(dup.status.code(), Some(exit::DATA));
}

fn write_mask(path: &Path, bits: &[bool], w: usize) {
    let m = BinaryMask::new(w, bits.len() / w, bits.to_vec()).unwrap();
    std::fs::write(path, encode_mask_pgm(&m)).unwrap();
}

#[test]
fn eval_identity_and_directories() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.pgm");
    write_mask(&p, &[true, false, true, true, false, false], 3);
    let report: EvalReport =
        serde_json::from_str(&ok(&["eval", "--pred", s(&p), "--gt", s(&p)])).unwrap();
    assert_eq!(report.n, 1);
    assert_eq!(report.summary.dice.mean, 1.0);
    assert_eq!(report.summary.precision.mean, 1.0);
    assert_eq!(report.summary.sensitivity.mean, 1.0);

    let (pd, gd) = (dir.path().join("pred"), dir.path().join("gt"));
    std::fs::create_dir_all(&pd).unwrap();
    std::fs::create_dir_all(&gd).unwrap();
    let cases: [(&str, [bool; 4], [bool; 4]); 3] = [
        (
            "a.pgm",
            [true, true, false, false],
            [true, false, false, false],
        ),
        (
            "b.pgm",
            [false, false, false, true],
            [true, false, false, true],
        ),
        (
            "c.pgm",
            [true, true, true, true],
            [false, false, true, true],
        ),
    ];
    let mut scores = Vec::new();
    for (name, pred, gt) in &cases {
        write_mask(&pd.join(name), pred, 2);
        write_mask(&gd.join(name), gt, 2);
        let c = confusion(
            &BinaryMask::new(2, 2, pred.to_vec()).unwrap(),
            &BinaryMask::new(2, 2, gt.to_vec()).unwrap(),
        )
        .unwrap();
        scores.push(c.scores());
    }
    let csv = dir.path().join("rows.csv");
    let json = dir.path().join("agg.json");
    let stdout = ok(&[
        "eval",
        "--pred-dir",
        s(&pd),
        "--gt-dir",
        s(&gd),
        "--csv",
        s(&csv),
        "--json",
        s(&json),
    ]);
    let report: EvalReport = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report.summary, summarize(&scores).unwrap());
    let from_file: EvalReport = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(from_file, report);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        rows.lines().next().unwrap(),
        "name,tp,fp,fn,tn,dice,precision,sensitivity"
    );
    assert_eq!(rows.lines().count(), 4);

    std::fs::copy(pd.join("a.pgm"), pd.join("extra.pgm")).unwrap();
    let out = radiomap(&["eval", "--pred-dir", s(&pd), "--gt-dir", s(&gd)], &[]);
    assert_eq!(out.status.code(), Some(exit::DATA));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "unpaired");
}

#[test]
fn curve_prints_library_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    std::fs::write(&path, "epoch,score\n1,0.0\n2,0.4\n3,0.2\n4,0.6\n").unwrap();
    let printed: f64 = ok(&["curve", "--in", s(&path)]).trim().parse().unwrap();
    let want = sdd(&load_curve(&std::fs::read_to_string(&path).unwrap()).unwrap());
    assert_eq!(printed, want);
    assert!((printed - 0.282843).abs() < 1e-6);
    let doc: serde_json::Value =
        serde_json::from_str(&ok(&["curve", "--in", s(&path), "--json"])).unwrap();
    assert_eq!(doc["sdd"].as_f64().unwrap(), want);
    assert_eq!(doc["n"], 4);
}

#[test]
fn stats_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paired.csv");
    std::fs::write(
        &path,
        "baseline,treatment\n0.66,0.70\n0.71,0.72\n0.62,0.69\n0.70,0.69\n0.65,0.71\n0.73,0.74\n",
    )
    .unwrap();
    let report: StatsReport =
        serde_json::from_str(&ok(&["stats", "--in", s(&path), "--comparisons", "3"])).unwrap();
    let samples = load_paired(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let r = wilcoxon_signed_rank(&samples, Alternative::TwoSided);
    assert_eq!(report.schema_version, 1);
    assert_eq!(
        (report.n, report.w_plus, report.w_minus),
        (r.n, r.w_plus, r.w_minus)
    );
    assert_eq!(report.pvalue, r.pvalue);
    assert_eq!(
        report.pvalue_adjusted,
        bonferroni(&[r.pvalue], 3).unwrap()[0]
    );

    let g: StatsReport = serde_json::from_str(&ok(&[
        "stats",
        "--in",
        s(&path),
        "--alternative",
        "greater",
    ]))
    .unwrap();
    assert_eq!(
        g.pvalue,
        wilcoxon_signed_rank(&samples, Alternative::Greater).pvalue
    );
}

#[test]
fn failures_use_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(radiomap(&["nope"], &[]).status.code(), Some(exit::USAGE));
    assert_eq!(
        radiomap(&["curve", "--in", "/no/such/file.csv"], &[])
            .status
            .code(),
        Some(exit::IO)
    );
    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P2\n1 1\n255\n0").unwrap();
    let out = radiomap(
        &[
            "features",
            "--in",
            s(&junk),
            "--out",
            s(&dir.path().join("o")),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(exit::DATA));
    let line: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"]["code"], exit::DATA);
    let bad = radiomap(
        &[
            "features",
            "--in",
            s(&junk),
            "--count",
            "0",
            "--out",
            s(&dir.path().join("o")),
        ],
        &[],
    );
    assert_eq!(bad.status.code(), Some(exit::CONFIG));
}
