use std::path::Path;
use std::process::{Command, Output};

use chantrunc::fcmt::{read_tensor_sequence, write_tensor_sequence};
use chantrunc::{FeatureTensor, FeatureTensorSequence, Shape};
use tempfile::TempDir;

fn chantrunc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chantrunc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn field<'a>(text: &'a str, key: &str) -> Vec<&'a str> {
    let prefix = format!("{key}=");
    text.split_whitespace()
        .filter_map(|tok| tok.strip_prefix(prefix.as_str()))
        .collect()
}

fn write_fcmt(path: &Path, frames: Vec<FeatureTensor<f32>>) {
    let seq = FeatureTensorSequence::new(frames).unwrap();
    std::fs::write(path, write_tensor_sequence(&seq).unwrap()).unwrap();
}

fn small_synth(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    small_synth_active(dir, name, "25", extra)
}

fn small_synth_active(dir: &TempDir, name: &str, active: &str, extra: &[&str]) -> String {
    let out = p(dir, name);
    let mut args = vec![
        "synth",
        &out,
        "--channels",
        "40",
        "--active",
        active,
        "--height",
        "6",
    ];
    args.extend_from_slice(&["--width", "6", "--frames", "5"]);
    args.extend_from_slice(extra);
    let o = chantrunc(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = small_synth(&dir, "a.fcmt", &["--seed", "9"]);
    let b = small_synth(&dir, "b.fcmt", &["--seed", "9"]);
    let c = small_synth(&dir, "c.fcmt", &["--seed", "10"]);
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn encode_defaults_on_the_desk_corpus_shape() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "in.fcmt");
    let o = chantrunc(&["synth", &input, "--frames", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = chantrunc(&["encode", &input, &p(&dir, "out.fctb")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(field(&text, "alpha"), ["2/3"]);
    assert_eq!(field(&text, "refresh"), ["128"]);
    assert_eq!(field(&text, "active_count"), ["200"]);
    assert_eq!(field(&text, "truncation_enabled"), ["1"]);
    assert_eq!(field(&text, "layout_cols"), ["15"]);
    assert_eq!(field(&text, "layout_rows"), ["14"]);
    assert_eq!(field(&text, "frame_width"), ["480"]);
    assert_eq!(field(&text, "frame_height"), ["448"]);
}

#[test]
fn analyze_reports_the_cutoff() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "in.fcmt");
    // 200 channels of range 1.0, 120 of range 0.1
    let shape = Shape::new(320, 2, 2).unwrap();
    let t = FeatureTensor::from_fn(shape, |c, y, x| {
        let amp = if c < 200 { 1.0 } else { 0.1 };
        if (y + x) % 2 == 0 {
            amp
        } else {
            0.0
        }
    })
    .unwrap();
    write_fcmt(Path::new(&input), vec![t]);

    let o = chantrunc(&["analyze", &input]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(field(&text, "active_count"), ["200"]);
    assert_eq!(field(&text, "inactive_count"), ["120"]);
    let actives = field(&text, "active");
    assert_eq!(actives.len(), 320);
    assert!(actives[..200].iter().all(|&a| a == "1"));
    assert!(actives[200..].iter().all(|&a| a == "0"));
    // identical input, identical report
    assert_eq!(stdout(&chantrunc(&["analyze", &input])), text);
}

#[test]
fn analyze_constant_tensor_keeps_every_channel() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "flat.fcmt");
    write_fcmt(
        Path::new(&input),
        vec![FeatureTensor::filled(Shape::new(6, 3, 3).unwrap(), 1.5).unwrap()],
    );
    let o = chantrunc(&["analyze", &input]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(field(&text, "threshold"), ["0"]);
    assert_eq!(field(&text, "active_count"), ["6"]);
}

#[test]
fn encode_decode_round_trip_keeps_shape() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir, "in.fcmt", &[]);
    let stream = p(&dir, "s.fctb");
    let output = p(&dir, "out.fcmt");
    for codec in [["--codec", "raw"], ["--codec", "qrle"]] {
        let mut args = vec!["encode", &input, &stream];
        args.extend_from_slice(&codec);
        let o = chantrunc(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = chantrunc(&["decode", &stream, &output]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "frames=5 channels=40 height=6 width=6");
        let back = read_tensor_sequence(&std::fs::read(&output).unwrap()).unwrap();
        let orig = read_tensor_sequence(&std::fs::read(&input).unwrap()).unwrap();
        assert_eq!(back.shape(), orig.shape());
        assert_eq!(back.len(), orig.len());
    }
}

#[test]
fn all_active_input_disables_truncation() {
    let dir = TempDir::new().unwrap();
    let input = small_synth_active(&dir, "in.fcmt", "40", &[]);
    let on = p(&dir, "on.fctb");
    let off = p(&dir, "off.fctb");
    let o = chantrunc(&["encode", &input, &on]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "truncation_enabled"), ["0"]);
    let o = chantrunc(&["encode", &input, &off, "--no-truncation"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(on).unwrap(), std::fs::read(off).unwrap());
}

#[test]
fn ladder_writes_curve_and_manifest() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir, "in.fcmt", &[]);
    let curve = p(&dir, "curve.csv");
    let manifest = p(&dir, "run.json");
    let o = chantrunc(&[
        "encode",
        &input,
        &p(&dir, "s.fctb"),
        "--ladder",
        "2,4,8,16",
        "--curve-out",
        &curve,
        "--manifest",
        &manifest,
        "--fps",
        "30",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("rate_point "))
            .count(),
        4
    );
    assert_eq!(field(&text, "bits_per_second").len(), 1);
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert!(csv.starts_with("rate,accuracy\n"));
    assert_eq!(csv.lines().count(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["alpha"], "2/3");
    assert_eq!(json["rate_points"].as_array().unwrap().len(), 4);

    // the same curve against itself
    let o = chantrunc(&["bdrate", "--anchor", &curve, "--test", &curve]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "bd_rate_percent=0.000000");
}

#[test]
fn bdrate_of_a_scaled_curve() {
    let dir = TempDir::new().unwrap();
    let anchor = p(&dir, "a.csv");
    let test = p(&dir, "t.csv");
    std::fs::write(&anchor, "rate,accuracy\n100,1\n200,2\n400,3\n800,4\n").unwrap();
    std::fs::write(&test, "rate,accuracy\n90,1\n180,2\n360,3\n720,4\n").unwrap();
    let o = chantrunc(&["bdrate", "--anchor", &anchor, "--test", &test]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "bd_rate_percent=-10.000000");
}

#[test]
fn usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir, "in.fcmt", &[]);
    let out = p(&dir, "s.fctb");
    for args in [
        vec!["encode", &input, &out, "--alpha", "3/2"],
        vec!["encode", &input, &out, "--q", "3"],
        vec!["encode", &input, &out, "--refresh", "0"],
        vec!["frobnicate"],
        vec!["synth", &out, "--channels", "10", "--active", "11"],
    ] {
        let o = chantrunc(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(
            stderr(&o).starts_with("error kind=usage message=\""),
            "{}",
            stderr(&o)
        );
        assert!(o.stdout.is_empty());
    }
    assert_eq!(chantrunc(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bogus = p(&dir, "bogus.fctb");
    std::fs::write(&bogus, b"NOPE and more bytes here").unwrap();
    let o = chantrunc(&["decode", &bogus, &p(&dir, "x.fcmt")]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error kind="), "{err}");
    assert!(err.contains("at byte 0"), "{err}");
    assert_eq!(err.lines().count(), 1);

    let o = chantrunc(&["analyze", &p(&dir, "missing.fcmt")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=io "));

    let input = small_synth(&dir, "in.fcmt", &[]);
    let stream = p(&dir, "s.fctb");
    assert!(chantrunc(&["encode", &input, &stream]).status.success());
    let mut bytes = std::fs::read(&stream).unwrap();
    bytes.truncate(bytes.len() - 1);
    std::fs::write(&stream, bytes).unwrap();
    let o = chantrunc(&["decode", &stream, &p(&dir, "x.fcmt")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).starts_with("error kind=truncated "),
        "{}",
        stderr(&o)
    );
}
