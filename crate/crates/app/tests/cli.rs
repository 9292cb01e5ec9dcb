use std::path::Path;
use std::process::{Command, Output};

use rfscope_core::eval::{Suite, METRICS_CSV, PAES_CSV, REPORT_FILE, TRANSCRIPTS_FILE};
use rfscope_core::vlm::ReplayFixtures;

fn rfscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfscope"))
        .args(args)
        .output()
        .expect("spawn rfscope")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn png_title(path: &Path) -> String {
    let dec = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(path).unwrap()));
    let reader = dec.read_info().unwrap();
    reader.info().utf8_text[0].get_text().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(rfscope(&[]).status.code(), Some(2));
    assert_eq!(rfscope(&["frobnicate"]).status.code(), Some(2));
    let out = rfscope(&["analyze", "--image", "x.png", "--sr", "20", "--backend", "rf-gpt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fc"));
    assert_eq!(rfscope(&["render", "--capture", "a", "--out", "b", "--bogus"]).status.code(), Some(2));
    assert_eq!(rfscope(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfscope(&["render", "--capture", s(&dir.path().join("missing.iq")), "--out", "x.png"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.iq"));
    let out = rfscope(&[
        "evaluate",
        "--suite",
        "builtin",
        "--backends",
        "no-such-backend",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_render_analyze_s1() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s1.toml");
    let capture = dir.path().join("s1.iq");
    let image = dir.path().join("s1.png");
    let mut spec = Suite::builtin().get("S1").unwrap().scene.clone();
    spec.duration_blocks = 60;
    std::fs::write(&scene, spec.to_toml()).unwrap();

    let out = rfscope(&["simulate", "--scene", s(&scene), "--out", s(&capture)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rfscope(&["render", "--capture", s(&capture), "--out", s(&image), "--rows", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let title = png_title(&image);
    assert!(title.contains("806") && title.contains("20"), "{title}");

    let out = rfscope(&["analyze", "--image", s(&image), "--fc", "806", "--sr", "20", "--backend", "qwen-base"]);
    assert!(out.status.success());
    let expect = ReplayFixtures::builtin().get("S1", "qwen-base", 1).unwrap().to_string();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), expect);
}

#[test]
fn evaluate_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = rfscope(&[
        "evaluate",
        "--suite",
        "builtin",
        "--backends",
        "rf-gpt,qwen-base,llama-3.2v",
        "--adjudications",
        "builtin",
        "--out",
        s(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [TRANSCRIPTS_FILE, REPORT_FILE, PAES_CSV, METRICS_CSV, "images/KT_t3.png"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let transcripts = std::fs::read_to_string(run.join(TRANSCRIPTS_FILE)).unwrap();
    assert_eq!(transcripts.lines().count(), 6 * 3 * 3);

    let again = dir.path().join("again");
    let out2 = rfscope(&["report", "--transcripts", s(&run), "--out", s(&again)]);
    assert!(out2.status.success());
    assert_eq!(out.stdout, out2.stdout);
    for f in [REPORT_FILE, PAES_CSV, METRICS_CSV] {
        assert_eq!(std::fs::read(run.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap());
    }
    let paes = std::fs::read_to_string(run.join(PAES_CSV)).unwrap();
    assert!(paes.lines().next().unwrap().contains("scenario"));
}
