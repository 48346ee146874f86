use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ats(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ats"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run ats")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// File body without the leading provenance comment, which must be well formed.
fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let (header, rest) = text.split_once('\n').unwrap();
    let hash = header
        .strip_prefix(&format!("# ats {} config_hash=", env!("CARGO_PKG_VERSION")))
        .unwrap_or_else(|| panic!("bad header {header:?}"));
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    rest.to_string()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

fn forward_args(chain: &Path, curve: &Path) -> Vec<String> {
    vec![
        "forwards".into(),
        "--chain".into(),
        chain.display().to_string(),
        "--curve".into(),
        curve.display().to_string(),
        "--spot".into(),
        "100".into(),
    ]
}

fn run_strings(dir: &Path, args: &[String]) -> Output {
    ats(dir, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn forwards_match_hand_computed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_strings(
        dir.path(),
        &forward_args(&fixture("chain_forward.csv"), &fixture("curve_forward.csv")),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let got = body(&dir.path().join("forwards.csv"));
    assert_eq!(got, fs::read_to_string(fixture("forwards_expected.csv")).unwrap());
}

#[test]
fn empty_chain_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_strings(
        dir.path(),
        &forward_args(&fixture("empty_chain.csv"), &fixture("curve_forward.csv")),
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no quotes"));
}

#[test]
fn missing_curve_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_strings(
        dir.path(),
        &forward_args(&fixture("chain_forward.csv"), &dir.path().join("nope.csv")),
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn invalid_alpha_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = forward_args(&fixture("chain_forward.csv"), &fixture("curve_forward.csv"));
    args[0] = "calibrate".into();
    args.extend(["--alpha".into(), "1.2".into()]);
    let out = run_strings(dir.path(), &args);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let out = ats(dir.path(), &["calibrate", "--bogus"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "chain = {:?}\ncurve = {:?}\nspot = 100.0\n",
            fixture("chain_forward.csv").display().to_string(),
            fixture("curve_forward.csv").display().to_string()
        ),
    )
    .unwrap();
    let out = ats(dir.path(), &["forwards", "--config", "run.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    // the flag wins over the file
    let out = ats(dir.path(), &["forwards", "--config", "run.toml", "--spot", "-1"]);
    assert_eq!(code(&out), 4);

    fs::write(&cfg, "spott = 100.0\n").unwrap();
    assert_eq!(code(&ats(dir.path(), &["forwards", "--config", "run.toml"])), 4);
    assert_eq!(code(&ats(dir.path(), &["forwards", "--config", "absent.toml"])), 3);
}

const GOLDEN_ARGS: [&str; 17] = [
    "price",
    "--alpha",
    "0.5",
    "--expiry",
    "0.5",
    "--sigma",
    "0.2",
    "--k",
    "0.5",
    "--eta",
    "1.0",
    "--forward",
    "100",
    "--discount",
    "0.99",
    "--strikes",
    "70,80,90,95,100,105,110,120,140",
];

#[test]
fn prices_match_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ats(dir.path(), &GOLDEN_ARGS);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let got = body(&dir.path().join("prices.csv"));
    assert_eq!(got.lines().next(), Some("strike,moneyness,call,put,implied_vol"));
    let want = fs::read_to_string(fixture("price_golden.csv")).unwrap();
    let (got, want) = (rows(&got), rows(&want));
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(num(&g[0]), num(&w[0]));
        assert!((num(&g[1]) - num(&w[1])).abs() < 1e-14);
        for i in 2..4 {
            assert!((num(&g[i]) - num(&w[i])).abs() < 1e-9, "{g:?} vs {w:?}");
        }
        assert!((num(&g[4]) - num(&w[4])).abs() < 1e-8, "{g:?} vs {w:?}");
    }
}

#[test]
fn zero_skew_prices_are_symmetric_and_satisfy_parity() {
    let dir = tempfile::tempdir().unwrap();
    let strikes: Vec<String> = (-6..=6)
        .map(|i| format!("{}", 100.0 * (0.05 * i as f64).exp()))
        .collect();
    let strikes = strikes.join(",");
    let out = ats(
        dir.path(),
        &[
            "price",
            "--alpha",
            "0",
            "--expiry",
            "1",
            "--sigma",
            "0.25",
            "--k",
            "0.3",
            "--eta",
            "0",
            "--forward",
            "100",
            "--discount",
            "0.95",
            "--strikes",
            &strikes,
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = rows(&body(&dir.path().join("prices.csv")));
    for (lo, hi) in table.iter().zip(table.iter().rev()) {
        assert!((num(&lo[4]) - num(&hi[4])).abs() < 1e-6, "{lo:?} vs {hi:?}");
    }
    for r in &table {
        let (k, c, p) = (num(&r[0]), num(&r[2]), num(&r[3]));
        assert!((c - p - 0.95 * (100.0 - k)).abs() < 1e-10);
    }
}

#[test]
fn two_slices_are_not_enough_for_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let out = ats(dir.path(), &["synth", "--expiries", "0.25,0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = ats(
        dir.path(),
        &[
            "scaling",
            "--chain",
            "chain.csv",
            "--curve",
            "curve.csv",
            "--spot",
            "1000",
            "--restarts",
            "2",
        ],
    );
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn calibrate_and_scale_a_synthetic_surface() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let expiries = [0.25, 0.5, 1.0, 2.0];
    let list = "0.25,0.5,1,2";
    assert_eq!(code(&ats(d, &["synth", "--expiries", list])), 0);
    let market = ["--chain", "chain.csv", "--curve", "curve.csv", "--spot", "1000"];

    let out = ats(d, &[&["calibrate", "--out", "ats"][..], &market].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cal = json(&d.join("ats/calibration.json"));
    assert_eq!(cal["meta"]["tool"], "ats");
    assert_eq!(cal["meta"]["config_hash"].as_str().unwrap().len(), 64);
    let slices = cal["result"]["slices"].as_array().unwrap();
    assert_eq!(slices.len(), expiries.len());
    for (s, t) in slices.iter().zip(expiries) {
        let p = &s["slice"];
        let (sigma, k, eta) = (num_of(&p["sigma"]), num_of(&p["k"]), num_of(&p["eta"]));
        assert!((sigma / 0.2 - 1.0).abs() < 0.01);
        assert!((k / t - 1.0).abs() < 0.01);
        assert!((eta * t.sqrt() - 1.0).abs() < 0.01);
    }
    assert!(cal["result"]["conditions"]["valid"].as_bool().unwrap());

    let out = ats(
        d,
        &[
            &[
                "calibrate",
                "--out",
                "lts",
                "--family",
                "LTS",
                "--population",
                "15",
                "--generations",
                "40",
            ][..],
            &market,
        ]
        .concat(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lts = json(&d.join("lts/calibration.json"));
    assert!(num_of(&lts["result"]["mse"]) > 100.0 * num_of(&cal["result"]["mse"]));

    for out_dir in ["s1", "s2"] {
        let out = ats(
            d,
            &["scaling", "--calibration", "ats/calibration.json", "--out", out_dir],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let sc = json(&d.join("s1/scaling.json"));
    assert!(num_of(&sc["analysis"]["p_beta"]) > 0.05);
    assert!(num_of(&sc["analysis"]["p_delta"]) > 0.05);
    for f in ["scaling.json", "scaling_k.csv", "scaling_eta.csv", "moments.csv"] {
        assert_eq!(
            fs::read(d.join("s1").join(f)).unwrap(),
            fs::read(d.join("s2").join(f)).unwrap(),
            "{f}"
        );
    }
    let plot = rows(&body(&d.join("s1/scaling_k.csv")));
    assert_eq!(plot.len(), expiries.len());
}

fn num_of(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}
