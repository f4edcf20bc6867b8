use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use mcf_core::io::{read_image_csv, read_vector_csv, write_image_csv};
use mcf_core::rng::derive_seed;
use mcf_core::{
    fermat_spiral_layout, make_sketches, ImageGrid, Optics, SensingOp, SketchDistribution,
};
use ndarray::Array2;
use tempfile::TempDir;

fn mcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn spike_image(dir: &Path, n: usize, at: (usize, usize)) -> std::path::PathBuf {
    let mut f = Array2::zeros((n, n));
    f[at] = 1.0;
    let path = dir.join("spike.csv");
    write_image_csv(&path, f.view()).unwrap();
    path
}

#[test]
fn geometry_reports_full_coverage_of_spiral() {
    let o = mcf(&["geometry", "--Q", "110"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("distinct visibilities: 11991"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn geometry_of_small_grid_has_nine_visibilities() {
    let o = mcf(&["geometry", "--layout", "grid", "--side", "2"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("distinct visibilities: 9 "),
        "{}",
        stdout(&o)
    );
}

#[test]
fn layout_file_round_trips_byte_for_byte() {
    let t = TempDir::new().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    assert_eq!(code(&mcf(&["geometry", "--Q", "20", "--out", p(&a)])), 0);
    let layout = format!("file:{}", p(&a.join("layout.csv")));
    assert_eq!(
        code(&mcf(&["geometry", "--layout", &layout, "--out", p(&b)])),
        0
    );
    assert_eq!(
        fs::read(a.join("layout.csv")).unwrap(),
        fs::read(b.join("layout.csv")).unwrap()
    );
    assert!(a.join("manifest.json").exists() && a.join("coverage.csv").exists());
}

#[test]
fn coarse_grid_is_an_aliasing_error() {
    let o = mcf(&["geometry", "--Q", "32", "--n", "8", "--fov", "1.0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_image_gives_zero_measurements() {
    let t = TempDir::new().unwrap();
    let img = t.path().join("zero.csv");
    write_image_csv(&img, Array2::zeros((16, 16)).view()).unwrap();
    let out = t.path().join("sim");
    let o = mcf(&[
        "simulate",
        "--image",
        p(&img),
        "--m",
        "40",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let y = read_vector_csv(&out.join("measurements.csv")).unwrap();
    assert_eq!(y.len(), 40);
    assert!(y.iter().all(|&v| v == 0.0));
}

#[test]
fn simulation_is_reproducible_and_matches_the_library() {
    let t = TempDir::new().unwrap();
    let img = spike_image(t.path(), 16, (5, 9));
    let args = |out: &Path| {
        mcf(&[
            "simulate",
            "--image",
            p(&img),
            "--m",
            "30",
            "--seed",
            "4",
            "--noise",
            "poisson",
            "--photon-scale",
            "50",
            "--out",
            p(out),
        ])
    };
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert_eq!(code(&args(&a)), 0);
    assert_eq!(code(&args(&b)), 0);
    for f in [
        "measurements.csv",
        "sketches.json",
        "image.csv",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let clean = t.path().join("clean");
    assert_eq!(
        code(&mcf(&[
            "simulate",
            "--image",
            p(&img),
            "--m",
            "30",
            "--seed",
            "4",
            "--out",
            p(&clean)
        ])),
        0
    );
    let layout = fermat_spiral_layout(32, 2e-4, Optics::default()).unwrap();
    let grid = ImageGrid::fitted(&layout, 16).unwrap();
    let sketches = make_sketches(
        30,
        32,
        SketchDistribution::ComplexGaussian,
        derive_seed(4, &[1]),
    )
    .unwrap();
    let op = SensingOp::general(layout, grid, sketches).unwrap();
    let f = read_image_csv(&img).unwrap();
    let expected = op.apply((&f * &op.grid().vignette()).view()).unwrap();
    let got = read_vector_csv(&clean.join("measurements.csv")).unwrap();
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (g, e) in got.iter().zip(expected.iter()) {
        assert!((g - e).abs() <= 1e-12 * scale, "{g} vs {e}");
    }
}

#[test]
fn spike_is_recovered_from_noiseless_measurements() {
    let t = TempDir::new().unwrap();
    let img = spike_image(t.path(), 16, (6, 10));
    let sim = t.path().join("sim");
    assert_eq!(
        code(&mcf(&[
            "simulate",
            "--image",
            p(&img),
            "--m",
            "60",
            "--out",
            p(&sim)
        ])),
        0
    );
    let o = mcf(&["reconstruct", "--input", p(&sim), "--truth", p(&img)]);
    assert_eq!(
        code(&o),
        0,
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sim.join("metrics.json")).unwrap()).unwrap();
    let err = metrics["relative_error"].as_f64().unwrap();
    assert!(err < 1e-3, "relative error {err}");
    assert!(sim.join("estimate.pgm").exists() && sim.join("reconstruct.manifest.json").exists());
}

#[test]
fn huge_radius_gives_the_zero_image() {
    let t = TempDir::new().unwrap();
    let img = spike_image(t.path(), 8, (3, 3));
    let sim = t.path().join("sim");
    assert_eq!(
        code(&mcf(&[
            "simulate",
            "--image",
            p(&img),
            "--m",
            "20",
            "--out",
            p(&sim)
        ])),
        0
    );
    let o = mcf(&["reconstruct", "--input", p(&sim), "--epsilon", "1e12"]);
    assert!(matches!(code(&o), 0 | 4));
    let est = read_image_csv(&sim.join("estimate.csv")).unwrap();
    assert!(est.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn tampered_measurements_are_a_config_mismatch() {
    let t = TempDir::new().unwrap();
    let img = spike_image(t.path(), 8, (2, 5));
    let sim = t.path().join("sim");
    assert_eq!(
        code(&mcf(&[
            "simulate",
            "--image",
            p(&img),
            "--m",
            "20",
            "--out",
            p(&sim)
        ])),
        0
    );
    let path = sim.join("measurements.csv");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen('\n', "\n1.5\n", 1)).unwrap();
    assert_eq!(code(&mcf(&["reconstruct", "--input", p(&sim)])), 3);

    fs::write(sim.join("manifest.json"), "{ not json").unwrap();
    assert_eq!(code(&mcf(&["reconstruct", "--input", p(&sim)])), 3);
}

#[test]
fn missing_inputs_are_io_errors() {
    let t = TempDir::new().unwrap();
    let missing = t.path().join("nope");
    assert_eq!(code(&mcf(&["reconstruct", "--input", p(&missing)])), 1);
    let out = t.path().join("sim");
    assert_eq!(
        code(&mcf(&[
            "simulate",
            "--image",
            p(&missing.join("x.pgm")),
            "--out",
            p(&out)
        ])),
        1
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[layout]\ncores = 12\nshape = 'hex'\n").unwrap();
    assert_eq!(code(&mcf(&["--config", p(&cfg), "geometry"])), 3);
    assert_eq!(code(&mcf(&["geometry", "--no-such-flag"])), 3);
}

#[test]
fn config_file_values_are_used() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, "[layout]\nkind = 'grid'\nside = 3\n").unwrap();
    let o = mcf(&["--config", p(&cfg), "geometry"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("distinct visibilities: 25 "),
        "{}",
        stdout(&o)
    );
}

const PHASE: &[&str] = &[
    "phase-diagram",
    "--Q",
    "16",
    "--n",
    "16",
    "--ms",
    "12,48",
    "--ks",
    "2",
    "--trials",
    "2",
];

#[test]
fn small_phase_diagram_runs_quickly() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("pd");
    let start = Instant::now();
    let o = mcf(&[PHASE, &["--out", p(&out)]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(out.join("phase.dat").exists() && out.join("summary.json").exists());
}

#[test]
fn interrupted_phase_diagram_resumes_to_the_same_table() {
    let t = TempDir::new().unwrap();
    let full = t.path().join("full");
    let part = t.path().join("part");
    assert_eq!(code(&mcf(&[PHASE, &["--out", p(&full)]].concat())), 0);
    assert_eq!(
        code(&mcf(
            &[PHASE, &["--out", p(&part), "--stop-after", "1"]].concat()
        )),
        0
    );
    assert!(!part.join("table.csv").exists());
    assert_eq!(
        fs::read_to_string(part.join("progress.jsonl"))
            .unwrap()
            .lines()
            .count(),
        1
    );
    assert_eq!(code(&mcf(&[PHASE, &["--out", p(&part)]].concat())), 0);
    assert_eq!(
        fs::read(full.join("table.csv")).unwrap(),
        fs::read(part.join("table.csv")).unwrap()
    );

    let other = mcf(&[
        "phase-diagram",
        "--Q",
        "16",
        "--n",
        "16",
        "--ms",
        "12",
        "--ks",
        "2",
        "--trials",
        "2",
        "--out",
        p(&part),
    ]);
    assert_eq!(code(&other), 3);
}

#[test]
fn dry_run_writes_nothing() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("pd");
    let o = mcf(&[PHASE, &["--out", p(&out), "--dry-run"]].concat());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("M=12 K=2"));
    assert!(!out.exists());
}

#[test]
fn rip_and_benchmark_write_their_tables() {
    let t = TempDir::new().unwrap();
    let rip = t.path().join("rip");
    assert_eq!(
        code(&mcf(&[
            "rip",
            "--side",
            "8",
            "--ms",
            "20,40",
            "--samples",
            "30",
            "--out",
            p(&rip)
        ])),
        0
    );
    assert_eq!(
        fs::read_to_string(rip.join("rip.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    assert_eq!(
        fs::read_to_string(rip.join("ratios.csv"))
            .unwrap()
            .lines()
            .count(),
        61
    );

    let bench = t.path().join("bench");
    let o = mcf(&[
        "benchmark",
        "--Q",
        "20",
        "--n",
        "8",
        "--k",
        "2",
        "--ms",
        "5,100",
        "--seeds",
        "2",
        "--max-iters",
        "200",
        "--out",
        p(&bench),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(bench.join("benchmark.csv"))
            .unwrap()
            .lines()
            .count(),
        5
    );
    assert!(bench.join("truth_s1.pgm").exists() && bench.join("estimate_s1_m100.csv").exists());
}

#[test]
fn selftest_passes() {
    let o = mcf(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
