use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phg_core::diagram::{read_diagram, write_diagram, HomDim, PersistenceDiagram, PersistencePoint};
use phg_core::grid::GrayscaleGrid;

fn phg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phg")).args(args).env_remove("PHG_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = phg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_pgm(path: &Path, grid: &GrayscaleGrid) {
    std::fs::write(path, grid.to_pgm().unwrap()).unwrap();
}

fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
    PersistenceDiagram::new(points.iter().map(|&(b, d)| PersistencePoint::finite(b, d, HomDim::H0)).collect()).unwrap()
}

/// Reads a vectorize CSV and returns the value of `column` at row `t`.
fn csv_value(path: &Path, column: &str, t: f64) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == column).unwrap_or_else(|| panic!("{column} not in {header:?}"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if cells[0] == t {
            return cells[col];
        }
    }
    panic!("t = {t} not sampled");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(phg(&["bogus"]).status.code(), Some(2));
    assert_eq!(phg(&["compute", "--input", "x.pgm", "--out", "o", "--unknown"]).status.code(), Some(2));
    assert_eq!(phg(&[]).status.code(), Some(2));
}

#[test]
fn config_is_printed_and_thread_override_validated() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.pgm");
    write_pgm(&img, &GrayscaleGrid::new(2, 2, vec![5.0; 4]).unwrap());
    let out = ok(&["compute", "--input", s(&img), "--out", s(&dir.path().join("o"))]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().next().unwrap().starts_with("config: {"), "{stderr}");
    assert!(stderr.contains("\"min_pers\":10.0"));

    let bad = Command::new(env!("CARGO_BIN_EXE_phg"))
        .args(["compute", "--input", s(&img), "--out", s(&dir.path().join("o"))])
        .env("PHG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let two = Command::new(env!("CARGO_BIN_EXE_phg"))
        .args(["compute", "--input", s(&img), "--out", s(&dir.path().join("o"))])
        .env("PHG_THREADS", "2")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&two.stderr).contains("\"threads\":2"));
}

#[test]
fn compute_constant_image_gives_one_essential_point() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    write_pgm(&img, &GrayscaleGrid::new(4, 5, vec![7.0; 20]).unwrap());
    let out = dir.path().join("out");
    ok(&["compute", "--input", s(&img), "--out", s(&out)]);
    let d = read_diagram(out.join("flat.json")).unwrap();
    assert_eq!(d.points(), [PersistencePoint { birth: 7.0, death: 255.0, dim: HomDim::H0, essential: true }]);

    ok(&["compute", "--input", s(&img), "--out", s(&out), "--keep-infinite"]);
    let d = read_diagram(out.join("flat.json")).unwrap();
    assert_eq!(d.points(), [PersistencePoint::essential(7.0, HomDim::H0)]);
}

#[test]
fn compute_is_byte_identical_and_batches_directories() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    std::fs::create_dir(&imgs).unwrap();
    for i in 0..100u64 {
        let values = (0..64).map(|k| ((k * 37 + i * 11) % 251) as f64).collect();
        write_pgm(&imgs.join(format!("img{i:03}.pgm")), &GrayscaleGrid::new(8, 8, values).unwrap());
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["compute", "--input", s(&imgs), "--out", s(&a)]);
    ok(&["compute", "--input", s(&imgs), "--out", s(&b)]);
    let mut names: Vec<PathBuf> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert_eq!(names.len(), 100);
    for p in &names {
        let other = b.join(p.file_name().unwrap());
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(other).unwrap());
        // Files round-trip through the diagram reader.
        let d = read_diagram(p).unwrap();
        assert_eq!(PersistenceDiagram::from_json(std::fs::read(p).unwrap().as_slice()).unwrap(), d);
    }
}

#[test]
fn compute_reports_bad_files_but_writes_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    std::fs::create_dir(&imgs).unwrap();
    write_pgm(&imgs.join("good.pgm"), &GrayscaleGrid::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    std::fs::write(imgs.join("bad.pgm"), b"P5\n2 2\n255\n\x01").unwrap();
    let out = dir.path().join("out");
    let res = phg(&["compute", "--input", s(&imgs), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.pgm"));
    assert!(out.join("good.json").is_file());
    assert!(!out.join("bad.json").exists());
}

#[test]
fn vectorize_closed_forms_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    let two = dir.path().join("two.json");
    write_diagram(&one, &diagram(&[(0.0, 2.0)])).unwrap();
    write_diagram(&two, &diagram(&[(0.0, 2.0), (1.0, 3.0)])).unwrap();
    let csv = dir.path().join("v.csv");
    let base = |d: &Path, method: &str| {
        vec![
            "vectorize".to_string(),
            "--diagram".into(),
            s(d).into(),
            "--method".into(),
            method.into(),
            "--out".into(),
            s(&csv).into(),
            "--intensity-max".into(),
            "1".into(),
            "--t-values".into(),
            "0.5,1,1.5,2.5".into(),
            "--dim".into(),
            "h0".into(),
        ]
    };
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run(base(&one, "landscape"));
    assert_eq!(csv_value(&csv, "landscape_k1_h0", 1.0), 1.0);
    assert_eq!(csv_value(&csv, "landscape_k1_h0", 0.5), 0.5);
    assert_eq!(csv_value(&csv, "landscape_k2_h0", 1.0), 0.0);

    run(base(&two, "silhouette"));
    assert_eq!(csv_value(&csv, "silhouette_p1.0_h0", 1.5), 0.5);

    run(base(&two, "betti"));
    assert_eq!(csv_value(&csv, "betti_h0", 1.5), 2.0);
    assert_eq!(csv_value(&csv, "betti_h0", 2.5), 1.0);

    let unknown = phg(&["vectorize", "--diagram", s(&one), "--method", "wavelet", "--out", s(&csv)]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn vectorize_persistence_image_peak() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.json");
    write_diagram(&d, &diagram(&[(0.0, 2.0)])).unwrap();
    let csv = dir.path().join("p.csv");
    // A single pixel centred at birth 0, persistence 2.
    ok(&[
        "vectorize", "--diagram", s(&d), "--method", "pimage", "--out", s(&csv), "--intensity-max", "1", "--t-min",
        "-2", "--t-max", "2", "--resolution", "1", "--sigma", "0.1", "--dim", "h0",
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..3], ["H0", "2.0", "0.0"]);
    let expected = 2.0 / (2.0 * std::f64::consts::PI * 0.01);
    let got: f64 = row[3].parse().unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    assert!((got - 31.831).abs() < 1e-3);
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["gen", "--out", s(d), "--seed", "1", "--train", "9", "--test", "6", "--size", "32"]);
    }
    let ma = std::fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, std::fs::read(b.join("manifest.json")).unwrap());
    assert_eq!(std::fs::read(a.join("train/000004.pgm")).unwrap(), std::fs::read(b.join("train/000004.pgm")).unwrap());
    let c = dir.path().join("c");
    ok(&["gen", "--out", s(&c), "--seed", "2", "--train", "9", "--test", "6", "--size", "32"]);
    assert_ne!(ma, std::fs::read(c.join("manifest.json")).unwrap());
}

#[test]
fn train_then_eval_memorizes_a_tiny_set() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    ok(&["gen", "--out", s(&data), "--seed", "3", "--train", "15", "--test", "6", "--size", "32"]);
    ok(&[
        "train", "--data", s(&data), "--out", s(&run), "--variant", "topo-only", "--epochs", "25", "--lr", "3e-3",
        "--batch-size", "5", "--n-per-group", "16",
    ]);
    for f in ["model.json", "model.bin", "manifest.json", "history.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let metrics = dir.path().join("m.json");
    let out = ok(&["eval", "--run", s(&run), "--data", s(&data), "--split", "train", "--out", s(&metrics)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Acc 1.0000"), "{stdout}");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["accuracy"], 1.0);

    let missing = phg(&["eval", "--run", s(&dir.path().join("none")), "--data", s(&data)]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("configuration error"));

    let svg = dir.path().join("h.svg");
    ok(&["plot", "history", "--input", s(&run.join("history.csv")), "--out", s(&svg)]);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("topo_loss"));
}

#[test]
fn plot_of_empty_diagram_has_axes_and_diagonal_only() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("empty.json");
    write_diagram(&d, &PersistenceDiagram::empty()).unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    ok(&["plot", "diagram", "--input", s(&d), "--out", s(&a)]);
    ok(&["plot", "diagram", "--input", s(&d), "--out", s(&b)]);
    let svg = std::fs::read_to_string(&a).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("<circle"));
    assert!(svg.contains("stroke-dasharray=\"4 3\""), "diagonal present");
    assert_eq!(svg.as_bytes(), std::fs::read(&b).unwrap());
}

#[test]
fn plot_of_diagram_colours_groups() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.json");
    let diag = PersistenceDiagram::new(vec![
        PersistencePoint::essential(0.0, HomDim::H0),
        PersistencePoint::finite(1.0, 4.0, HomDim::H1),
    ])
    .unwrap();
    write_diagram(&d, &diag).unwrap();
    let svg_path = dir.path().join("d.svg");
    ok(&["plot", "diagram", "--input", s(&d), "--out", s(&svg_path)]);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    assert!(svg.contains("fill=\"#1f77b4\"/>") && svg.contains("fill=\"#d62728\"/>"));
    assert!(svg.contains(">inf<"));
}
