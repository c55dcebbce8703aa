use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use manifold_seg::evalstats::{
    synthesize_dwi_series, synthesize_t2_series, table_correlations, CorrelationMethod,
    LesionTable, PhantomRegion, PhantomSpec, Shape, AT_RISK_TISSUE, DWI_B_VALUES, INFARCTED_TISSUE,
    NORMAL_TISSUE, T2_ECHO_TIMES,
};
use manifold_seg::io::{read_embedding_csv, read_mpv_file, write_mpv_file};
use manifold_seg::pipeline::TissueClass;
use manifold_seg::volume::ParametricVolume;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_manifold-seg"));
    c.env("MANIFOLD_SEG_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn manifold-seg")
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn phantom(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("phantom");
    let mut args = vec!["phantom", "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_1() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage:"));
}

#[test]
fn missing_subcommand_is_an_input_error() {
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pipeline"));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn eval_table_prints_one_value() {
    let table = Path::new(env!("CARGO_MANIFEST_DIR")).join("tables/table1.csv");
    let o = run(&[
        "eval",
        "--table",
        &s(&table),
        "--group",
        "subacute",
        "--x",
        "t2wi",
        "--y",
        "isomap_total",
        "--method",
        "pearson",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    let r: f64 = lines[0].parse().unwrap();
    let expect = table_correlations(
        &LesionTable::table1(),
        "subacute",
        "t2wi",
        "isomap_total",
        CorrelationMethod::Pearson,
    )
    .unwrap();
    assert_eq!(r, expect);
}

#[test]
fn eval_bundled_table_and_bad_column() {
    let o = run(&[
        "eval",
        "--table",
        "table2",
        "--group",
        "clinical_24h",
        "--x",
        "dwi",
        "--y",
        "dfm_inf",
    ]);
    // two rows per group cannot give a correlation
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = run(&[
        "eval", "--table", "table1", "--group", "acute", "--x", "dwi", "--y", "nope",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn noiseless_phantom_pipeline_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &["--noise", "0", "--seed", "4"]);
    for f in ["study.mpv", "truth.csv", "truth.pgm", "manifest.txt"] {
        assert!(ph.join(f).is_file(), "{f}");
    }
    let out = dir.path().join("out");
    let o = run(&[
        "pipeline",
        "--manifest",
        &s(&ph.join("manifest.txt")),
        "--out-dir",
        &s(&out),
        "--landmarks",
        "600",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "labels.csv",
        "report.csv",
        "clusters.csv",
        "embedding.csv",
        "embedded.ppm",
        "scatter.ppm",
        "scatter.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let o = run(&[
        "eval",
        "--truth",
        &s(&ph.join("truth.csv")),
        "--labels",
        &s(&out.join("labels.csv")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tissue_class,dice"));
    let rows: Vec<(String, f64)> = lines
        .map(|l| {
            let (c, d) = l.split_once(',').unwrap();
            (c.to_string(), d.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    for (class, d) in rows {
        assert!(d >= 0.9, "{class}: {d}");
    }
}

#[test]
fn out_of_range_parameter_exits_1_naming_range() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &[]);
    let manifest = ph.join("manifest.txt");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text.push_str("k = 200\n");
    std::fs::write(&manifest, text).unwrap();
    let o = run(&[
        "pipeline",
        "--manifest",
        &s(&manifest),
        "--out-dir",
        &s(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[20, 80]"), "{}", stderr(&o));
}

fn small_spec() -> PhantomSpec {
    PhantomSpec {
        width: 40,
        height: 40,
        spacing: (0.5, 0.5),
        brain: Shape::Rectangle {
            x0: 0.0,
            y0: 0.0,
            x1: 40.0,
            y1: 40.0,
        },
        normal: NORMAL_TISSUE,
        regions: vec![
            PhantomRegion {
                class: TissueClass::Infarcted,
                shape: Shape::Rectangle {
                    x0: 4.0,
                    y0: 4.0,
                    x1: 14.0,
                    y1: 14.0,
                },
                values: INFARCTED_TISSUE,
            },
            PhantomRegion {
                class: TissueClass::AtRisk,
                shape: Shape::Rectangle {
                    x0: 20.0,
                    y0: 20.0,
                    x1: 32.0,
                    y1: 32.0,
                },
                values: AT_RISK_TISSUE,
            },
        ],
        noise: 0.0,
    }
}

#[test]
fn strict_graph_on_disconnected_tissue_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, serde_json::to_string_pretty(&small_spec()).unwrap()).unwrap();
    let ph = phantom(dir.path(), &["--spec", &s(&spec)]);
    let manifest = s(&ph.join("manifest.txt"));
    let out = s(&dir.path().join("o"));
    let o = run(&[
        "pipeline",
        "--manifest",
        &manifest,
        "--out-dir",
        &out,
        "--k",
        "20",
        "--strict-graph",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("disconnected"));

    // the default policy bridges the tissue components and succeeds
    let o = run(&[
        "pipeline",
        "--manifest",
        &manifest,
        "--out-dir",
        &out,
        "--k",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "pipeline",
        "--manifest",
        &manifest,
        "--out-dir",
        &out,
        "--k",
        "20",
        "--largest-component",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn phantom_spec_with_unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = serde_json::to_value(small_spec()).unwrap();
    v["colour"] = serde_json::json!("red");
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, v.to_string()).unwrap();
    let o = run(&[
        "phantom",
        "--spec",
        &s(&spec),
        "--out-dir",
        &s(&dir.path().join("p")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn graph_flags_conflict() {
    let o = run(&[
        "pipeline",
        "--manifest",
        "m.txt",
        "--out-dir",
        "o",
        "--strict-graph",
        "--largest-component",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_input_file_exits_1() {
    let o = run(&[
        "pipeline",
        "--manifest",
        "/nonexistent/m.txt",
        "--out-dir",
        "/tmp/x",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn truncated_mpv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &[]);
    let mpv = ph.join("study.mpv");
    let bytes = std::fs::read(&mpv).unwrap();
    std::fs::write(&mpv, &bytes[..bytes.len() - 8]).unwrap();
    let o = run(&[
        "embed",
        "--input",
        &s(&mpv),
        "--out-csv",
        &s(&dir.path().join("e.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn embed_then_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &["--seed", "2"]);
    let csv = dir.path().join("emb.csv");
    let ppm = dir.path().join("emb.ppm");
    let o = run(&[
        "embed",
        "--input",
        &s(&ph.join("study.mpv")),
        "--method",
        "dfm",
        "--sigma",
        "80",
        "--d",
        "2",
        "--landmarks",
        "400",
        "--out-csv",
        &s(&csv),
        "--out-ppm",
        &s(&ppm),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (index, coords) = read_embedding_csv(std::fs::read(&csv).unwrap().as_slice()).unwrap();
    let index = index.unwrap();
    assert_eq!(coords.cols(), 2);
    assert_eq!(index.len(), coords.rows());
    let ppm_bytes = std::fs::read(&ppm).unwrap();
    assert!(ppm_bytes.starts_with(b"P6\n128 128\n255\n"));

    let labels = dir.path().join("labels.csv");
    let o = run(&["cluster", "--input", &s(&csv), "--out", &s(&labels)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&labels).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,label"));
    assert_eq!(lines.count(), coords.rows());
}

#[test]
fn embed_rejects_out_of_range_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &[]);
    let args = |force: bool| {
        let mut a = vec![
            "embed".to_string(),
            "--input".into(),
            s(&ph.join("study.mpv")),
            "--k".into(),
            "10".into(),
            "--landmarks".into(),
            "200".into(),
            "--out-csv".into(),
            s(&dir.path().join("e.csv")),
        ];
        if force {
            a.push("--force".into());
        }
        a
    };
    assert_eq!(
        bin().args(args(false)).output().unwrap().status.code(),
        Some(1)
    );
    let o = bin().args(args(true)).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn fit_maps_recovers_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let adc = [0.358e-3, 0.646e-3, 0.750e-3, 0.5e-3];
    let t2 = [34.0, 38.0, 43.0, 80.0];
    let grid = |name: &str, v: &[f64]| {
        ParametricVolume::new(name, 2, 2, (0.25, 0.25), v.to_vec()).unwrap()
    };
    let dwi = synthesize_dwi_series(&grid("adc", &adc), &DWI_B_VALUES, 900.0, 0.0, 1).unwrap();
    let te = synthesize_t2_series(&grid("t2", &t2), &T2_ECHO_TIMES, 900.0, 0.0, 1).unwrap();
    write_mpv_file(&dir.path().join("dwi.mpv"), dwi.frames()).unwrap();
    write_mpv_file(&dir.path().join("t2.mpv"), te.frames()).unwrap();

    // rows deliberately out of control order
    let mut csv = String::from("series,control,source\n");
    for (f, b) in dwi.frames().iter().zip(DWI_B_VALUES).rev() {
        csv.push_str(&format!("dwi,{b},dwi.mpv#{}\n", f.name));
    }
    for (f, t) in te.frames().iter().zip(T2_ECHO_TIMES) {
        csv.push_str(&format!("t2,{t},t2.mpv#{}\n", f.name));
    }
    let series = dir.path().join("series.csv");
    std::fs::write(&series, csv).unwrap();
    let out = dir.path().join("maps.mpv");
    let o = run(&["fit-maps", "--series", &s(&series), "--out", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let maps = read_mpv_file(&out).unwrap();
    let get = |n: &str| maps.iter().find(|v| v.name == n).unwrap();
    for (fit, truth) in get("adc")
        .values
        .iter()
        .zip(adc)
        .chain(get("t2").values.iter().zip(t2))
    {
        assert!(((fit - truth) / truth).abs() < 1e-9, "{fit} vs {truth}");
    }
}

#[test]
fn fit_maps_rejects_unknown_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    std::fs::write(&series, "series,control,source\nflair,0,x.mpv#a\n").unwrap();
    let o = run(&[
        "fit-maps",
        "--series",
        &s(&series),
        "--out",
        &s(&dir.path().join("o.mpv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let ph = phantom(dir.path(), &["--seed", "11"]);
    let manifest = s(&ph.join("manifest.txt"));
    let runs: Vec<PathBuf> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}"));
            let o = run(&[
                "pipeline",
                "--manifest",
                &manifest,
                "--out-dir",
                &s(&out),
                "--landmarks",
                "400",
                "--method",
                "lle",
            ]);
            assert!(o.status.success(), "{}", stderr(&o));
            out
        })
        .collect();
    for f in ["labels.csv", "embedded.ppm", "scatter.ppm"] {
        assert_eq!(
            std::fs::read(runs[0].join(f)).unwrap(),
            std::fs::read(runs[1].join(f)).unwrap(),
            "{f}"
        );
    }
}
