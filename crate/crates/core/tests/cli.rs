use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cbalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbalign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = cbalign(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

fn pgm_pixels(text: &str) -> (usize, usize, Vec<u32>) {
    let mut tokens = text.split_whitespace();
    assert_eq!(tokens.next(), Some("P2"));
    let w: usize = tokens.next().unwrap().parse().unwrap();
    let h: usize = tokens.next().unwrap().parse().unwrap();
    let _max = tokens.next();
    let px: Vec<u32> = tokens.map(|t| t.parse().unwrap()).collect();
    assert_eq!(px.len(), w * h);
    (w, h, px)
}

/// 4-connected components of pixels at or above `level`.
fn bright_regions(w: usize, h: usize, px: &[u32], level: u32) -> usize {
    let mut seen = vec![false; px.len()];
    let mut count = 0;
    for start in 0..px.len() {
        if seen[start] || px[start] < level {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (r, c) = (k / w, k % w);
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(k - w);
            }
            if r + 1 < h {
                nbrs.push(k + w);
            }
            if c > 0 {
                nbrs.push(k - 1);
            }
            if c + 1 < w {
                nbrs.push(k + 1);
            }
            for n in nbrs {
                if !seen[n] && px[n] >= level {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    count
}

#[test]
fn synth_default_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["synth", "--out", a.to_str().unwrap()]);
    ok(&["synth", "--out", b.to_str().unwrap()]);
    let csv = read(&a.join("phi_true.csv"));
    assert_eq!(csv.lines().next(), Some("rx_idx,tx_idx,power_linear"));
    assert_eq!(csv.lines().count(), 1 + 684);
    for name in [
        "phi_true.csv",
        "phi_true.pgm",
        "tx_codebook.csv",
        "rx_codebook.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let manifest = read(&a.join("manifest.txt"));
    assert!(manifest.contains("phi_true.csv"));
    assert!(manifest.contains("seed = 1"));
}

#[test]
fn single_cluster_heatmap_has_one_bright_region() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.cfg");
    fs::write(&cfg, "# one dominant cluster\nn_clusters = 1\n").unwrap();
    let out = dir.path().join("out");
    ok(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let (w, h, px) = pgm_pixels(&read(&out.join("phi_true.pgm")));
    assert_eq!((w, h), (19, 36));
    assert_eq!(px.iter().copied().max(), Some(255));
    // Top 10 dB of a 40 dB scale.
    assert_eq!(bright_regions(w, h, &px, 192), 1);
}

#[test]
fn full_sampling_noiseless_run_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--fractions",
        "1",
        "--trials",
        "1",
        "--noise-sigma",
        "0",
        "--kappa",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    let agg = read(&out.join("aggregate.csv"));
    let mut lines = agg.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!(col("mean_nmse").parse::<f64>().unwrap() < 1e-10);
    assert_eq!(col("mean_rss_loss_db").parse::<f64>().unwrap(), 0.0);
    assert!(out.join("phi_hat_19x36.pgm").exists());
    assert!(out.join("measurements_19x36.csv").exists());
}

#[test]
fn sweep_writes_one_row_per_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&["sweep", "--trials", "2", "--out", out.to_str().unwrap()]);
    let agg = read(&out.join("aggregate.csv"));
    assert_eq!(agg.lines().count(), 1 + 3);
    let trials = read(&out.join("trials.csv"));
    assert_eq!(trials.lines().count(), 1 + 6);
}

#[test]
fn grid_input_reproduces_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--out", synth.to_str().unwrap()]);

    let direct = dir.path().join("direct");
    ok(&["run", "--trials", "3", "--out", direct.to_str().unwrap()]);

    let cfg = dir.path().join("grid.cfg");
    fs::write(
        &cfg,
        format!(
            "map_source = grid\ngrid_path = {}\n",
            synth.join("phi_true.csv").display()
        ),
    )
    .unwrap();
    let grid = dir.path().join("grid");
    ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "3",
        "--out",
        grid.to_str().unwrap(),
    ]);

    for name in [
        "aggregate.csv",
        "trials.csv",
        "phi_true.csv",
        "phi_hat_9x19.pgm",
    ] {
        assert_eq!(read(&direct.join(name)), read(&grid.join(name)), "{name}");
    }
}

#[test]
fn dbm_grid_is_converted() {
    let dir = tempfile::tempdir().unwrap();
    let lin = dir.path().join("lin.csv");
    let dbm = dir.path().join("dbm.csv");
    fs::write(
        &lin,
        "rx_idx,tx_idx,power_linear\n0,0,0.5\n0,1,2\n1,0,0.001\n1,1,1\n",
    )
    .unwrap();
    fs::write(
        &dbm,
        "rx_idx,tx_idx,power_dbm\n0,0,-3\n0,1,3.0103\n1,0,-30\n1,1,0\n",
    )
    .unwrap();
    let a = String::from_utf8(ok(&["ingest-check", lin.to_str().unwrap()]).stdout).unwrap();
    let b = String::from_utf8(ok(&["ingest-check", "--db", dbm.to_str().unwrap()]).stdout).unwrap();
    assert!(
        a.contains("2 rx x 2 tx beams") && a.contains("at rx 0 tx 1"),
        "{a}"
    );
    assert!(
        b.contains("2 rx x 2 tx beams") && b.contains("at rx 0 tx 1"),
        "{b}"
    );
    let peak: f64 = b
        .split("peak ")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((peak - 2.0).abs() < 1e-4);
}

#[test]
fn ingest_check_reports_missing_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("holey.csv");
    fs::write(&path, "rx_idx,tx_idx,power_linear\n0,0,1\n0,1,2\n1,1,3\n").unwrap();
    let out = cbalign(&["ingest-check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rx 1") && err.contains("tx 0"), "{err}");
}

#[test]
fn bad_arguments_exit_with_one() {
    let out = cbalign(&["run", "--fractions", "1.5", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\nnot_a_key = 3\n").unwrap();
    let out = cbalign(&["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:2:"));
}
