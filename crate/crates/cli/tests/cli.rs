use std::fs;
use std::path::Path;

use evodyn_cli::svg::to_pixels;
use evodyn_cli::{cli_main, parse_config, render_ternary_svg, ternary_uv};
use evodyn_core::experiments::default_x0;
use evodyn_core::{iterate, DynamicKind, DynamicsConfig, MatrixLandscape, MomentumKind, SimplexPoint};
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("evodyn").chain(args.iter().copied()))
}

fn prefix(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

const POLYAK_RUN: [&str; 14] = [
    "simulate",
    "--a",
    "2",
    "--b",
    "1",
    "--dynamic",
    "replicator",
    "--momentum",
    "polyak",
    "--alpha",
    "0.005",
    "--beta",
    "0.3",
    "--x0",
];

fn polyak_args(out: &str) -> Vec<&str> {
    let mut v = POLYAK_RUN.to_vec();
    v.extend(["0.8,0.15,0.05", "--out", out]);
    v
}

#[test]
fn simulate_writes_all_formats_reproducibly() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (prefix(&dir, "run1"), prefix(&dir, "run2"));
    assert_eq!(run(&polyak_args(&a)), 0);
    assert_eq!(run(&polyak_args(&b)), 0);
    for ext in ["csv", "json", "svg"] {
        let first = fs::read(format!("{a}.{ext}")).unwrap();
        assert!(!first.is_empty());
        assert_eq!(
            first,
            fs::read(format!("{b}.{ext}")).unwrap(),
            "{ext} differs between runs"
        );
    }
    assert!(read(format!("{a}.json")).contains("\"status\": \"Converged\""));
}

#[test]
fn csv_rows_reparse_to_the_trajectory_exactly() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "polyak");
    assert_eq!(run(&polyak_args(&out)), 0);

    let m = MatrixLandscape::cyclic(2.0, 1.0);
    let cfg = DynamicsConfig::new(DynamicKind::Replicator, MomentumKind::Polyak, 0.005, 0.3);
    let t = iterate(&cfg, &m, &default_x0(), Some(&SimplexPoint::barycenter(3))).unwrap();

    let text = read(format!("{out}.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,time,x1,x2,x3,kl,euclidean"));
    let rows: Vec<&str> = lines.clone().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), t.len());
    for (row, rec) in rows.iter().zip(&t.records) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0].parse::<u64>().unwrap(), rec.step);
        assert_eq!(f[1].parse::<f64>().unwrap(), rec.time);
        for (s, x) in f[2..5].iter().zip(rec.state.coords()) {
            assert_eq!(s.parse::<f64>().unwrap(), *x);
        }
        assert_eq!(f[5].parse::<f64>().unwrap(), rec.kl.unwrap());
        assert_eq!(f[6].parse::<f64>().unwrap(), rec.euclidean.unwrap());
    }
    assert_eq!(text.lines().last(), Some("# status=Converged"));
}

#[test]
fn divergent_run_ends_at_the_boundary() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "diverge");
    let args = [
        "simulate",
        "--a",
        "2",
        "--b",
        "-1",
        "--momentum",
        "polyak",
        "--alpha",
        "0.01",
        "--beta",
        "0.9",
        "--x0",
        "0.8,0.15,0.05",
        "--formats",
        "csv",
        "--out",
        &out,
    ];
    assert_eq!(run(&args), 0);
    let text = read(format!("{out}.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(*lines.last().unwrap(), "# status=Diverged");
    let last: Vec<f64> = lines[lines.len() - 2]
        .split(',')
        .skip(2)
        .take(3)
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(last.iter().any(|x| *x <= 1e-9), "{last:?}");
    assert!(!Path::new(&format!("{out}.json")).exists());
}

#[test]
fn dumped_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "a");
    let dump = prefix(&dir, "run.cfg");
    let mut args = polyak_args(&out);
    args.extend(["--record-every", "10", "--dump-config", &dump]);
    assert_eq!(run(&args), 0);

    let spec = parse_config(&dump).unwrap();
    assert_eq!(spec.beta, 0.3);
    assert_eq!(spec.record_every, 10);
    assert_eq!(spec.output_path, out);
    let again = prefix(&dir, "again.cfg");
    fs::write(&again, spec.to_config_string()).unwrap();
    assert_eq!(parse_config(&again).unwrap(), spec);

    // Re-running from the dump reproduces the outputs.
    let first = fs::read(format!("{out}.csv")).unwrap();
    assert_eq!(run(&["simulate", "--config", &dump]), 0);
    assert_eq!(fs::read(format!("{out}.csv")).unwrap(), first);
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = prefix(&dir, "rps.cfg");
    let out = prefix(&dir, "rps");
    fs::write(
        &cfg,
        format!("a = 1\nb = -1\nmomentum = nesterov\nalpha = 0.005\nbeta = 0.65\nx0 = 0.6,0.2,0.2\nmax_steps = 500\nout = {out}\n"),
    )
    .unwrap();
    assert_eq!(
        run(&["simulate", "--config", &cfg, "--beta", "0", "--formats", "csv"]),
        0
    );
    let rows = read(format!("{out}.csv"))
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1;
    assert_eq!(rows, 501);
}

#[test]
fn continuous_runs_and_rejects_singular_beta() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "cont");
    let base = [
        "simulate",
        "--dynamic",
        "continuous",
        "--a",
        "1",
        "--b",
        "-1",
        "--x0",
        "0.6,0.2,0.2",
        "--out",
        &out,
    ];
    let mut ok = base.to_vec();
    ok.extend(["--horizon", "5", "--record-every", "10", "--formats", "csv"]);
    assert_eq!(run(&ok), 0);
    let text = read(format!("{out}.csv"));
    assert_eq!(text.lines().count(), 1 + 51 + 1);

    let mut bad = base.to_vec();
    bad.extend(["--beta", "1.0"]);
    assert_eq!(run(&bad), 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "x");
    assert_eq!(
        run(&["simulate", "--a", "2", "--b", "1", "--out", &out]),
        1,
        "missing x0"
    );
    assert_eq!(run(&["simulate", "--a", "2", "--x0", "0.5,0.3,0.2"]), 1, "a without b");
    assert_eq!(run(&["simulate", "--unknown-flag"]), 1);
    assert_eq!(run(&["simulate", "--config", &prefix(&dir, "missing.cfg")]), 2);
    assert_eq!(
        run(&[
            "sweep",
            "--a",
            "2",
            "--b",
            "-1",
            "--momentum",
            "polyak",
            "--alpha",
            "0.01",
            "--x0",
            "0.8,0.15,0.05",
            "--betas",
            "0.9",
            "--out",
            &out
        ]),
        2,
        "sweep cell diverges"
    );
    assert_eq!(
        run(&[
            "classify",
            "--a",
            "2",
            "--b",
            "1",
            "--x0",
            "0.8,0.15,0.05",
            "--out",
            &out
        ]),
        1,
        "not zero-sum"
    );
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn help_documents_every_flag() {
    let mut cmd = evodyn_cli::cli::command();
    let help = cmd
        .find_subcommand_mut("simulate")
        .unwrap()
        .render_long_help()
        .to_string();
    for key in evodyn_cli::config::KEYS {
        let flag = format!("--{}", key.replace('_', "-"));
        assert!(help.contains(&flag), "{flag} missing from help");
    }
    assert!(help.contains("--config") && help.contains("--dump-config"));
}

fn json_reals(text: &str, key: &str) -> Vec<f64> {
    let needle = format!("\"{key}\": ");
    text.match_indices(&needle)
        .map(|(i, _)| {
            let rest = &text[i + needle.len()..];
            rest[..rest.find([',', '\n']).unwrap()].parse().unwrap()
        })
        .collect()
}

#[test]
fn sweep_ratios_track_one_minus_beta() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "sweep");
    let args = [
        "sweep",
        "--a",
        "1",
        "--b",
        "1",
        "--momentum",
        "polyak",
        "--alpha",
        "0.001",
        "--x0",
        "0.8,0.15,0.05",
        "--betas",
        "0,0.1,0.3,0.5,0.7",
        "--out",
        &out,
    ];
    assert_eq!(run(&args), 0);
    let text = read(format!("{out}.json"));
    let betas = json_reals(&text, "beta");
    let ratios = json_reals(&text, "ratio");
    assert_eq!(betas, vec![0.0, 0.1, 0.3, 0.5, 0.7]);
    assert_eq!(ratios[0], 1.0);
    for (b, r) in betas.iter().zip(&ratios) {
        assert!((r - (1.0 - b)).abs() <= 0.1 * (1.0 - b), "beta {b}: ratio {r}");
    }
    assert!(text.contains("\"config_digest\": \""));
    assert_eq!(run(&args), 0);
    assert_eq!(read(format!("{out}.json")), text);
}

#[test]
fn classify_reports_polyak_rps_as_diverging() {
    let dir = TempDir::new().unwrap();
    let out = prefix(&dir, "cycle");
    let args = [
        "classify",
        "--a",
        "1",
        "--b",
        "-1",
        "--momentum",
        "polyak",
        "--alpha",
        "0.005",
        "--beta",
        "0.65",
        "--x0",
        "0.8,0.15,0.05",
        "--out",
        &out,
    ];
    assert_eq!(run(&args), 0);
    let text = read(format!("{out}.json"));
    assert!(text.contains("\"classification\": \"Diverging\""), "{text}");
    assert!(text.contains("\"status\": \"Diverged\""));
}

#[test]
fn verify_commands_write_summaries() {
    let dir = TempDir::new().unwrap();
    let ess = prefix(&dir, "ess");
    assert_eq!(run(&["verify-ess", "--a", "1", "--b", "-1", "--out", &ess]), 0);
    let text = read(format!("{ess}.json"));
    assert!(text.contains("\"is_strict_ess\": false"));
    assert_eq!(json_reals(&text, "worst_margin"), vec![0.0]);

    assert_eq!(
        run(&[
            "verify-ess",
            "--matrix",
            "0,1,1;1,0,1;1,1,0",
            "--samples",
            "500",
            "--out",
            &ess
        ]),
        0
    );
    assert!(read(format!("{ess}.json")).contains("\"is_strict_ess\": true"));

    let sc = prefix(&dir, "scaling");
    assert_eq!(run(&["verify-scaling", "--a", "2", "--b", "1", "--out", &sc]), 0);
    let text = read(format!("{sc}.json"));
    assert!(json_reals(&text, "max_relative_error")[0] <= 1e-12);
    assert_eq!(
        run(&[
            "verify-ess",
            "--a",
            "1",
            "--b",
            "-1",
            "--candidate",
            "0.5,0.5",
            "--out",
            &ess
        ]),
        1
    );
}

#[test]
fn rps_pair_separates_in_the_plot() {
    let rps = MatrixLandscape::cyclic(1.0, -1.0);
    let mut runs = Vec::new();
    for momentum in [MomentumKind::Polyak, MomentumKind::Nesterov] {
        let mut cfg = DynamicsConfig::new(DynamicKind::Replicator, momentum, 0.005, 0.65);
        cfg.max_steps = 100_000;
        runs.push(iterate(&cfg, &rps, &default_x0(), None).unwrap());
    }
    let svg = render_ternary_svg(&runs, &["polyak".into(), "nesterov".into()]).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);

    let centroid = to_pixels(ternary_uv(&[1.0 / 3.0; 3]));
    let end = |i: usize| to_pixels(ternary_uv(runs[i].last().unwrap().state.coords()));
    let dist = |p: (f64, f64)| ((p.0 - centroid.0).powi(2) + (p.1 - centroid.1).powi(2)).sqrt();
    assert!(runs[0].last().unwrap().state.min_coord() <= 1e-9);
    assert!(dist(end(1)) < 1.0, "nesterov ends {} px from centroid", dist(end(1)));
    assert!(dist(end(0)) > 100.0);
}
