use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gwolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwolab"))
        .args(args)
        .env_remove("GWOLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn theory_table_rows() {
    let o = gwolab(&["theory"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("r,a_r,f_r(1.9),f_r(2.0),verdict"));
    assert_eq!(text.lines().count(), 11);
    let a2: f64 = column(&text, "a_r")[0].parse().unwrap();
    assert!((a2 - 3.0).abs() < 0.005);

    let single = stdout(&gwolab(&["theory", "--r-max", "2"]));
    assert_eq!(single.lines().count(), 2);

    let probe = stdout(&gwolab(&["theory", "--r-max", "2", "--a-grid", "3.0"]));
    let f: f64 = column(&probe, "f_r(3.0)")[0].parse().unwrap();
    assert!((f - 1.0).abs() <= 1e-9);

    assert_eq!(gwolab(&["theory", "--r-max", "7"]).status.code(), Some(2));
}

#[test]
fn moments_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = gwolab(&[
            "sim", "moments", "--trials", "1000", "--orders", "2", "--out-dir", out.to_str().unwrap(), "--workers",
            workers, "--seed", "5",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = fs::read_to_string(a.join("moments.csv")).unwrap();
    assert_eq!(ma.lines().count(), 101);
    assert_eq!(ma, fs::read_to_string(b.join("moments.csv")).unwrap());

    // replaying the manifest reproduces the file bitwise
    let c = dir.path().join("c");
    let o = gwolab(&["replay", a.join("manifest.json").to_str().unwrap(), "--out-dir", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ma, fs::read_to_string(c.join("moments.csv")).unwrap());
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env_seed: &str, out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_gwolab"))
            .args(["sim", "pdf", "--trials", "500", "--snapshots", "5", "--bins", "10", "--out-dir"])
            .arg(out)
            .env("GWOLAB_SEED", env_seed)
            .output()
            .unwrap()
    };
    assert!(run("11", &dir.path().join("x")).status.success());
    assert!(run("12", &dir.path().join("y")).status.success());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("x/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_ne!(
        fs::read_to_string(dir.path().join("x/pdf_t5.csv")).unwrap(),
        fs::read_to_string(dir.path().join("y/pdf_t5.csv")).unwrap()
    );
}

#[test]
fn hit_probabilities_stay_positive() {
    let dir = tempfile::tempdir().unwrap();
    let o = gwolab(&[
        "sim", "hitprob", "--trials", "20000", "--lb", "-0.5", "--ub", "0.5", "--const-a", "2", "--center-zero",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("hitprob.csv")).unwrap();
    let p = column(&text, "p_hat");
    assert_eq!(p.len(), 100);
    assert!(p.iter().all(|v| v.parse::<f64>().unwrap() > 0.0));
    assert_eq!(
        gwolab(&["sim", "hitprob", "--lb", "1", "--ub", "1", "--trials", "10"]).status.code(),
        Some(2)
    );
}

#[test]
fn benchmark_rows_and_usage_errors() {
    let o = gwolab(&["benchmark", "--problems", "1", "--variant", "original", "--eps", "0.1", "--trials", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(
        text.lines().next(),
        Some("problem,variant,eps,mode,trials,successes,mean_iterations,censored")
    );
    let s: usize = column(&text, "successes")[0].parse().unwrap();
    assert!(s >= 9);

    let o = gwolab(&["benchmark", "--problems", "9", "--variant", "stagnation", "--trials", "10"]);
    let s: usize = column(&stdout(&o), "successes")[0].parse().unwrap();
    assert!(s >= 8);

    assert_eq!(gwolab(&["benchmark", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(gwolab(&["benchmark", "--problems", "11"]).status.code(), Some(2));
    assert_eq!(gwolab(&["benchmark", "--mode", "sideways"]).status.code(), Some(2));
}

#[test]
fn dumped_traces_check_and_uptick_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = gwolab(&[
        "benchmark", "--problems", "6", "--variant", "original", "--trials", "2", "--iterations", "200",
        "--dump-traces", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let trace = dir.path().join("trace_f6_eps0.1_trial0.csv");
    let o = gwolab(&["check", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    assert!(lines.len() >= 4);
    // raise the best fitness on line 4 above line 3
    let mut fields: Vec<String> = lines[3].split(',').map(String::from).collect();
    fields[1] = "1e9".into();
    lines[3] = fields.join(",");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = gwolab(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("line 4"), "{}", stdout(&o));

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "t,best_fitness,dist_to_optimum\n0,1.0,\n1,xyz,\n").unwrap();
    let o = gwolab(&["check", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn bound_on_zero_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    fs::write(&path, "t,i,j,p\n1,1,1,0\n1,2,1,0\n2,1,1,0\n2,2,1,0\n").unwrap();
    let o = gwolab(&["bound", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let product: f64 = column(&text, "failure_product")[0].parse().unwrap();
    let bound: f64 = column(&text, "failure_upper_bound")[0].parse().unwrap();
    assert_eq!((product, bound), (1.0, 1.0));
}

#[test]
fn hitting_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gwolab(&["hitting", "--trials", "5", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("trial,hit,iterations_used"));
    assert_eq!(text.lines().count(), 6);
    assert!(column(&text, "hit").iter().all(|h| h == "true"));
    assert_eq!(fs::read_to_string(dir.path().join("hits.csv")).unwrap(), text);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "hitting");
}
