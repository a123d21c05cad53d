use std::path::PathBuf;
use std::process::{Command, Output};

fn zdress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zdress"))
        .args(args)
        .env_remove("ZDRESS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zdress-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn dim_prints_fuzzy_sector_size() {
    let o = zdress(&["dim", "--fuzzy-n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "18");
    let o = zdress(&["dim", "--qubits", "8", "--weight", "4"]);
    assert_eq!(stdout(&o).trim(), "70");
}

#[test]
fn dim_lists_basis() {
    let o = zdress(&["dim", "--qubits", "4", "--weight", "2", "--list"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "6");
    assert_eq!(lines[1], "index,state");
    assert_eq!(lines.len(), 8);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(zdress(&["ed"]).status.code(), Some(2));
    assert_eq!(zdress(&["dim", "--bogus"]).status.code(), Some(2));
    assert_eq!(zdress(&["nonsense"]).status.code(), Some(2));
    assert_eq!(zdress(&["closure", "--sector", "ring:3", "--pool", "all-pair"]).status.code(), Some(2));
    assert_eq!(zdress(&["ed", "--model", "q=1"]).status.code(), Some(2));
}

#[test]
fn verify_identities_passes() {
    let o = zdress(&["verify-identities"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 150);
    assert!(!text.contains("FAIL"));
}

#[test]
fn closure_expectations_drive_exit_code() {
    let ok = zdress(&["closure", "--sector", "hamming:4,2", "--pool", "adjacent", "--expect", "6"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("dimension 6"));
    let bad = zdress(&["closure", "--sector", "hamming:4,2", "--pool", "adjacent", "--expect", "15"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn closure_reads_generator_file() {
    let dir = scratch("gens");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gens.txt");
    // L_01 and L_12 on four qubits.
    std::fs::write(&path, "0.5 0 XYII\n-0.5 0 YXII\n---\n0.5 0 IXYI\n-0.5 0 IYXI\n").unwrap();
    let o = zdress(&["closure", "--sector", "hamming:4,2", "--gens", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("2 generators"));
}

#[test]
fn ed_prints_reference_energies() {
    let o = zdress(&["ed", "--s", "1.5", "--v0", "4.75", "--v1", "1", "--h", "6.32", "--levels", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("-16.18995794"));
    assert!(text.contains("-8.59299819"));
    assert!(text.contains("3.61550789"));
}

#[test]
fn spectrum_csv_columns() {
    let o = zdress(&["spectrum", "--rescale"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("energy,dimension,ell,z2"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 18);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    assert!(rows.iter().any(|r| r[1].parse::<f64>().unwrap() == 3.0 && r[2] == "2" && r[3] == "1"));
    let mantissa = rows[1][0].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn spectrum_bootstrap_columns_at_table_field() {
    let o = zdress(&["spectrum", "--h", "6.15", "--rescale", "--bootstrap-compare"]);
    let text = stdout(&o);
    assert!(text.starts_with("energy,dimension,ell,z2,bootstrap,deviation_pct\n"));
    let sigma: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert!((sigma[1].parse::<f64>().unwrap() - 0.51463).abs() < 1e-4);
    assert_eq!(sigma[4].parse::<f64>().unwrap(), 0.518);
    assert_eq!(zdress(&["spectrum", "--bootstrap-compare"]).status.code(), Some(2));
}

#[test]
fn gates_verify_reports_table() {
    let dir = scratch("gates");
    let emit = dir.join("decomp.txt");
    let o = zdress(&["gates", "verify", "--samples", "20", "--emit", emit.to_str().unwrap()]);
    let text = stdout(&o);
    for kind in ["G2", "A2", "BEMPA_B", "G4", "A4"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind} missing");
    }
    assert!(text.lines().filter(|l| l.starts_with("G2 ") || l.starts_with("G4 ")).all(|l| l.ends_with("PASS")));
    // The A4 decomposition is exact but uses 20 CNOTs instead of the tabulated 14.
    assert!(text.lines().any(|l| l.starts_with("A4") && l.ends_with("FAIL")));
    assert_eq!(o.status.code(), Some(1));
    let emitted = std::fs::read_to_string(emit).unwrap();
    assert!(emitted.contains("# G4 theta=0.3"));
    assert!(emitted.lines().any(|l| l.starts_with("CNOT ")));
}

#[test]
fn jacobian_of_shipped_circuit() {
    let o = zdress(&["jacobian", "--points", "2", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rank 17 of w-1 = 17"));
}

#[test]
fn reach_is_reproducible() {
    let a = zdress(&["reach", "--targets", "8", "--seed", "7"]);
    let b = zdress(&["reach", "--targets", "8", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("reached 8/8"));
}

#[test]
fn vqe_writes_trace_and_manifest() {
    let dir = scratch("vqe");
    let trace = dir.join("gs.dat");
    let o = zdress(&["vqe", "--seed", "3", "--trace", trace.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.lines().any(|l| l == "# phase2 500"));
    let mut last = None;
    for l in text.lines().filter(|l| !l.starts_with('#')) {
        let mut cols = l.split_whitespace();
        let i: usize = cols.next().unwrap().parse().unwrap();
        let _: f64 = cols.next().unwrap().parse().unwrap();
        assert!(last.is_none_or(|p| i > p));
        last = Some(i);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("vqe.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["flags"]["model"]["h"], 6.32);
    assert!(stdout(&o).contains("exact -16.1899579442"));
}

#[test]
fn vqd_default_betas() {
    let dir = scratch("vqd");
    let o = zdress(&["vqd", "--levels", "2", "--betas", "10", "30,20", "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("vqd.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for l in csv.lines().skip(1) {
        let v: Vec<f64> = l.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((v[0] - v[1]).abs() < 1e-5);
    }
    assert_eq!(zdress(&["vqd", "--levels", "2", "--betas", "10"]).status.code(), Some(2));
}

#[test]
fn build_spanning_small_sector() {
    let dir = scratch("span");
    let path = dir.join("c.txt");
    let o = zdress(&["build-spanning", "--sector", "hamming:4,2", "--input", "0011", "--pool", "all-pair", "--write", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("qubits 4\ninput 0011\n"));
    let o = zdress(&["build-spanning", "--sector", "hamming:4,2", "--input", "0011", "--pool", "adjacent"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_dir_from_environment() {
    let dir = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_zdress"))
        .args(["dim", "--fuzzy-n", "4"])
        .env("ZDRESS_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.join("dim.manifest.json").exists());
}
