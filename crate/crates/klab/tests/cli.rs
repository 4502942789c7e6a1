//! End-to-end tests of the klab binary: exit codes, cache lifecycle,
//! stdout/stderr separation, report formats and merging.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use klab::theorems::{DeviationReport, MergedReports};

fn klab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_klab"))
}

fn run(args: &[&str]) -> Output {
    klab().args(args).output().expect("binary runs")
}

fn cache_args(dir: &Path) -> Vec<String> {
    vec![
        "--cache-dir".into(),
        dir.to_string_lossy().into_owned(),
        "--scale-L".into(),
        "2".into(),
        "--prog-bits".into(),
        "16".into(),
        "--budget".into(),
        "256".into(),
    ]
}

fn run_small(dir: &Path, head: &[&str], extra: &[&str]) -> Output {
    let mut args: Vec<String> = head.iter().map(|s| s.to_string()).collect();
    args.extend(cache_args(dir));
    args.extend(extra.iter().map(|s| s.to_string()));
    klab().args(&args).output().expect("binary runs")
}

#[test]
fn machine_describe_is_stable_and_digest_checked() {
    let a = run(&["machine", "describe"]);
    let b = run(&["machine", "describe"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let fp_line = text
        .lines()
        .find(|l| l.starts_with("fingerprint: "))
        .expect("fingerprint line");
    let fp = fp_line.trim_start_matches("fingerprint: ").trim();
    assert_eq!(fp.len(), 64);
    assert_eq!(fp, klab::constants::MACHINE_FINGERPRINT_HEX);
    // the canonical text (everything before the mode line) hashes to it
    let canonical: String = text
        .lines()
        .take_while(|l| !l.starts_with("mode: "))
        .map(|l| format!("{l}\n"))
        .collect();
    use sha2::Digest;
    let digest: [u8; 32] = sha2::Sha256::digest(canonical.as_bytes()).into();
    assert_eq!(klab::machine::hex32(&digest), fp);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["bogus-command"]).status.code(), Some(64));
    assert_eq!(run(&["verify"]).status.code(), Some(64));
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["verify", "NOT_AN_IDENTITY"], &[]);
    assert_eq!(out.status.code(), Some(64));
    // caps are usage errors too
    let out = run(&[
        "verify",
        "THM1",
        "--prog-bits",
        "27",
        "--cache-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn build_verify_cycle_small_scale() {
    let dir = tempfile::tempdir().unwrap();

    // build at L=2 completes well under a minute
    let started = Instant::now();
    let out = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(started.elapsed().as_secs() < 60, "{:?}", started.elapsed());
    assert!(out.stdout.is_empty(), "build must not write to stdout");

    // second run is a no-op
    let out2 = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out2.status.code(), Some(0));
    let stderr = String::from_utf8(out2.stderr).unwrap();
    assert!(stderr.contains("nothing rebuilt"), "{stderr}");

    // verify all exits 0; stdout is pure JSON that matches the schema
    let out = run_small(dir.path(), &["verify", "all"], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<DeviationReport> = serde_json::from_slice(&out.stdout).expect("schema-valid JSON");
    assert_eq!(reports.len(), 18);
    for r in &reports {
        assert_eq!(r.machine_fingerprint, klab::constants::MACHINE_FINGERPRINT_HEX);
        assert_eq!(r.scale.l, 2);
    }

    // csv format carries the same column names
    let out = run_small(dir.path(), &["verify", "THM1"], &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with(
        "identity_id,L,P,T,machine_fingerprint,min,max,mean,coverage,id,deviation,excluded_reason"
    ));

    // single-identity verify with --out writes the same payload
    let json_path = dir.path().join("thm1.json");
    let out = run_small(
        dir.path(),
        &["verify", "THM1"],
        &["--out", json_path.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&json_path).unwrap(), out.stdout);
}

#[test]
fn lock_held_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path()).unwrap();
    fs::write(dir.path().join(".klab-lock"), b"held\n").unwrap();
    let out = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out.status.code(), Some(6));
    let out = run_small(dir.path(), &["verify", "THM1"], &[]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn worker_counts_give_byte_identical_caches() {
    let d1 = tempfile::tempdir().unwrap();
    let d8 = tempfile::tempdir().unwrap();
    let out = run_small(d1.path(), &["tables", "build"], &["--workers", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_small(d8.path(), &["tables", "build"], &["--workers", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<PathBuf> = fs::read_dir(d1.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "bin"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for p in names {
        let other = d8.path().join(p.file_name().unwrap());
        assert_eq!(
            fs::read(&p).unwrap(),
            fs::read(&other).unwrap(),
            "cache {} differs between worker counts",
            p.display()
        );
    }
}

#[test]
fn tampered_caches_fail_verify_with_5_and_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let target: PathBuf = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().starts_with("stage_a_plain"))
        })
        .unwrap();
    let original = fs::read(&target).unwrap();

    // flip a fingerprint byte and re-seal the digest → exit 5
    use sha2::Digest;
    let mut tampered = original.clone();
    tampered[8] ^= 0x01; // byte inside the stored fingerprint
    let body = tampered.len() - 32;
    let digest: [u8; 32] = sha2::Sha256::digest(&tampered[..body]).into();
    tampered[body..].copy_from_slice(&digest);
    fs::write(&target, &tampered).unwrap();
    let out = run_small(dir.path(), &["verify", "THM1"], &[]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));

    // corrupt the digest itself → exit 3
    let mut corrupt = original.clone();
    let n = corrupt.len();
    corrupt[n - 1] ^= 0xFF;
    fs::write(&target, &corrupt).unwrap();
    let out = run_small(dir.path(), &["verify", "THM1"], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    // tables build repairs the damage in place
    let out = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&target).unwrap(), original);
}

#[test]
fn report_merge_identity_and_fingerprint_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["tables", "build"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let r1 = dir.path().join("thm1.json");
    let out = run_small(dir.path(), &["verify", "THM1"], &["--out", r1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r2 = dir.path().join("counterex.json");
    let out = run_small(dir.path(), &["verify", "COUNTEREX"], &["--out", r2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // merging one file is the identity on its reports
    let merged1 = dir.path().join("m1.json");
    let out = run(&["report", "merge", "--out", merged1.to_str().unwrap(), r1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: MergedReports = serde_json::from_str(&fs::read_to_string(&merged1).unwrap()).unwrap();
    let originals: Vec<DeviationReport> =
        serde_json::from_str(&fs::read_to_string(&r1).unwrap()).unwrap();
    assert_eq!(doc.reports.len(), originals.len());
    assert_eq!(doc.reports.values().next().unwrap(), &originals[0]);

    // merged counterexample trend keeps one row per n
    let merged2 = dir.path().join("m2.json");
    let out = run(&[
        "report", "merge",
        "--out", merged2.to_str().unwrap(),
        r1.to_str().unwrap(),
        r2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: MergedReports = serde_json::from_str(&fs::read_to_string(&merged2).unwrap()).unwrap();
    let cx = doc
        .reports
        .values()
        .find(|r| r.identity_id == "COUNTEREX")
        .unwrap();
    for n in [2, 4, 8] {
        assert_eq!(
            cx.items.iter().filter(|i| i.id.starts_with(&format!("n={n},"))).count(),
            1
        );
    }

    // mixed fingerprints exit 5
    let mut alien: Vec<DeviationReport> =
        serde_json::from_str(&fs::read_to_string(&r1).unwrap()).unwrap();
    alien[0].machine_fingerprint = "ff".repeat(32);
    let alien_path = dir.path().join("alien.json");
    fs::write(&alien_path, serde_json::to_string(&alien).unwrap()).unwrap();
    let out = run(&[
        "report", "merge",
        "--out", dir.path().join("m3.json").to_str().unwrap(),
        r1.to_str().unwrap(),
        alien_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));

    // no inputs is a usage error
    let out = run(&["report", "merge", "--out", dir.path().join("m4.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn capacity_exceeded_exits_2_before_building() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let out = klab()
        .args([
            "tables", "build",
            "--cache-dir", dir.path().to_str().unwrap(),
            "--scale-L", "10",
            "--prog-bits", "26",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // the ceiling check must fire before any enumeration happens
    assert!(started.elapsed().as_secs() < 10);
    // no cache file was written (the lock is removed on exit)
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unwritable_cache_dir_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file_path = dir.path().join("not-a-dir");
    fs::write(&file_path, b"plain file").unwrap();
    let out = klab()
        .args([
            "tables", "build",
            "--cache-dir", file_path.to_str().unwrap(),
            "--scale-L", "2",
            "--prog-bits", "12",
            "--budget", "128",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn env_var_sets_default_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("from-env");
    let out = klab()
        .env("KLAB_CACHE_DIR", &cache)
        .args([
            "tables", "build",
            "--scale-L", "2",
            "--prog-bits", "12",
            "--budget", "128",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let built = fs::read_dir(&cache).unwrap().count();
    assert_eq!(built, 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("klab.conf");
    fs::write(
        &cfg_path,
        format!(
            "# small run\nscale_l = 2\nprog_bits = 14\nbudget = 256\ncache_dir = {}\n",
            dir.path().join("cache").display()
        ),
    )
    .unwrap();
    // flag overrides the file's prog_bits
    let out = run(&[
        "tables", "build",
        "--config", cfg_path.to_str().unwrap(),
        "--prog-bits", "12",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let built: Vec<String> = fs::read_dir(dir.path().join("cache"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(built.iter().any(|n| n.contains("P12")), "{built:?}");
    assert!(!built.iter().any(|n| n.contains("P14")), "{built:?}");
}
