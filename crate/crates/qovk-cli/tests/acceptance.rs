//! Acceptance criterion 7: seeded reruns of the full comparison produce
//! byte-identical results files.

use std::fs;
use std::process::Command;

#[test]
fn criterion_7_rerun_determinism() {
    let binary = env!("CARGO_BIN_EXE_qovk");
    let base = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = base.path().join(format!("run{run}"));
        let status = Command::new(binary)
            .args([
                "reproduce-table1",
                "--seed",
                "42",
                "--quiet",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        // The ordering property does not hold for this configuration, so the
        // documented exit contract yields 1; determinism is judged on bytes.
        assert!(status.code() == Some(0) || status.code() == Some(1));
        outputs.push(fs::read(out.join("results.json")).unwrap());
        assert!(out.join("results.csv").exists());
        assert!(out.join("resolved_config.json").exists());
    }
    let pass = outputs[0] == outputs[1];
    println!(
        "criterion 7 [{}]: reproduce-table1 --seed 42 twice gives byte-identical results.json ({} bytes)",
        if pass { "PASS" } else { "FAIL" },
        outputs[0].len()
    );
    assert!(pass, "criterion 7 failed: results.json differs between reruns");
}
