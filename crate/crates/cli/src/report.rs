//! CSV emission and the run manifest.
//!
//! Column schemas are fixed: ber files carry `ebn0_db, ber_mean, ber_var,
//! ber_min, ber_max, frames, bit_errors`; nmse files `epoch,
//! train_nmse_db, val_nmse_db, repetition`; constellation files `re, im,
//! symbol_index`. Floats are printed with 17 significant digits so output
//! is lossless and byte-stable.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use stbc_core::harness::{BerRecord, ConstellationPoint, RepTrace};
use stbc_core::ptrbf::fmt_f64;
use stbc_core::{Error, Result};

fn nmse_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn ber_csv(records: &[BerRecord]) -> String {
    let mut out = String::from("ebn0_db,ber_mean,ber_var,ber_min,ber_max,frames,bit_errors\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(r.ebn0_db),
            fmt_f64(r.ber_mean),
            fmt_f64(r.ber_variance),
            fmt_f64(r.ber_min),
            fmt_f64(r.ber_max),
            r.frames,
            r.bit_errors
        ));
    }
    out
}

pub fn nmse_csv(traces: &[RepTrace]) -> String {
    let mut out = String::from("epoch,train_nmse_db,val_nmse_db,repetition\n");
    for t in traces {
        for r in &t.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch,
                fmt_f64(nmse_db(r.train_nmse)),
                fmt_f64(nmse_db(r.val_nmse)),
                t.repetition
            ));
        }
    }
    out
}

pub fn constellation_csv(points: &[ConstellationPoint]) -> String {
    let mut out = String::from("re,im,symbol_index\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.re),
            fmt_f64(p.im),
            p.symbol_index
        ));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Re-read every emitted file, check its digest against the sent bytes,
/// and write the manifest last.
pub fn write_manifest(
    dir: &Path,
    header_lines: &[String],
    files: &[(PathBuf, String)],
) -> Result<PathBuf> {
    let mut manifest = String::new();
    for line in header_lines {
        manifest.push_str(line);
        manifest.push('\n');
    }
    for (path, expected_digest) in files {
        let bytes = fs::read(path)
            .map_err(|e| Error::Usage(format!("cannot re-read {}: {e}", path.display())))?;
        let actual = sha256_hex(&bytes);
        if actual != *expected_digest {
            return Err(Error::Numeric(format!(
                "digest mismatch for {} after write",
                path.display()
            )));
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        manifest.push_str(&format!("file.{name}.sha256 = {actual}\n"));
    }
    write_file(dir, "manifest.txt", &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stbc_core::ptrbf::TrainRecord;

    #[test]
    fn test_ber_csv_schema() {
        let rec = BerRecord {
            ebn0_db: 4.0,
            ber_mean: 0.125,
            ber_variance: 0.0,
            ber_min: 0.125,
            ber_max: 0.125,
            frames: 10,
            bit_errors: 10,
        };
        let csv = ber_csv(&[rec]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "ebn0_db,ber_mean,ber_var,ber_min,ber_max,frames,bit_errors"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("4.0000000000000000e0,1.2500000000000000e-1,"));
        assert!(row.ends_with(",10,10"));
    }

    #[test]
    fn test_nmse_csv_in_db() {
        let trace = RepTrace {
            repetition: 2,
            records: vec![TrainRecord {
                epoch: 0,
                train_nmse: 0.1,
                val_nmse: 0.01,
            }],
        };
        let csv = nmse_csv(&[trace]);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("0,-1.0000000000000"), "{row}");
        assert!(row.ends_with(",2"));
    }

    #[test]
    fn test_sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
