//! Run provenance: every report embeds a manifest recording what produced
//! it — the normalized command line, the experiment constants in force, the
//! seed, crate versions, input digests, and output paths.
//!
//! Two fields are deliberately excluded from anything that lands in a
//! report file, because reports must be byte-identical across reruns and
//! across worker-thread counts: wall time (measured per run and logged to
//! stderr instead) and the thread count (`--threads`/`-j` style arguments
//! are stripped from the recorded command line; by contract they must not
//! change numeric output).

use gapwb_heisenberg::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Crate versions baked in at build time.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Versions {
    pub cli: String,
    pub core: String,
    pub heisenberg: String,
}

pub fn versions() -> Versions {
    Versions {
        cli: crate::VERSION.to_string(),
        core: gapwb_core::VERSION.to_string(),
        heisenberg: gapwb_heisenberg::VERSION.to_string(),
    }
}

/// SHA-256 digest of one input file, recorded in read order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// The provenance block embedded at the top of every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Normalized command line: `gapwb <subcommand> <args>`, with
    /// thread-count flags removed (they must not affect the output).
    pub command: String,
    /// Snapshot of the experiment constants the run used.
    pub config: ExperimentConfig,
    pub seed: u64,
    pub versions: Versions,
    /// Digest of every input file, in the order it was read.
    pub input_hashes: Vec<InputHash>,
    /// Files this run wrote (report first, mirrors after); empty when the
    /// report went to stdout.
    pub output_paths: Vec<String>,
    /// Never serialized into reports: the measured wall time is logged to
    /// stderr so that identical runs produce identical bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Rebuild the provenance command line from raw arguments: `argv[0]` is
/// normalized to the program name and thread-count flags are dropped.
pub fn normalized_command(args: &[String]) -> String {
    let mut out: Vec<&str> = vec!["gapwb"];
    let mut skip_value = false;
    for arg in args.iter().skip(1) {
        if skip_value {
            skip_value = false;
            continue;
        }
        if arg == "--threads" {
            skip_value = true;
            continue;
        }
        if arg.starts_with("--threads=") {
            continue;
        }
        out.push(arg);
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmd(parts: &[&str]) -> String {
        normalized_command(&parts.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    #[test]
    fn thread_flags_are_stripped_from_the_command() {
        assert_eq!(
            cmd(&["/usr/bin/gapwb", "grid", "--k", "1", "--threads", "4"]),
            "gapwb grid --k 1"
        );
        assert_eq!(
            cmd(&["gapwb", "--threads=2", "grid", "--k", "1"]),
            "gapwb grid --k 1"
        );
        assert_eq!(cmd(&["x", "sparsest", "--instance", "a.json"]), "gapwb sparsest --instance a.json");
    }

    #[test]
    fn sha256_matches_a_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn wall_time_is_omitted_from_serialized_manifests() {
        let mut m = RunManifest {
            command: "gapwb grid --k 1".into(),
            config: ExperimentConfig::default(),
            seed: 7,
            versions: versions(),
            input_hashes: vec![],
            output_paths: vec![],
            wall_time_ms: None,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(!s.contains("wall_time_ms"));
        m.wall_time_ms = Some(1234);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"wall_time_ms\":1234"));
    }
}
