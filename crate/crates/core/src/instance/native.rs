//! JSON instance files (`format_version: "scp-1"`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cost, InstanceError, Result, ScpInstance};

pub const NATIVE_VERSION: &str = "scp-1";

#[derive(Serialize, Deserialize)]
struct NativeFile {
    format_version: String,
    name: String,
    m: usize,
    n: usize,
    costs: Vec<Cost>,
    rows: Vec<Vec<usize>>,
}

pub fn to_native_string(inst: &ScpInstance) -> String {
    let file = NativeFile {
        format_version: NATIVE_VERSION.to_string(),
        name: inst.name().to_string(),
        m: inst.m(),
        n: inst.n(),
        costs: inst.costs().to_vec(),
        rows: inst.rows().to_vec(),
    };
    serde_json::to_string(&file).expect("instance serialization cannot fail")
}

pub fn from_native_str(text: &str) -> Result<ScpInstance> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| InstanceError::MalformedFile(e.to_string()))?;
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(NATIVE_VERSION) => {}
        Some(other) => {
            return Err(InstanceError::VersionMismatch {
                found: other.to_string(),
                expected: NATIVE_VERSION,
            })
        }
        None => return Err(InstanceError::MalformedFile("missing format_version".into())),
    }
    let file: NativeFile =
        serde_json::from_value(value).map_err(|e| InstanceError::MalformedFile(e.to_string()))?;
    if file.costs.len() != file.n {
        return Err(InstanceError::MalformedFile(format!(
            "n = {} but {} costs",
            file.n,
            file.costs.len()
        )));
    }
    if file.rows.len() != file.m {
        return Err(InstanceError::MalformedFile(format!(
            "m = {} but {} rows",
            file.m,
            file.rows.len()
        )));
    }
    ScpInstance::from_rows(file.name, file.m, file.n, file.rows, file.costs)
}

pub fn write_native(inst: &ScpInstance, path: &Path) -> Result<()> {
    std::fs::write(path, to_native_string(inst))?;
    Ok(())
}

pub fn read_native(path: &Path) -> Result<ScpInstance> {
    from_native_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t3.scp");
        write_native(&t3(), &path).unwrap();
        assert_eq!(read_native(&path).unwrap(), t3());
    }

    #[test]
    fn fractional_costs_survive() {
        let inst = ScpInstance::from_rows(
            "frac",
            1,
            2,
            vec![vec![0, 1]],
            vec![Cost::parse("0.1").unwrap(), Cost::parse("123.456789").unwrap()],
        )
        .unwrap();
        assert_eq!(from_native_str(&to_native_string(&inst)).unwrap(), inst);
    }

    #[test]
    fn cost_length_mismatch_is_malformed() {
        let text = r#"{"format_version":"scp-1","name":"x","m":1,"n":2,"costs":[1],"rows":[[0,1]]}"#;
        assert!(matches!(from_native_str(text), Err(InstanceError::MalformedFile(_))));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = r#"{"format_version":"scp-9","name":"x","m":1,"n":1,"costs":[1],"rows":[[0]]}"#;
        assert!(matches!(from_native_str(text), Err(InstanceError::VersionMismatch { .. })));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(from_native_str("{\"format_"), Err(InstanceError::MalformedFile(_))));
    }
}
