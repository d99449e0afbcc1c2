//! Codebook files: pretty JSON, phases in radians at full precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ReflectionPattern;
use crate::codebook::{Aggregation, Codebook, CodebookEntry, CodebookKind, SectorSpec};
use crate::error::{Error, Result};
use crate::geometry::IRS_COUNT;

pub const CODEBOOK_FORMAT: &str = "irsap-codebook";
pub const CODEBOOK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    format: String,
    version: u32,
    geometry_hash: String,
    kind: CodebookKind,
    aggregation: Aggregation,
    seed: u64,
    #[serde(rename = "N")]
    elements: [usize; IRS_COUNT],
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    #[serde(rename = "D")]
    sectors: usize,
    d: usize,
    objective: Option<f64>,
    phases: Vec<f64>,
}

pub fn codebook_to_json(codebook: &Codebook) -> String {
    let elements = codebook
        .entries
        .first()
        .map_or([0; IRS_COUNT], |e| e.pattern.counts());
    let file = CodebookFile {
        format: CODEBOOK_FORMAT.into(),
        version: CODEBOOK_VERSION,
        geometry_hash: codebook.geometry_hash.clone(),
        kind: codebook.kind,
        aggregation: codebook.aggregation,
        seed: codebook.seed,
        elements,
        entries: codebook
            .entries
            .iter()
            .map(|e| EntryFile {
                sectors: e.sector.sectors,
                d: e.sector.index,
                objective: e.objective.is_finite().then_some(e.objective),
                phases: e.pattern.phases(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("codebook serializes");
    text.push('\n');
    text
}

/// Parses a codebook; `expected_hash` rejects files designed for another geometry.
pub fn codebook_from_json(text: &str, expected_hash: Option<&str>, path: &Path) -> Result<Codebook> {
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let file: CodebookFile = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
    if file.format != CODEBOOK_FORMAT {
        return Err(format_err(format!("format is `{}`, expected `{CODEBOOK_FORMAT}`", file.format)));
    }
    if file.version != CODEBOOK_VERSION {
        return Err(format_err(format!("version {} is not supported", file.version)));
    }
    if let Some(expected) = expected_hash {
        if file.geometry_hash != expected {
            return Err(Error::HashMismatch {
                expected: expected.to_string(),
                found: file.geometry_hash,
            });
        }
    }
    let entries = file
        .entries
        .into_iter()
        .map(|e| {
            Ok(CodebookEntry {
                sector: SectorSpec::new(e.sectors, e.d)?,
                pattern: ReflectionPattern::from_phases(file.elements, &e.phases)?,
                objective: e.objective.unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| format_err(e.to_string()))?;
    Ok(Codebook {
        kind: file.kind,
        geometry_hash: file.geometry_hash,
        aggregation: file.aggregation,
        seed: file.seed,
        entries,
    })
}

pub fn save_codebook(codebook: &Codebook, path: &Path) -> Result<()> {
    std::fs::write(path, codebook_to_json(codebook)).map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: &Path, expected_hash: Option<&str>) -> Result<Codebook> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    codebook_from_json(&text, expected_hash, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Codebook {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let counts = [4, 0, 4, 2];
        Codebook {
            kind: CodebookKind::SingleUser,
            geometry_hash: "abc".into(),
            aggregation: Aggregation::AveragePower,
            seed: 5,
            entries: (1..=2)
                .map(|d| CodebookEntry {
                    sector: SectorSpec::new(2, d).unwrap(),
                    pattern: ReflectionPattern::random(counts, &mut rng),
                    objective: if d == 1 { 1.5e-7 } else { f64::NAN },
                })
                .collect(),
        }
    }

    #[test]
    fn round_trip_keeps_phases() {
        let book = sample();
        let text = codebook_to_json(&book);
        let back = codebook_from_json(&text, Some("abc"), Path::new("x")).unwrap();
        assert_eq!(back.entries.len(), 2);
        assert_eq!(back.entries[0].objective, 1.5e-7);
        assert!(back.entries[1].objective.is_nan());
        for (a, b) in book.entries.iter().zip(&back.entries) {
            assert_eq!(a.sector, b.sector);
            for (x, y) in a.pattern.coefficients().iter().zip(b.pattern.coefficients()) {
                assert!((x - y).norm() < 1e-15);
            }
        }
        // phases survive a second pass up to the last bit of cis/arg
        let again = codebook_from_json(&codebook_to_json(&back), None, Path::new("x")).unwrap();
        for (a, b) in back.entries.iter().zip(&again.entries) {
            for (x, y) in a.pattern.phases().iter().zip(b.pattern.phases()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hash_mismatch_is_rejected() {
        let text = codebook_to_json(&sample());
        let err = codebook_from_json(&text, Some("def"), Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::HashMismatch { .. }));
    }

    #[test]
    fn wrong_format_is_rejected() {
        let text = codebook_to_json(&sample()).replace(CODEBOOK_FORMAT, "other");
        assert!(matches!(
            codebook_from_json(&text, None, Path::new("x")),
            Err(Error::Format { .. })
        ));
        let text = codebook_to_json(&sample()).replace("\"phases\": [", "\"phases\": [0.5, ");
        assert!(matches!(
            codebook_from_json(&text, None, Path::new("x")),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("book.json");
        save_codebook(&sample(), &path).unwrap();
        assert_eq!(load_codebook(&path, None).unwrap().entries.len(), 2);
        assert!(matches!(
            load_codebook(&dir.path().join("missing.json"), None),
            Err(Error::Io { .. })
        ));
    }
}
