use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{StainModel, Validate};

/// Seven whitespace-separated numbers: the 3x2 matrix column-major, then `h_column`.
pub fn parse_stain_model(text: &str) -> Result<StainModel> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 7 {
        return Err(Error::Format(format!(
            "stain model needs 7 numbers, found {}",
            tokens.len()
        )));
    }
    let mut entries = [0.0; 6];
    for (slot, tok) in entries.iter_mut().zip(&tokens) {
        *slot = tok
            .parse()
            .map_err(|e| Error::Format(format!("bad matrix entry {tok:?}: {e}")))?;
    }
    let h_column = tokens[6]
        .parse()
        .map_err(|e| Error::Format(format!("bad h_column {:?}: {e}", tokens[6])))?;
    let model = StainModel {
        columns: [
            [entries[0], entries[1], entries[2]],
            [entries[3], entries[4], entries[5]],
        ],
        h_column,
    };
    model.validate()?;
    Ok(model)
}

pub fn read_stain_model(path: &Path) -> Result<StainModel> {
    parse_stain_model(&std::fs::read_to_string(path)?)
}

pub fn write_stain_model(model: &StainModel, path: &Path) -> Result<()> {
    let nums: Vec<String> = model
        .columns
        .iter()
        .flatten()
        .map(|v| format!("{v:.17e}"))
        .collect();
    let text = format!("{}\n{}\n", nums.join(" "), model.h_column);
    super::write_atomic(path, text.as_bytes())
}
