//! Loading inputs. Every error here is a parse error (exit status 2).

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;

use rpencil::io::{PencilJson, PhasePointJson};
use rpencil::neumann::NeumannState;
use rpencil::phasespace::{BracketPencil, PhasePoint};

fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("{origin}:{}:{}: {e}", e.line(), e.column()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn phase_point(path: &Path) -> Result<PhasePoint> {
    let origin = path.display().to_string();
    let w: PhasePointJson = parse(&read(path)?, &origin)?;
    PhasePoint::try_from(w).map_err(|e| anyhow!("{origin}: {e}"))
}

/// Inline JSON when the argument starts with `{`, otherwise a path.
pub fn pencil(spec: &str) -> Result<BracketPencil> {
    let (text, origin) = if spec.trim_start().starts_with('{') {
        (spec.to_string(), "--pencil".to_string())
    } else {
        (read(Path::new(spec))?, spec.to_string())
    };
    let w: PencilJson = parse(&text, &origin)?;
    BracketPencil::try_from(w).map_err(|e| anyhow!("{origin}: {e}"))
}

pub fn neumann_state(path: &Path) -> Result<NeumannState> {
    parse(&read(path)?, &path.display().to_string())
}

/// `j,k`
pub fn label(s: &str) -> std::result::Result<(usize, usize), String> {
    let (j, k) = s.split_once(',').ok_or("expected j,k")?;
    let j = j.trim().parse().map_err(|e| format!("bad j: {e}"))?;
    let k = k.trim().parse().map_err(|e| format!("bad k: {e}"))?;
    Ok((j, k))
}
