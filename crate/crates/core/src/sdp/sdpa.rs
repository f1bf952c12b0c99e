//! SDPA sparse format (`.dat-s`).
//!
//! Layout: number of variables, number of blocks, block sizes (negative for
//! diagonal blocks), objective vector, then one `matno blkno i j value` line
//! per nonzero upper-triangle entry with 1-based indices; `matno` 0 is `F_0`.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConeBlock, SdpStandardForm, SparseEntries};
use crate::fmt::f64_17;
use crate::{Error, Result};

/// Renders the canonical text. Identical forms give identical bytes.
pub fn write_sdpa(form: &SdpStandardForm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", form.variable_count());
    let _ = writeln!(out, "{}", form.blocks.len());
    let sizes: Vec<String> = form
        .blocks
        .iter()
        .map(|b| if b.diagonal { format!("-{}", b.dim) } else { b.dim.to_string() })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = form.objective.iter().map(|v| f64_17(*v)).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (b, blk) in form.blocks.iter().enumerate() {
        lines.extend(blk.constant.iter().map(|&(i, j, v)| (0, b, i, j, v)));
        for (var, entries) in &blk.coefficients {
            lines.extend(entries.iter().map(|&(i, j, v)| (var + 1, b, i, j, v)));
        }
    }
    lines.sort_by_key(|&(mat, b, i, j, _)| (mat, b, i, j));
    for (mat, b, i, j, v) in lines {
        let _ = writeln!(out, "{mat} {} {} {} {}", b + 1, i + 1, j + 1, f64_17(v));
    }
    out
}

pub fn export_sdpa(form: &SdpStandardForm, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_sdpa(form))?;
    Ok(())
}

pub fn import_sdpa(path: impl AsRef<Path>) -> Result<SdpStandardForm> {
    parse_sdpa(&std::fs::read_to_string(path)?)
}

/// Parses SDPA sparse text. Leading comment lines (`"` or `*`) and the
/// punctuation `{ } ( ) ,` in the header are accepted.
pub fn parse_sdpa(text: &str) -> Result<SdpStandardForm> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .skip_while(|(_, l)| l.starts_with('"') || l.starts_with('*'));
    let err = |line: usize, msg: String| Error::Parse(format!("line {line}: {msg}"));
    let mut header = |what: &str| -> Result<(usize, Vec<String>)> {
        let (n, l) = lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of file before {what}")))?;
        let cleaned: String = l.chars().map(|ch| if "{}(),".contains(ch) { ' ' } else { ch }).collect();
        Ok((n, cleaned.split_whitespace().map(str::to_string).collect()))
    };

    let (n, tok) = header("variable count")?;
    let m: usize = tok.first().and_then(|t| t.parse().ok()).ok_or_else(|| err(n, "bad variable count".into()))?;
    let (n, tok) = header("block count")?;
    let nblocks: usize = tok.first().and_then(|t| t.parse().ok()).ok_or_else(|| err(n, "bad block count".into()))?;
    let (n, tok) = header("block sizes")?;
    if tok.len() < nblocks {
        return Err(err(n, format!("expected {nblocks} block sizes, got {}", tok.len())));
    }
    let mut blocks = Vec::with_capacity(nblocks);
    for t in &tok[..nblocks] {
        let s: i64 = t.parse().map_err(|_| err(n, format!("bad block size {t:?}")))?;
        if s == 0 {
            return Err(err(n, "zero block size".into()));
        }
        blocks.push(ConeBlock { dim: s.unsigned_abs() as usize, diagonal: s < 0, constant: Vec::new(), coefficients: Vec::new() });
    }
    let (n, tok) = header("objective")?;
    if tok.len() < m {
        return Err(err(n, format!("expected {m} objective values, got {}", tok.len())));
    }
    let objective = tok[..m]
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| err(n, format!("bad objective value {t:?}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut raw: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (n, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 5 {
            return Err(err(n, format!("expected 5 fields, got {}", tok.len())));
        }
        let idx = |k: usize| tok[k].parse::<usize>().map_err(|_| err(n, format!("bad index {:?}", tok[k])));
        let (mat, b, i, j) = (idx(0)?, idx(1)?, idx(2)?, idx(3)?);
        let v: f64 = tok[4].parse().map_err(|_| err(n, format!("bad value {:?}", tok[4])))?;
        if mat > m || b == 0 || b > nblocks {
            return Err(err(n, format!("matrix {mat} / block {b} out of range")));
        }
        let dim = blocks[b - 1].dim;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(err(n, format!("entry ({i},{j}) outside block of size {dim}")));
        }
        let (i, j) = (i.min(j) - 1, i.max(j) - 1);
        if blocks[b - 1].diagonal && i != j {
            return Err(err(n, format!("off-diagonal entry in diagonal block {b}")));
        }
        if v != 0.0 {
            raw.push((mat, b - 1, i, j, v));
        }
    }
    raw.sort_by_key(|&(mat, b, i, j, _)| (b, mat, i, j));
    if let Some(w) = raw.windows(2).find(|w| (w[0].0, w[0].1, w[0].2, w[0].3) == (w[1].0, w[1].1, w[1].2, w[1].3)) {
        return Err(Error::Parse(format!(
            "duplicate entry for matrix {} block {} ({},{})",
            w[0].0,
            w[0].1 + 1,
            w[0].2 + 1,
            w[0].3 + 1
        )));
    }
    for (mat, b, i, j, v) in raw {
        let blk = &mut blocks[b];
        if mat == 0 {
            blk.constant.push((i, j, v));
        } else {
            let var = mat - 1;
            match blk.coefficients.last_mut() {
                Some((last, entries)) if *last == var => entries.push((i, j, v)),
                _ => blk.coefficients.push((var, SparseEntries::from([(i, j, v)]))),
            }
        }
    }
    Ok(SdpStandardForm { objective, blocks })
}
