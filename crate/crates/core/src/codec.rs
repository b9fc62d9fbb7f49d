//! Canonical text serialization.
//!
//! A matrix block is a line `q m rows cols` followed by one line per row.
//! Each F_{q^m} entry is the decimal integer Σ c_i·q^{i−1}, where c_i is
//! its β_i digit; F_q matrices use m = 1. Artifacts are documents: a header
//! `<KIND> v1 <role>`, `key value` lines, then blocks each introduced by a
//! `---` line.

use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::algebra::{ExtField, MatFq, MatFqm, Matrix};
use crate::error::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn header_dims(line: Option<&str>) -> Result<[u64; 4]> {
    let line = line.ok_or_else(|| parse_err("missing matrix header"))?;
    let v: Vec<u64> = line
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|_| parse_err(format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| parse_err(format!("matrix header {line:?} needs 4 fields")))
}

pub fn write_fqm(ext: &ExtField, m: &MatFqm) -> String {
    let mut out = format!("{} {} {} {}\n", ext.q(), ext.m(), m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| ext.to_biguint(x).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_fqm(ext: &ExtField, text: &str) -> Result<MatFqm> {
    let mut lines = text.lines().skip_while(|l| l.trim().is_empty());
    let [q, m, rows, cols] = header_dims(lines.next())?;
    if q != ext.q() || m != ext.m() as u64 {
        return Err(parse_err(format!("matrix over q={q}, m={m}; expected q={}, m={}", ext.q(), ext.m())));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| parse_err(format!("missing row {r}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(parse_err(format!("row {r} has {} entries, expected {cols}", toks.len())));
        }
        for t in toks {
            let v: BigUint = t.parse().map_err(|_| parse_err(format!("bad entry {t:?}")))?;
            data.push(ext.from_biguint(&v).map_err(|_| parse_err(format!("entry {t} out of range")))?);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(parse_err("trailing lines after matrix"));
    }
    Matrix::new(rows, cols, data)
}

pub fn write_fq(ext: &ExtField, m: &MatFq) -> String {
    let mut out = format!("{} 1 {} {}\n", ext.q(), m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_fq(ext: &ExtField, text: &str) -> Result<MatFq> {
    let mut lines = text.lines().skip_while(|l| l.trim().is_empty());
    let [q, m, rows, cols] = header_dims(lines.next())?;
    if q != ext.q() || m != 1 {
        return Err(parse_err(format!("expected an F_{} matrix, found q={q}, m={m}", ext.q())));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| parse_err(format!("missing row {r}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(parse_err(format!("row {r} has {} entries, expected {cols}", toks.len())));
        }
        for t in toks {
            let v: u32 = t.parse().map_err(|_| parse_err(format!("bad entry {t:?}")))?;
            if !ext.fq_is_valid(v) {
                return Err(parse_err(format!("entry {v} is not in F_{}", ext.q())));
            }
            data.push(v);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(parse_err("trailing lines after matrix"));
    }
    Matrix::new(rows, cols, data)
}

/// Vectors are written as 1×n matrices.
pub fn write_vec(ext: &ExtField, v: &[crate::algebra::FqmElem]) -> String {
    write_fqm(ext, &Matrix::from_rows(vec![v.to_vec()], v.len()))
}

pub fn read_vec(ext: &ExtField, text: &str) -> Result<Vec<crate::algebra::FqmElem>> {
    let m = read_fqm(ext, text)?;
    if m.rows() != 1 {
        return Err(parse_err(format!("expected a row vector, found {} rows", m.rows())));
    }
    Ok(m.row_vec(0))
}

/// A headed artifact with ordered fields and raw blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub kind: String,
    pub role: String,
    pub fields: Vec<(String, String)>,
    pub blocks: Vec<String>,
}

impl Document {
    pub fn new(kind: &str, role: &str) -> Self {
        Document { kind: kind.into(), role: role.into(), fields: Vec::new(), blocks: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn block(mut self, text: String) -> Self {
        self.blocks.push(text);
        self
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| parse_err(format!("missing field {key:?}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse().map_err(|_| parse_err(format!("field {key:?} = {v:?} is not an integer")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        v.parse().map_err(|_| parse_err(format!("field {key:?} = {v:?} is not an integer")))
    }

    pub fn expect(&self, kind: &str, role: &str, blocks: usize) -> Result<()> {
        if self.kind != kind || self.role != role {
            return Err(parse_err(format!(
                "expected a {kind} {role}, found a {} {}",
                self.kind, self.role
            )));
        }
        if self.blocks.len() != blocks {
            return Err(parse_err(format!("{role} needs {blocks} blocks, found {}", self.blocks.len())));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} v1 {}\n", self.kind, self.role);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k} {v}");
        }
        for b in &self.blocks {
            out.push_str("---\n");
            out.push_str(b);
            if !b.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| parse_err("empty document"))?;
        let toks: Vec<&str> = head.split_whitespace().collect();
        if toks.len() != 3 || toks[1] != "v1" {
            return Err(parse_err(format!("bad document header {head:?}")));
        }
        let mut doc = Document::new(toks[0], toks[2]);
        let mut current: Option<String> = None;
        for line in lines {
            if line.trim() == "---" {
                if let Some(b) = current.take() {
                    doc.blocks.push(b);
                }
                current = Some(String::new());
            } else if let Some(b) = current.as_mut() {
                b.push_str(line);
                b.push('\n');
            } else if !line.trim().is_empty() {
                let (k, v) = line
                    .split_once(' ')
                    .ok_or_else(|| parse_err(format!("field line {line:?} has no value")))?;
                doc.fields.push((k.into(), v.trim().into()));
            }
        }
        if let Some(b) = current {
            doc.blocks.push(b);
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn packed_digits_match_the_documented_order() {
        let ext = ExtField::new(2, 3).unwrap();
        // β_3 = 1 carries the most significant digit
        let one = Matrix::from_rows(vec![vec![ext.one()]], 1);
        assert_eq!(write_fqm(&ext, &one), "4 3 1 1\n16\n");
        let x2 = Matrix::from_rows(vec![vec![ext.basis_elem(1)]], 1);
        assert_eq!(write_fqm(&ext, &x2), "4 3 1 1\n1\n");
    }

    #[test]
    fn rejects_foreign_fields_and_bad_entries() {
        let ext = ExtField::new(1, 4).unwrap();
        assert!(read_fqm(&ext, "2 5 1 1\n0\n").is_err());
        assert!(read_fqm(&ext, "2 4 1 1\n16\n").is_err());
        assert!(read_fqm(&ext, "2 4 1 2\n1\n").is_err());
        assert!(read_fq(&ext, "2 1 1 1\n2\n").is_err());
    }

    #[test]
    fn document_round_trip() {
        let ext = ExtField::new(4, 5).unwrap();
        let mut rng = rng_from_seed(1);
        let m = Matrix::random(&ext.fqm(), 3, 4, &mut rng);
        let p = Matrix::random(&ext.fq(), 2, 2, &mut rng);
        let doc = Document::new("RANKSIGN", "test").field("n", 8).block(write_fqm(&ext, &m)).block(write_fq(&ext, &p));
        let back = Document::parse(&doc.render()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(read_fqm(&ext, &back.blocks[0]).unwrap(), m);
        assert_eq!(read_fq(&ext, &back.blocks[1]).unwrap(), p);
        assert_eq!(back.get_usize("n").unwrap(), 8);
    }

    proptest! {
        #[test]
        fn matrix_round_trip(a in 1u32..6, m in 1usize..12, rows in 0usize..4, cols in 0usize..5, seed: u64) {
            let ext = ExtField::new(a, m).unwrap();
            let mut rng = rng_from_seed(seed);
            let x = Matrix::random(&ext.fqm(), rows, cols, &mut rng);
            prop_assert_eq!(read_fqm(&ext, &write_fqm(&ext, &x)).unwrap(), x);
            let y = Matrix::random(&ext.fq(), rows, cols, &mut rng);
            prop_assert_eq!(read_fq(&ext, &write_fq(&ext, &y)).unwrap(), y);
        }
    }
}
