// SPDX-License-Identifier: Apache-2.0

//! Plain-text model files.
//!
//! ```text
//! ATPG-MODEL 1
//! kind hybnn
//! dims 17 32 16
//! block extractor.w1 32 17
//! <one line of space-separated values per row>
//! end
//! ```
//!
//! Reals are written with 17 significant digits so a save/load cycle is
//! bit-exact. A bundle names the three files behind a meta heuristic, by
//! path relative to the bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::forest::RandomForest;
use crate::nn::HybNN;
use crate::svr::Svr;
use crate::LearnError;

pub const MODEL_MAGIC: &str = "ATPG-MODEL";
pub const BUNDLE_MAGIC: &str = "ATPG-BUNDLE";
pub const FORMAT_VERSION: u32 = 1;

pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct ModelWriter {
    out: String,
}

impl ModelWriter {
    pub fn new(kind: &str) -> Self {
        ModelWriter {
            out: format!("{MODEL_MAGIC} {FORMAT_VERSION}\nkind {kind}\n"),
        }
    }

    pub fn field(&mut self, key: &str, values: &[String]) {
        self.out.push_str(key);
        for v in values {
            self.out.push(' ');
            self.out.push_str(v);
        }
        self.out.push('\n');
    }

    /// A row-major `rows x cols` block.
    pub fn block(&mut self, name: &str, rows: usize, cols: usize, data: &[f64]) {
        debug_assert_eq!(data.len(), rows * cols);
        let _ = writeln!(self.out, "block {name} {rows} {cols}");
        for r in 0..rows {
            let line: Vec<String> = data[r * cols..(r + 1) * cols]
                .iter()
                .map(|&x| fmt_exact(x))
                .collect();
            self.out.push_str(&line.join(" "));
            self.out.push('\n');
        }
    }

    pub fn finish(mut self) -> String {
        self.out.push_str("end\n");
        self.out
    }
}

pub struct ModelReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> ModelReader<'a> {
    /// Checks the magic line and the model kind.
    pub fn new(text: &'a str, kind: &str) -> Result<Self, LearnError> {
        let mut r = ModelReader {
            lines: text.lines().enumerate().peekable(),
            line: 0,
        };
        let head = r.next_line()?;
        if head.len() != 2 || head[0] != MODEL_MAGIC {
            return Err(r.error("not a model file"));
        }
        if head[1] != FORMAT_VERSION.to_string() {
            return Err(r.error(&format!("unsupported version {}", head[1])));
        }
        let found = r.field("kind")?;
        if found != [kind] {
            return Err(r.error(&format!(
                "expected a {kind} model, found {}",
                found.join(" ")
            )));
        }
        Ok(r)
    }

    pub fn error(&self, message: &str) -> LearnError {
        LearnError::Format {
            line: self.line,
            message: message.to_string(),
        }
    }

    pub fn next_line(&mut self) -> Result<Vec<&'a str>, LearnError> {
        loop {
            let Some((idx, line)) = self.lines.next() else {
                return Err(LearnError::Format {
                    line: self.line + 1,
                    message: "unexpected end of file".into(),
                });
            };
            self.line = idx + 1;
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok(line.split_whitespace().collect());
            }
        }
    }

    /// The values of a `key v1 v2 ...` line.
    pub fn field(&mut self, key: &str) -> Result<Vec<&'a str>, LearnError> {
        let t = self.next_line()?;
        if t.first() != Some(&key) {
            return Err(self.error(&format!("expected `{key}`")));
        }
        Ok(t[1..].to_vec())
    }

    pub fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, LearnError> {
        s.parse()
            .map_err(|_| self.error(&format!("bad value `{s}`")))
    }

    pub fn field_one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, LearnError> {
        let v = self.field(key)?;
        if v.len() != 1 {
            return Err(self.error(&format!("`{key}` takes one value")));
        }
        self.parse(v[0])
    }

    pub fn field_usizes(&mut self, key: &str) -> Result<Vec<usize>, LearnError> {
        let v = self.field(key)?;
        v.iter().map(|s| self.parse(s)).collect()
    }

    /// Reads a block and checks its name and shape.
    pub fn block(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>, LearnError> {
        let head = self.field("block")?;
        if head.len() != 3 || head[0] != name {
            return Err(self.error(&format!("expected block `{name}`")));
        }
        let shape: (usize, usize) = (self.parse(head[1])?, self.parse(head[2])?);
        if shape != (rows, cols) {
            return Err(self.error(&format!(
                "block `{name}` is {}x{}, expected {rows}x{cols}",
                shape.0, shape.1
            )));
        }
        self.rows(rows, cols)
    }

    /// Reads a block of any row count with `cols` columns.
    pub fn block_any(&mut self, name: &str, cols: usize) -> Result<Vec<f64>, LearnError> {
        let head = self.field("block")?;
        if head.len() != 3 || head[0] != name {
            return Err(self.error(&format!("expected block `{name}`")));
        }
        let rows: usize = self.parse(head[1])?;
        let found: usize = self.parse(head[2])?;
        if found != cols && rows > 0 {
            return Err(self.error(&format!(
                "block `{name}` has {found} columns, expected {cols}"
            )));
        }
        self.rows(rows, cols)
    }

    fn rows(&mut self, rows: usize, cols: usize) -> Result<Vec<f64>, LearnError> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let t = self.next_line()?;
            if t.len() != cols {
                return Err(self.error(&format!("expected {cols} values, found {}", t.len())));
            }
            for s in t {
                data.push(self.parse(s)?);
            }
        }
        Ok(data)
    }

    pub fn finish(mut self) -> Result<(), LearnError> {
        let t = self.next_line()?;
        if t != ["end"] {
            return Err(self.error("expected `end`"));
        }
        Ok(())
    }
}

/// The three models behind a meta heuristic.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub meta: RandomForest,
    pub hybnn: HybNN,
    pub svr: Svr,
}

const BUNDLE_FILES: [(&str, &str); 3] = [
    ("meta", "meta.model"),
    ("hybnn", "hybnn.model"),
    ("svr", "svr.model"),
];

impl Bundle {
    /// Writes the three model files next to `path` and the bundle itself.
    pub fn save(&self, path: &Path) -> Result<Vec<PathBuf>, LearnError> {
        let dir = path.parent().unwrap_or(Path::new(""));
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bundle".into());
        let mut text = format!("{BUNDLE_MAGIC} {FORMAT_VERSION}\n");
        let mut written = Vec::new();
        for (key, suffix) in BUNDLE_FILES {
            let file = format!("{stem}.{suffix}");
            let body = match key {
                "meta" => self.meta.to_text(),
                "hybnn" => self.hybnn.to_text(),
                _ => self.svr.to_text(),
            };
            let full = dir.join(&file);
            fs::write(&full, body)?;
            written.push(full);
            let _ = writeln!(text, "{key} {file}");
        }
        fs::write(path, text)?;
        written.push(path.to_path_buf());
        Ok(written)
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        let text = fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let mut files = std::collections::BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LearnError::Format {
                line: idx + 1,
                message,
            };
            if idx == 0 {
                if line != format!("{BUNDLE_MAGIC} {FORMAT_VERSION}") {
                    return Err(err("not a bundle file".into()));
                }
                continue;
            }
            let (key, file) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `<model> <path>`".into()))?;
            files.insert(key.to_string(), dir.join(file.trim()));
        }
        let read = |key: &str| -> Result<String, LearnError> {
            let p = files.get(key).ok_or_else(|| LearnError::Format {
                line: 0,
                message: format!("bundle lacks `{key}`"),
            })?;
            Ok(fs::read_to_string(p)?)
        };
        Ok(Bundle {
            meta: RandomForest::from_text(&read("meta")?)?,
            hybnn: HybNN::from_text(&read("hybnn")?)?,
            svr: Svr::from_text(&read("svr")?)?,
        })
    }
}
