//! Plain-text model format.
//!
//! ```text
//! s2sl-model v1
//! input_dim <n>
//! hidden_units <n>
//! output_dim <n>
//! output_activation sigmoid|softmax
//! loss bce|cross_entropy
//! learning_rate <f>
//! beta1 <f>
//! beta2 <f>
//! epsilon <f>
//! epochs <n>
//! batch_size <n>
//! seed <n>
//! w1 <rows> <cols>      followed by <rows> lines of <cols> reals
//! b1 1 <hidden_units>   followed by one line
//! w2 <rows> <cols>
//! b2 1 <output_dim>
//! ```
//!
//! Keys appear in exactly this order. Reals use the shortest representation
//! that parses back to the same `f64`, so a write/read cycle is lossless.

use std::io::{self, Write};
use std::path::Path;

use super::{NetConfig, Network, Params};
use crate::error::{Error, Result};
use crate::numkit::Matrix;

pub const MODEL_HEADER: &str = "s2sl-model v1";

fn write_row(w: &mut impl Write, row: &[f64]) -> io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    writeln!(w)
}

pub fn write_model(net: &Network, w: &mut impl Write) -> io::Result<()> {
    let c = &net.config;
    writeln!(w, "{MODEL_HEADER}")?;
    writeln!(w, "input_dim {}", c.input_dim)?;
    writeln!(w, "hidden_units {}", c.hidden_units)?;
    writeln!(w, "output_dim {}", c.output_dim)?;
    writeln!(w, "output_activation {}", c.output_activation)?;
    writeln!(w, "loss {}", c.loss)?;
    writeln!(w, "learning_rate {}", c.learning_rate)?;
    writeln!(w, "beta1 {}", c.beta1)?;
    writeln!(w, "beta2 {}", c.beta2)?;
    writeln!(w, "epsilon {}", c.epsilon)?;
    writeln!(w, "epochs {}", c.epochs)?;
    writeln!(w, "batch_size {}", c.batch_size)?;
    writeln!(w, "seed {}", c.seed)?;
    let p = &net.params;
    for (name, m) in [("w1", &p.w1), ("w2", &p.w2)] {
        // keep file order w1, b1, w2, b2
        if name == "w2" {
            writeln!(w, "b1 1 {}", p.b1.len())?;
            write_row(w, &p.b1)?;
        }
        writeln!(w, "{name} {} {}", m.rows(), m.cols())?;
        for r in m.iter_rows() {
            write_row(w, r)?;
        }
    }
    writeln!(w, "b2 1 {}", p.b2.len())?;
    write_row(w, &p.b2)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end_matches('\r'))
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn value(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} <value>`, found `{line}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad value `{v}` for {key}")))
    }

    fn matrix(&mut self, key: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let line = self.next_line()?;
        let header: Vec<&str> = line.split_whitespace().collect();
        let expected = [key.to_string(), rows.to_string(), cols.to_string()];
        if header != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(self.err(format!("expected `{key} {rows} {cols}`, found `{line}`")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| self.err(format!("bad real `{tok}`")))?;
                if !v.is_finite() {
                    return Err(self.err(format!("non-finite parameter `{tok}`")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(self.err(format!(
                    "expected {cols} values, found {}",
                    data.len() - before
                )));
            }
        }
        Matrix::new(rows, cols, data)
    }
}

pub fn read_model(text: &str) -> Result<Network> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.next_line()?;
    if header.trim() != MODEL_HEADER {
        return Err(lines.err(format!("expected `{MODEL_HEADER}` header")));
    }
    let config = NetConfig {
        input_dim: lines.parsed("input_dim")?,
        hidden_units: lines.parsed("hidden_units")?,
        output_dim: lines.parsed("output_dim")?,
        output_activation: lines.value("output_activation")?.parse()?,
        loss: lines.value("loss")?.parse()?,
        learning_rate: lines.parsed("learning_rate")?,
        beta1: lines.parsed("beta1")?,
        beta2: lines.parsed("beta2")?,
        epsilon: lines.parsed("epsilon")?,
        epochs: lines.parsed("epochs")?,
        batch_size: lines.parsed("batch_size")?,
        seed: lines.parsed("seed")?,
    };
    config.validate()?;
    let w1 = lines.matrix("w1", config.hidden_units, config.input_dim)?;
    let b1 = lines.matrix("b1", 1, config.hidden_units)?.into_data();
    let w2 = lines.matrix("w2", config.output_dim, config.hidden_units)?;
    let b2 = lines.matrix("b2", 1, config.output_dim)?.into_data();
    Network::from_params(config, Params { w1, b1, w2, b2 })
}

impl Network {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        write_model(self, &mut buf).expect("writing to a Vec cannot fail");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        read_model(&text)
    }
}
