use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

/// Row-major real matrix (rows along axis a) with axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix {
    pub domain: String,
    pub axis_a: LatticeAxis,
    pub axis_b: LatticeAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseMatrixError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseMatrixError {
    ParseMatrixError {
        line,
        message: message.into(),
    }
}

impl IntensityMatrix {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# domain = {}", self.domain);
        for (name, ax) in [("axis_a", &self.axis_a), ("axis_b", &self.axis_b)] {
            let _ = writeln!(out, "# {name} start={:e} step={:e} len={}", ax.start, ax.step, ax.len);
        }
        for row in self.values.chunks(self.axis_b.len.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseMatrixError> {
        let mut lines = text.lines().enumerate();
        let mut header = |expect: &str| -> Result<(usize, String), ParseMatrixError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, "unexpected end of input"))?;
            let rest = l
                .strip_prefix("# ")
                .and_then(|r| r.strip_prefix(expect))
                .ok_or_else(|| err(n + 1, format!("expected `# {expect}` header")))?;
            Ok((n + 1, rest.to_string()))
        };
        let (_, domain) = header("domain = ")?;
        let (na_line, a) = header("axis_a ")?;
        let (nb_line, b) = header("axis_b ")?;
        let axis_a = parse_axis(&a, na_line)?;
        let axis_b = parse_axis(&b, nb_line)?;
        let total = axis_a
            .len
            .checked_mul(axis_b.len)
            .ok_or_else(|| err(nb_line, "matrix size overflows"))?;
        let mut values = Vec::with_capacity(total.min(1 << 20));
        let mut rows = 0usize;
        for (n, l) in lines {
            if rows == axis_a.len {
                return Err(err(n + 1, "more rows than axis_a len"));
            }
            let mut count = 0usize;
            for tok in l.split('\t') {
                let v: f64 = tok
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| err(n + 1, format!("invalid number `{tok}`")))?;
                values.push(v);
                count += 1;
            }
            if count != axis_b.len {
                return Err(err(n + 1, format!("{count} columns, expected {}", axis_b.len)));
            }
            rows += 1;
        }
        if rows != axis_a.len {
            return Err(err(0, format!("{rows} rows, expected {}", axis_a.len)));
        }
        Ok(Self {
            domain,
            axis_a,
            axis_b,
            values,
        })
    }
}

fn parse_axis(s: &str, line: usize) -> Result<LatticeAxis, ParseMatrixError> {
    let mut start = None;
    let mut step = None;
    let mut len = None;
    for kv in s.split(' ') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| err(line, format!("malformed field `{kv}`")))?;
        let bad = || err(line, format!("invalid value for `{k}`"));
        let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
        match k {
            "start" => start = Some(num(v)?),
            "step" => step = Some(num(v)?),
            "len" => len = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(err(line, format!("unknown field `{k}`"))),
        }
    }
    match (start, step, len) {
        (Some(start), Some(step), Some(len)) if len > 0 => Ok(LatticeAxis { start, step, len }),
        _ => Err(err(line, "axis needs start, step and len > 0")),
    }
}
