//! CSV and JSON writers. Reals are written with 17 significant digits so
//! they parse back to the same `f64`.

use std::io::{self, Write};

use crate::diagnostics::CurvePoint;
use crate::path_sampler::Path;

/// `{:.16e}` formatting; non-finite values become `nan`, `inf`, `-inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// JSON has no non-finite numbers; those are written as `null`.
pub fn json_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// Header `t,coord0,...,killed`, one row per grid point. Cemetery rows
/// carry `nan` coordinates and `killed = 1`.
pub fn write_path_csv<W: Write>(w: &mut W, path: &Path) -> io::Result<()> {
    let width = path.start().coords().len();
    writeln!(w, "t,{},killed", coord_header(width))?;
    write_path_rows(w, path, width, None)
}

/// Several paths in one table, prefixed by a `path` index column.
pub fn write_paths_csv<W: Write>(w: &mut W, paths: &[Path]) -> io::Result<()> {
    let width = paths.first().map_or(1, |p| p.start().coords().len());
    writeln!(w, "path,t,{},killed", coord_header(width))?;
    for (i, p) in paths.iter().enumerate() {
        write_path_rows(w, p, width, Some(i))?;
    }
    Ok(())
}

fn coord_header(width: usize) -> String {
    (0..width).map(|i| format!("coord{i}")).collect::<Vec<_>>().join(",")
}

fn write_path_rows<W: Write>(w: &mut W, path: &Path, width: usize, index: Option<usize>) -> io::Result<()> {
    for (t, p) in path.grid().times().iter().zip(path.points()) {
        let mut row = Vec::with_capacity(width + 3);
        if let Some(i) = index {
            row.push(i.to_string());
        }
        row.push(fmt_real(*t));
        if p.is_cemetery() {
            row.extend(std::iter::repeat_n("nan".to_string(), width));
        } else {
            row.extend(p.coords().iter().map(|c| fmt_real(*c)));
        }
        row.push(if p.is_cemetery() { "1" } else { "0" }.into());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Header `t,analytic,mc,mc_stderr`; a missing closed form is `nan`.
pub fn write_curve_csv<W: Write>(w: &mut W, curve: &[CurvePoint]) -> io::Result<()> {
    writeln!(w, "t,analytic,mc,mc_stderr")?;
    for c in curve {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_real(c.t),
            fmt_real(c.analytic.unwrap_or(f64::NAN)),
            fmt_real(c.mc.value),
            fmt_real(c.mc.std_error)
        )?;
    }
    Ok(())
}

/// A flat JSON object written in insertion order.
#[derive(Debug, Clone, Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(mut self, key: &str, x: f64) -> Self {
        self.fields.push((key.into(), json_real(x)));
        self
    }

    pub fn opt_real(self, key: &str, x: Option<f64>) -> Self {
        match x {
            Some(v) => self.real(key, v),
            None => self,
        }
    }

    pub fn int(mut self, key: &str, n: impl Into<i128>) -> Self {
        self.fields.push((key.into(), n.into().to_string()));
        self
    }

    pub fn bool(mut self, key: &str, b: bool) -> Self {
        self.fields.push((key.into(), b.to_string()));
        self
    }

    pub fn str(mut self, key: &str, s: &str) -> Self {
        self.fields.push((key.into(), serde_json::Value::from(s).to_string()));
        self
    }

    pub fn reals(mut self, key: &str, xs: &[f64]) -> Self {
        let items: Vec<String> = xs.iter().map(|x| json_real(*x)).collect();
        self.fields.push((key.into(), format!("[{}]", items.join(","))));
        self
    }

    pub fn object(mut self, key: &str, o: JsonObject) -> Self {
        self.fields.push((key.into(), o.render()));
        self
    }

    pub fn objects(mut self, key: &str, os: Vec<JsonObject>) -> Self {
        let items: Vec<String> = os.into_iter().map(|o| o.render()).collect();
        self.fields.push((key.into(), format!("[{}]", items.join(","))));
        self
    }

    pub fn render(&self) -> String {
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{}:{v}", serde_json::Value::from(k.as_str())))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

/// The FK result record `{value, std_error, n_samples, n_steps, seed, oracle?}`.
pub fn fk_record(est: &crate::ensemble::EstimateWithError, n_steps: usize, oracle: Option<f64>) -> JsonObject {
    JsonObject::new()
        .real("value", est.value)
        .real("std_error", est.std_error)
        .int("n_samples", est.n_samples as u64)
        .int("n_steps", n_steps as u64)
        .int("seed", est.seed)
        .opt_real("oracle", oracle)
}
