use std::io::Write;

/// Time-resolved named channels sharing one strictly increasing time grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ObservableSeries {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        Self {
            times: Vec::new(),
            names,
            columns,
        }
    }

    /// Appends a row; panics if the time does not increase or the width is wrong.
    pub fn push(&mut self, time: f64, values: &[f64]) {
        assert_eq!(values.len(), self.names.len(), "row width");
        if let Some(&last) = self.times.last() {
            assert!(time > last, "time grid must increase ({time} after {last})");
        }
        self.times.push(time);
        for (col, &v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|k| self.columns[k].as_slice())
    }

    /// Adds (or replaces) a whole channel.
    pub fn set_channel(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(values.len(), self.times.len(), "channel length");
        match self.names.iter().position(|n| n == name) {
            Some(k) => self.columns[k] = values,
            None => {
                self.names.push(name.to_string());
                self.columns.push(values);
            }
        }
    }

    /// CSV with a `time` column first; values carry 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "time")?;
        for n in &self.names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        for (r, t) in self.times.iter().enumerate() {
            write!(out, "{}", fmt_f64(*t))?;
            for col in &self.columns {
                write!(out, ",{}", fmt_f64(col[r]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}
