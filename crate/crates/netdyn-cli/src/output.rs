//! Rendering helpers shared by the command runners.

use crate::config::OutputFormat;

/// Floats print with 17 significant digits, enough to round-trip f64
/// exactly, so identical runs produce identical bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Winner sets and itinerary words print 1-based.
pub fn fmt_winners(winners: &[usize]) -> String {
    winners
        .iter()
        .map(|w| (w + 1).to_string())
        .collect::<Vec<_>>()
        .join("+")
}

pub fn fmt_word(word: &[Vec<usize>]) -> String {
    word.iter()
        .map(|w| fmt_winners(w))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn fmt_singleton_word(word: &[usize]) -> String {
    word.iter()
        .map(|w| (w + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A column-labelled table rendered either as TSV with a header row or as
/// self-describing `key:value` records, one record per line.
pub struct Table {
    format: OutputFormat,
    columns: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(format: OutputFormat, columns: Vec<&'static str>) -> Self {
        let mut body = String::new();
        if format == OutputFormat::Tsv {
            body.push_str(&columns.join("\t"));
            body.push('\n');
        }
        Self {
            format,
            columns,
            body,
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        match self.format {
            OutputFormat::Tsv => {
                self.body.push_str(&cells.join("\t"));
            }
            OutputFormat::Records => {
                let rec: Vec<String> = self
                    .columns
                    .iter()
                    .zip(cells)
                    .map(|(c, v)| format!("{c}:{v}"))
                    .collect();
                self.body.push_str(&rec.join(" "));
            }
        }
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}

/// `key: value` lines for the run summary.
pub struct Summary {
    body: String,
}

impl Summary {
    pub fn new() -> Self {
        Self { body: String::new() }
    }

    pub fn put(&mut self, key: &str, value: impl AsRef<str>) {
        self.body.push_str(key);
        self.body.push_str(": ");
        self.body.push_str(value.as_ref());
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[
            0.1,
            std::f64::consts::LN_2,
            1.9 - 2.01f64.sqrt(),
            -1.0,
            3.0e-17,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn winners_and_words_are_one_based() {
        assert_eq!(fmt_winners(&[1]), "2");
        assert_eq!(fmt_winners(&[0, 1]), "1+2");
        assert_eq!(fmt_word(&[vec![1], vec![0, 2]]), "2,1+3");
        assert_eq!(fmt_singleton_word(&[1, 0, 1]), "2,1,2");
    }

    #[test]
    fn table_formats() {
        let mut t = Table::new(OutputFormat::Tsv, vec!["a", "b"]);
        t.row(&["1".into(), "2".into()]);
        assert_eq!(t.finish(), "a\tb\n1\t2\n");

        let mut r = Table::new(OutputFormat::Records, vec!["a", "b"]);
        r.row(&["1".into(), "2".into()]);
        assert_eq!(r.finish(), "a:1 b:2\n");
    }
}
