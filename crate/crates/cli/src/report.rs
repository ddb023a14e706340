use std::fmt::Write;

use ramified::rational::format_rational;
use ramified::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

/// Accumulates a command's output. Human form prints `key: value` lines and
/// matrices as bracketed rows; machine form prints one `key=value` per line,
/// matrices as `a,b;c,d`.
pub struct Report {
    format: Format,
    out: String,
}

impl Report {
    pub fn new(format: Format) -> Self {
        Report {
            format,
            out: String::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        match self.format {
            Format::Human => writeln!(self.out, "{key}: {value}"),
            Format::Machine => writeln!(self.out, "{key}={value}"),
        }
        .unwrap();
    }

    pub fn list<T: std::fmt::Display>(&mut self, key: &str, items: &[T]) {
        let sep = match self.format {
            Format::Human => ", ",
            Format::Machine => ",",
        };
        let joined: Vec<String> = items.iter().map(ToString::to_string).collect();
        self.field(key, joined.join(sep));
    }

    pub fn matrix(&mut self, key: &str, m: &Matrix) {
        match self.format {
            Format::Human => {
                writeln!(self.out, "{key}:").unwrap();
                self.out.push_str(&m.to_string());
            }
            Format::Machine => {
                let rows: Vec<String> = (0..m.rows())
                    .map(|i| {
                        m.row(i)
                            .iter()
                            .map(format_rational)
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                writeln!(self.out, "{key}={}", rows.join(";")).unwrap();
            }
        }
    }

    /// Free text shown only in human form.
    pub fn note(&mut self, text: &str) {
        if self.format == Format::Human {
            writeln!(self.out, "{text}").unwrap();
        }
    }

    /// Verbatim block (documents, CSV, DOT) shown in both forms.
    pub fn raw(&mut self, text: &str) {
        self.out.push_str(text);
        if !text.ends_with('\n') {
            self.out.push('\n');
        }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn is_machine(&self) -> bool {
        self.format == Format::Machine
    }

    /// Appends another report's output.
    pub fn append(&mut self, text: String) {
        self.out.push_str(&text);
    }

    pub fn finish(self) -> String {
        self.out
    }
}
