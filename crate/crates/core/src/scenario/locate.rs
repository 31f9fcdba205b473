//! Maps a JSON path like `units[1].pulses[0].end_s` to the line it sits on.
//!
//! serde_json reports positions for syntax errors only; semantic checks run
//! after deserialization, so this rescans the source text to find the value.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Key(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JsonPath(Vec<Segment>);

impl JsonPath {
    pub fn root() -> Self {
        JsonPath(Vec::new())
    }

    pub fn key(&self, k: &str) -> Self {
        let mut next = self.0.clone();
        next.push(Segment::Key(k.to_string()));
        JsonPath(next)
    }

    pub fn index(&self, i: usize) -> Self {
        let mut next = self.0.clone();
        next.push(Segment::Index(i));
        JsonPath(next)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "<root>");
        }
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Segment::Key(k) if i == 0 => write!(f, "{k}")?,
                Segment::Key(k) => write!(f, ".{k}")?,
                Segment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn expect(&mut self, b: u8) -> Option<()> {
        self.skip_ws();
        (self.bump()? == b).then_some(())
    }

    fn string(&mut self) -> Option<String> {
        self.expect(b'"')?;
        let start = self.pos;
        loop {
            match self.bump()? {
                b'\\' => {
                    self.bump()?;
                }
                b'"' => break,
                _ => {}
            }
        }
        let raw = std::str::from_utf8(&self.bytes[start..self.pos - 1]).ok()?;
        // Keys with escapes are rare; compare them in decoded form.
        if raw.contains('\\') {
            serde_json::from_str(&format!("\"{raw}\"")).ok()
        } else {
            Some(raw.to_string())
        }
    }

    fn skip_value(&mut self) -> Option<()> {
        self.skip_ws();
        match self.peek()? {
            b'"' => {
                self.string()?;
            }
            b'{' | b'[' => {
                let mut depth = 0usize;
                loop {
                    match self.peek()? {
                        b'"' => {
                            self.string()?;
                            continue;
                        }
                        b'{' | b'[' => depth += 1,
                        b'}' | b']' => {
                            depth -= 1;
                            if depth == 0 {
                                self.bump();
                                return Some(());
                            }
                        }
                        _ => {}
                    }
                    self.bump();
                }
            }
            _ => {
                while !matches!(self.peek(), None | Some(b',' | b'}' | b']' | b' ' | b'\t' | b'\r' | b'\n')) {
                    self.bump();
                }
            }
        }
        Some(())
    }
}

/// 1-based line of the value at `path`, if it can be found.
pub fn line_of(text: &str, path: &JsonPath) -> Option<usize> {
    let mut c = Cursor { bytes: text.as_bytes(), pos: 0, line: 1 };
    for seg in path.segments() {
        match seg {
            Segment::Key(key) => {
                c.expect(b'{')?;
                loop {
                    c.skip_ws();
                    if c.peek()? == b'}' {
                        return None;
                    }
                    let k = c.string()?;
                    c.expect(b':')?;
                    if &k == key {
                        break;
                    }
                    c.skip_value()?;
                    c.skip_ws();
                    if c.bump()? != b',' {
                        return None;
                    }
                }
            }
            Segment::Index(n) => {
                c.expect(b'[')?;
                for _ in 0..*n {
                    c.skip_value()?;
                    c.expect(b',')?;
                }
            }
        }
    }
    c.skip_ws();
    Some(c.line)
}
