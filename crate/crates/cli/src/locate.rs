//! Maps a JSON path back to a line and column of the source text.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Key(String),
    Index(usize),
}

/// Dotted path such as `model.h[1]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JsonPath(pub Vec<Segment>);

impl JsonPath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn key(&self, k: &str) -> Self {
        let mut p = self.clone();
        p.0.push(Segment::Key(k.to_string()));
        p
    }

    pub fn index(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.0.push(Segment::Index(i));
        p
    }

    pub fn parse(s: &str) -> Self {
        let mut out = Vec::new();
        for part in s.split('.') {
            if part.is_empty() || part == "?" {
                continue;
            }
            let (name, rest) = match part.find('[') {
                Some(b) => part.split_at(b),
                None => (part, ""),
            };
            if !name.is_empty() {
                out.push(Segment::Key(name.to_string()));
            }
            for idx in rest.split('[').filter(|x| !x.is_empty()) {
                if let Ok(i) = idx.trim_end_matches(']').parse() {
                    out.push(Segment::Index(i));
                }
            }
        }
        Self(out)
    }

    fn parent(&self) -> Option<Self> {
        let mut p = self.clone();
        p.0.pop().map(|_| p)
    }
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(root)");
        }
        for (k, s) in self.0.iter().enumerate() {
            match s {
                Segment::Key(name) if k == 0 => write!(f, "{name}")?,
                Segment::Key(name) => write!(f, ".{name}")?,
                Segment::Index(i) => write!(f, "[{i}]")?,
            }
        }
        Ok(())
    }
}

/// Line and column (both 1-based) where the value at `path` starts, or of
/// its closest existing ancestor.
pub fn locate(text: &str, path: &JsonPath) -> (usize, usize) {
    let mut p = path.clone();
    loop {
        if let Some(off) = Scanner::new(text).find(&p.0) {
            return line_col(text, off);
        }
        match p.parent() {
            Some(q) => p = q,
            None => return (1, 1),
        }
    }
}

fn line_col(text: &str, off: usize) -> (usize, usize) {
    let before = &text[..off];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(off, |n| off - n - 1) + 1;
    (line, col)
}

struct Scanner<'a> {
    s: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            s: text.as_bytes(),
            text,
            pos: 0,
        }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        (self.peek()? == c).then(|| self.pos += 1)
    }

    fn string(&mut self) -> Option<String> {
        self.ws();
        let start = self.pos;
        self.eat(b'"')?;
        while self.pos < self.s.len() {
            match self.s[self.pos] {
                b'\\' => self.pos += 2,
                b'"' => {
                    self.pos += 1;
                    return serde_json::from_str(&self.text[start..self.pos]).ok();
                }
                _ => self.pos += 1,
            }
        }
        None
    }

    fn skip(&mut self) -> Option<()> {
        match self.peek()? {
            b'"' => self.string().map(|_| ()),
            open @ (b'{' | b'[') => {
                let close = if open == b'{' { b'}' } else { b']' };
                self.pos += 1;
                if self.eat(close).is_some() {
                    return Some(());
                }
                loop {
                    if open == b'{' {
                        self.string()?;
                        self.eat(b':')?;
                    }
                    self.skip()?;
                    if self.eat(b',').is_none() {
                        return self.eat(close);
                    }
                }
            }
            _ => {
                while self.pos < self.s.len() && !b",}] \t\r\n".contains(&self.s[self.pos]) {
                    self.pos += 1;
                }
                Some(())
            }
        }
    }

    fn find(&mut self, path: &[Segment]) -> Option<usize> {
        self.ws();
        let Some((head, rest)) = path.split_first() else {
            return Some(self.pos);
        };
        match head {
            Segment::Key(k) => {
                self.eat(b'{')?;
                loop {
                    let key_at = {
                        self.ws();
                        self.pos
                    };
                    let key = self.string()?;
                    self.eat(b':')?;
                    if &key == k {
                        // a missing child of a scalar still points at the key
                        return self.find(rest).or(Some(key_at));
                    }
                    self.skip()?;
                    self.eat(b',')?;
                }
            }
            Segment::Index(i) => {
                self.eat(b'[')?;
                for _ in 0..*i {
                    self.skip()?;
                    self.eat(b',')?;
                }
                self.find(rest)
            }
        }
    }
}
