//! Minimal S-expression reader for SMT-LIB scripts and solver responses.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
    /// A `;` line comment (without the semicolon), kept only at top level.
    Comment(String),
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    /// Head symbol of a list.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos, Some(&mut out));
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(chars: &[char], pos: &mut usize, mut comments: Option<&mut Vec<Sexp>>) {
    while *pos < chars.len() {
        let c = chars[*pos];
        if c.is_whitespace() {
            *pos += 1;
        } else if c == ';' {
            let start = *pos + 1;
            while *pos < chars.len() && chars[*pos] != '\n' {
                *pos += 1;
            }
            if let Some(out) = comments.as_deref_mut() {
                let text: String = chars[start..*pos].iter().collect();
                out.push(Sexp::Comment(text.trim().to_string()));
            }
        } else {
            break;
        }
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(chars, pos, None);
    if *pos >= chars.len() {
        return Err("unexpected end of input".into());
    }
    match chars[*pos] {
        '(' => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos, None);
                if *pos >= chars.len() {
                    return Err("unclosed `(`".into());
                }
                if chars[*pos] == ')' {
                    *pos += 1;
                    return Ok(Sexp::List(items));
                }
                items.push(parse_one(chars, pos)?);
            }
        }
        ')' => Err("unexpected `)`".into()),
        '|' => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() && chars[*pos] != '|' {
                *pos += 1;
            }
            if *pos >= chars.len() {
                return Err("unclosed `|`".into());
            }
            *pos += 1;
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        '"' => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() {
                if chars[*pos] == '"' {
                    if chars.get(*pos + 1) == Some(&'"') {
                        *pos += 2;
                        continue;
                    }
                    break;
                }
                *pos += 1;
            }
            if *pos >= chars.len() {
                return Err("unclosed string".into());
            }
            *pos += 1;
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        _ => {
            let start = *pos;
            while *pos < chars.len() {
                let c = chars[*pos];
                if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                    break;
                }
                *pos += 1;
            }
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}
