use super::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_symbol(&self) -> Option<String> {
        match self {
            Sexp::Atom(a) => Some(a.trim_matches('|').to_string()),
            _ => None,
        }
    }

    pub fn as_value(&self) -> Option<Value> {
        match self {
            Sexp::Atom(a) if a == "true" => Some(Value::Bool(true)),
            Sexp::Atom(a) if a == "false" => Some(Value::Bool(false)),
            Sexp::Atom(a) => a.parse().ok().map(Value::Int),
            Sexp::List(v) => match v.as_slice() {
                [Sexp::Atom(m), x] if m == "-" => match x.as_value()? {
                    Value::Int(i) => Some(Value::Int(-i)),
                    Value::Bool(_) => None,
                },
                _ => None,
            },
        }
    }
}

/// Parse a sequence of S-expressions; strings and `|quoted|` symbols are atoms.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced")?;
                stack.last_mut().ok_or_else(|| format!("unbalanced `)` at byte {i}"))?.push(Sexp::List(done));
            }
            c if c.is_whitespace() => {}
            '"' | '|' => {
                let mut s = String::from(c);
                loop {
                    match chars.next() {
                        Some((_, d)) => {
                            s.push(d);
                            if d == c {
                                break;
                            }
                        }
                        None => return Err("unterminated literal".into()),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            _ => {
                let mut s = String::from(c);
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
        if stack.is_empty() {
            return Err(format!("unbalanced `)` at byte {i}"));
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested() {
        let v = parse_sexps("((a true) (|b c| (- 2)))").unwrap();
        let Sexp::List(pairs) = &v[0] else { panic!() };
        let Sexp::List(p) = &pairs[1] else { panic!() };
        assert_eq!(p[0].as_symbol().unwrap(), "b c");
        assert_eq!(p[1].as_value(), Some(Value::Int(-2)));
        assert!(parse_sexps("(a").is_err());
        assert!(parse_sexps("a)").is_err());
    }
}
