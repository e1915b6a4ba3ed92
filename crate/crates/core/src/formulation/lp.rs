//! CPLEX LP text export and a small reader for the same dialect.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::model::{Model, ObjectiveSense, Sense};

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, terms: &[(String, f64)]) {
    for (k, (name, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { "-" } else { "+" };
        if k == 0 && *c >= 0.0 {
            let _ = write!(out, " {} {}", c, name);
        } else {
            let _ = write!(out, " {} {} {}", sign, c.abs(), name);
        }
    }
}

/// Renders the model in CPLEX LP format.
pub fn export_lp(model: &Model) -> String {
    let name = |i: usize| model.vars[i].to_string();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ mode {} : {} variables, {} constraints",
        model.mode,
        model.num_vars(),
        model.num_constraints()
    );
    out.push_str(match model.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        _ => "Minimize\n",
    });
    out.push_str(" obj:");
    let obj: Vec<(String, f64)> = model.objective.iter().map(|&(i, c)| (name(i), c)).collect();
    if obj.is_empty() {
        if !model.vars.is_empty() {
            let _ = write!(out, " 0 {}", name(0));
        }
    } else {
        write_terms(&mut out, &obj);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        let terms: Vec<(String, f64)> = c.terms.iter().map(|&(i, k)| (name(i), k)).collect();
        write_terms(&mut out, &terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Binary\n");
    for chunk in model.vars.chunks(TERMS_PER_LINE) {
        out.push(' ');
        let names: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpFile {
    pub maximize: bool,
    pub objective: Vec<(String, f64)>,
    pub rows: Vec<LpRow>,
    pub binaries: Vec<String>,
}

#[derive(PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Binary,
}

fn perr(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

/// Parses `[name:] (+|- coef var)* [sense rhs]` from a token stream.
struct Statement {
    line: usize,
    name: Option<String>,
    terms: Vec<(String, f64)>,
    sense: Option<Sense>,
    rhs: Option<f64>,
}

fn parse_statement(tokens: &[(usize, String)]) -> Result<Statement> {
    let line = tokens.first().map_or(0, |t| t.0);
    let mut st = Statement {
        line,
        name: None,
        terms: Vec::new(),
        sense: None,
        rhs: None,
    };
    let mut i = 0;
    if let Some((_, t)) = tokens.first() {
        if let Some(n) = t.strip_suffix(':') {
            st.name = Some(n.to_string());
            i = 1;
        }
    }
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < tokens.len() {
        let (ln, tok) = (&tokens[i].0, tokens[i].1.as_str());
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "<=" | "=<" | "<" | ">=" | "=>" | ">" | "=" => {
                st.sense = Some(match tok {
                    "<=" | "=<" | "<" => Sense::Le,
                    "=" => Sense::Eq,
                    _ => Sense::Ge,
                });
                let rhs = tokens.get(i + 1).ok_or_else(|| perr(*ln, "rhs", "missing right-hand side"))?;
                st.rhs = Some(rhs.1.parse().map_err(|_| perr(rhs.0, "rhs", format!("bad number `{}`", rhs.1)))?);
                if i + 2 != tokens.len() {
                    return Err(perr(*ln, "row", "trailing tokens after right-hand side"));
                }
                break;
            }
            _ => {
                if let Ok(c) = tok.parse::<f64>() {
                    coef = Some(coef.unwrap_or(1.0) * c);
                } else {
                    st.terms.push((tok.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
        i += 1;
    }
    Ok(st)
}

pub fn parse_lp(text: &str) -> Result<LpFile> {
    let mut file = LpFile {
        maximize: false,
        objective: Vec::new(),
        rows: Vec::new(),
        binaries: Vec::new(),
    };
    let mut section = Section::None;
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut saw_end = false;

    let flush_row = |pending: &mut Vec<(usize, String)>, file: &mut LpFile| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let st = parse_statement(pending)?;
        pending.clear();
        let (Some(sense), Some(rhs)) = (st.sense, st.rhs) else {
            return Err(perr(st.line, "row", "constraint without a sense"));
        };
        file.rows.push(LpRow {
            name: st.name.unwrap_or_else(|| format!("r{}", file.rows.len() + 1)),
            terms: st.terms,
            sense,
            rhs,
        });
        Ok(())
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let lower = body.to_ascii_lowercase();
        let header = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some((Section::Objective, Some(false))),
            "maximize" | "maximise" | "max" => Some((Section::Objective, Some(true))),
            "subject to" | "st" | "s.t." => Some((Section::Rows, None)),
            "binary" | "binaries" | "bin" => Some((Section::Binary, None)),
            "end" => {
                saw_end = true;
                Some((Section::None, None))
            }
            _ => None,
        };
        if let Some((next, max)) = header {
            if section == Section::Objective {
                let st = parse_statement(&pending)?;
                pending.clear();
                file.objective = st.terms;
            }
            if section == Section::Rows {
                flush_row(&mut pending, &mut file)?;
            }
            if let Some(m) = max {
                file.maximize = m;
            }
            section = next;
            continue;
        }
        let tokens = body.split_whitespace().map(|t| (line, t.to_string()));
        match section {
            Section::None => return Err(perr(line, "section", format!("unexpected `{body}` outside a section"))),
            Section::Objective => pending.extend(tokens),
            Section::Rows => {
                // A named token starts a new row.
                for tok in tokens {
                    if tok.1.ends_with(':') {
                        flush_row(&mut pending, &mut file)?;
                    }
                    pending.push(tok);
                }
            }
            Section::Binary => file.binaries.extend(tokens.map(|t| t.1)),
        }
    }
    if !saw_end {
        return Err(perr(text.lines().count(), "End", "missing End"));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_handwritten_lp() {
        let text = "Maximize\n obj: 2 a - b\nSubject To\n c1: a + b\n   <= 1\n r2: - a + 3 b >= -2\nBinary\n a b\nEnd\n";
        let lp = parse_lp(text).unwrap();
        assert!(lp.maximize);
        assert_eq!(lp.objective, vec![("a".to_string(), 2.0), ("b".to_string(), -1.0)]);
        assert_eq!(lp.rows.len(), 2);
        assert_eq!(lp.rows[1].terms, vec![("a".to_string(), -1.0), ("b".to_string(), 3.0)]);
        assert_eq!((lp.rows[1].sense, lp.rows[1].rhs), (Sense::Ge, -2.0));
        assert_eq!(lp.binaries, vec!["a", "b"]);
    }

    #[test]
    fn missing_end_is_an_error() {
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n c: x >= 1\n").is_err());
    }
}
