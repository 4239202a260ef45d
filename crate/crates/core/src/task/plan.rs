//! Plan files: one `(action obj ...)` per line, `;` comments.
//!
//! A leading step number such as `12.` is tolerated so numbered listings can
//! be pasted directly.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct PlanFormatError {
    pub line: usize,
    pub message: String,
}

/// Returns canonical, lowercase action names like `(stack a b i)`.
pub fn parse_plan(text: &str) -> Result<Vec<String>, PlanFormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: &str| PlanFormatError { line: i + 1, message: message.to_string() };
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line = match line.split_once('.') {
            Some((num, rest)) if !num.is_empty() && num.chars().all(|c| c.is_ascii_digit()) => rest.trim(),
            _ => line,
        };
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .ok_or_else(|| err("expected `(action args...)`"))?;
        if inner.contains(['(', ')']) {
            return Err(err("nested parentheses in action"));
        }
        let parts: Vec<String> = inner.split_whitespace().map(str::to_lowercase).collect();
        if parts.is_empty() {
            return Err(err("empty action"));
        }
        out.push(format!("({})", parts.join(" ")));
    }
    Ok(out)
}

pub fn format_plan<S: AsRef<str>>(plan: &[S], cost: Option<f64>) -> String {
    let mut out = String::new();
    for a in plan {
        out.push_str(a.as_ref());
        out.push('\n');
    }
    if let Some(c) = cost {
        out.push_str(&format!("; cost = {c}\n"));
    }
    out
}
