//! Tolerant markup-to-text conversion.

/// Elements whose content is dropped entirely.
const SKIPPED: &[&str] = &["head", "noscript", "script", "style", "template", "title"];

/// Elements that start a new line.
const BLOCKS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "center", "dd", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hr", "html", "li", "main", "nav", "ol", "p", "pre", "section", "table",
    "tbody", "tfoot", "thead", "tr", "ul",
];

/// Elements that separate words without breaking the line.
const SEPARATORS: &[&str] = &["td", "th"];

/// Strips tags, drops script-like elements, turns block elements into line
/// breaks, decodes entities and collapses whitespace within lines.
///
/// Never fails. The result is a fixpoint: normalizing it again is a no-op.
pub fn normalize_html(raw: &str) -> String {
    let mut current = raw.to_string();
    // each changing pass after the first strictly shrinks the text
    for _ in 0..256 {
        let next = normalize_pass(&current);
        if next == current {
            return next;
        }
        current = next;
    }
    strip_angle_spans(&current)
}

fn normalize_pass(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        let c = input[i..].chars().next().expect("in bounds");
        if c == '<' {
            let rest = &input[i..];
            if rest.starts_with("<!--") {
                i = rest.find("-->").map_or(input.len(), |p| i + p + 3);
                out.push(' ');
                continue;
            }
            let next = rest[1..].chars().next();
            let tag_like = next.is_some_and(|n| n.is_ascii_alphabetic() || matches!(n, '/' | '!' | '?'));
            if let (true, Some(close)) = (tag_like, rest.find('>')) {
                let inner = &rest[1..close];
                let closing = inner.starts_with('/');
                let name: String = inner
                    .trim_start_matches('/')
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                i += close + 1;
                if !closing && SKIPPED.contains(&name.as_str()) && !inner.ends_with('/') {
                    i = skip_element(input, i, &name);
                    out.push(' ');
                } else if BLOCKS.contains(&name.as_str()) {
                    out.push('\n');
                } else if SEPARATORS.contains(&name.as_str()) {
                    out.push(' ');
                }
                continue;
            }
            out.push('<');
            i += 1;
            continue;
        }
        if c == '&' {
            if let Some((decoded, used)) = decode_entity(&input[i..]) {
                out.push(decoded);
                i += used;
                continue;
            }
        }
        out.push(c);
        i += c.len_utf8();
    }
    collapse_whitespace(&out)
}

/// Index just past the closing tag of `name`, or the end of input.
fn skip_element(input: &str, from: usize, name: &str) -> usize {
    let lower = input[from..].to_ascii_lowercase();
    let needle = format!("</{name}");
    match lower.find(&needle) {
        Some(p) => {
            let after = from + p + needle.len();
            input[after..].find('>').map_or(input.len(), |q| after + q + 1)
        }
        None => input.len(),
    }
}

fn decode_entity(s: &str) -> Option<(char, usize)> {
    let end = s.char_indices().take(12).find(|(_, c)| *c == ';').map(|(p, _)| p)?;
    let body = &s[1..end];
    let ch = if let Some(num) = body.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse::<u32>().ok()?,
        };
        char::from_u32(code)?
    } else {
        match body {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            "nbsp" => '\u{a0}',
            "ensp" | "emsp" | "thinsp" => ' ',
            "ndash" => '\u{2013}',
            "mdash" => '\u{2014}',
            "lsquo" => '\u{2018}',
            "rsquo" => '\u{2019}',
            "ldquo" => '\u{201c}',
            "rdquo" => '\u{201d}',
            "hellip" => '\u{2026}',
            "bull" => '\u{2022}',
            "middot" => '\u{b7}',
            "copy" => '\u{a9}',
            "reg" => '\u{ae}',
            "trade" => '\u{2122}',
            "sect" => '\u{a7}',
            "para" => '\u{b6}',
            "cent" => '\u{a2}',
            "pound" => '\u{a3}',
            "euro" => '\u{20ac}',
            "deg" => '\u{b0}',
            _ => return None,
        }
    };
    Some((ch, end + 1))
}

fn collapse_whitespace(text: &str) -> String {
    text.split('\n')
        .map(|line| line.split(|c: char| c.is_whitespace()).filter(|w| !w.is_empty()).collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_angle_spans(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '<' => depth += 1,
            '>' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    collapse_whitespace(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_and_tag() {
        assert_eq!(normalize_html("<p>Risk&nbsp;Factors</p>"), "Risk Factors");
    }

    #[test]
    fn empty() {
        assert_eq!(normalize_html(""), "");
    }

    #[test]
    fn script_removed_with_boundary() {
        assert_eq!(normalize_html("<div>a<script>x()</script>b</div>"), "a b");
        assert_eq!(normalize_html("<STYLE>p{}</STYLE>text"), "text");
    }

    #[test]
    fn blocks_break_lines_and_inline_tags_join() {
        let html = "<html><head><title>t</title></head><body><p>Item 1A.  Risk\tFactors</p>\
                    <p>We <b>depend</b> on <i>suppliers</i>.</p><table><tr><td>a</td><td>b</td></tr></table></body></html>";
        assert_eq!(normalize_html(html), "Item 1A. Risk Factors\nWe depend on suppliers.\na b");
    }

    #[test]
    fn tolerant_of_malformed_markup() {
        assert_eq!(normalize_html("a < b and c > d"), "a < b and c > d");
        assert_eq!(normalize_html("x <div"), "x <div");
        assert_eq!(normalize_html("<!-- note -->kept<!-- open"), "kept");
        assert_eq!(normalize_html("AT&T &unknown; &#36;5 &#x41;"), "AT&T &unknown; $5 A");
    }

    #[test]
    fn escaped_markup_does_not_survive() {
        // decoded tags are stripped on the next pass, keeping the output tag-free
        assert_eq!(normalize_html("&lt;p&gt;hello&lt;/p&gt;"), "hello");
        let once = normalize_html("&amp;lt;b&amp;gt;x");
        assert_eq!(normalize_html(&once), once);
    }
}
