//! Minimal text-only PDF writer.

use std::path::Path;

use crate::error::{AgentError, Result};

pub const LINES_PER_PAGE: usize = 50;
pub const WRAP_COLUMNS: usize = 90;

/// Hard-wraps `text` at `width` characters, breaking at spaces when possible.
pub fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut cur = String::new();
        for word in line.split(' ') {
            let mut word = word.to_string();
            while word.chars().count() > width {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                let head: String = word.chars().take(width).collect();
                word = word.chars().skip(width).collect();
                out.push(head);
            }
            let need = cur.chars().count() + usize::from(!cur.is_empty()) + word.chars().count();
            if need > width && !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !cur.is_empty() {
                cur.push(' ');
            }
            cur.push_str(&word);
        }
        out.push(cur);
    }
    out
}

pub fn page_count(lines: usize, per_page: usize) -> usize {
    lines.div_ceil(per_page).max(1)
}

fn escape(line: &str) -> String {
    let mut s = String::new();
    for c in line.chars() {
        match c {
            '(' | ')' | '\\' => {
                s.push('\\');
                s.push(c);
            }
            ' '..='~' => s.push(c),
            '\t' => s.push_str("    "),
            _ => s.push('?'),
        }
    }
    s
}

/// Renders `text` as a PDF with `per_page` lines per page.
pub fn render_pdf(text: &str, per_page: usize) -> (Vec<u8>, usize) {
    let lines = wrap(text, WRAP_COLUMNS);
    let lines: Vec<String> = if text.is_empty() { Vec::new() } else { lines };
    let pages = page_count(lines.len(), per_page);
    // objects: 1 catalog, 2 page tree, 3 font, then (page, content) per page
    let mut objects: Vec<String> = Vec::new();
    objects.push("<< /Type /Catalog /Pages 2 0 R >>".into());
    let kids: Vec<String> = (0..pages).map(|i| format!("{} 0 R", 4 + 2 * i)).collect();
    objects.push(format!("<< /Type /Pages /Kids [{}] /Count {pages} >>", kids.join(" ")));
    objects.push("<< /Type /Font /Subtype /Type1 /BaseFont /Courier >>".into());
    for p in 0..pages {
        let content_id = 5 + 2 * p;
        objects.push(format!(
            "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << /Font << /F1 3 0 R >> >> /Contents {content_id} 0 R >>"
        ));
        let mut stream = String::from("BT\n/F1 10 Tf\n12 TL\n40 760 Td\n");
        for l in lines.iter().skip(p * per_page).take(per_page) {
            stream.push_str(&format!("({}) Tj T*\n", escape(l)));
        }
        stream.push_str("ET");
        objects.push(format!("<< /Length {} >>\nstream\n{stream}\nendstream", stream.len()));
    }
    let mut out = b"%PDF-1.4\n".to_vec();
    let mut offsets = Vec::new();
    for (i, body) in objects.iter().enumerate() {
        offsets.push(out.len());
        out.extend(format!("{} 0 obj\n{body}\nendobj\n", i + 1).as_bytes());
    }
    let xref = out.len();
    out.extend(format!("xref\n0 {}\n0000000000 65535 f \n", objects.len() + 1).as_bytes());
    for o in offsets {
        out.extend(format!("{o:010} 00000 n \n").as_bytes());
    }
    out.extend(
        format!("trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{xref}\n%%EOF\n", objects.len() + 1).as_bytes(),
    );
    (out, pages)
}

/// Writes the PDF and returns its page count.
pub fn text_to_pdf(text: &str, path: &Path, per_page: usize) -> Result<usize> {
    let (bytes, pages) = render_pdf(text, per_page);
    let err = |e: std::io::Error| AgentError::Store(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    std::fs::write(path, bytes).map_err(err)?;
    Ok(pages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_and_blank_page() {
        let (b, pages) = render_pdf("", LINES_PER_PAGE);
        assert!(b.starts_with(b"%PDF-"));
        assert_eq!(pages, 1);
        let doc = lopdf::Document::load_mem(&b).unwrap();
        assert_eq!(doc.get_pages().len(), 1);
    }

    #[test]
    fn page_count_follows_line_count() {
        let text: String = (0..120).map(|i| format!("line {i}\n")).collect();
        let (b, pages) = render_pdf(&text, 50);
        assert_eq!(pages, 3);
        let doc = lopdf::Document::load_mem(&b).unwrap();
        assert_eq!(doc.get_pages().len(), 3);
        let extracted = doc.extract_text(&[1]).unwrap();
        assert!(extracted.contains("line 0"), "{extracted}");
    }

    #[test]
    fn xref_offsets_point_at_objects() {
        let (b, _) = render_pdf("Step response (s + 3) \\ done", 50);
        let s = String::from_utf8(b).unwrap();
        let xref = s.rfind("xref\n").unwrap();
        let table: Vec<usize> =
            s[xref..].lines().skip(3).take_while(|l| l.ends_with(" n ")).map(|l| l[..10].parse().unwrap()).collect();
        for (i, off) in table.iter().enumerate() {
            assert!(s[*off..].starts_with(&format!("{} 0 obj", i + 1)));
        }
    }

    #[test]
    fn wrapping() {
        let long = "x".repeat(200);
        assert_eq!(wrap(&long, 90).len(), 3);
        assert_eq!(wrap("a b", 90), ["a b"]);
    }
}
