//! Paragraph extraction from fetched page bodies.

use scraper::{Html, Selector};

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn looks_like_html(body: &str, content_type: Option<&str>) -> bool {
    if let Some(ct) = content_type {
        let ct = ct.to_ascii_lowercase();
        if ct.contains("html") {
            return true;
        }
        if ct.starts_with("text/plain") {
            return false;
        }
    }
    let head = body.trim_start().get(..512).unwrap_or(body.trim_start());
    let head = head.to_ascii_lowercase();
    head.starts_with('<') || head.contains("<p")
}

/// Text of every `<p>` element, with tags stripped, entities decoded,
/// whitespace collapsed and empty paragraphs dropped.
pub fn html_paragraphs(body: &str) -> Vec<String> {
    let document = Html::parse_document(body);
    let selector = Selector::parse("p").expect("static selector");
    document
        .select(&selector)
        .map(|p| collapse_whitespace(&p.text().collect::<String>()))
        .filter(|p| !p.is_empty())
        .collect()
}

/// One paragraph per blank-line separated block.
pub fn text_paragraphs(body: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut block = String::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                paragraphs.push(collapse_whitespace(&block));
                block.clear();
            }
        } else {
            block.push(' ');
            block.push_str(line);
        }
    }
    if !block.trim().is_empty() {
        paragraphs.push(collapse_whitespace(&block));
    }
    paragraphs
}

pub fn extract_paragraphs(body: &str, content_type: Option<&str>) -> Vec<String> {
    if looks_like_html(body, content_type) {
        html_paragraphs(body)
    } else {
        text_paragraphs(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paragraphs_from_html() {
        assert_eq!(html_paragraphs("<p>A b.</p><p> </p><p>C&amp;D</p>"), ["A b.", "C&D"]);
    }

    #[test]
    fn nested_markup_is_stripped() {
        let body = "<html><body><div><p>The <b>bold</b>\n  <a href='x'>link</a> text.</p></div>\
                    <script>var x = '<p>not me</p>';</script></body></html>";
        assert_eq!(html_paragraphs(body), ["The bold link text."]);
    }

    #[test]
    fn escaped_angle_brackets_are_text() {
        assert_eq!(html_paragraphs("<p>1 &lt; 2</p>"), ["1 < 2"]);
    }

    #[test]
    fn paragraphs_from_plain_text() {
        assert_eq!(text_paragraphs("x\n\ny"), ["x", "y"]);
        assert_eq!(text_paragraphs("a\nb\n \n\n c  d \n"), ["a b", "c d"]);
        assert!(text_paragraphs("\n\n").is_empty());
    }

    #[test]
    fn content_type_dispatch() {
        assert_eq!(extract_paragraphs("x\n\ny", Some("text/plain; charset=utf-8")), ["x", "y"]);
        assert_eq!(extract_paragraphs("<p>x</p>", Some("text/html")), ["x"]);
        assert_eq!(extract_paragraphs("<p>x</p>", None), ["x"]);
        assert_eq!(extract_paragraphs("x\n\ny", None), ["x", "y"]);
    }

    proptest! {
        #[test]
        fn no_tag_leaks(words in prop::collection::vec("[a-z]{1,6}", 1..8), tags in prop::collection::vec(prop::sample::select(vec!["b", "i", "span", "a", "em"]), 1..4)) {
            let mut inner = words.join(" ");
            for t in &tags {
                inner = format!("<{t}>{inner}</{t}>");
            }
            let body = format!("<div><p>{inner}</p><p>{}</p></div>", words.join("  \n"));
            for p in html_paragraphs(&body) {
                prop_assert!(!p.contains('<'));
                prop_assert_eq!(&p, &words.join(" "));
            }
        }
    }
}
