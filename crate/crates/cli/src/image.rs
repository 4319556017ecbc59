//! Image files: one line of integers (whitespace or comma separated), an
//! optional `label k` line, and `#` comments.

use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub pixels: Vec<i64>,
    pub label: Option<usize>,
}

pub fn parse_image(text: &str) -> Result<Image, String> {
    let mut pixels: Option<Vec<i64>> = None;
    let mut label = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| format!("line {}: {msg}", n + 1);
        if let Some(rest) = line.strip_prefix("label") {
            if label.is_some() {
                return Err(at("duplicate label line".into()));
            }
            let v = rest.trim();
            label = Some(v.parse().map_err(|_| at(format!("bad label `{v}`")))?);
            continue;
        }
        if pixels.is_some() {
            return Err(at("more than one pixel line".into()));
        }
        let values = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>().map_err(|_| at(format!("bad pixel `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        pixels = Some(values);
    }
    let pixels = pixels.ok_or("no pixel line")?;
    Ok(Image { pixels, label })
}

pub fn format_image(image: &Image) -> String {
    let mut out = String::new();
    let line: Vec<String> = image.pixels.iter().map(i64::to_string).collect();
    writeln!(out, "{}", line.join(" ")).unwrap();
    if let Some(l) = image.label {
        writeln!(out, "label {l}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_label() {
        let img = parse_image("# fixture\n1, 2 3  # trailing\n\nlabel 4\n").unwrap();
        assert_eq!(img.pixels, vec![1, 2, 3]);
        assert_eq!(img.label, Some(4));
        assert_eq!(parse_image(&format_image(&img)).unwrap(), img);
    }

    #[test]
    fn label_is_optional() {
        assert_eq!(parse_image("-1 0 1").unwrap().label, None);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(parse_image("").is_err());
        assert!(parse_image("1 2\n3 4\n").is_err());
        assert!(parse_image("1 x\n").is_err());
        assert!(parse_image("1 2\nlabel -1\n").is_err());
        assert!(parse_image("1\nlabel 0\nlabel 1\n").is_err());
    }
}
