/// Aligned plain-text table: first column left-aligned, the rest right-aligned.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (j, w) in width.iter().enumerate() {
            let c = cells.get(j).copied().unwrap_or("");
            if j > 0 {
                s.push_str("  ");
            }
            if j == 0 { s.push_str(&format!("{c:<w$}")) } else { s.push_str(&format!("{c:>w$}")) }
        }
        s.trim_end().to_string()
    };
    let mut out = vec![line(headers.to_vec()), width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")];
    out.extend(rows.iter().map(|r| line(r.iter().take(cols).map(String::as_str).collect())));
    out.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = render_table(&["part", "sls"], &[vec!["legs".into(), "8.73".into()], vec!["armrest".into(), "10.5".into()]]);
        assert_eq!(t, "part      sls\n-------  ----\nlegs     8.73\narmrest  10.5\n");
    }
}
