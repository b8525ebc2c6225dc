use std::f64::consts::PI;

/// Parses an angle given in radians or as a rational multiple of pi.
///
/// Accepted forms: `1.25`, `pi`, `-pi`, `3pi`, `0.5pi`, `1/2pi`, `1/2 pi`,
/// `3pi/2`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let compact: String = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '*')
        .collect::<String>()
        .to_ascii_lowercase();
    if compact.is_empty() {
        return Err("empty angle".into());
    }
    let Some(at) = compact.find("pi") else {
        return compact
            .parse::<f64>()
            .map_err(|_| format!("cannot read `{text}` as an angle"));
    };
    let before = &compact[..at];
    let after = &compact[at + 2..];
    let coefficient = match before {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => ratio(s).ok_or_else(|| format!("bad coefficient `{s}` in `{text}`"))?,
    };
    let divisor = match after {
        "" => 1.0,
        s => s
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(|| format!("bad divisor `{s}` in `{text}`"))?,
    };
    Ok(coefficient * PI / divisor)
}

fn ratio(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let q: f64 = q.parse().ok()?;
            (q != 0.0).then_some(p.parse::<f64>().ok()? / q)
        }
        None => s.parse().ok(),
    }
}
