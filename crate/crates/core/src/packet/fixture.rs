// SPDX-License-Identifier: Apache-2.0

//! Golden fixture files: one hex-encoded IPv6 packet per line. Blank lines
//! and lines starting with `#` are ignored.

use super::RawPacket;

#[derive(Debug, thiserror::Error)]
#[error("fixture line {line}: {source}")]
pub struct FixtureError {
    pub line: usize,
    #[source]
    pub source: hex::FromHexError,
}

pub fn parse_fixture(text: &str) -> Result<Vec<RawPacket>, FixtureError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            hex::decode(l.trim())
                .map(RawPacket::new)
                .map_err(|source| FixtureError { line: i + 1, source })
        })
        .collect()
}

pub fn write_fixture<'a>(packets: impl IntoIterator<Item = &'a RawPacket>) -> String {
    let mut out = String::new();
    for p in packets {
        out.push_str(&hex::encode(p.as_bytes()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_reports_bad_lines() {
        let pkts = parse_fixture("# header\n\n6000\n").unwrap();
        assert_eq!(pkts, vec![RawPacket::new(vec![0x60, 0x00])]);
        assert_eq!(write_fixture(&pkts), "6000\n");
        let err = parse_fixture("6000\nzz\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
