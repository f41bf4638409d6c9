//! Newline-delimited JSON trace files, one block per line.
//!
//! Emission is canonical: keys in declaration order, lowercase hex, no
//! whitespace. Parsing a canonical file and emitting it again reproduces it
//! byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::BlockTrace;

/// Streams blocks from a reader, validating each one.
pub struct TraceReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
    previous: Option<u64>,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(reader: R) -> Self {
        TraceReader {
            lines: reader.lines(),
            line: 0,
            previous: None,
        }
    }

    fn parse_line(&mut self, text: &str) -> Result<BlockTrace> {
        let block: BlockTrace = serde_json::from_str(text).map_err(|e| Error::MalformedLine {
            line: self.line,
            message: e.to_string(),
        })?;
        block.validate()?;
        if let Some(previous) = self.previous {
            if block.number <= previous {
                return Err(Error::OutOfOrder {
                    previous,
                    block: block.number,
                });
            }
        }
        self.previous = Some(block.number);
        Ok(block)
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<BlockTrace>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(text) => text,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(self.parse_line(&text));
        }
    }
}

pub fn parse_trace_file<R: BufRead>(reader: R) -> Result<Vec<BlockTrace>> {
    TraceReader::new(reader).collect()
}

pub fn read_trace_file(path: &Path) -> Result<Vec<BlockTrace>> {
    parse_trace_file(BufReader::new(File::open(path)?))
}

pub fn write_block<W: Write>(mut writer: W, block: &BlockTrace) -> Result<()> {
    serde_json::to_writer(&mut writer, block)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn emit_trace_file<'a, W: Write>(mut writer: W, blocks: impl IntoIterator<Item = &'a BlockTrace>) -> Result<()> {
    for block in blocks {
        write_block(&mut writer, block)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPTY_BLOCK: &str = r#"{"number":7,"timestamp":1654041600,"gasUsed":0,"txs":[]}"#;

    #[test]
    fn empty_block_line() {
        let blocks = parse_trace_file(format!("{EMPTY_BLOCK}\n").as_bytes()).unwrap();
        assert_eq!(blocks.len(), 1);
        assert!(blocks[0].transactions.is_empty());
        let mut out = Vec::new();
        emit_trace_file(&mut out, &blocks).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{EMPTY_BLOCK}\n"));
    }

    #[test]
    fn missing_trailing_newline_is_fine() {
        assert_eq!(parse_trace_file(EMPTY_BLOCK.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{EMPTY_BLOCK}\n{{\"number\":8,\n");
        match parse_trace_file(text.as_bytes()) {
            Err(Error::MalformedLine { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gas_mismatch_names_block() {
        let text = r#"{"number":12,"timestamp":1,"gasUsed":5,"txs":[]}"#;
        match parse_trace_file(text.as_bytes()) {
            Err(Error::InvalidBlock {
                block: 12,
                field: "gasUsed",
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn block_numbers_must_increase() {
        let text = format!("{EMPTY_BLOCK}\n{EMPTY_BLOCK}\n");
        assert!(matches!(
            parse_trace_file(text.as_bytes()),
            Err(Error::OutOfOrder { previous: 7, block: 7 })
        ));
    }

    #[test]
    fn transaction_needs_single_root_call() {
        let text = r#"{"number":1,"timestamp":1,"gasUsed":21000,"txs":[{"hash":"0x0101010101010101010101010101010101010101010101010101010101010101","from":"0x0101010101010101010101010101010101010101","to":null,"gasUsed":21000,"calls":[]}]}"#;
        assert!(matches!(
            parse_trace_file(text.as_bytes()),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
