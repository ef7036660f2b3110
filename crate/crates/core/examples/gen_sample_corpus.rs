//! Writes the bundled synthetic sample corpus and gazetteer.
//!
//! ```text
//! cargo run -p litmap-core --example gen_sample_corpus -- data/sample [papers] [seed]
//! ```

use std::fs;
use std::path::PathBuf;

use litmap_core::synthetic::{sample_corpus, sample_gazetteer};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/sample".into()));
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2020);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("corpus.jsonl"), sample_corpus(seed, n))?;
    fs::write(dir.join("gazetteer.tsv"), sample_gazetteer())?;
    println!("wrote {n} papers to {}", dir.display());
    Ok(())
}
