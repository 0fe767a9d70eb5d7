//! Cleans raw tweets (one per line) and reports which ones survive.
//!
//! ```sh
//! cargo run --example clean_tweets -- tests/data/raw_tweets.txt tests/data/dict.tsv
//! ```

use claimdet::corpus::{dedup_by, preprocess_tweet, Preprocessed, SpellDictionary, DEFAULT_MAX_EDIT_DISTANCE};

const SAMPLE: &str = "Garlic water KILLS the virus!!! #cure @health_ministry https://t.co/xyz\n\
the goverment closed every hospitl in the city 😷\n\
lol\n\
Garlic water kills the virus!!! #fake";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(p) => std::fs::read_to_string(p)?,
        None => SAMPLE.to_string(),
    };
    let dict = match args.next() {
        Some(p) => SpellDictionary::load(p, DEFAULT_MAX_EDIT_DISTANCE)?,
        None => {
            let mut d = SpellDictionary::default();
            for (w, f) in [("the", 1000), ("government", 50), ("hospital", 40), ("virus", 30)] {
                d.insert(w, f)?;
            }
            d
        }
    };
    let mut kept = Vec::new();
    for line in text.lines() {
        match preprocess_tweet(line, &dict) {
            Preprocessed::Clean(t) => kept.push(t),
            Preprocessed::Rejected { chars, words } => println!("rejected ({chars} chars, {words} words): {line}"),
        }
    }
    let before = kept.len();
    let kept = dedup_by(kept, |t| t.as_str());
    println!("{} kept, {} duplicates removed", kept.len(), before - kept.len());
    for t in &kept {
        println!("  {t}");
    }
    Ok(())
}
