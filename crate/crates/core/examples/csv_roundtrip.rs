//! Generates a synthetic hourly table, writes it as CSV and reads it back
//! through the ingestion path.
//!
//!     cargo run --example csv_roundtrip

use ies_e2e::data::{ingest_csv, synth_generate, CsvSchema, SynthProfile};
use ies_e2e::ies::Channel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = synth_generate(3, 7, &SynthProfile::default());
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let text = String::from_utf8(buf)?;
    for line in text.lines().take(3) {
        println!("{line}");
    }

    let back = ingest_csv(text.as_bytes(), &CsvSchema::default())?;
    println!("{} rows written, {} rows read", table.len(), back.len());
    for ch in Channel::ALL {
        println!("{:>14}: mean {:9.2}", ch.name(), back.channel_mean(ch));
    }
    Ok(())
}
