//! Generate a small synthetic parallel corpus and write it to disk.
//!
//! cargo run --release --example synth_corpus -- [out_dir]

use artivae::synthcorpus::{generate, load_corpus, write_corpus, SynthConfig};

fn main() -> artivae::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("artivae-corpus")
            .display()
            .to_string()
    });
    let config = SynthConfig {
        n_utterances: 5,
        seed: 7,
        ..SynthConfig::default()
    };
    let corpus = generate(&config)?;
    let manifest = write_corpus(&corpus, &out)?;
    println!(
        "{} utterances, {} frames",
        corpus.utterances.len(),
        corpus.n_frames()
    );
    println!("manifest {}", manifest.display());
    println!("hash     {}", corpus.manifest_hash()?);

    let back = load_corpus(&manifest)?;
    assert_eq!(back, corpus);
    let babble = corpus.babble.as_ref().expect("audio enabled");
    println!("babble   {} samples, rms {:.6}", babble.len(), babble.rms());
    Ok(())
}
