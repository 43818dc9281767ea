//! Word plus character-level representation of a message under the
//! default network shape.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentikit::chars::CharVocabulary;
use sentikit::models::{Mode, NetConfig, SentimentNet};
use sentikit::tensor::Tape;
use sentikit::text::tokenize;
use sentikit::vocab::build_vocabulary;

fn main() -> sentikit::Result<()> {
    let messages = ["this phone is excellent !", "thiss fone iz exellent"];
    let corpus: Vec<Vec<String>> = messages.iter().map(|m| tokenize(m)).collect();
    let vocab = build_vocabulary(&corpus, 100)?;
    let net = SentimentNet::new(NetConfig::default(), vocab, Some(CharVocabulary::build(&messages)), None, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for m in messages {
        let mut tape = Tape::new(&net.store);
        let e = net.embed(&mut tape, &tokenize(m), Mode::Infer, &mut rng)?;
        let shape = tape.shape(e).to_vec();
        let row0 = tape.tensor(e).row(0)[..4].to_vec();
        println!("{m:<28} -> {shape:?}, first row starts {row0:.3?}");
    }
    println!("{} trainable values", net.store.total_params());
    Ok(())
}
