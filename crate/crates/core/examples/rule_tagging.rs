//! Tag short messages with one of the four rule labels.

use sentikit::augment::SentimentDictionary;
use sentikit::rules::{tag_rule, RulePattern};

fn main() -> sentikit::Result<()> {
    let dict = SentimentDictionary::new([("excellent", 1), ("terrible", -1), ("fresher", 1), ("sad", -1)])?;
    let patterns = RulePattern::default();
    for m in [
        "This phone is excellent !",
        "A tablet and B tablet are terrible",
        "Canned beer is fresher than bottled",
        "How much does Ipad cost ?",
        "Today is Wednesday",
        "So sad :(",
    ] {
        let rule = tag_rule(m, &patterns, &dict);
        println!("{:<38} {:<12} {:?}", m, rule.as_str(), rule.one_hot());
    }
    Ok(())
}
