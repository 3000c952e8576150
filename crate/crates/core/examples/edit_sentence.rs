//! Edits a sentence's text while keeping tags on surviving tokens.

use chrono::Utc;
use corpusdesk::admin::UserId;
use corpusdesk::annotation::edit_sentence;
use corpusdesk::corpus::{tokenize, AnnotatedSentence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = AnnotatedSentence::untagged("story-000001".parse()?, tokenize("यह घर")?);
    s.tokens[0].tag = Some("PRP".into());
    s.tokens[1].tag = Some("N".into());

    let (edited, record) = edit_sentence(&s, "यह बड़ा घर", &UserId::new("ann"), Utc::now())?;
    for t in &edited.tokens {
        println!("{}/{}", t.surface(), t.tag.as_deref().unwrap_or("_"));
    }
    println!("edit by {} at {}: {} -> {}", record.editor, record.timestamp, record.old_text, record.new_text);
    Ok(())
}
