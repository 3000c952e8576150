//! Closed-class lexicon edits, version deltas and auto-tagging.

use corpusdesk::annotation::{auto_tag, ClosedClassLexicon, LexiconEdit};
use corpusdesk::corpus::{tokenize, AnnotatedSentence, Tagset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tagset = Tagset::parse("#TAGSET desk\nN\nPSP\nCC\nPRON\n")?;
    let mut lexicon = ClosedClassLexicon::new("hin".parse()?);
    lexicon.apply(LexiconEdit::Upsert { surface: "में".into(), tag: "PSP".into() }, &tagset)?;
    lexicon.apply(LexiconEdit::Upsert { surface: "और".into(), tag: "CC".into() }, &tagset)?;
    let seen = lexicon.version;
    lexicon.apply(LexiconEdit::Upsert { surface: "वह".into(), tag: "PRON".into() }, &tagset)?;
    println!("delta since v{seen}: {:?}", lexicon.delta_since(seen));

    let mut s = AnnotatedSentence::untagged("web-000001".parse()?, tokenize("वह घर में और बाहर")?);
    s.tokens[0].tag = Some("N".into());
    let (tagged, applied) = auto_tag(&s, &lexicon);
    println!("applied {applied}");
    for t in &tagged.tokens {
        println!("{}\t{}", t.surface(), t.tag.as_deref().unwrap_or("_"));
    }
    assert_eq!(auto_tag(&tagged, &lexicon).1, 0);
    Ok(())
}
