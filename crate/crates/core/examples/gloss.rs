//! Word-for-word rough translation through a bilingual dictionary.

use corpusdesk::corpus::{tokenize, AnnotatedSentence};
use corpusdesk::translate::{load_dictionary, rough_translate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dict = load_dictionary("#PAIR hin eng\nयह\tthis\nघर\thouse|home\nहै\tis\n".as_bytes())?;
    let s = AnnotatedSentence::untagged("d-000001".parse()?, tokenize("यह घर बड़ा है")?);
    let gloss = rough_translate(&s, &"hin".parse()?, &dict)?;
    let line: Vec<String> =
        gloss.iter().map(|g| if g.untranslated { format!("[{}]", g.output) } else { g.output.clone() }).collect();
    println!("{}", line.join(" "));
    Ok(())
}
