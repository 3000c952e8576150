//! Tokenizes raw text, tags it, and round-trips the annotated format.

use corpusdesk::annotation::assign_tag;
use corpusdesk::corpus::{parse_annotated_file, parse_raw_file, serialize_annotated_file, tokenize, Tagset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens = tokenize("यह घर है।")?;
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    println!("tokens: {surfaces:?}");

    let raw = "#LANG hin\n#DOMAIN health\nhealth-000001\tयह घर है।\nhealth-000002\tवह गया।\n";
    let mut file = parse_raw_file(raw.as_bytes())?;
    let tagset = Tagset::parse("#TAGSET desk\nPRP\nN\nV\nSYM\n")?;
    let first = &file.sentences[0];
    file.sentences[0] = assign_tag(first, 0, "PRP", &tagset)?;
    file.sentences[0] = assign_tag(&file.sentences[0], 1, "N", &tagset)?;

    let bytes = serialize_annotated_file(&file);
    print!("{}", String::from_utf8_lossy(&bytes));
    let back = parse_annotated_file(&bytes, Some(&tagset))?;
    assert_eq!(back, file);
    assert_eq!(serialize_annotated_file(&back), bytes);
    println!("round-trip ok");
    Ok(())
}
