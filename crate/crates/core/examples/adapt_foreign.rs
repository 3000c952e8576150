//! Brings foreign text and a foreign-tagged file into project form.

use corpusdesk::adapt::{assign_ids, map_foreign_tags, normalize_text, segment_sentences, TagMapping};
use corpusdesk::corpus::{
    parse_annotated_file, serialize_annotated_file, serialize_raw_file, CorpusFile, DomainLabel, Tagset,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = b"\xef\xbb\xbfyah ghar hai.  vah\tgaya!\xff next one?";
    let clean = normalize_text(bytes);
    println!("replaced {} invalid sequences", clean.replacements);
    let sentences = segment_sentences(&clean.text);
    let domain = DomainLabel::new("web")?;
    let file = CorpusFile::new("hin".parse()?, domain.clone(), assign_ids(&sentences, &domain, 1)?)?;
    print!("{}", String::from_utf8_lossy(&serialize_raw_file(&file)));

    let project = Tagset::parse("#TAGSET desk\nN\nV\nPRP\n")?;
    let mapping = TagMapping::parse("#FROM penn\nNN\tN\nVBD\tV\nPRP\tPRP\n", &project)?;
    let foreign = parse_annotated_file(
        "#LANG eng\n#DOMAIN web\n#SID web-000001\nhe\tPRP\nwent\tVBD\nhome\t_\n\n".as_bytes(),
        None,
    )?;
    let mapped = map_foreign_tags(&foreign, &mapping)?;
    print!("{}", String::from_utf8_lossy(&serialize_annotated_file(&mapped)));
    Ok(())
}
