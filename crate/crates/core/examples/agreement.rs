//! Compares two annotators, computes kappa, and merges three versions.

use corpusdesk::admin::UserId;
use corpusdesk::corpus::parse_annotated_file;
use corpusdesk::qa::{agreement_table, diff_annotations, merge_gold, AgreementRow, AnnotationVersion};

fn version(who: &str, tags: [&str; 4]) -> AnnotationVersion {
    let mut text = String::from("#LANG hin\n#DOMAIN qa\n#SID qa-000001\n");
    for (w, t) in ["राम", "घर", "गया", "।"].iter().zip(tags) {
        text.push_str(&format!("{w}\t{t}\n"));
    }
    text.push('\n');
    let file = parse_annotated_file(text.as_bytes(), None).expect("valid file");
    AnnotationVersion { file_id: "F1".into(), annotator: UserId::new(who), file }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = version("ann", ["N", "N", "V", "SYM"]);
    let b = version("bob", ["N", "V", "V", "SYM"]);
    let c = version("cat", ["N", "JJ", "V", "_"]);

    for d in diff_annotations(&a, &b)? {
        println!("disagree at {}:{} {:?}", d.id, d.index, d.per_annotator);
    }
    print!("{}", agreement_table(&[AgreementRow::compute("F1", &a, &b)?]));

    let (gold, queue) = merge_gold(&[a, b, c])?;
    let tags: Vec<&str> = gold.sentences[0].tokens.iter().map(|t| t.tag.as_deref().unwrap_or("_")).collect();
    println!("gold: {tags:?}");
    println!("queued for adjudication: {}", queue.len());
    Ok(())
}
