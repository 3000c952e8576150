//! Groups language versions into parallel units and reports corpus stats.

use std::collections::BTreeSet;

use corpusdesk::corpus::{build_parallel_units, corpus_stats, parse_raw_file, validate_word_alignment, WordAlignment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hin = parse_raw_file("#LANG hin\n#DOMAIN news\nnews-000001\tराम घर गया\nnews-000002\tवह आया\n".as_bytes())?;
    let eng = parse_raw_file("#LANG eng\n#DOMAIN news\nnews-000001\tRam went home\n".as_bytes())?;

    for f in [&hin, &eng] {
        let s = corpus_stats(f);
        println!(
            "{}: {} sentences, {} tokens, mean {:.1}",
            f.language, s.sentence_count, s.token_count, s.mean_tokens_per_sentence
        );
    }

    let (units, gaps) = build_parallel_units(&[hin, eng])?;
    println!("{} units", units.len());
    for g in &gaps {
        println!("gap: {} missing {:?}", g.id, g.missing);
    }

    let unit = &units[0];
    let align = WordAlignment {
        id: unit.id.clone(),
        source: "hin".parse()?,
        target: "eng".parse()?,
        links: BTreeSet::from([(0, 0), (1, 2), (2, 1), (3, 0)]),
    };
    for v in validate_word_alignment(&align, unit)? {
        println!("bad link: {v:?}");
    }
    Ok(())
}
