//! Users, uploads, the three-file cap and the download gate on an
//! in-memory project.

use chrono::{TimeZone, Utc};
use corpusdesk::admin::{Command, FileId, Project, ProjectConfig, Role, UserId};
use corpusdesk::corpus::{parse_raw_file, Tagset};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = StdRng::seed_from_u64(1);
    let mut tick = 0;
    let mut at = move || {
        tick += 1;
        Utc.timestamp_opt(1_700_000_000 + tick, 0).unwrap()
    };
    let config = ProjectConfig::new(Tagset::parse("#TAGSET desk\nN\nV\n")?, ["hin".parse()?]);
    let genesis = Project::genesis(config, UserId::new("root"), "Root", "secret", at(), &mut rng)?;
    let mut p = Project::from_genesis(&genesis)?;
    let root = UserId::new("root");
    let ann = UserId::new("ann");

    let role = Role::Annotator("hin".parse()?);
    p.execute(
        Some(&root),
        Command::CreateUser { user_id: ann.clone(), display_name: "Ann".into(), role, password: "pw".into() },
        at(),
        &mut rng,
    )?;
    let mut files = Vec::new();
    for i in 1..=4 {
        let raw = format!("#LANG hin\n#DOMAIN d{i}\nd{i}-000001\tराम गया\n");
        p.execute(Some(&root), Command::UploadFile { file: parse_raw_file(raw.as_bytes())? }, at(), &mut rng)?;
        files.push(FileId::new(format!("F{i}")));
    }
    for f in &files {
        match p.execute(Some(&root), Command::AssignFile { file_id: f.clone(), assignee: ann.clone() }, at(), &mut rng)
        {
            Ok(_) => println!("assigned {f}"),
            Err(e) => println!("{f}: {e}"),
        }
    }

    let f1 = files[0].clone();
    println!("download before tagging: {:?}", p.download(&root, &f1).err().map(|e| e.to_string()));
    let sentence = "d1-000001".parse()?;
    for (index, tag) in ["N", "V"].into_iter().enumerate() {
        let c = Command::AssignTag { file_id: f1.clone(), sentence: Clone::clone(&sentence), index, tag: tag.into() };
        p.execute(Some(&ann), c, at(), &mut rng)?;
    }
    p.execute(Some(&ann), Command::CompleteFile { file_id: f1.clone() }, at(), &mut rng)?;
    p.execute(Some(&root), Command::AssignFile { file_id: files[3].clone(), assignee: ann.clone() }, at(), &mut rng)?;
    println!("after completing {f1}, {} active", p.active_count(&ann));
    println!("annotator download: {:?}", p.download(&ann, &f1).err().map(|e| e.to_string()));
    print!("{}", String::from_utf8(p.download(&root, &f1)?)?);
    Ok(())
}
