//! The durable engine: every acknowledged mutation is in the log, and a
//! reopened store replays to the same state.

use chrono::{TimeDelta, TimeZone, Utc};
use corpusdesk::admin::{Command, ProjectConfig, UserId};
use corpusdesk::annotation::LexiconEdit;
use corpusdesk::corpus::Tagset;
use corpusdesk::service::{export_archive, ExportFormat};
use corpusdesk::store::{Bootstrap, Engine, EventStore, SteppingClock};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("corpusdesk-example-{}", std::process::id()));
    let boot = Bootstrap {
        config: ProjectConfig::new(Tagset::parse("#TAGSET desk\nN\nPSP\n")?, ["hin".parse()?]),
        master: UserId::new("root"),
        master_name: "Root".into(),
        master_password: "secret".into(),
    };
    let clock = SteppingClock::new(Utc.timestamp_opt(1_700_000_000, 0).unwrap(), TimeDelta::seconds(1));
    let mut engine = Engine::create(&dir, &boot, Box::new(StdRng::seed_from_u64(7)), Box::new(clock))?;
    let root = UserId::new("root");
    for (surface, tag) in [("में", "PSP"), ("से", "PSP"), ("घर", "N")] {
        let edit = LexiconEdit::Upsert { surface: surface.into(), tag: tag.into() };
        engine.execute(Some(&root), Command::UpdateLexicon { language: "hin".parse()?, edit })?;
    }
    let before = export_archive(engine.project(), ExportFormat::Native);
    drop(engine);

    for record in EventStore::read_log(&dir)? {
        println!("{:>3} {} {:?}", record.seq, record.at.to_rfc3339(), record.entity);
    }
    let (_store, replayed) = EventStore::open(&dir)?;
    assert_eq!(export_archive(&replayed, ExportFormat::Native), before);
    println!("replayed to seq {}, export identical", replayed.seq());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
